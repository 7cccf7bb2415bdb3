"""Change-point detection in the precision structure of Gaussian graphical models."""
__version__ = "0.1.0"

from .datagen import GeneratorSpec, random_precision, sample_series, similar_pair
from .errors import (ChangePointError, DataError, DegenerateWindow, Diverged, MissingReference,
                     NotPositiveDefinite, OutOfWindow)
from .model import Dataset, PenaltyConfig, SearchWindow, Side, line_search_H, objective_H
from .numerics import SpdMatrix, cholesky_logdet
from .prox import GlassoSettings, glasso_solve, prox_elastic_net, stepsize_bounds
from .segmentation import ChangePointSet, SegmentationSettings, binary_segmentation
from .solvers import (CoolingSchedule, KernelSpec, StoppingRule, brute_force, initialize,
                      mm_approx, mm_exact, sa_solve)

__all__ = [
    "ChangePointError", "ChangePointSet", "CoolingSchedule", "DataError", "Dataset",
    "DegenerateWindow", "Diverged", "GeneratorSpec", "GlassoSettings", "KernelSpec",
    "MissingReference", "NotPositiveDefinite", "OutOfWindow", "PenaltyConfig", "SearchWindow",
    "SegmentationSettings", "Side", "SpdMatrix", "StoppingRule", "binary_segmentation",
    "brute_force", "cholesky_logdet", "glasso_solve", "initialize", "line_search_H",
    "mm_approx", "mm_exact", "objective_H", "prox_elastic_net", "random_precision",
    "sample_series", "sa_solve", "similar_pair", "stepsize_bounds",
]
