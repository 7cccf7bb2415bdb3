"""Synthetic precision matrices and piecewise-Gaussian series."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .model import Dataset
from .numerics import SpdMatrix, cholesky_logdet, extreme_eigenvalues


@dataclass(frozen=True)
class GeneratorSpec:
    p: int
    density: float = 0.25
    magnitude_shift: float = 4.0
    seed: int = 0
    base_scale: float = 1.0


def _sparse_symmetric(p: int, density: float, shift: float, rng: np.random.Generator, *,
                      diagonal: bool, scale: float = 1.0) -> NDArray:
    """Symmetric matrix whose upper-triangle entries are nonzero with prob ``density``.

    Nonzero values are N(0, scale^2) pushed away from zero by ``shift``.
    """
    k = 0 if diagonal else 1
    iu = np.triu_indices(p, k)
    mask = rng.random(iu[0].size) < density
    vals = rng.normal(0.0, scale, iu[0].size)
    vals = np.where(vals >= 0, vals + shift, vals - shift) * mask
    M = np.zeros((p, p))
    M[iu] = vals
    M.T[iu] = vals
    return M


def lift_to_unit_floor(M: NDArray) -> NDArray:
    """M + (1 - lambda_min(M)) I, whose smallest eigenvalue is 1."""
    lo, _ = extreme_eigenvalues(M)
    return M + (1.0 - lo) * np.eye(M.shape[0])


def random_precision(spec: GeneratorSpec) -> SpdMatrix:
    """Sparse precision matrix with smallest eigenvalue exactly 1.

    Off-diagonal entries of M are nonzero with probability ``density``; the
    diagonal of M is always drawn. ``density=0`` gives M = 0, i.e. theta = I.
    """
    if not 0.0 <= spec.density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    if spec.density == 0.0:
        return cholesky_logdet(np.eye(spec.p))
    rng = np.random.default_rng(spec.seed)
    M = _sparse_symmetric(spec.p, spec.density, spec.magnitude_shift, rng, diagonal=False,
                          scale=spec.base_scale)
    diag = rng.normal(0.0, spec.base_scale, spec.p)
    M[np.diag_indices(spec.p)] = np.where(diag >= 0, diag + spec.magnitude_shift,
                                          diag - spec.magnitude_shift)
    return cholesky_logdet(lift_to_unit_floor(M))


def similar_pair(p: int, q_pct: float, p_pct: float, seed: int, *,
                 magnitude_shift: float = 4.0) -> tuple[SpdMatrix, SpdMatrix]:
    """theta + C1 and theta + C2 with a shared component and a shared diagonal.

    ``q_pct`` is the off-diagonal density (percent) of the shared part,
    ``p_pct`` that of each idiosyncratic part.
    """
    if q_pct < 0 or p_pct < 0:
        raise ValueError("densities must be non-negative")
    rng = np.random.default_rng(seed)
    shared = _sparse_symmetric(p, q_pct / 100.0, magnitude_shift, rng, diagonal=False)
    diag = np.diag(_sparse_symmetric(p, 1.0, magnitude_shift, rng, diagonal=True))
    c1 = _sparse_symmetric(p, p_pct / 100.0, magnitude_shift, rng, diagonal=False)
    c2 = _sparse_symmetric(p, p_pct / 100.0, magnitude_shift, rng, diagonal=False)
    m1 = shared + c1 + np.diag(diag)
    m2 = shared + c2 + np.diag(diag)
    lo = min(extreme_eigenvalues(m1)[0], extreme_eigenvalues(m2)[0])
    lift = (1.0 - lo) * np.eye(p)
    return cholesky_logdet(m1 + lift), cholesky_logdet(m2 + lift)


def sample_series(thetas: Sequence[SpdMatrix | NDArray], taus: Sequence[int], T: int,
                  seed: int) -> Dataset:
    """Rows 1..tau_1 ~ N(0, theta_1^-1), rows tau_1+1..tau_2 ~ N(0, theta_2^-1), ..."""
    thetas = [t if isinstance(t, SpdMatrix) else cholesky_logdet(t) for t in thetas]
    taus = [int(t) for t in taus]
    if len(thetas) != len(taus) + 1:
        raise ValueError("need exactly one more precision matrix than change-points")
    if any(b <= a for a, b in zip([0] + taus, taus + [T])):
        raise ValueError("change-points must be strictly increasing inside (0, T)")
    p = thetas[0].dim
    if any(t.dim != p for t in thetas):
        raise ValueError("precision matrices differ in dimension")
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((T, p))
    X = np.empty((T, p))
    for theta, a, b in zip(thetas, [0] + taus, taus + [T]):
        sigma = theta.inverse()
        L = linalg.cholesky(sigma, lower=True)
        X[a:b] = Z[a:b] @ L.T
    return Dataset(X)
