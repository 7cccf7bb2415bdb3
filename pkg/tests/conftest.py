import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ggmcp.datagen import GeneratorSpec, random_precision, sample_series
from ggmcp.model import Dataset

settings.register_profile("ggmcp", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ggmcp")


def random_spd(rng: np.random.Generator, p: int, lo: float = 0.5, hi: float = 5.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues uniform in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return (q * rng.uniform(lo, hi, p)) @ q.T


def two_regime(p: int, T: int, tau: int, seed: int) -> Dataset:
    th1 = random_precision(GeneratorSpec(p, seed=2 * seed))
    th2 = random_precision(GeneratorSpec(p, seed=2 * seed + 1))
    return sample_series([th1, th2], [tau], T, seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
