"""Dense symmetric linear algebra primitives.

Symmetric matrices are carried as full ``(p, p)`` numpy arrays. The norms
that are defined over the upper triangle (``i <= j``) take a ``convention``
argument: ``"triu"`` sums each unordered pair once, ``"full"`` sums over all
``p * p`` entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from .errors import ConvergenceFailure, NotPositiveDefinite

Convention = Literal["triu", "full"]

# full eigendecomposition up to this size, selected-eigenvalue LAPACK above
EIGH_FULL_MAX_DIM = 128


def as_symmetric(m, *, atol: float = 1e-10) -> NDArray[np.float64]:
    """Validate and return ``m`` as a float64 symmetric matrix."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if not np.allclose(a, a.T, rtol=0.0, atol=atol * scale):
        raise ValueError("matrix is not symmetric")
    return a


def triu_pack(m: NDArray) -> NDArray:
    """Row-major upper triangle (diagonal included), length p(p+1)/2."""
    p = m.shape[0]
    return m[np.triu_indices(p)].copy()


def triu_unpack(v: NDArray, p: int) -> NDArray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (p * (p + 1) // 2,):
        raise ValueError(f"expected {p * (p + 1) // 2} entries, got {v.shape}")
    out = np.zeros((p, p))
    iu = np.triu_indices(p)
    out[iu] = v
    out.T[iu] = v
    return out


def _offdiag_weight(convention: Convention) -> float:
    if convention == "triu":
        return 1.0
    if convention == "full":
        return 2.0
    raise ValueError(f"unknown norm convention {convention!r}")


def fro_inner(a: NDArray, b: NDArray, convention: Convention = "triu") -> float:
    """<A, B>_F for symmetric A, B."""
    w = _offdiag_weight(convention)
    prod = a * b
    diag = float(np.trace(prod))
    upper = float(np.sum(np.triu(prod, 1)))
    return diag + w * upper


def fro_norm(a: NDArray, convention: Convention = "triu") -> float:
    return float(np.sqrt(fro_inner(a, a, convention)))


def l1_norm(a: NDArray, convention: Convention = "triu", *, diagonal: bool = True) -> float:
    w = _offdiag_weight(convention)
    absa = np.abs(a)
    upper = float(np.sum(np.triu(absa, 1)))
    diag = float(np.sum(np.diag(absa))) if diagonal else 0.0
    return diag + w * upper


def max_norm(a: NDArray) -> float:
    return float(np.max(np.abs(a)))


def spectral_norm(a: NDArray) -> float:
    lo, hi = extreme_eigenvalues(a)
    return max(abs(lo), abs(hi))


@dataclass(frozen=True)
class SpdMatrix:
    """A positive definite matrix together with its Cholesky factor.

    ``chol`` is lower triangular with ``chol @ chol.T == mat``.
    """

    mat: NDArray[np.float64]
    chol: NDArray[np.float64] = field(repr=False)
    logdet: float

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def inverse(self) -> NDArray[np.float64]:
        return inverse_spd(self)


def cholesky_logdet(m) -> SpdMatrix:
    """Factor ``m`` and return it wrapped with its log-determinant.

    Raises NotPositiveDefinite when any pivot is non-positive.
    """
    a = np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    try:
        chol = linalg.cholesky(a, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    d = np.diag(chol)
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        raise NotPositiveDefinite("non-positive Cholesky pivot")
    return SpdMatrix(mat=a, chol=chol, logdet=float(2.0 * np.sum(np.log(d))))


def inverse_spd(m: SpdMatrix) -> NDArray[np.float64]:
    p = m.dim
    inv = linalg.cho_solve((m.chol, True), np.eye(p), check_finite=False)
    return 0.5 * (inv + inv.T)


def extreme_eigenvalues(m) -> tuple[float, float]:
    """Return ``(lambda_min, lambda_max)`` of a symmetric matrix."""
    a = np.asarray(m, dtype=np.float64)
    p = a.shape[0]
    try:
        if p <= EIGH_FULL_MAX_DIM:
            w = linalg.eigvalsh(a, check_finite=False)
            return float(w[0]), float(w[-1])
        lo = linalg.eigvalsh(a, subset_by_index=[0, 0], check_finite=False)
        hi = linalg.eigvalsh(a, subset_by_index=[p - 1, p - 1], check_finite=False)
        return float(lo[0]), float(hi[0])
    except linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None
