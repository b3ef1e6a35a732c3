"""Dense covariance arithmetic used to calibrate the max-type tests.

Variances and covariances use divisor ``n`` throughout, not ``n - 1``.
Most numerical libraries default to the unbiased estimator; the tests here
are built around the maximum-likelihood form, so ``np.cov`` and friends are
deliberately avoided.

Symmetric matrices are plain ``numpy.ndarray`` objects.  Every function that
produces one symmetrizes its output so that ``a[k, l] == a[l, k]`` holds
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateVarianceError, InvalidInputError

__all__ = [
    "DataMatrix",
    "PsdFactor",
    "as_symmetric",
    "correlation_from_covariance",
    "pooled_covariance",
    "psd_factorize",
    "rebuild_diagonal",
    "sample_covariance",
    "sample_mean",
    "sample_variances",
]


@dataclass(frozen=True)
class DataMatrix:
    """An ``n x p`` observation matrix, one row per observation."""

    values: np.ndarray
    feature_names: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, order="C")
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise InvalidInputError(f"expected a 2-d array, got ndim={values.ndim}")
        if values.shape[0] == 0 or values.shape[1] == 0:
            raise InvalidInputError("data matrix is empty")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidInputError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.feature_names is not None:
            names = tuple(str(s) for s in self.feature_names)
            if len(names) != values.shape[1]:
                raise InvalidInputError(
                    f"{len(names)} feature names for {values.shape[1]} columns"
                )
            object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def columns(self, index: Sequence[int]) -> "DataMatrix":
        """Column subset, keeping names aligned."""
        index = list(index)
        names = None if self.feature_names is None else [self.feature_names[i] for i in index]
        return DataMatrix(self.values[:, index], names)

    def shifted(self, mu0) -> "DataMatrix":
        mu0 = np.asarray(mu0, dtype=float)
        if mu0.shape != (self.p,):
            raise InvalidInputError(f"mu0 has shape {mu0.shape}, expected ({self.p},)")
        return DataMatrix(self.values - mu0, self.feature_names)


def _values(data) -> np.ndarray:
    if isinstance(data, DataMatrix):
        return data.values
    return DataMatrix(data).values


def as_symmetric(a, *, name: str = "matrix") -> np.ndarray:
    """Validate a square, finite, symmetric matrix and return it as float with exact symmetry."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise InvalidInputError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    if np.array_equal(a, a.T):
        return a
    # rounding-level asymmetry (e.g. from S @ C @ S) is averaged away
    scale = max(float(np.max(np.abs(a))), np.finfo(float).tiny)
    if np.max(np.abs(a - a.T)) > 1e-10 * scale:
        raise InvalidInputError(f"{name} is not symmetric")
    return _symmetrize(a)


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.T)


def sample_mean(data) -> np.ndarray:
    x = _values(data)
    return x.mean(axis=0)


def sample_variances(data) -> np.ndarray:
    """Per-column variances with divisor n."""
    x = _values(data)
    xc = x - x.mean(axis=0)
    return np.einsum("ij,ij->j", xc, xc) / x.shape[0]


def sample_covariance(data) -> np.ndarray:
    """Sample covariance with divisor ``n``.

    Raises :class:`InvalidInputError` for fewer than two observations.
    """
    x = _values(data)
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError(f"need at least 2 observations, got {n}")
    xc = x - x.mean(axis=0)
    return _symmetrize(xc.T @ xc / n)


def correlation_from_covariance(cov) -> np.ndarray:
    """``D^{-1/2} cov D^{-1/2}`` with ``D = diag(cov)``; the diagonal is set to 1 exactly."""
    cov = as_symmetric(cov, name="covariance")
    d = np.diag(cov)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise DegenerateVarianceError(
            bad[0], f"diagonal entry {bad[0]} is {float(d[bad[0]])!r}; correlation undefined"
        )
    s = 1.0 / np.sqrt(d)
    r = _symmetrize(cov * s[:, None] * s[None, :])
    np.fill_diagonal(r, 1.0)
    return r


def pooled_covariance(cov_x, cov_y, n: int, m: int) -> np.ndarray:
    """Weighted combination ``(m/N) cov_x + (n/N) cov_y`` with ``N = n + m``.

    The weights are swapped relative to the sample sizes: this is the
    covariance of ``sqrt(nm/N) (Xbar - Ybar)``.
    """
    cov_x = as_symmetric(cov_x, name="cov_x")
    cov_y = as_symmetric(cov_y, name="cov_y")
    if cov_x.shape != cov_y.shape:
        raise InvalidInputError(f"dimension mismatch: {cov_x.shape} vs {cov_y.shape}")
    if n < 2 or m < 2:
        raise InvalidInputError(f"sample sizes must be >= 2, got n={n}, m={m}")
    if np.array_equal(cov_x, cov_y):
        return cov_x.copy()
    total = n + m
    return _symmetrize((m / total) * cov_x + (n / total) * cov_y)


def rebuild_diagonal(cov, variances) -> np.ndarray:
    """Copy of ``cov`` with its diagonal replaced by ``variances``.

    Used for externally supplied covariance estimates so the calibration
    matrix shares its marginal scales with the observed statistic.
    """
    cov = as_symmetric(cov, name="covariance")
    variances = np.asarray(variances, dtype=float)
    if variances.shape != (cov.shape[0],):
        raise InvalidInputError("variance vector does not match covariance dimension")
    out = cov.copy()
    np.fill_diagonal(out, variances)
    return out


@dataclass(frozen=True)
class PsdFactor:
    """``factor @ factor.T == matrix`` where ``matrix`` is the PSD-corrected input."""

    factor: np.ndarray
    matrix: np.ndarray
    clipped_count: int = 0
    method: str = field(default="cholesky")

    @property
    def dim(self) -> int:
        return self.factor.shape[0]


def psd_factorize(mat, eig_floor: float = 0.0) -> PsdFactor:
    """Factor a symmetric matrix for Gaussian sampling.

    Cholesky is tried first.  When it fails (or when a positive
    ``eig_floor`` is requested), the symmetric eigendecomposition is used and
    eigenvalues below ``eig_floor`` are clamped to it, which yields the
    nearest PSD matrix in Frobenius norm for ``eig_floor = 0``.
    """
    a = as_symmetric(mat, name="matrix")
    if eig_floor < 0 or not np.isfinite(eig_floor):
        raise InvalidInputError(f"eig_floor must be finite and >= 0, got {eig_floor}")
    if eig_floor == 0:
        try:
            low = np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            pass
        else:
            return PsdFactor(low, a, 0, "cholesky")
    w, v = np.linalg.eigh(a)
    clipped = int(np.count_nonzero(w < eig_floor))
    if clipped:
        w = np.maximum(w, eig_floor)
        corrected = _symmetrize((v * w) @ v.T)
    else:
        corrected = a
    return PsdFactor(v * np.sqrt(w), corrected, clipped, "eigh")
