"""Observed max-type statistics and the marginal t-statistics behind them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateVarianceError, InvalidInputError
from .matrix import DataMatrix, sample_mean, sample_variances
from .montecarlo import normalize_mask

__all__ = ["MarginalStats", "max_statistic", "one_sample_stats", "two_sample_stats"]

# Variances this small relative to the squared mean are rounding noise from a constant column.
_REL_ZERO = (64 * np.finfo(float).eps) ** 2


@dataclass(frozen=True)
class MarginalStats:
    """Per-coordinate location, scale and t-statistics.

    ``scale`` is ``sqrt(n)`` in the one-sample case and ``sqrt(nm/(n+m))``
    in the two-sample case, so the non-studentized statistic is
    ``scale * |means|`` and ``t_stats = scale * means / sds``.
    """

    means: np.ndarray
    sds: np.ndarray
    scale: float

    @property
    def p(self) -> int:
        return self.means.size

    @property
    def scaled_means(self) -> np.ndarray:
        return self.scale * self.means

    @property
    def t_stats(self) -> np.ndarray:
        zero = np.flatnonzero(~(self.sds > 0))
        if zero.size:
            raise DegenerateVarianceError(zero[0])
        return self.scale * self.means / self.sds


def _as_data(data) -> DataMatrix:
    return data if isinstance(data, DataMatrix) else DataMatrix(data)


def _clean_variances(var: np.ndarray, mean: np.ndarray) -> np.ndarray:
    var = np.where(var <= _REL_ZERO * mean**2, 0.0, var)
    return var


def one_sample_stats(data, mu0=None) -> MarginalStats:
    """Centered means ``Xbar - mu0`` with divisor-n standard deviations."""
    data = _as_data(data)
    if data.n < 2:
        raise InvalidInputError(f"need at least 2 observations, got {data.n}")
    if mu0 is not None:
        data = data.shifted(mu0)
    means = sample_mean(data)
    var = _clean_variances(sample_variances(data), means)
    return MarginalStats(means, np.sqrt(var), float(np.sqrt(data.n)))


def two_sample_stats(data_x, data_y) -> MarginalStats:
    """Mean differences ``Xbar - Ybar`` with the pooled two-sample scale.

    ``sds[k] = sqrt((m s1_k^2 + n s2_k^2) / (n + m))`` so that
    ``t_stats[k] = sqrt(nm) (Xbar_k - Ybar_k) / sqrt(m s1_k^2 + n s2_k^2)``.
    """
    data_x, data_y = _as_data(data_x), _as_data(data_y)
    if data_x.p != data_y.p:
        raise InvalidInputError(f"column mismatch: {data_x.p} vs {data_y.p}")
    n, m = data_x.n, data_y.n
    if n < 2 or m < 2:
        raise InvalidInputError(f"each sample needs >= 2 observations, got n={n}, m={m}")
    mx, my = sample_mean(data_x), sample_mean(data_y)
    vx = _clean_variances(sample_variances(data_x), mx)
    vy = _clean_variances(sample_variances(data_y), my)
    pooled = (m * vx + n * vy) / (n + m)
    return MarginalStats(mx - my, np.sqrt(pooled), float(np.sqrt(n * m / (n + m))))


def max_statistic(stats: MarginalStats, studentized: bool, mask=None) -> float:
    """Max over included coordinates of ``|t|`` or of ``scale * |mean|``."""
    values = stats.t_stats if studentized else stats.scaled_means
    ix: Optional[np.ndarray] = normalize_mask(mask, stats.p)
    if ix is not None:
        values = values[ix]
    return float(np.max(np.abs(values)))
