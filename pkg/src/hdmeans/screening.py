"""Marginal t-statistic screening ahead of the two-step tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .statistics import MarginalStats

__all__ = ["ScreenResult", "lambda_threshold", "screen", "screening_threshold"]


def _check(p, alpha):
    # p is a dimension, but the closed forms make sense for any real p >= 2
    if not p >= 2:
        raise InvalidInputError(f"p must be >= 2, got {p}")
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


def screening_threshold(p: int, alpha: float) -> float:
    """Cut-off on ``|t|`` below which a coordinate is screened out.

    ``[sqrt(2) + sqrt(2)/(2 log p) + sqrt(2 log(1/alpha) / log p)] * sqrt(log p)``,
    natural logarithms.
    """
    _check(p, alpha)
    lp = math.log(p)
    return (
        math.sqrt(2) + math.sqrt(2) / (2 * lp) + math.sqrt(2 * math.log(1 / alpha) / lp)
    ) * math.sqrt(lp)


def lambda_threshold(p: int, alpha: float) -> float:
    """``sqrt(2 log p) + sqrt(2 log(1/alpha))``: the detectable signal scale (times n^-1/2)."""
    _check(p, alpha)
    return math.sqrt(2 * math.log(p)) + math.sqrt(2 * math.log(1 / alpha))


@dataclass(frozen=True)
class ScreenResult:
    excluded: np.ndarray
    threshold: float
    p: int

    @property
    def retained(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.p), self.excluded)

    @property
    def retained_count(self) -> int:
        return self.p - self.excluded.size

    @property
    def all_excluded(self) -> bool:
        return self.excluded.size == self.p


def screen(stats: MarginalStats, alpha: float, threshold: float | None = None) -> ScreenResult:
    """Exclude coordinates with ``|t| <= threshold``; ties at the threshold are excluded.

    ``threshold`` defaults to :func:`screening_threshold` at ``(p, alpha)``.
    Passing it explicitly decouples the screening level from the test level.
    """
    t = np.abs(stats.t_stats)
    if threshold is None:
        threshold = screening_threshold(t.size, alpha)
    excluded = np.flatnonzero(t <= threshold)
    return ScreenResult(excluded, float(threshold), t.size)
