"""Multiplicity adjustment across a batch of empirical p-values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = ["BatchDecision", "benjamini_hochberg", "bonferroni"]


def _check(p_values, level, name):
    p = np.asarray(p_values, dtype=float).ravel()
    if p.size == 0:
        raise InvalidInputError("no p-values")
    if not np.all((p >= 0) & (p <= 1)):
        raise InvalidInputError("p-values must lie in [0, 1]")
    if not 0.0 < level < 1.0:
        raise InvalidInputError(f"{name} must lie in (0, 1), got {level}")
    return p


@dataclass(frozen=True)
class BatchDecision:
    p_values: np.ndarray
    q: float
    rejected: np.ndarray
    bh_cutoff_index: int

    @property
    def n_rejected(self) -> int:
        return int(self.rejected.sum())


def benjamini_hochberg(p_values, q: float) -> BatchDecision:
    """Step-up BH at FDR level ``q``.

    With ``k* = max{i : p_(i) <= i q / G}``, every hypothesis whose p-value is
    at most ``p_(k*)`` is rejected, so ties with the cutoff are included.
    Zero p-values (no simulated exceedance) are used as they are.
    """
    p = _check(p_values, q, "q")
    g = p.size
    ordered = np.sort(p)
    ok = np.flatnonzero(ordered <= q * np.arange(1, g + 1) / g)
    if ok.size == 0:
        return BatchDecision(p, q, np.zeros(g, dtype=bool), 0)
    k = int(ok[-1]) + 1
    return BatchDecision(p, q, p <= ordered[k - 1], k)


def bonferroni(p_values, alpha: float) -> np.ndarray:
    """Reject where ``p <= alpha / G``."""
    p = _check(p_values, alpha, "alpha")
    return p <= alpha / p.size
