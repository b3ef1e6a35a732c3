"""Monte Carlo calibration: simulated Gaussian max-norms and their quantiles.

Draws are generated in fixed-size blocks.  Block ``b`` of a run keyed by
``RngSpec(seed, stream)`` always uses the counter-based Philox generator
seeded from ``(seed, stream, b)``, so the sorted draw vector does not depend
on how many worker threads produced it.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .matrix import PsdFactor

__all__ = [
    "BLOCK_SIZE",
    "MonteCarloQuantileEstimate",
    "RngSpec",
    "draw_max_norms",
    "draw_max_norms_multi",
    "empirical_pvalue",
    "normalize_mask",
    "order_statistic_rank",
    "quantile",
    "stable_key",
]

BLOCK_SIZE = 256

_U64 = (1 << 64) - 1


def stable_key(value) -> int:
    """Map an int or string to a 64-bit key that is stable across processes."""
    if isinstance(value, (int, np.integer)):
        return int(value) & _U64
    digest = hashlib.blake2b(str(value).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class RngSpec:
    """Seed plus stream counter identifying one reproducible random stream."""

    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _U64)
        object.__setattr__(self, "stream", int(self.stream) & _U64)

    def derive(self, *keys) -> "RngSpec":
        """Child stream keyed by ``keys`` (ints or strings)."""
        ss = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream, *(stable_key(k) for k in keys))
        )
        return RngSpec(self.seed, int(ss.generate_state(1, np.uint64)[0]))

    def generator(self, *keys) -> np.random.Generator:
        ss = np.random.SeedSequence(
            self.seed, spawn_key=(self.stream, *(stable_key(k) for k in keys))
        )
        return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class MonteCarloQuantileEstimate:
    """Sorted simulated max-norms with the step-CDF quantile and p-value."""

    draws: np.ndarray
    mask_size: int

    def __post_init__(self):
        d = np.sort(np.asarray(self.draws, dtype=float).ravel())
        if d.size == 0:
            raise InvalidInputError("no draws")
        d.setflags(write=False)
        object.__setattr__(self, "draws", d)

    @property
    def M(self) -> int:
        return self.draws.size

    def quantile(self, alpha: float) -> float:
        return quantile(self, alpha)

    def pvalue(self, t_obs: float) -> float:
        return empirical_pvalue(self, t_obs)


def order_statistic_rank(M: int, alpha: float) -> int:
    """``ceil(M (1 - alpha))``, the 1-based rank of the quantile order statistic.

    The product is formed exactly from the binary value of ``alpha``.  A
    product within rounding distance of an integer is taken to be that
    integer, so ``alpha = j / M`` selects rank ``M - j`` whichever way the
    float ``j / M`` happened to round.
    """
    x = M * (1 - Fraction(alpha))
    nearest = round(x)
    k = nearest if abs(x - nearest) <= Fraction(M, 2**50) else math.ceil(x)
    return min(max(k, 1), M)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def quantile(est: MonteCarloQuantileEstimate, alpha: float) -> float:
    """``inf{t : F_M(t) >= 1 - alpha}`` for the empirical CDF of the draws."""
    alpha = _check_alpha(alpha)
    return float(est.draws[order_statistic_rank(est.M, alpha) - 1])


def empirical_pvalue(est: MonteCarloQuantileEstimate, t_obs: float) -> float:
    """Fraction of draws strictly greater than ``t_obs``."""
    above = est.M - int(np.searchsorted(est.draws, t_obs, side="right"))
    return above / est.M


def normalize_mask(mask, p: int) -> Optional[np.ndarray]:
    """Sorted unique int index array, or ``None`` for "all coordinates"."""
    if mask is None:
        return None
    arr = np.asarray(mask)
    if arr.dtype == bool:
        if arr.shape != (p,):
            raise InvalidInputError(f"boolean mask has shape {arr.shape}, expected ({p},)")
        arr = np.flatnonzero(arr)
    arr = np.unique(arr.astype(np.int64).ravel())
    if arr.size == 0:
        raise InvalidInputError("mask selects no coordinates")
    if arr[0] < 0 or arr[-1] >= p:
        raise InvalidInputError(f"mask index out of range for p={p}")
    return arr


def _factor_matrix(factor) -> np.ndarray:
    if isinstance(factor, PsdFactor):
        return factor.factor
    a = np.asarray(factor, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError("factor must be a 2-d array")
    return a


def draw_max_norms_multi(
    factor,
    M: int,
    masks: Sequence,
    rng: RngSpec,
    workers: int = 1,
) -> list:
    """Max-norm draws for several masks from one shared set of Gaussian vectors.

    Each entry of ``masks`` is ``None`` (all coordinates) or a set of
    coordinates to include.  Because the underlying vectors ``W = L Z`` are
    shared, a max over a sub-mask never exceeds the max over a super-mask
    draw by draw.
    """
    low = _factor_matrix(factor)
    p = low.shape[0]
    M = int(M)
    if M < 1:
        raise InvalidInputError(f"M must be >= 1, got {M}")
    masks = [normalize_mask(mk, p) for mk in masks]
    if not masks:
        raise InvalidInputError("no masks given")
    if any(mk is None for mk in masks):
        rows = None
        local = [None if mk is None else mk for mk in masks]
    else:
        rows = np.unique(np.concatenate(masks))
        local = [np.searchsorted(rows, mk) for mk in masks]
    sub = low if rows is None else low[rows]
    sub_t = np.ascontiguousarray(sub.T)
    k = low.shape[1]
    n_blocks = -(-M // BLOCK_SIZE)

    def block(b):
        size = min(BLOCK_SIZE, M - b * BLOCK_SIZE)
        z = rng.generator(b).standard_normal((size, k))
        w = np.abs(z @ sub_t)
        return [w.max(axis=1) if ix is None else w[:, ix].max(axis=1) for ix in local]

    if workers and workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    else:
        parts = [block(b) for b in range(n_blocks)]
    out = []
    for j, mk in enumerate(masks):
        draws = np.concatenate([part[j] for part in parts])
        out.append(MonteCarloQuantileEstimate(draws, p if mk is None else mk.size))
    return out


def draw_max_norms(
    factor,
    M: int,
    mask=None,
    rng: RngSpec = RngSpec(),
    workers: int = 1,
) -> MonteCarloQuantileEstimate:
    """``M`` draws of ``max_{k in mask} |W_k|`` with ``W = L Z``, ``Z ~ N(0, I)``."""
    return draw_max_norms_multi(factor, M, [mask], rng, workers)[0]
