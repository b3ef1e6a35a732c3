"""Simulation designs for empirical size and power of the max-type tests.

A scenario fixes one data-generating model per sample group, a sparse or
dense mean shift, and the list of test variants to run.  Model-level random
quantities (random diagonals, moving-average coefficients, Stiefel factors)
are drawn once per scenario; data, signal support and Monte Carlo draws are
redrawn per replicate from substreams keyed by the replicate index, so the
rejection counts do not depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import toeplitz

from .engine import TestSpec, run_tests
from .errors import InvalidInputError
from .matrix import DataMatrix, PsdFactor, pooled_covariance, psd_factorize
from .montecarlo import RngSpec, stable_key

__all__ = [
    "CovModel",
    "ModelInstance",
    "SignalSpec",
    "SimReport",
    "SimScenario",
    "TEST_LABELS",
    "build_covariance",
    "build_model",
    "fgn_autocovariance",
    "generate_sample",
    "inject_signal",
    "one_sample_model",
    "run_scenario",
    "stiefel_frame",
    "support_size",
    "two_sample_models",
]

KINDS = (
    "bandable_ar",
    "block_diag",
    "long_range",
    "ar_t_innov",
    "moving_average",
    "nonsparse_stiefel",
    "perfect_block",
)
INNOVATIONS = ("gaussian", "beta(2,1)", "gamma(1,4)", "gamma(4,1)")
TEST_LABELS = ("ns", "s", "ns_f", "s_f")


@dataclass(frozen=True)
class CovModel:
    """A data-generating model.

    Only the fields relevant to ``kind`` are read.  ``diag_range`` draws the
    diagonal i.i.d. uniform on that interval (``None`` keeps a unit
    diagonal).  ``df`` switches a factor model to a location-shifted
    multivariate t.  ``innovation`` selects the centered innovation law for
    moving-average and non-Gaussian factor models; Gamma laws are
    shape-scale.  ``shared`` lists random components (``"diag"``,
    ``"stiefel"``, ``"ma"``, ``"blocks"``) drawn from a stream common to both
    groups of a two-sample scenario.
    """

    kind: str
    rho: float = 0.4
    block_size: int = 10
    block_value: float = 0.7
    diag_range: Optional[tuple] = None
    hurst: float = 0.9
    df: Optional[float] = None
    innovation: str = "gaussian"
    ma_weight: float = 0.6
    k0: int = 10
    tridiag: float = 0.5
    shared: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown model kind {self.kind!r}")
        if self.innovation not in INNOVATIONS:
            raise InvalidInputError(f"unknown innovation law {self.innovation!r}")
        if self.kind == "moving_average" and self.innovation == "gaussian":
            raise InvalidInputError("moving_average needs a non-Gaussian innovation law")
        if self.kind in ("bandable_ar", "ar_t_innov") and not -1 < self.rho < 1:
            raise InvalidInputError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.kind == "long_range" and not 0 < self.hurst < 1:
            raise InvalidInputError(f"hurst must lie in (0, 1), got {self.hurst}")
        if self.df is not None and self.df <= 2:
            raise InvalidInputError(f"df must exceed 2, got {self.df}")
        if self.diag_range is not None:
            lo, hi = self.diag_range
            if not 0 < lo <= hi:
                raise InvalidInputError(f"bad diag_range {self.diag_range}")
            object.__setattr__(self, "diag_range", (float(lo), float(hi)))
        object.__setattr__(self, "shared", tuple(self.shared))


def one_sample_model(number) -> CovModel:
    """The one-sample designs, numbered 1 to 5, plus ``"perfect"``."""
    table = {
        1: CovModel("bandable_ar", rho=0.4),
        2: CovModel("block_diag", block_value=0.7, diag_range=(1, 2)),
        3: CovModel("long_range", hurst=0.9, diag_range=(1, 2)),
        4: CovModel("ar_t_innov", rho=0.995, df=5),
        5: CovModel("moving_average", innovation="beta(2,1)", ma_weight=0.6),
        "perfect": CovModel("perfect_block", block_value=0.7, innovation="gamma(4,1)"),
    }
    try:
        return table[number]
    except KeyError:
        raise InvalidInputError(f"no one-sample model {number!r}") from None


def two_sample_models(number) -> tuple:
    """``(model_x, model_y)`` for the two-sample designs 1 to 5 and ``"perfect"``."""
    table = {
        1: (
            CovModel("block_diag", block_value=0.7, diag_range=(1, 2)),
            CovModel("block_diag", block_value=0.7, diag_range=(1, 2)),
        ),
        2: (
            CovModel("nonsparse_stiefel", k0=10, diag_range=(1, 6), shared=("diag",)),
            CovModel("nonsparse_stiefel", k0=10, diag_range=(1, 6), shared=("diag",)),
        ),
        3: (
            CovModel("long_range", hurst=0.9, diag_range=(1, 2)),
            CovModel("long_range", hurst=0.9, diag_range=(1, 2)),
        ),
        4: (CovModel("ar_t_innov", rho=0.995, df=5), CovModel("ar_t_innov", rho=0.7, df=7)),
        5: (
            CovModel("moving_average", innovation="gamma(1,4)", ma_weight=0.6),
            CovModel("moving_average", innovation="gamma(4,1)", ma_weight=0.8),
        ),
        "perfect": (
            CovModel("perfect_block", block_value=0.7, df=5, shared=("blocks",)),
            CovModel("perfect_block", block_value=0.85, df=7, shared=("blocks",)),
        ),
    }
    try:
        return table[number]
    except KeyError:
        raise InvalidInputError(f"no two-sample model {number!r}") from None


def fgn_autocovariance(lag, hurst: float):
    """``0.5 ((e+1)^{2H} + |e-1|^{2H} - 2 e^{2H})`` at integer lag ``e``."""
    e = np.abs(np.asarray(lag, dtype=float))
    h2 = 2 * hurst
    return 0.5 * ((e + 1) ** h2 + np.abs(e - 1) ** h2 - 2 * e**h2)


def _innovation_moments(law: str) -> tuple:
    return {
        "gaussian": (0.0, 1.0),
        "beta(2,1)": (2 / 3, 1 / 18),
        "gamma(1,4)": (4.0, 16.0),
        "gamma(4,1)": (4.0, 4.0),
    }[law]


def _draw_innovations(law: str, gen: np.random.Generator, shape) -> np.ndarray:
    if law == "gaussian":
        return gen.standard_normal(shape)
    if law == "beta(2,1)":
        return gen.beta(2.0, 1.0, shape) - 2 / 3
    shape_k, scale = {"gamma(1,4)": (1.0, 4.0), "gamma(4,1)": (4.0, 1.0)}[law]
    return gen.gamma(shape_k, scale, shape) - shape_k * scale


@dataclass(frozen=True)
class ModelInstance:
    """A model with its random components drawn: covariance, sampling factor, extras."""

    model: CovModel
    p: int
    cov: np.ndarray
    factor: Optional[PsdFactor] = None
    ma_coefficients: Optional[np.ndarray] = None
    details: dict = field(default_factory=dict)

    @property
    def sigma_diag(self) -> np.ndarray:
        return np.diag(self.cov).copy()


def _block_matrix(p, size, value, diag, perfect_blocks=()):
    cov = np.zeros((p, p))
    for t in range(p // size):
        lo, hi = t * size, (t + 1) * size
        cov[lo:hi, lo:hi] = 1.0 if t in perfect_blocks else value
    np.fill_diagonal(cov, diag)
    return cov


def stiefel_frame(gen: np.random.Generator, p: int, k: int) -> np.ndarray:
    """Uniform ``p x k`` orthonormal frame: QR of a Gaussian matrix, signs fixed by diag(R)."""
    if not 1 <= k <= p:
        raise InvalidInputError(f"need 1 <= k <= p, got k={k}, p={p}")
    q, r = np.linalg.qr(gen.standard_normal((p, k)))
    return q * np.sign(np.diag(r))


def build_model(model: CovModel, p: int, rng: RngSpec, shared_rng: Optional[RngSpec] = None) -> ModelInstance:
    """Draw the model-level random components and assemble the covariance.

    For t and factor models the returned ``cov`` is the scale matrix
    ``Sigma``; for moving-average models it is the exact covariance implied
    by the drawn coefficients and the innovation variance.
    """
    if int(p) != p or p < 2:
        raise InvalidInputError(f"p must be an integer >= 2, got {p}")

    def gen(component):
        src = shared_rng if (shared_rng is not None and component in model.shared) else rng
        return src.generator("component", component)

    def diagonal():
        if model.diag_range is None:
            return np.ones(p)
        return gen("diag").uniform(*model.diag_range, size=p)

    details: dict = {}
    kind = model.kind
    ma = None
    if kind in ("bandable_ar", "ar_t_innov"):
        cov = toeplitz(model.rho ** np.arange(p, dtype=float))
    elif kind == "block_diag":
        d = diagonal()
        cov = _block_matrix(p, model.block_size, model.block_value, d)
        details["diag"] = d
    elif kind == "long_range":
        d = diagonal()
        cov = toeplitz(fgn_autocovariance(np.arange(p), model.hurst))
        np.fill_diagonal(cov, d)
        details["diag"] = d
    elif kind == "nonsparse_stiefel":
        theta = diagonal()
        u = stiefel_frame(gen("stiefel"), p, model.k0)
        f = np.eye(p) + model.tridiag * (np.eye(p, k=1) + np.eye(p, k=-1))
        s = np.sqrt(theta)
        cov = s[:, None] * (f + u @ u.T) * s[None, :]
        details["diag"] = theta
    elif kind == "perfect_block":
        n_blocks = p // model.block_size
        chosen = gen("blocks").choice(n_blocks, size=p // (2 * model.block_size), replace=False)
        cov = _block_matrix(p, model.block_size, model.block_value, np.ones(p), set(chosen.tolist()))
        details["perfect_blocks"] = np.sort(chosen)
    elif kind == "moving_average":
        g = gen("ma")
        active = g.random(p) < model.ma_weight
        ma = np.where(active, g.uniform(-1.0, 1.0, p), 0.0)
        _, var = _innovation_moments(model.innovation)
        cov = var * toeplitz(np.correlate(ma, ma, mode="full")[p - 1 :])
        details["ma_coefficients"] = ma
    else:  # pragma: no cover - guarded by CovModel
        raise InvalidInputError(kind)
    cov = 0.5 * (cov + cov.T)
    factor = None if kind == "moving_average" else psd_factorize(cov)
    if factor is not None:
        details["clipped_count"] = factor.clipped_count
    return ModelInstance(model, int(p), cov, factor, ma, details)


def build_covariance(model: CovModel, p: int, rng: RngSpec) -> np.ndarray:
    return build_model(model, p, rng).cov


def generate_sample(instance, mu, n: int, rng: RngSpec, p: Optional[int] = None) -> DataMatrix:
    """``n`` i.i.d. rows from the model, shifted by ``mu``.

    ``instance`` may be a :class:`ModelInstance` or a bare :class:`CovModel`
    (then ``p`` is required and the model is instantiated from ``rng``).
    """
    if isinstance(instance, CovModel):
        if p is None:
            raise InvalidInputError("p is required when passing a bare CovModel")
        instance = build_model(instance, p, rng.derive("model"))
    if int(n) != n or n < 2:
        raise InvalidInputError(f"n must be an integer >= 2, got {n}")
    p = instance.p
    mu = np.zeros(p) if mu is None else np.asarray(mu, dtype=float)
    if mu.shape != (p,):
        raise InvalidInputError(f"mu has shape {mu.shape}, expected ({p},)")
    model = instance.model
    gen = rng.generator("sample")
    if model.kind == "moving_average":
        z = _draw_innovations(model.innovation, gen, (n, 2 * p - 1))
        x = sliding_window_view(z, p, axis=1) @ instance.ma_coefficients
    else:
        z = _draw_innovations(model.innovation, gen, (n, instance.factor.factor.shape[1]))
        x = z @ instance.factor.factor.T
        if model.df is not None:
            x /= np.sqrt(gen.chisquare(model.df, n) / model.df)[:, None]
    return DataMatrix(x + mu)


@dataclass(frozen=True)
class SignalSpec:
    """Sparse mean shift: ``floor(kappa p^r)`` coordinates of size set by ``beta``."""

    r: float = 0.0
    beta: float = 0.0
    kappa: Optional[int] = None
    support: Optional[tuple] = None

    def __post_init__(self):
        if not 0 <= self.r < 1:
            raise InvalidInputError(f"r must lie in [0, 1), got {self.r}")
        if self.beta < 0:
            raise InvalidInputError(f"beta must be >= 0, got {self.beta}")
        if self.kappa is None:
            object.__setattr__(self, "kappa", 8 if self.r == 0 else 1)
        elif self.kappa < 1:
            raise InvalidInputError(f"kappa must be a positive integer, got {self.kappa}")
        if self.support is not None:
            object.__setattr__(self, "support", tuple(int(k) for k in self.support))


def support_size(p: int, r: float, kappa: int) -> int:
    # small slack so that e.g. 1000 ** (1/3) counts as 10
    return int(math.floor(kappa * p**r + 1e-9))


def inject_signal(mu_base, signal: SignalSpec, sigma_diag, n: int, m: Optional[int] = None,
                  rng: RngSpec = RngSpec()) -> np.ndarray:
    """Set the signal coordinates to ``sqrt(2 beta sigma_ll log(p) / n)``.

    With ``m`` given the two-sample size ``sqrt(2 beta sigma_ll log(p) (1/n + 1/m))``
    is used instead.  The support is ``signal.support`` if set, else drawn
    uniformly without replacement.
    """
    mu = np.array(mu_base, dtype=float)
    p = mu.size
    sigma_diag = np.asarray(sigma_diag, dtype=float)
    if signal.beta == 0:
        return mu
    if signal.support is not None:
        idx = np.asarray(signal.support, dtype=np.int64)
        if idx.size > p or (idx.size and (idx.min() < 0 or idx.max() >= p)):
            raise InvalidInputError("explicit support does not fit in p coordinates")
    else:
        size = support_size(p, signal.r, signal.kappa)
        if size > p:
            raise InvalidInputError(f"support of size {size} exceeds p={p}")
        idx = rng.generator("support").choice(p, size=size, replace=False)
    inv = 1.0 / n if m is None else 1.0 / n + 1.0 / m
    mu[idx] = np.sqrt(2 * signal.beta * sigma_diag[idx] * math.log(p) * inv)
    return mu


@dataclass(frozen=True)
class SimScenario:
    """One cell of a size/power study."""

    id: str
    family: str
    models: tuple
    n: int
    p: int
    m: Optional[int] = None
    signal: SignalSpec = SignalSpec()
    tests: tuple = TEST_LABELS
    alpha: float = 0.05
    M: int = 1500
    replicates: int = 1500
    seed: int = 0
    fixed_support: bool = False

    def __post_init__(self):
        models = self.models if isinstance(self.models, (tuple, list)) else (self.models,)
        object.__setattr__(self, "models", tuple(models))
        object.__setattr__(self, "tests", tuple(self.tests))
        want = 1 if self.family == "one_sample" else 2
        if self.family not in ("one_sample", "two_sample"):
            raise InvalidInputError(f"unknown family {self.family!r}")
        if len(self.models) != want:
            raise InvalidInputError(f"{self.family} needs {want} model(s), got {len(self.models)}")
        if self.family == "two_sample" and (self.m is None or self.m < 2):
            raise InvalidInputError("two_sample scenarios need m >= 2")
        if self.replicates < 1:
            raise InvalidInputError("replicates must be >= 1")
        bad = [t for t in self.tests if t not in TEST_LABELS]
        if bad or not self.tests:
            raise InvalidInputError(f"unknown test labels {bad}; choose from {TEST_LABELS}")


@dataclass
class SimReport:
    scenario: SimScenario
    counts: dict
    details: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return self.scenario.replicates

    def rate(self, label: str) -> float:
        return self.counts[label] / self.replicates

    def mc_se(self, label: str) -> float:
        r = self.rate(label)
        return math.sqrt(r * (1 - r) / self.replicates)

    def rows(self) -> list:
        sc = self.scenario
        return [
            {
                "scenario": sc.id,
                "family": sc.family,
                "n": sc.n,
                "m": sc.m,
                "p": sc.p,
                "r": sc.signal.r,
                "beta": sc.signal.beta,
                "test": label,
                "rejections": self.counts[label],
                "replicates": self.replicates,
                "rate": self.rate(label),
                "mc_se": self.mc_se(label),
            }
            for label in sc.tests
        ]

    def to_dict(self) -> dict:
        sc = self.scenario
        scenario = asdict(sc)
        scenario["models"] = [asdict(mdl) for mdl in sc.models]
        scenario["signal"] = asdict(sc.signal)
        return {
            "scenario": scenario,
            "results": self.rows(),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def _specs(sc: SimScenario, mc_rng: RngSpec) -> list:
    return [
        TestSpec(
            family=sc.family,
            studentized=label.startswith("s"),
            screened=label.endswith("_f"),
            alpha=sc.alpha,
            M=sc.M,
            rng=mc_rng,
        )
        for label in sc.tests
    ]


def run_scenario(scenario: SimScenario, workers: int = 1) -> SimReport:
    """Run every replicate and count rejections per test variant."""
    sc = scenario
    base = RngSpec(sc.seed, stable_key(sc.id))
    shared = base.derive("model", "shared")
    instances = [build_model(mdl, sc.p, base.derive("model", g), shared) for g, mdl in enumerate(sc.models)]
    if sc.family == "one_sample":
        sigma_diag = instances[0].sigma_diag
    else:
        sigma_diag = np.diag(pooled_covariance(instances[0].cov, instances[1].cov, sc.n, sc.m))

    def replicate(i: int) -> list:
        rep = base.derive("replicate", i)
        support_rng = base.derive("support") if sc.fixed_support else rep.derive("support")
        mu = inject_signal(np.zeros(sc.p), sc.signal, sigma_diag, sc.n, sc.m, support_rng)
        x = generate_sample(instances[0], mu, sc.n, rep.derive("x"))
        y = None
        if sc.family == "two_sample":
            y = generate_sample(instances[1], None, sc.m, rep.derive("y"))
        results = run_tests(x, y, _specs(sc, rep.derive("mc")))
        return [res.reject for res in results]

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(replicate, range(sc.replicates)))
    else:
        outcomes = [replicate(i) for i in range(sc.replicates)]
    counts = {label: int(sum(o[j] for o in outcomes)) for j, label in enumerate(sc.tests)}
    details = {f"group{g}": inst.details for g, inst in enumerate(instances)}
    return SimReport(sc, counts, details)
