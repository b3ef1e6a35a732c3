import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hdmeans.errors import InvalidInputError
from hdmeans.screening import lambda_threshold, screen, screening_threshold
from hdmeans.statistics import MarginalStats


def stats_from_t(t):
    t = np.asarray(t, dtype=float)
    return MarginalStats(t, np.ones_like(t), 1.0)


def test_threshold_value():
    assert abs(screening_threshold(100, 0.05) - 5.81213) < 1e-4


def test_threshold_alpha_limit():
    p = 50
    limit = (1 + 1 / (2 * math.log(p))) * math.sqrt(2 * math.log(p))
    assert abs(screening_threshold(p, 1 - 1e-12) - limit) < 1e-5


@pytest.mark.parametrize("p", [2, 3, 10, 120, 1080, 10**6])
@pytest.mark.parametrize("alpha", [1e-4, 0.01, 0.05, 0.3, 0.9])
def test_threshold_two_forms_agree(p, alpha):
    lp = math.log(p)
    alt = (1 + 1 / (2 * lp)) * math.sqrt(2 * lp) + math.sqrt(2 * math.log(1 / alpha))
    assert abs(screening_threshold(p, alpha) - alt) <= 1e-12 * alt
    assert screening_threshold(p, alpha) > lambda_threshold(p, alpha)


def test_lambda_values():
    # sqrt(2 ln 100) + sqrt(2 ln 20) = 3.034854 + 2.447747
    assert abs(lambda_threshold(100, 0.05) - 5.482601) < 1e-6
    assert abs(lambda_threshold(math.e**2, 1 / math.e) - (2 + math.sqrt(2))) < 1e-12


def test_lambda_monotone_grid():
    ps = [2, 5, 50, 500, 5000]
    alphas = [0.001, 0.01, 0.05, 0.2, 0.5]
    for a in alphas:
        vals = [lambda_threshold(p, a) for p in ps]
        assert all(u < v for u, v in zip(vals, vals[1:]))
    for p in ps:
        vals = [lambda_threshold(p, a) for a in alphas]
        assert all(u > v for u, v in zip(vals, vals[1:]))


def test_invalid_arguments():
    for bad in [(1, 0.05), (0, 0.05), (1.9, 0.05), (10, 0.0), (10, 1.0)]:
        with pytest.raises(InvalidInputError):
            screening_threshold(*bad)
        with pytest.raises(InvalidInputError):
            lambda_threshold(*bad)


def test_screen_examples():
    r = screen(stats_from_t(np.zeros(8)), 0.05)
    assert r.all_excluded and r.retained_count == 0
    thr = screening_threshold(8, 0.05)
    t = np.zeros(8)
    t[5] = -(thr + 1)
    r = screen(stats_from_t(t), 0.05)
    assert r.retained_count == 1 and r.retained.tolist() == [5]


def test_screen_boundary_excluded():
    r = screen(stats_from_t([2.0, 2.0, 3.0]), 0.05, threshold=2.0)
    assert r.excluded.tolist() == [0, 1]


@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=2, max_size=50),
       st.floats(1e-4, 0.99))
def test_screen_matches_enumeration(t, alpha):
    thr = screening_threshold(len(t), alpha)
    r = screen(stats_from_t(t), alpha)
    oracle = [k for k, v in enumerate(t) if abs(v) <= thr]
    assert r.excluded.tolist() == oracle
    assert r.retained_count == len(t) - len(oracle)
    assert r.threshold > 0


@given(st.lists(st.floats(-20, 20, allow_nan=False), min_size=2, max_size=50),
       st.floats(1e-4, 0.99), st.floats(1e-4, 0.99))
def test_screen_monotone_in_alpha(t, a1, a2):
    lo, hi = sorted((a1, a2))
    s = stats_from_t(t)
    assert set(screen(s, hi).excluded) <= set(screen(s, lo).excluded)
