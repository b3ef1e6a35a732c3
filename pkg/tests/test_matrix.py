import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hdmeans.errors import DegenerateVarianceError, InvalidInputError
from hdmeans.matrix import (
    DataMatrix,
    correlation_from_covariance,
    pooled_covariance,
    psd_factorize,
    rebuild_diagonal,
    sample_covariance,
    sample_mean,
)


def brute_covariance(x):
    # direct double loop with divisor n
    n, p = x.shape
    out = np.zeros((p, p))
    for k in range(p):
        for l in range(p):
            mk = sum(x[i, k] for i in range(n)) / n
            ml = sum(x[i, l] for i in range(n)) / n
            out[k, l] = sum((x[i, k] - mk) * (x[i, l] - ml) for i in range(n)) / n
    return out


def test_data_matrix_validation():
    with pytest.raises(InvalidInputError):
        DataMatrix(np.empty((0, 3)))
    with pytest.raises(InvalidInputError):
        DataMatrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(InvalidInputError):
        DataMatrix(np.ones((2, 2)), feature_names=["a"])
    d = DataMatrix(np.arange(6.0).reshape(3, 2), ["a", "b"])
    assert (d.n, d.p) == (3, 2)
    assert not d.values.flags.writeable
    assert d.columns([1]).feature_names == ("b",)


def test_sample_mean_examples():
    assert np.array_equal(sample_mean([[0, 0], [2, 2]]), [1, 1])
    assert np.array_equal(sample_mean(np.ones((4, 4))), np.ones(4))
    x = np.random.default_rng(3).integers(-9, 10, size=(5, 3)).astype(float)
    oracle = [sum(x[i, k] for i in range(5)) / 5 for k in range(3)]
    assert np.allclose(sample_mean(x), oracle, atol=1e-14)


def test_sample_covariance_examples():
    assert np.array_equal(sample_covariance([[0, 0], [2, 2]]), [[1, 1], [1, 1]])
    x = np.array([[1.0, 3.0], [1.0, 5.0], [1.0, -2.0]])
    cov = sample_covariance(x)
    assert np.all(cov[0] == 0) and np.all(cov[:, 0] == 0)
    z = np.random.default_rng(4).integers(-5, 6, size=(6, 4)).astype(float)
    assert np.allclose(sample_covariance(z), brute_covariance(z), atol=1e-12)
    with pytest.raises(InvalidInputError):
        sample_covariance([[1.0, 2.0]])


def test_sample_covariance_matches_oracle_random(gen):
    for _ in range(20):
        x = gen.normal(size=(10, 8))
        cov = sample_covariance(x)
        assert np.max(np.abs(cov - brute_covariance(x))) <= 1e-10
        assert np.array_equal(cov, cov.T)


@given(arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(1, 6)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_sample_covariance_psd(x):
    cov = sample_covariance(x)
    scale = max(float(np.max(np.diag(cov))), 1e-300)
    assert np.min(np.linalg.eigvalsh(cov)) >= -1e-10 * scale * cov.shape[0]


def test_correlation_examples():
    assert np.array_equal(correlation_from_covariance([[4.0, 2.0], [2.0, 1.0]]), np.ones((2, 2)))
    assert np.array_equal(correlation_from_covariance(np.eye(3)), np.eye(3))
    assert np.array_equal(correlation_from_covariance(np.diag([9.0, 16.0])), np.eye(2))
    with pytest.raises(DegenerateVarianceError) as info:
        correlation_from_covariance(np.diag([1.0, 0.0, 2.0]))
    assert info.value.index == 1


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_correlation_scale_invariance(p, seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(p + 3, p))
    cov = a.T @ a + 0.1 * np.eye(p)
    s = np.diag(g.uniform(0.1, 10.0, p))
    r1 = correlation_from_covariance(cov)
    r2 = correlation_from_covariance(s @ cov @ s)
    assert np.all(np.diag(r1) == 1.0)
    assert np.max(np.abs(r1 - r2)) <= 1e-12


def test_pooled_covariance_examples():
    a, b = np.array([[2.0, 1.0], [1.0, 3.0]]), np.array([[4.0, 0.0], [0.0, 1.0]])
    assert np.allclose(pooled_covariance(a, b, 30, 30), (a + b) / 2, atol=0)
    out = pooled_covariance(np.eye(3), 3 * np.eye(3), 20, 60)
    assert np.allclose(out, 1.5 * np.eye(3), atol=1e-15)
    with pytest.raises(InvalidInputError):
        pooled_covariance(np.eye(2), np.eye(3), 5, 5)
    with pytest.raises(InvalidInputError):
        pooled_covariance(np.eye(2), np.eye(2), 1, 5)


@given(st.integers(1, 5), st.integers(2, 500), st.integers(2, 500), st.integers(0, 2**32 - 1))
def test_pooled_covariance_convexity_identity(p, n, m, seed):
    a = np.random.default_rng(seed).normal(size=(p, p))
    a = a + a.T
    assert np.array_equal(pooled_covariance(a, a, n, m), a)


def test_rebuild_diagonal():
    out = rebuild_diagonal(np.ones((2, 2)), [3.0, 4.0])
    assert np.array_equal(out, [[3.0, 1.0], [1.0, 4.0]])


def test_psd_factorize_examples():
    f = psd_factorize(np.eye(4))
    assert np.array_equal(f.factor, np.eye(4)) and f.clipped_count == 0
    ones = np.ones((2, 2))
    f = psd_factorize(ones)
    assert f.clipped_count <= 1
    assert np.max(np.abs(f.factor @ f.factor.T - ones)) <= 1e-10
    f = psd_factorize(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert f.clipped_count == 1
    w = np.linalg.eigvalsh(f.factor @ f.factor.T)
    assert np.allclose(w, [0.0, 3.0], atol=1e-12)
    # nearest PSD clamp of [[1,2],[2,1]] is 1.5 * ones
    assert np.allclose(f.matrix, 1.5 * ones, atol=1e-12)
    with pytest.raises(InvalidInputError):
        psd_factorize([[1.0, np.inf], [np.inf, 1.0]])


def test_psd_factorize_pd_uses_cholesky(gen):
    a = gen.normal(size=(6, 6))
    cov = a @ a.T + np.eye(6)
    f = psd_factorize(cov)
    assert f.clipped_count == 0
    assert np.allclose(f.factor, np.linalg.cholesky(cov))
    assert np.array_equal(f.matrix, cov)


def test_psd_factorize_eig_floor():
    f = psd_factorize(np.array([[1.0, 2.0], [2.0, 1.0]]), eig_floor=0.1)
    assert np.allclose(np.linalg.eigvalsh(f.matrix), [0.1, 3.0])


@given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_psd_round_trip(p, rank, seed):
    g = np.random.default_rng(seed)
    a = g.normal(size=(p, rank))
    mat = a @ a.T
    mat = 0.5 * (mat + mat.T)
    f = psd_factorize(mat)
    err = np.max(np.abs(f.factor @ f.factor.T - f.matrix))
    assert err <= 1e-8 * np.max(np.diag(mat))
    if f.clipped_count == 0:
        assert np.array_equal(f.matrix, mat)


def test_psd_round_trip_large(gen):
    a = gen.normal(size=(500, 300))
    mat = a @ a.T / 300
    f = psd_factorize(mat)
    assert np.max(np.abs(f.factor @ f.factor.T - f.matrix)) <= 1e-8 * np.max(np.diag(mat))


def test_as_symmetric_tolerance():
    from hdmeans.matrix import as_symmetric

    a = np.array([[1.0, 0.5], [0.5 + 1e-15, 1.0]])
    out = as_symmetric(a)
    assert np.array_equal(out, out.T)
    with pytest.raises(InvalidInputError):
        as_symmetric([[1.0, 0.5], [0.4, 1.0]])
