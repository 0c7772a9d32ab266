import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spinecurve.errors import NonFiniteInput
from spinecurve.svd import SvdResult, numerical_rank, svd


def check_invariants(a, res):
    m, n = a.shape
    assert res.u.shape == (m, m) and res.v.shape == (n, n) and res.sigma.shape == (min(m, n),)
    assert np.all(res.sigma >= 0)
    assert np.all(np.diff(res.sigma) <= 0)
    scale = 1.0 + np.abs(a).max()
    assert np.abs(res.reconstruct() - a).max() <= 1e-9 * scale
    assert np.abs(res.u.T @ res.u - np.eye(m)).max() <= 1e-10
    assert np.abs(res.v.T @ res.v - np.eye(n)).max() <= 1e-10


def test_identity():
    res = svd(np.eye(3))
    np.testing.assert_allclose(res.sigma, [1, 1, 1], atol=1e-15)
    check_invariants(np.eye(3), res)


def test_diagonal():
    a = np.diag([3.0, 2.0, 1.0])
    res = svd(a)
    np.testing.assert_allclose(res.sigma, [3, 2, 1], atol=1e-15)
    # permutation/sign variants of I
    np.testing.assert_allclose(np.abs(res.u), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(np.abs(res.v), np.eye(3), atol=1e-15)


def test_unsorted_diagonal_is_sorted():
    res = svd(np.diag([1.0, 5.0, 2.0]))
    np.testing.assert_allclose(res.sigma, [5, 2, 1], atol=1e-15)


def test_rank_one_outer_product(rng):
    u = rng.normal(size=5)
    u *= 2 / np.linalg.norm(u)
    v = rng.normal(size=4)
    v *= 3 / np.linalg.norm(v)
    a = np.outer(u, v)
    res = svd(a)
    assert res.sigma[0] == pytest.approx(6.0, rel=1e-12)
    assert np.all(res.sigma[1:] <= 1e-13)
    assert numerical_rank(res, 1e-10) == 1
    check_invariants(a, res)


def test_zero_and_tiny():
    res = svd(np.zeros((4, 3)))
    assert np.all(res.sigma == 0)
    check_invariants(np.zeros((4, 3)), res)
    assert numerical_rank(res, 1e-8) == 0
    check_invariants(np.array([[2.5]]), svd(np.array([[2.5]])))


def test_non_finite():
    with pytest.raises(NonFiniteInput):
        svd(np.array([[1.0, np.nan]]))
    with pytest.raises(NonFiniteInput):
        svd(np.array([[np.inf]]))


def test_numerical_rank_threshold():
    r = SvdResult(np.eye(3), np.array([5.0, 3.0, 1e-14]), np.eye(3))
    assert numerical_rank(r, 1e-10) == 2
    r0 = SvdResult(np.eye(3), np.zeros(3), np.eye(3))
    assert numerical_rank(r0, 1e-10) == 0


def test_sign_convention(rng):
    res = svd(rng.normal(size=(6, 6)))
    for k in range(6):
        col = res.u[:, k]
        assert col[np.argmax(np.abs(col))] > 0


def test_against_numpy_oracle(rng):
    for _ in range(50):
        m, n = rng.integers(1, 25, size=2)
        a = rng.normal(size=(m, n)) * 10 ** rng.uniform(-3, 3)
        res = svd(a)
        ref = np.linalg.svd(a, compute_uv=False)
        np.testing.assert_allclose(res.sigma, ref, atol=1e-12 * max(1.0, ref[0]), rtol=0)
        check_invariants(a, res)


def test_rank_deficient_completion(rng):
    # wide + rank deficient exercises null-space completion on both sides
    a = rng.normal(size=(7, 2)) @ rng.normal(size=(2, 11))
    res = svd(a)
    check_invariants(a, res)
    assert numerical_rank(res, 1e-8) == 2


def test_deterministic(rng):
    a = rng.normal(size=(9, 9))
    r1, r2 = svd(a), svd(a.copy())
    np.testing.assert_array_equal(r1.u, r2.u)
    np.testing.assert_array_equal(r1.sigma, r2.sigma)
    np.testing.assert_array_equal(r1.v, r2.v)


matrices = st.tuples(st.integers(1, 12), st.integers(1, 12)).flatmap(
    lambda mn: arrays(np.float64, mn, elements=st.floats(-100, 100, allow_nan=False, width=64))
)


@settings(max_examples=150, deadline=None)
@given(matrices, st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3))
def test_properties(a, c):
    res = svd(a)
    check_invariants(a, res)
    fro2 = float((a**2).sum())
    assert float((res.sigma**2).sum()) == pytest.approx(fro2, rel=1e-9, abs=1e-300)
    st_ = svd(a.T).sigma
    np.testing.assert_allclose(st_, res.sigma, rtol=1e-9, atol=1e-9 * (1 + res.sigma[0]))
    sc = svd(c * a).sigma
    np.testing.assert_allclose(sc, abs(c) * res.sigma, rtol=1e-9, atol=1e-9 * abs(c) * (1 + res.sigma[0]))
