from itertools import combinations
from math import comb, fsum, prod

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sigmacurv.errors import DomainError
from sigmacurv.symfun import (
    LambdaVec,
    esp_table,
    sigma,
    sigma_batch,
    sigma_derivatives,
    sigma_grad,
    sigma_hess,
    sigma_omit,
    sigma_omit_batch,
)


def subset_sigma(values, k):
    """Oracle: sum over k-subsets of the products, compensated."""
    return fsum(prod(c) for c in combinations(values, k))


def subset_scale(values, k):
    return fsum(abs(prod(c)) for c in combinations(values, k))


lam_entries = st.floats(min_value=-50, max_value=50, allow_nan=False, allow_infinity=False)
lam_vectors = st.lists(lam_entries, min_size=2, max_size=8)


# -- examples ------------------------------------------------------------------


def test_sigma_examples():
    assert sigma([1, 1, 1], 2) == 3
    assert sigma([3, 3, -1], 2) == 3
    assert sigma([3, 3, -1], 3) == -9
    assert sigma([3, 3, -1], 0) == 1


def test_sigma_omit_examples():
    assert sigma_omit([3, 3, -1], 1, [2]) == 6
    assert sigma_omit([3, 3, -1], 0, [0, 1]) == 1
    assert sigma_omit([7, 7, -3], 1, [0, 1]) == -3
    assert sigma_omit([7, 7, -3], 2, []) == sigma([7, 7, -3], 2)


def test_sigma_grad_examples():
    np.testing.assert_array_equal(sigma_grad([3, 3, -1], 2), [2, 2, 6])
    np.testing.assert_array_equal(sigma_grad([1, 1, 1], 1), [1, 1, 1])
    np.testing.assert_array_equal(sigma_grad([7, 7, -3], 2), [4, 4, 14])


def test_sigma_hess_examples():
    assert sigma_hess([1.0, 2.0, 5.0], 2).entry(0, 0, 1, 1) == 1
    assert sigma_hess([7, 7, -3], 2).entry(0, 1, 1, 0) == -1
    assert sigma_hess([2, 1, 1, -1], 3).entry(0, 0, 1, 1) == 0


def test_domain_errors():
    with pytest.raises(DomainError):
        sigma([1, 2], 3)
    with pytest.raises(DomainError):
        sigma([1, 2], -1)
    with pytest.raises(DomainError):
        sigma_omit([1, 2, 3], 1, [3])
    with pytest.raises(DomainError):
        sigma_omit([1, 2, 3], 1, [0, 0])
    with pytest.raises(DomainError):
        sigma_omit([1, 2, 3], 2, [0, 1])
    with pytest.raises(DomainError):
        sigma_hess([1, 2, 3], 1)
    with pytest.raises(DomainError):
        sigma_grad([1, 2, 3], 0)
    with pytest.raises(DomainError):
        LambdaVec([1.0])
    with pytest.raises(DomainError):
        LambdaVec([1.0, np.inf])


def test_lambdavec_sorted_view_is_stable():
    lv = LambdaVec([1.0, 3.0, 1.0, 2.0])
    vals, perm = lv.sorted()
    np.testing.assert_array_equal(vals, [3, 2, 1, 1])
    np.testing.assert_array_equal(perm, [1, 3, 0, 2])
    np.testing.assert_array_equal(lv.omit([1, 2]), [1.0, 2.0])
    assert not lv.values.flags.writeable


def test_conventions():
    e = esp_table(np.array([2.0, 3.0]), 4)
    np.testing.assert_array_equal(e, [1, 5, 6, 0, 0])


# -- oracle equivalence and properties -----------------------------------------


@given(lam_vectors, st.data())
def test_matches_subset_oracle(values, data):
    k = data.draw(st.integers(0, len(values)))
    got = sigma(values, k)
    assert abs(got - subset_sigma(values, k)) <= 1e-12 * max(subset_scale(values, k), 1e-300)


@given(lam_vectors, st.data())
def test_deletion_recurrence(values, data):
    n = len(values)
    k = data.draw(st.integers(1, n))
    i = data.draw(st.integers(0, n - 1))
    a, b, c = sigma(values, k), values[i] * sigma_omit(values, k - 1, [i]), sigma_omit(values, k, [i]) if k < n else 0.0
    assert abs(a - b - c) <= 1e-12 * (abs(a) + abs(b) + abs(c)) + 1e-300


@given(lam_vectors, st.data())
def test_deleted_sum_identities(values, data):
    n = len(values)
    k = data.draw(st.integers(1, n))
    deleted = [sigma_omit(values, k, [i]) if k < n else 0.0 for i in range(n)]
    weighted = [values[i] * sigma_omit(values, k - 1, [i]) for i in range(n)]
    s = sigma(values, k)
    scale1 = sum(map(abs, deleted)) + (n - k) * abs(s)
    assert abs(sum(deleted) - (n - k) * s) <= 1e-12 * scale1 + 1e-300
    scale2 = sum(map(abs, weighted)) + k * abs(s)
    assert abs(sum(weighted) - k * s) <= 1e-12 * scale2 + 1e-300


@given(st.lists(st.floats(0.1, 20) | st.floats(-20, -0.1), min_size=2, max_size=8))
def test_reciprocal_sum(values):
    n = len(values)
    ratio = sigma(values, n - 1) / sigma(values, n)
    assert abs(sum(1 / v for v in values) - ratio) <= 1e-10 * max(1.0, abs(ratio))


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6), st.sampled_from([1e-3, 1.0, 1e3]), st.data())
def test_homogeneity(values, t, data):
    k = data.draw(st.integers(0, len(values)))
    scaled = sigma([t * v for v in values], k)
    assert abs(scaled - t**k * sigma(values, k)) <= 1e-12 * t**k * max(subset_scale(values, k), 1e-300)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=6), st.data())
def test_permutation_invariance(values, data):
    k = data.draw(st.integers(0, len(values)))
    perm = data.draw(st.permutations(values))
    assert abs(sigma(values, k) - sigma(perm, k)) <= 1e-12 * max(subset_scale(values, k), 1e-300)


def test_grad_matches_central_differences(rng):
    for n in range(2, 9):
        for k in range(1, n + 1):
            lam = rng.standard_normal(n) * 3
            grad = sigma_grad(lam, k)
            for p in range(n):
                h = 1e-5 * (1 + abs(lam[p]))
                up, dn = lam.copy(), lam.copy()
                up[p] += h
                dn[p] -= h
                fd = (sigma(up, k) - sigma(dn, k)) / (2 * h)
                assert abs(fd - grad[p]) <= 1e-6 * max(1.0, abs(grad[p]))


def test_hess_matches_differences_of_grad(rng):
    for n in range(2, 8):
        for k in range(2, n + 1):
            lam = rng.standard_normal(n) * 2
            H = sigma_hess(lam, k)
            for p in range(n):
                for r in range(n):
                    if p == r:
                        continue
                    h = 1e-5 * (1 + abs(lam[r]))
                    up, dn = lam.copy(), lam.copy()
                    up[r] += h
                    dn[r] -= h
                    fd = (sigma_grad(up, k)[p] - sigma_grad(dn, k)[p]) / (2 * h)
                    assert abs(fd - H.entry(p, p, r, r)) <= 1e-6 * max(1.0, abs(fd))


def _principal_minor_sum(A, k):
    n = A.shape[0]
    return fsum(np.linalg.det(A[np.ix_(s, s)]) for s in combinations(range(n), k)) if k else 1.0


def test_hess_matches_matrix_second_derivative(rng):
    """Oracle: second differences of sigma_k(eigenvalues(A)) at a diagonal A.

    sigma_k of a matrix is the sum of its k x k principal minors, which is a
    polynomial in the entries, so second differences are exact up to rounding.
    """
    n, k = 4, 3
    lam = rng.uniform(0.5, 3.0, n)
    A0 = np.diag(lam)
    full = sigma_hess(lam, k).full()
    h = 1e-3
    for p, q, r, s in [(0, 0, 1, 1), (0, 1, 1, 0), (2, 3, 3, 2), (0, 1, 0, 1), (0, 0, 0, 0), (1, 2, 2, 3)]:
        E1 = np.zeros((n, n))
        E1[p, q] = 1
        E2 = np.zeros((n, n))
        E2[r, s] = 1

        def F(a, b):
            return _principal_minor_sum(A0 + a * E1 + b * E2, k)

        fd = (F(h, h) - F(h, -h) - F(-h, h) + F(-h, -h)) / (4 * h * h)
        assert abs(fd - full[p, q, r, s]) <= 1e-6 * max(1.0, abs(fd)), (p, q, r, s)


def test_hess_structure(rng):
    lam = rng.standard_normal(5)
    H = sigma_hess(lam, 3)
    full = H.full()
    np.testing.assert_array_equal(full, np.transpose(full, (2, 3, 0, 1)))
    np.testing.assert_array_equal(np.diagonal(H.same), 0)
    pattern = np.zeros_like(full, dtype=bool)
    for p in range(5):
        for r in range(5):
            if p != r:
                pattern[p, p, r, r] = pattern[p, r, r, p] = True
    assert np.all(full[~pattern] == 0)
    d = sigma_derivatives(lam, 1)
    assert d.hess is None and np.all(d.grad == 1)


def test_batched_agrees_with_scalar(rng):
    lam = rng.standard_normal((50, 6)) * 4
    for k in range(7):
        np.testing.assert_array_equal(sigma_batch(lam, k), [sigma(row, k) for row in lam])
    for k in range(5):
        got = sigma_omit_batch(lam, k, [1, 4])
        np.testing.assert_allclose(got, [sigma_omit(row, k, [1, 4]) for row in lam], rtol=0, atol=0)


def test_binomial_values():
    for n in range(2, 9):
        for k in range(n + 1):
            assert sigma(np.ones(n), k) == comb(n, k)
