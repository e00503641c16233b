import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbf import kernels
from gbf.kernels import (
    determinant,
    fast_paths,
    gate_errors,
    hafnian,
    hafnian_power_trace,
    hafnian_recursive,
    hafnian_repeated,
    matching_sum,
    pairing_order_sign,
    pairing_sum,
    permanent,
    permanent_bruteforce,
    permutation_sign,
    permutation_sum,
    pfaffian,
    pfaffian_recursive,
    pfaffian_tridiagonal,
)

seed_st = st.integers(0, 2**32 - 1)


def _cmat(rng, n):
    return rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))


def _rel(a, b):
    return abs(a - b) / max(1.0, abs(b))


# frozen values from an independent symbolic/enumeration oracle
INT3 = np.array([[1, 2, 0], [3, -1, 4], [2, 5, 1]])
SKEW4 = np.array([[0, 1, 2, 3], [-1, 0, 4, 5], [-2, -4, 0, 6], [-3, -5, -6, 0]])
SYM4 = np.array([[1, 2, 3, 4], [2, 5, 6, 7], [3, 6, 8, 9], [4, 7, 9, 10]])
SYM6 = np.array([[0, 3, 4, 5, 6, 7], [3, 0, 7, 2, 4, 6], [4, 7, 0, 6, 2, 5],
                 [5, 2, 6, 0, 7, 4], [6, 4, 2, 7, 0, 3], [7, 6, 5, 4, 3, 0]])


def test_frozen_values():
    assert abs(determinant(INT3) - (-11)) < 1e-12
    assert abs(permanent(INT3) - 41) < 1e-12
    assert abs(permanent_bruteforce(INT3) - 41) < 1e-12
    assert abs(pfaffian(SKEW4) - 8) < 1e-12
    assert abs(pfaffian_tridiagonal(SKEW4) - 8) < 1e-12
    assert abs(hafnian(SYM4) - 63) < 1e-12
    assert abs(hafnian_power_trace(SYM4) - 63) < 1e-9
    assert abs(hafnian(SYM6) - 1687) < 1e-9
    assert abs(hafnian_power_trace(SYM6) - 1687) < 1e-8


def test_empty_matrices():
    empty = np.zeros((0, 0))
    for f in (determinant, permanent, pfaffian, hafnian, hafnian_power_trace):
        assert f(empty) == 1
    assert permutation_sum(empty, -1) == 1
    assert pairing_sum(empty, 1) == 1


def test_odd_pairings_vanish():
    m = np.ones((3, 3))
    assert pfaffian(m) == 0 and hafnian(m) == 0 and pairing_sum(m, 1) == 0
    assert hafnian_repeated(np.ones((2, 2)), [2, 1]) == 0


@pytest.mark.parametrize("n", range(1, 7))
def test_counting_identities(n):
    assert abs(permanent(np.ones((n, n))) - math.factorial(n)) < 1e-9
    double_fact = math.prod(range(1, 2 * n, 2))
    assert abs(hafnian(np.ones((2 * n, 2 * n))) - double_fact) < 1e-9
    assert abs(hafnian_repeated(np.ones((1, 1)), [2 * n]) - double_fact) < 1e-9


def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([1, 2, 0]) == 1


@pytest.mark.parametrize("n", range(1, 6))
def test_pairing_order_sign_is_positive(n):
    assert pairing_order_sign(n) == 1


@given(st.integers(1, 5), seed_st)
def test_det_and_permanent_match_permutation_sum(n, seed):
    m = _cmat(np.random.default_rng(seed), n)
    assert _rel(determinant(m), permutation_sum(m, -1)) < 1e-10
    assert _rel(permanent(m), permutation_sum(m, 1)) < 1e-10


@given(st.integers(1, 4), seed_st)
def test_pfaffian_paths(n, seed):
    a = _cmat(np.random.default_rng(seed), 2 * n)
    skew = a - a.T
    pf = pfaffian_recursive(skew)
    assert _rel(pf ** 2, np.linalg.det(skew)) < 1e-9
    assert _rel(pfaffian_tridiagonal(skew), pf) < 1e-10
    assert _rel(matching_sum(skew, -1), pf) < 1e-10
    if n <= 3:
        assert _rel(pairing_sum(skew, -1), pairing_order_sign(n) * 2 ** n * pf) < 1e-10


@given(st.integers(1, 4), seed_st)
def test_hafnian_paths(n, seed):
    a = _cmat(np.random.default_rng(seed), 2 * n)
    sym = a + a.T
    hf = hafnian_recursive(sym)
    assert _rel(hafnian_power_trace(sym), hf) < 1e-9
    assert _rel(matching_sum(sym, 1), hf) < 1e-10
    if n <= 3:
        assert _rel(pairing_sum(sym, 1), 2 ** n * hf) < 1e-10


@given(st.lists(st.integers(0, 3), min_size=1, max_size=3), seed_st)
def test_hafnian_repeated_matches_expansion(reps, seed):
    k = len(reps)
    a = _cmat(np.random.default_rng(seed), k)
    sym = a + a.T
    idx = np.repeat(np.arange(k), reps)
    assert _rel(hafnian_repeated(sym, reps), hafnian_recursive(sym[np.ix_(idx, idx)])) < 1e-10


def test_large_pfaffian_uses_tridiagonal(rng):
    a = _cmat(rng, 12)
    skew = a - a.T
    assert _rel(pfaffian(skew) ** 2, np.linalg.det(skew)) < 1e-8


def test_gate_enables_all_fast_paths():
    flags = fast_paths()
    assert flags == {"determinant": True, "permanent": True, "pfaffian": True, "hafnian": True}
    assert all(v <= kernels.GATE_TOL for v in gate_errors().values())


def test_gate_override_roundtrip():
    try:
        kernels.set_fast_paths({"determinant": False, "permanent": False, "pfaffian": False, "hafnian": False})
        assert not any(fast_paths().values())
    finally:
        kernels.set_fast_paths(None)
    assert all(fast_paths().values())
