import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbf.fock import (
    FockState,
    TruncationError,
    conjugation_u,
    fock_basis,
    fock_inner,
    gen_inner,
    generating_state,
    iota,
    random_state,
    swap_factors,
    tau_merge,
)
from gbf.krein import KreinSpace, direct_sum, orientation_reverse, random_conjugation

signs_st = st.lists(st.sampled_from([1, -1]), min_size=1, max_size=3)
kappa_st = st.sampled_from([-1, 1])
seed_st = st.integers(0, 2**32 - 1)


def _vecs(rng, d, n):
    return [rng.normal(size=d) + 1j * rng.normal(size=d) for _ in range(n)]


def _close(a, b, tol=1e-10):
    return abs(a - b) <= tol * max(1.0, abs(b))


def test_vacuum_generating_state():
    sp = KreinSpace.canonical(1, 1)
    for kappa in (-1, 1):
        vac = generating_state(sp, kappa, [])
        assert vac.coeffs == {(): 1}
        assert fock_inner(vac, vac) == 1
        assert gen_inner(sp, kappa, [], []) == 1


def test_fermionic_repeated_vector_vanishes(rng):
    sp = KreinSpace.canonical(2, 1)
    xi = _vecs(rng, 3, 1)[0]
    assert generating_state(sp, -1, [xi, xi]).coeffs == {}


def test_single_particle_normalization():
    sp = KreinSpace.canonical(1, 0)
    state = generating_state(sp, -1, [np.array([1.0])])
    assert set(state.coeffs) == {(0,)}
    assert abs(state.coeffs[(0,)] - math.sqrt(2)) < 1e-12


def test_truncation_error(rng):
    sp = KreinSpace.canonical(2, 0)
    with pytest.raises(TruncationError):
        generating_state(sp, 1, _vecs(rng, 2, 3), nmax=2)


def test_one_particle_inner(rng):
    sp = KreinSpace.canonical(1, 1)
    eta, xi = _vecs(rng, 2, 2)
    for kappa in (-1, 1):
        assert _close(gen_inner(sp, kappa, [eta], [xi]), 2 * sp.inner(xi, eta))


def test_three_particle_bruteforce_matches_det(rng):
    sp = KreinSpace.canonical(2, 2)
    etas, xis = _vecs(rng, 4, 3), _vecs(rng, 4, 3)
    gram = sp.inner(np.column_stack(xis), np.column_stack(etas))
    brute = gen_inner(sp, -1, etas, xis, method="bruteforce")
    assert _close(brute, 8 * np.linalg.det(gram))
    assert _close(gen_inner(sp, -1, etas, xis, method="fast"), brute)


def test_unknown_method(rng):
    sp = KreinSpace.canonical(1, 0)
    with pytest.raises(ValueError):
        gen_inner(sp, 1, [np.ones(1)], [np.ones(1)], method="magic")


def test_basis_signs():
    sp = KreinSpace((1, -1))
    pos = FockState.basis(sp, -1, (0,))
    neg = FockState.basis(sp, -1, (1,))
    assert fock_inner(pos, pos) == 1
    assert fock_inner(neg, neg) == -1


@pytest.mark.parametrize("d", range(1, 7))
def test_fermionic_dimension(d):
    assert len(fock_basis(KreinSpace.canonical(d, 0), -1)) == 2 ** d


def test_bosonic_basis_small():
    basis = fock_basis(KreinSpace.canonical(1, 0), 1, 2)
    assert [idx for idx, _ in basis] == [(), (0,), (0, 0)]
    norms = [n for _, n in basis]
    assert np.allclose(norms, [1, 1 / math.sqrt(2), 1 / math.sqrt(8)])


def test_bosonic_basis_count():
    # non-decreasing tuples of length <= 3 over 2 labels: 1 + 2 + 3 + 4
    assert len(fock_basis(KreinSpace.canonical(1, 1), 1, 3)) == 10


@pytest.mark.parametrize("kappa", [-1, 1])
def test_basis_orthonormal_under_gen_inner(kappa):
    sp = KreinSpace((1, -1, 1))
    basis = fock_basis(sp, kappa, 3)
    eye = np.eye(sp.dim)
    gram = np.zeros((len(basis), len(basis)), dtype=complex)
    for i, (a, na) in enumerate(basis):
        for j, (b, nb) in enumerate(basis):
            gram[i, j] = na * nb * gen_inner(sp, kappa, [eye[:, x] for x in a], [eye[:, x] for x in b])
    signs = [math.prod(sp.signs[x] for x in a) for a, _ in basis]
    assert np.abs(gram - np.diag(signs)).max() < 1e-10


@given(signs_st, kappa_st, st.integers(0, 3), seed_st)
def test_fock_inner_matches_gen_inner(signs, kappa, n, seed):
    rng = np.random.default_rng(seed)
    sp = KreinSpace(tuple(signs))
    etas, xis = _vecs(rng, sp.dim, n), _vecs(rng, sp.dim, n)
    a = generating_state(sp, kappa, etas, max(n, 1))
    b = generating_state(sp, kappa, xis, max(n, 1))
    assert _close(fock_inner(a, b), gen_inner(sp, kappa, etas, xis))
    assert _close(gen_inner(sp, kappa, etas, xis), np.conj(gen_inner(sp, kappa, xis, etas)))


@given(signs_st, kappa_st, seed_st)
def test_grading_orthogonality(signs, kappa, seed):
    rng = np.random.default_rng(seed)
    sp = KreinSpace(tuple(signs))
    assert gen_inner(sp, kappa, _vecs(rng, sp.dim, 1), _vecs(rng, sp.dim, 2)) == 0
    a = generating_state(sp, kappa, _vecs(rng, sp.dim, 1), 2)
    b = generating_state(sp, kappa, _vecs(rng, sp.dim, 2), 2)
    assert fock_inner(a, b) == 0


@given(kappa_st, seed_st)
def test_conjugate_linear_slots(kappa, seed):
    rng = np.random.default_rng(seed)
    sp = KreinSpace((1, -1, 1))
    xis = _vecs(rng, 3, 2)
    lam = complex(rng.normal(), rng.normal())
    base = generating_state(sp, kappa, xis)
    scaled = generating_state(sp, kappa, [lam * xis[0], xis[1]])
    assert scaled.norm_distance(base * np.conj(lam)) < 1e-12


@given(signs_st, kappa_st, seed_st)
def test_iota_laws(signs, kappa, seed):
    rng = np.random.default_rng(seed)
    sp = KreinSpace(tuple(signs))
    rev, phi = orientation_reverse(sp, kappa)
    vac = FockState.vacuum(sp, kappa)
    assert iota(vac).coeffs == {(): 1}
    a = random_state(sp, kappa, rng, [0, 1, 2], 2)
    b = random_state(sp, kappa, rng, [0, 1, 2], 2)
    assert iota(iota(a), sp).norm_distance(a) < 1e-12
    for m in (0, 1, 2):
        am, bm = a.component(m), b.component(m)
        lhs = fock_inner(iota(am), iota(bm))
        assert _close(lhs, kappa ** m * np.conj(fock_inner(am, bm)))
    # generating-state form: iota psi[x1..xn] = kappa^n psi[phi(xn)..phi(x1)]
    xis = _vecs(rng, sp.dim, 2)
    lhs = iota(generating_state(sp, kappa, xis, 2), rev)
    rhs = generating_state(rev, kappa, [phi(x) for x in reversed(xis)], 2) * kappa ** 2
    assert lhs.norm_distance(rhs) < 1e-10


def test_iota_fermionic_one_particle_sign(rng):
    sp = KreinSpace((1, -1))
    a = generating_state(sp, -1, _vecs(rng, 2, 1))
    b = generating_state(sp, -1, _vecs(rng, 2, 1))
    assert _close(fock_inner(iota(a), iota(b)), -np.conj(fock_inner(a, b)))


@given(kappa_st, seed_st)
def test_tau_laws(kappa, seed):
    rng = np.random.default_rng(seed)
    s1, s2, s3 = KreinSpace((1, -1)), KreinSpace((1,)), KreinSpace((-1, 1))
    vac = tau_merge(FockState.vacuum(s1, kappa), FockState.vacuum(s2, kappa))
    assert vac.coeffs == {(): 1}
    a, c = (random_state(s1, kappa, rng, [1], 2) for _ in range(2))
    b, d = (random_state(s2, kappa, rng, [2], 2) for _ in range(2))
    lhs = fock_inner(tau_merge(a, b), tau_merge(c, d))
    assert _close(lhs, fock_inner(a, c) * fock_inner(b, d))
    # graded swap
    swapped = swap_factors(a, b)
    assert tau_merge(a, b).norm_distance(swapped * kappa ** (1 * 2)) < 1e-12
    odd = random_state(s2, kappa, rng, [1], 2)
    assert tau_merge(a, odd).norm_distance(swap_factors(a, odd) * kappa) < 1e-12
    # associativity
    e = random_state(s3, kappa, rng, [0, 1], 2)
    left = tau_merge(tau_merge(a, b), e)
    right = tau_merge(a, tau_merge(b, e))
    assert left.norm_distance(right) == 0.0


def test_tau_generating_form(rng):
    s1, s2 = KreinSpace((1, -1)), KreinSpace((1,))
    total, _ = direct_sum([s1, s2])
    for kappa in (-1, 1):
        etas, xis = _vecs(rng, 2, 2), _vecs(rng, 1, 1)
        merged = tau_merge(generating_state(s1, kappa, etas), generating_state(s2, kappa, xis, 1))
        direct = generating_state(total, kappa, [np.r_[e, 0] for e in etas] + [np.r_[0, 0, x] for x in xis])
        assert merged.norm_distance(direct) < 1e-10


def test_tau_truncation_flag(rng):
    sp = KreinSpace((1,))
    a = random_state(sp, 1, rng, [2], 2)
    merged = tau_merge(a, a, nmax=3)
    assert merged.truncated and merged.coeffs == {}


@given(st.sampled_from([(1, -1), (1, -1, 1, -1), (1, 1, -1)]), kappa_st, seed_st)
def test_conjugation_u_laws(signs, kappa, seed):
    sp = KreinSpace(signs)
    if kappa == -1 and sp.p != sp.q:
        return
    rng = np.random.default_rng(seed)
    u = random_conjugation(sp, kappa, rng)
    vac = FockState.vacuum(sp, kappa, 2)
    assert conjugation_u(u, vac).norm_distance(vac) < 1e-12
    a = random_state(sp, kappa, rng, [0, 1, 2], 2)
    b = random_state(sp, kappa, rng, [0, 1, 2], 2)
    assert conjugation_u(u, conjugation_u(u, a)).norm_distance(a) < 1e-9
    for m in (1, 2):
        am, bm = a.component(m), b.component(m)
        lhs = fock_inner(conjugation_u(u, am), conjugation_u(u, bm))
        assert _close(lhs, kappa ** m * np.conj(fock_inner(am, bm)), 1e-9)
    xis = _vecs(rng, sp.dim, 2)
    lhs = conjugation_u(u, generating_state(sp, kappa, xis, 2))
    rhs = generating_state(sp, kappa, [u(x) for x in reversed(xis)], 2) * kappa ** 2
    assert lhs.norm_distance(rhs) < 1e-9


def test_state_validation():
    sp = KreinSpace((1, 1))
    with pytest.raises(ValueError):
        FockState(sp, -1, {(1, 0): 1.0})
    with pytest.raises(ValueError):
        FockState(sp, -1, {(0, 0): 1.0})
    assert FockState(sp, 1, {(0, 0): 1.0}, 2).degree() == 2
    with pytest.raises(ValueError):
        fock_inner(FockState.vacuum(sp, 1), FockState.vacuum(sp, -1))


def test_small_coefficients_dropped():
    sp = KreinSpace((1,))
    assert FockState(sp, 1, {(0,): 1e-16}).coeffs == {}
