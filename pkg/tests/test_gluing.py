import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbf.amplitude import pair_value
from gbf.fock import FockState, generating_state, random_state
from gbf.gluing import (
    Cutoff,
    CutoffError,
    GluingData,
    IllDefinedAnomaly,
    UnsupportedStatistics,
    anomaly,
    anomaly_limit,
    appendix_identities,
    bosonic_converged,
    check_t5a,
    check_t5b,
    check_t5b_renormalized,
    default_chain,
    fock_basis_sum,
    r_alpha_terms,
    regularized_sum,
)
from gbf.krein import KreinSpace
from gbf.spacetime import (
    random_cobordism_theory,
    random_disjoint_theory,
    random_gluing_theory,
    slice_theory,
)
from gbf.specfile import load_fixture

seed_st = st.integers(0, 2**32 - 1)


def _vecs(rng, d, n):
    return [rng.normal(size=d) + 1j * rng.normal(size=d) for _ in range(n)]


def _fermionic(rng):
    return random_gluing_theory(-1, (1, -1), (1, -1), rng)


class TestCutoff:
    def test_constructors(self, rng):
        sp = KreinSpace((1, -1, 1))
        assert Cutoff.empty(sp).dim == 0
        full = Cutoff.full(sp)
        assert full.dim == 3 and full.signs == (1, -1, 1)
        grown = Cutoff.empty(sp).extend_random(rng, 5)
        assert grown.dim == 3 and sorted(grown.signs) == [-1, 1, 1]

    def test_adapted_span_contains_vectors(self, rng):
        sp = KreinSpace((1, -1, 1, -1))
        vecs = _vecs(rng, 4, 1)
        cut = Cutoff.adapted_span(sp, vecs)
        assert cut.dim == 2 and cut.contains(vecs[0]) < 1e-10
        assert cut.is_subspace_of(Cutoff.full(sp))
        assert not Cutoff.full(sp).is_subspace_of(cut)

    def test_rotate_keeps_subspace(self, rng):
        sp = KreinSpace((1, -1, 1))
        cut = Cutoff.full(sp).rotate(rng)
        assert cut.is_subspace_of(Cutoff.full(sp)) and Cutoff.full(sp).is_subspace_of(cut)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            Cutoff(KreinSpace((1, 1)), np.array([[1, 1], [0, 1]]), (1, 1))


class TestAnomaly:
    @pytest.mark.parametrize("kappa", [-1, 1])
    def test_empty_cutoff_gives_one(self, kappa, rng):
        theory = random_gluing_theory(kappa, (1, -1), (1, -1), rng)
        data = GluingData(theory, "g")
        res = anomaly(theory, "g", Cutoff.empty(data.sigma_space), data=data)
        assert res.value == 1 and res.converged

    @pytest.mark.parametrize("kappa", [-1, 1])
    def test_cobordism_gives_one(self, kappa, rng):
        for _ in range(3):
            theory = random_cobordism_theory(kappa, (1, -1), (-1, 1), (1, -1), rng)
            res = anomaly(theory, "g")
            assert abs(res.value - 1) < 1e-9 and res.converged

    def test_matches_fock_basis_form(self, rng):
        for _ in range(3):
            theory = _fermionic(rng)
            data = GluingData(theory, "g")
            full = Cutoff.full(data.sigma_space)
            assert abs(anomaly(theory, "g", data=data).value - fock_basis_sum(data, full)) < 1e-10

    def test_fock_basis_form_with_boundary_state(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        full = Cutoff.full(data.sigma_space)
        phis = _vecs(rng, 2, 2)
        rest = generating_state(data.geometry.rest_space, -1, phis)
        assert abs(regularized_sum(data, phis, full).value - fock_basis_sum(data, full, rest)) < 1e-10

    @given(seed_st)
    @settings(max_examples=15)
    def test_basis_independence(self, seed):
        rng = np.random.default_rng(seed)
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        cut = Cutoff.empty(data.sigma_space).extend_random(rng, 2)
        a = anomaly(theory, "g", cut, data=data).value
        b = anomaly(theory, "g", cut.rotate(rng), data=data).value
        assert abs(a - b) < 1e-9

    def test_ordered_and_sorted_agree(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        full = Cutoff.full(data.sigma_space)
        phis = _vecs(rng, 2, 2)
        a = regularized_sum(data, phis, full, method="ordered").value
        b = regularized_sum(data, phis, full, method="sorted").value
        assert abs(a - b) < 1e-10
        bos = load_fixture("bosonic")
        bdata = GluingData(bos, "g")
        bfull = Cutoff.full(bdata.sigma_space)
        x = r_alpha_terms(bdata, [], bfull, 4, "ordered").values
        y = r_alpha_terms(bdata, [], bfull, 4, "sorted").values
        assert np.allclose(x, y, atol=1e-12)

    def test_fermionic_series_terminates(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        full = Cutoff.full(data.sigma_space)
        terms = r_alpha_terms(data, [], full, mmax=10)
        assert len(terms.values) == full.dim + 1
        # every ordered tuple of length dim + 1 repeats an index; its pairing vanishes
        k = full.dim
        mat = data.pairing([], full)
        for tup in itertools.product(range(k), repeat=k + 1):
            idx = [a for a in tup] + [k + a for a in reversed(tup)]
            assert abs(pair_value(mat[np.ix_(idx, idx)], -1)) < 1e-12

    def test_unknown_method(self, rng):
        data = GluingData(_fermionic(rng), "g")
        with pytest.raises(ValueError):
            r_alpha_terms(data, [], Cutoff.full(data.sigma_space), method="magic")

    def test_bosonic_cap_is_ill_defined(self):
        theory = load_fixture("bosonic")
        with pytest.raises(IllDefinedAnomaly) as err:
            anomaly(theory, "g", mmax=2)
        assert len(err.value.partial_sums) == 3

    def test_convergence_surrogate(self):
        assert bosonic_converged([1.0, 1e-11, 1e-12, 1e-13])
        assert bosonic_converged([1.0, 0.0, 0.0, 0.0])
        assert not bosonic_converged([1.0, 1e-12, 1e-11, 1e-13])
        assert not bosonic_converged([1.0, 1e-11, 1e-12])
        assert not bosonic_converged([1.0, 1e-3, 1e-4, 1e-5])


class TestChains:
    def test_cobordism_chain_all_one(self, rng):
        theory = random_cobordism_theory(-1, (1, -1), (-1, 1), (1, -1), rng)
        data = GluingData(theory, "g")
        phis = _vecs(rng, data.ctx_glued.space.dim, 1)
        series = anomaly_limit(theory, "g", default_chain(data, phis, rng), data=data)
        assert np.allclose(series.values, 1, atol=1e-9)
        assert series.stabilization_index(1e-9) == 0

    def test_fermionic_chain_ends_at_full_value(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        chain = default_chain(data, _vecs(rng, 2, 1), rng)
        series = anomaly_limit(theory, "g", chain, data=data)
        assert series.cutoff_dims[-1] == data.sigma_space.dim
        assert abs(series.values[-1] - anomaly(theory, "g", data=data).value) < 1e-12
        assert series.stabilization_index(1e-12) <= len(chain) - 1
        assert len(series.differences) == len(chain) - 1
        assert series.to_dict()["gluing"] == "g"

    def test_chain_must_be_nested(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        full = Cutoff.full(data.sigma_space)
        with pytest.raises(ValueError):
            anomaly_limit(theory, "g", [full, Cutoff.empty(data.sigma_space)], data=data)


class TestComposition:
    def test_no_arguments_reduces_to_anomaly(self, rng):
        rep = check_t5b(_fermionic(rng), "g", [])
        assert rep.passed

    def test_slice_self_gluing(self, rng):
        theory = slice_theory(-1, (1, -1))
        phis = _vecs(rng, 4, 2)
        rep = check_t5b(theory, "join", phis, expand=True)
        assert rep.passed, [c.to_dict() for c in rep.checks]

    @given(seed_st, st.integers(0, 4))
    @settings(max_examples=15)
    def test_random_fermionic(self, seed, n):
        rng = np.random.default_rng(seed)
        theory = _fermionic(rng)
        rep = check_t5b(theory, "g", _vecs(rng, 2, n), expand=n <= 2)
        assert rep.passed, [c.to_dict() for c in rep.checks]

    def test_bosonic_cobordism(self, rng):
        theory = random_cobordism_theory(1, (1,), (1,), (1, -1), rng)
        rep = check_t5b(theory, "g", _vecs(rng, GluingData(theory, "g").ctx_glued.space.dim, 2))
        assert rep.passed

    def test_bosonic_cap_reports_ill_defined(self, rng):
        rep = check_t5b(load_fixture("bosonic"), "g", _vecs(rng, 3, 2), mmax=2)
        assert rep.ill_defined and rep.exit_code() == 2

    def test_cutoff_must_contain_lifts(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        with pytest.raises(CutoffError, match="lift"):
            check_t5b(theory, "g", _vecs(rng, 2, 2), Cutoff.empty(data.sigma_space), data=data)


class TestRenormalized:
    def test_vacuum_difference_vanishes(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        chain = [Cutoff.empty(data.sigma_space)] + default_chain(data, [], rng)[1:]
        rep = check_t5b_renormalized(theory, "g", [], chain, data=data)
        assert rep.passed and all(c.verdict == "pass" for c in rep.checks)
        assert all(abs(c.detail["difference"]) < 1e-12 for c in rep.checks)

    def test_below_lift_span_is_info(self, rng):
        theory = _fermionic(rng)
        data = GluingData(theory, "g")
        phis = _vecs(rng, 2, 2)
        chain = [Cutoff.empty(data.sigma_space)] + default_chain(data, phis, rng)
        rep = check_t5b_renormalized(theory, "g", phis, chain, data=data)
        assert rep.checks[0].verdict == "info"
        assert all(c.verdict == "pass" for c in rep.checks[1:])

    def test_bosonic_unsupported(self):
        with pytest.raises(UnsupportedStatistics):
            check_t5b_renormalized(load_fixture("bosonic"), "g", [], [])


class TestAppendix:
    def test_random_theories(self, rng):
        for kappa in (-1, 1):
            theory = random_gluing_theory(kappa, (1, -1), (1, -1), rng)
            assert appendix_identities(theory, "g", rng).passed

    def test_slice_gluing_is_exact(self, rng):
        rep = appendix_identities(slice_theory(-1, (1, -1)), "join", rng)
        assert rep.passed and rep.max_residual() < 1e-12


class TestFactorization:
    @pytest.mark.parametrize("kappa", [-1, 1])
    def test_vacuum_and_odd(self, kappa, rng):
        theory = random_disjoint_theory(kappa, (1, -1), (-1, 1), rng)
        v1 = FockState.vacuum(theory.spaces["A"], kappa, 2)
        v2 = FockState.vacuum(theory.spaces["B"], kappa, 2)
        chk = check_t5a(theory, "M", v1, v2)
        assert chk.ok and abs(chk.detail["lhs"] - 1) < 1e-12
        odd = random_state(theory.spaces["A"], kappa, rng, [1], 2)
        chk = check_t5a(theory, "M", odd, random_state(theory.spaces["B"], kappa, rng, [0, 2], 2))
        assert chk.ok and chk.detail["lhs"] == 0

    @given(st.sampled_from([-1, 1]), seed_st)
    def test_random_degree_two(self, kappa, seed):
        rng = np.random.default_rng(seed)
        theory = random_disjoint_theory(kappa, (1, -1), (-1, 1), rng)
        a = generating_state(theory.spaces["A"], kappa, _vecs(rng, 2, 2))
        b = generating_state(theory.spaces["B"], kappa, _vecs(rng, 2, 2))
        assert check_t5a(theory, "M", a, b).residual < 1e-9

    def test_requires_binary_union(self, rng):
        theory = random_disjoint_theory(-1, (1, -1), (-1, 1), rng)
        with pytest.raises(ValueError):
            check_t5a(theory, "M1", FockState.vacuum(theory.spaces["A"], -1), FockState.vacuum(theory.spaces["B"], -1))


@pytest.mark.parametrize("kappa,s", [(-1, (1, -1)), (-1, (1, 1, -1))])
def test_closed_gluing(kappa, s, rng):
    theory = random_gluing_theory(kappa, (), s, rng)
    assert theory.boundary_space("M1")[0].dim == 0
    data = GluingData(theory, "g")
    assert data.ctx_glued.amplitude_gen([]) == 1
    assert check_t5b(theory, "g", [], data=data).passed
    assert appendix_identities(theory, "g", rng, data=data).passed
