import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gbf.amplitude import quantum_evolution
from gbf.dirac import (
    ETA,
    REPRESENTATIONS,
    EvanescentModeError,
    build_constant_z_theory,
    build_equal_time_theory,
    gamma,
    hypersurface_P,
    k3_of,
    lorentz_boost,
    omega_comparison,
    random_momenta,
    random_z_modes,
    spinor_residuals,
    spinors_uv,
    split_projector_difference,
    tilde_residuals,
    tilde_spinors,
    z_coordinates,
)
from gbf.gluing import check_t5b
from gbf.spacetime import check_classical_axioms

seed_st = st.integers(0, 2**32 - 1)
momentum_st = st.lists(st.floats(-3, 3), min_size=3, max_size=3)


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_clifford_and_hermiticity(rep):
    gb = gamma(rep)
    assert gb.clifford_residual() <= 1e-12
    assert gb.hermiticity_residual() <= 1e-12


def test_unknown_representation():
    with pytest.raises(ValueError):
        gamma("majorana-ish")


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_time_normal_is_identity(rep):
    p, counts = hypersurface_P(gamma(rep), (1, 0, 0, 0))
    assert np.allclose(p, np.eye(4)) and counts == (4, 0, 0)


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_space_normal_signature(rep):
    p, counts = hypersurface_P(gamma(rep), (0, 0, 0, 1))
    assert counts == (2, 2, 0)
    assert np.allclose(p, p.conj().T) and np.allclose(p @ p, np.eye(4))


def test_space_normal_chiral_is_diagonal():
    p, _ = hypersurface_P(gamma("chiral"), (0, 0, 0, 1))
    assert np.array_equal(p, np.diag([1, -1, -1, 1]).astype(complex))


def test_space_normal_standard_is_off_diagonal():
    p, _ = hypersurface_P(gamma("standard"), (0, 0, 0, 1))
    s3 = np.diag([1, -1])
    expected = np.zeros((4, 4))
    expected[:2, 2:] = expected[2:, :2] = -s3
    assert np.allclose(p, expected)


def test_lightlike_normal_is_degenerate():
    _, counts = hypersurface_P(gamma(), (1, 0, 0, 1))
    assert counts == (2, 0, 2)


@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9))
def test_boosted_normals(a, b):
    gb = gamma()
    v = np.array([a, b, 0.0]) / max(1.0, np.hypot(a, b) / 0.9)
    lam = lorentz_boost(v)
    assert np.allclose(lam.T @ ETA @ lam, ETA)
    # timelike normals give a definite form, spacelike normals a split one
    _, timelike = hypersurface_P(gb, ETA @ lam @ [1, 0, 0, 0])
    _, spacelike = hypersurface_P(gb, ETA @ lam @ [0, 0, 0, 1])
    assert timelike == (4, 0, 0) and spacelike == (2, 2, 0)


def test_boost_rejects_superluminal():
    with pytest.raises(ValueError):
        lorentz_boost([1.0, 0, 0])


@pytest.mark.parametrize("rep", REPRESENTATIONS)
def test_rest_frame_normalization(rep):
    gb = gamma(rep)
    sp = spinors_uv(np.zeros(3), 1.5, gb)
    assert np.allclose(sp.u.conj().T @ sp.u, 3.0 * np.eye(2))
    assert np.allclose(sp.v.conj().T @ sp.v, 3.0 * np.eye(2))
    assert np.allclose(sp.k, [1.5, 0, 0, 0])


@given(momentum_st, st.sampled_from(REPRESENTATIONS))
def test_spinor_identities(k, rep):
    res = spinor_residuals(k, 1.0, gamma(rep))
    assert set(res) == {"dirac_u", "dirac_v", "norm_u", "norm_v", "cross_uv", "cross_vu"}
    assert max(res.values()) <= 1e-10


def test_tilde_definitions():
    gb = gamma()
    kt, m = np.array([0.3, -0.2]), 1.0
    E = 2.0
    k3 = k3_of(E, kt, m)
    assert np.isclose(E * E, kt @ kt + k3 * k3 + m * m)
    ut, vt, _ = tilde_spinors(E, kt, m, gb)
    sp = spinors_uv(np.r_[kt, k3], m, gb)
    assert np.allclose(ut, sp.u) and np.allclose(vt, sp.v)
    ut, vt, _ = tilde_spinors(-E, kt, m, gb)
    sp = spinors_uv(np.r_[-kt, -k3], m, gb)
    assert np.allclose(ut, sp.v) and np.allclose(vt, sp.u)


def test_evanescent_mode_rejected():
    with pytest.raises(EvanescentModeError):
        k3_of(1.0, [0.5, 0.5], 1.0)


@given(seed_st)
def test_tilde_identities_consistent_sign(seed):
    rng = np.random.default_rng(seed)
    for E, kt in random_z_modes(rng, 2, 1.0):
        assert max(tilde_residuals(E, kt, 1.0).values()) <= 1e-10


def test_tilde_identities_opposite_sign_fails(rng):
    E, kt = random_z_modes(rng, 1, 1.0)[0]
    res = tilde_residuals(E, kt, 1.0, sign=-1)
    assert res["uu"] > 1 and res["uv"] <= 1e-10


class TestEqualTime:
    @pytest.fixture
    def theory(self, rng):
        return build_equal_time_theory(random_momenta(rng, 1), [0.0, 1.0, 2.0])

    def test_structure(self, theory):
        assert theory.spaces["t0"].signs == (1, 1, 1, 1)
        assert set(theory.regions) >= {"[t0,t1]", "[t1,t2]", "pair", "[t0,t2]"}

    def test_axioms(self, theory, rng):
        assert check_classical_axioms(theory).passed
        assert check_t5b(theory, "join", [rng.normal(size=8) + 1j * rng.normal(size=8)]).passed

    def test_evolution_is_identity(self, theory):
        ev = quantum_evolution(theory.context("[t0,t1]"), [0, 1, 2, 3], [4, 5, 6, 7])
        assert np.allclose(ev.matrix, np.eye(4))

    def test_conjugation_swaps_sides(self, theory, rng):
        ctx = theory.context("[t0,t1]")
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert np.allclose(ctx.u(np.r_[a, b]), np.r_[np.conj(b), np.conj(a)])

    def test_rejects_bad_positions(self):
        with pytest.raises(ValueError):
            build_equal_time_theory([[0, 0, 1]], [1.0, 0.0])


class TestConstantZ:
    @pytest.fixture
    def theory(self, rng):
        return build_constant_z_theory(random_z_modes(rng, 2, 1.0), [0.0, 1.0, 2.0])

    def test_krein_signature(self, theory):
        sp = theory.spaces["z0"]
        assert (sp.p, sp.q) == (4, 4)

    def test_axioms(self, theory):
        assert check_classical_axioms(theory).passed
        assert check_t5b(theory, "join", []).passed

    def test_slab_split_is_not_sign_split(self, theory):
        assert split_projector_difference(theory, "[z0,z1]") > 0

    def test_evanescent_modes_rejected(self):
        with pytest.raises(EvanescentModeError):
            build_constant_z_theory([(1.0, np.array([1.0, 0.0]))], [0.0, 1.0])


@given(seed_st)
def test_symplectic_forms_agree(seed):
    rng = np.random.default_rng(seed)
    res = omega_comparison(random_momenta(rng, 2), 1.0)
    assert res["omega"] <= 1e-10


def test_metric_differs_for_negative_k3():
    res = omega_comparison([[0.1, 0.2, -0.5]], 1.0)
    assert res["omega"] <= 1e-12 and res["g"] > 0.5


def test_z_coordinates_relabel_negative_k3():
    _, labels = z_coordinates([[0.1, 0.2, 0.5], [0.3, -0.1, -0.4]], 2.0)
    assert labels[0][0] > 0 and labels[1][0] < 0
    assert np.allclose(labels[1][1], [-0.3, 0.1])
    with pytest.raises(EvanescentModeError):
        z_coordinates([[0.1, 0.2, 0.0]], 1.0)
