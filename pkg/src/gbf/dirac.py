"""Free Dirac field on a finite set of plane-wave modes.

Gamma matrices, the hypersurface matrices ``P = gamma^0 gamma^mu n_mu``,
momentum-space spinors and theory builders for slabs between hypersurfaces
of constant ``t`` or constant ``z``.  Mode integrals become finite sums;
each mode contributes the four complex coordinates ``(a, s=1), (a, s=2),
(b, s=1), (b, s=2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .krein import FERMIONIC, KreinSpace, realify
from .spacetime import TheoryBuilder, TheorySpec, slice_solution_space

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
REPRESENTATIONS = ("standard", "chiral")
SPINOR_TOL = 1e-10

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


class SpinorError(ArithmeticError):
    """A constructed spinor basis failed its defining identities."""


class EvanescentModeError(ValueError):
    """Mode label with ``|E| < sqrt(k~^2 + m^2)`` (no real ``k_3``)."""


@dataclass(frozen=True, eq=False)
class GammaBasis:
    matrices: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    rep: str

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.matrices[mu]

    def slash(self, k: np.ndarray) -> np.ndarray:
        """``gamma^mu k_mu`` for a contravariant 4-vector ``k``."""
        low = ETA @ np.asarray(k, dtype=float)
        return sum(self.matrices[mu] * low[mu] for mu in range(4))

    def clifford_residual(self) -> float:
        err = 0.0
        for mu in range(4):
            for nu in range(4):
                anti = self[mu] @ self[nu] + self[nu] @ self[mu]
                err = max(err, np.abs(anti - 2 * ETA[mu, nu] * np.eye(4)).max())
        return float(err)

    def hermiticity_residual(self) -> float:
        """``gamma^0 gamma^mu`` must be self-adjoint."""
        return float(max(np.abs(self[0] @ self[mu] - (self[0] @ self[mu]).conj().T).max() for mu in range(4)))


def gamma(rep: str = "standard") -> GammaBasis:
    """Gamma matrices in the standard (Dirac) or chiral (Weyl) representation."""
    if rep == "standard":
        g0 = np.block([[_I2, _Z2], [_Z2, -_I2]])
    elif rep == "chiral":
        g0 = np.block([[_Z2, _I2], [_I2, _Z2]])
    else:
        raise ValueError(f"unknown representation {rep!r}")
    spatial = tuple(np.block([[_Z2, s], [-s, _Z2]]) for s in _PAULI)
    return GammaBasis((g0,) + spatial, rep)


def hypersurface_P(gb: GammaBasis, n: Sequence[float], tol: float = 1e-10) -> tuple[np.ndarray, tuple[int, int, int]]:
    """``P = gamma^0 gamma^mu n_mu`` and its eigenvalue counts (positive, negative, zero)."""
    n = np.asarray(n, dtype=float)
    p = gb[0] @ gb.slash(n)
    w = np.linalg.eigvalsh((p + p.conj().T) / 2)
    scale = max(1.0, np.abs(w).max(initial=0.0))
    pos = int(np.sum(w > tol * scale))
    neg = int(np.sum(w < -tol * scale))
    return p, (pos, neg, len(w) - pos - neg)


def lorentz_boost(velocity: Sequence[float]) -> np.ndarray:
    """Pure boost matrix acting on contravariant 4-vectors."""
    v = np.asarray(velocity, dtype=float)
    b2 = float(v @ v)
    if b2 >= 1.0:
        raise ValueError("boost velocity must be below 1")
    g = 1.0 / np.sqrt(1.0 - b2)
    out = np.eye(4)
    out[0, 0] = g
    out[0, 1:] = out[1:, 0] = g * v
    if b2 > 0:
        out[1:, 1:] += (g - 1.0) * np.outer(v, v) / b2
    return out


# ---------------------------------------------------------------------------
# spinors


def _rest_spinors(gb: GammaBasis, m: float) -> tuple[np.ndarray, np.ndarray]:
    w, v = np.linalg.eigh(gb[0])
    scale = np.sqrt(2 * m)
    return v[:, w > 0] * scale, v[:, w < 0] * scale


@dataclass(frozen=True, eq=False)
class Spinors:
    """``u^s``, ``v^s`` (columns) for the on-shell momentum ``k``."""

    u: np.ndarray
    v: np.ndarray
    k: np.ndarray
    m: float


def _four_momentum(kvec: Sequence[float], m: float) -> np.ndarray:
    kvec = np.asarray(kvec, dtype=float)
    return np.r_[np.sqrt(m * m + kvec @ kvec), kvec]


def _boosted(kvec, m: float, gb: GammaBasis) -> Spinors:
    k = _four_momentum(kvec, m)
    u0, v0 = _rest_spinors(gb, m)
    norm = np.sqrt(2 * m * (k[0] + m))
    ks = gb.slash(k)
    return Spinors((ks + m * np.eye(4)) @ u0 / norm, (-ks + m * np.eye(4)) @ v0 / norm, k, m)


def spinor_residuals(kvec: Sequence[float], m: float, gb: GammaBasis) -> dict[str, float]:
    """Residuals of the defining equations, normalization and cross conditions.

    Normalization residuals are relative to ``max(1, E)``.
    """
    sp = _boosted(kvec, m, gb)
    opp = _boosted(-np.asarray(kvec, dtype=float), m, gb)
    k = sp.k
    ks = gb.slash(k)
    scale = max(1.0, k[0])
    out = {
        "dirac_u": np.abs((ks - m * np.eye(4)) @ sp.u).max() / scale,
        "dirac_v": np.abs((ks + m * np.eye(4)) @ sp.v).max() / scale,
        "norm_u": 0.0,
        "norm_v": 0.0,
    }
    for mu in range(4):
        g = gb[0] @ gb[mu]
        out["norm_u"] = max(out["norm_u"], np.abs(sp.u.conj().T @ g @ sp.u - 2 * k[mu] * _I2).max() / scale)
        out["norm_v"] = max(out["norm_v"], np.abs(sp.v.conj().T @ g @ sp.v - 2 * k[mu] * _I2).max() / scale)
    out["cross_uv"] = np.abs(sp.u.conj().T @ opp.v).max() / scale
    out["cross_vu"] = np.abs(sp.v.conj().T @ opp.u).max() / scale
    return {key: float(val) for key, val in out.items()}


def spinors_uv(kvec: Sequence[float], m: float, gb: GammaBasis | None = None, verify: bool = True) -> Spinors:
    """Momentum-space spinors, boosted from rest and then verified."""
    if m <= 0:
        raise ValueError("mass must be positive")
    gb = gb or gamma()
    sp = _boosted(kvec, m, gb)
    if verify:
        res = spinor_residuals(kvec, m, gb)
        bad = {k: v for k, v in res.items() if v > SPINOR_TOL}
        if bad:
            raise SpinorError(f"spinor identities violated: {bad}")
    return sp


def k3_of(E: float, kt: Sequence[float], m: float) -> float:
    kt = np.asarray(kt, dtype=float)
    disc = E * E - kt @ kt - m * m
    if disc <= 0:
        raise EvanescentModeError(f"mode (E={E}, k~={kt.tolist()}) is evanescent or grazing")
    return float(np.sqrt(disc))


def tilde_spinors(E: float, kt: Sequence[float], m: float, gb: GammaBasis | None = None) -> tuple[np.ndarray, np.ndarray, float]:
    """Spinors ``u~^s``, ``v~^s`` for the mode ``(E, k~)`` and its ``k_3 > 0``."""
    gb = gb or gamma()
    kt = np.asarray(kt, dtype=float)
    k3 = k3_of(E, kt, m)
    if E > 0:
        sp = spinors_uv(np.r_[kt, k3], m, gb)
        return sp.u, sp.v, k3
    sp = spinors_uv(np.r_[-kt, -k3], m, gb)
    return sp.v, sp.u, k3


def tilde_residuals(E: float, kt: Sequence[float], m: float, gb: GammaBasis | None = None,
                    sign: int = 1) -> dict[str, float]:
    """Residuals of the ``gamma^0 gamma^3`` identities of the tilde spinors.

    The diagonal identities are tested against ``sign * 2 (E/|E|) k_3``;
    ``sign=+1`` is what the spinors above satisfy.  Relative to ``max(1, |E|)``.
    """
    gb = gb or gamma()
    ut, vt, k3 = tilde_spinors(E, kt, m, gb)
    ut2, vt2, _ = tilde_spinors(-E, -np.asarray(kt, dtype=float), m, gb)
    g = gb[0] @ gb[3]
    target = sign * 2 * np.sign(E) * k3 * _I2
    scale = max(1.0, abs(E))
    return {
        "uu": float(np.abs(ut.conj().T @ g @ ut - target).max() / scale),
        "vv": float(np.abs(vt.conj().T @ g @ vt - target).max() / scale),
        "uv": float(np.abs(ut.conj().T @ g @ vt2).max() / scale),
        "vu": float(np.abs(vt.conj().T @ g @ ut2).max() / scale),
    }


# ---------------------------------------------------------------------------
# mode sets and theories


def random_momenta(rng: np.random.Generator, count: int, scale: float = 1.0) -> np.ndarray:
    return rng.normal(scale=scale, size=(count, 3))


def random_z_modes(rng: np.random.Generator, count: int, m: float, scale: float = 1.0) -> list[tuple[float, np.ndarray]]:
    """Propagating ``(E, k~)`` labels with alternating signs of ``E``."""
    out = []
    for i in range(count):
        kt = rng.normal(scale=scale, size=2)
        k3 = abs(rng.normal(scale=scale)) + 0.1
        E = np.sqrt(kt @ kt + k3 * k3 + m * m) * (1 if i % 2 == 0 else -1)
        out.append((float(E), kt))
    return out


def _slab_theory(signs: Sequence[int], prefix: str, positions: Sequence[float], metadata: dict) -> TheorySpec:
    positions = list(positions)
    if len(positions) < 2 or any(b <= a for a, b in zip(positions, positions[1:])):
        raise ValueError("need at least two increasing hypersurface positions")
    b = TheoryBuilder(FERMIONIC)
    labels = [f"{prefix}{i}" for i in range(len(positions))]
    for lab in labels:
        b.hypersurface(lab, signs)
    dim = len(signs)
    names = []
    for i in range(len(labels) - 1):
        name = f"[{labels[i]},{labels[i + 1]}]"
        b.region(name, (labels[i], f"~{labels[i + 1]}"), slice_solution_space(dim))
        names.append(name)
    if len(labels) >= 3:
        b.union("pair", (names[0], names[1]))
        b.glue("join", "pair", 2, 1, f"[{labels[0]},{labels[2]}]")
    b.metadata.update(metadata)
    b.metadata["positions"] = positions
    b.metadata["intervals"] = names
    return b.build()


def equal_time_signs(count: int) -> tuple[int, ...]:
    return (1,) * (4 * count)


def constant_z_signs(energies: Sequence[float]) -> tuple[int, ...]:
    return tuple(int(np.sign(E)) for E in energies for _ in range(4))


def build_equal_time_theory(momenta: Sequence[Sequence[float]], times: Sequence[float], m: float = 1.0) -> TheorySpec:
    """Slabs between constant-time hypersurfaces (positive-definite slice spaces)."""
    momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
    return _slab_theory(equal_time_signs(len(momenta)), "t", times,
                        {"slab": "t", "mass": m, "momenta": momenta.tolist()})


def build_constant_z_theory(modes: Sequence[tuple[float, Sequence[float]]], zs: Sequence[float],
                            m: float = 1.0) -> TheorySpec:
    """Slabs between constant-``z`` hypersurfaces (Krein slice spaces, sign ``E/|E|`` per mode)."""
    energies = []
    for E, kt in modes:
        k3_of(E, kt, m)
        energies.append(float(E))
    return _slab_theory(constant_z_signs(energies), "z", zs,
                        {"slab": "z", "mass": m, "modes": [[E, list(map(float, kt))] for E, kt in modes]})


def split_projector_difference(theory: TheorySpec, region: str) -> float:
    """Distance between the geometric (first/second component) and the ``+/-`` split of the boundary."""
    total, offsets = theory.boundary_space(region)
    first = theory.spaces[theory.regions[region].boundary[0]].dim
    geometric = np.zeros(total.dim)
    geometric[:first] = 1.0
    krein = (total.sign_array > 0).astype(float)
    # the two splits agree iff one projector equals the other or its complement
    return float(min(np.abs(geometric - krein).max(), np.abs(geometric - (1 - krein)).max()))


# ---------------------------------------------------------------------------
# symplectic forms in the global parametrization


def z_coordinates(momenta: Sequence[Sequence[float]], m: float) -> tuple[np.ndarray, list[tuple[float, np.ndarray]]]:
    """Real-linear map from global mode coordinates to constant-``z`` coordinates.

    Returns the realified matrix ``T`` (acting on ``[Re; Im]``) and the
    ``(E, k~)`` labels.  Modes with ``k_3 > 0`` become ``E > 0`` modes with
    the same coefficients; modes with ``k_3 < 0`` become ``E < 0`` modes at
    ``(-E, -k~)`` with ``a`` and ``b`` exchanged and conjugated.
    """
    momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
    n = 4 * len(momenta)
    t = np.zeros((2 * n, 2 * n))
    labels = []
    for i, k in enumerate(momenta):
        if k[2] == 0:
            raise EvanescentModeError("modes with k_3 = 0 have no constant-z description")
        E = float(np.sqrt(m * m + k @ k))
        base = 4 * i
        if k[2] > 0:
            labels.append((E, k[:2].copy()))
            for j in range(4):
                t[base + j, base + j] = 1.0
                t[n + base + j, n + base + j] = 1.0
        else:
            labels.append((-E, -k[:2]))
            for j in range(4):
                src = base + (j + 2) % 4  # a <-> b
                t[base + j, src] = 1.0
                t[n + base + j, n + src] = -1.0
    return t, labels


def symplectic_gram(signs: Sequence[int], transform: np.ndarray | None = None) -> np.ndarray:
    """Gram matrix of ``omega = Im<.,.> / 2`` on the realified standard basis, pulled back by ``transform``."""
    sp = KreinSpace(tuple(signs))
    n = sp.dim
    basis = np.hstack([np.eye(n), 1j * np.eye(n)])
    if transform is not None:
        re = transform @ realify(basis)
        basis = re[:n] + 1j * re[n:]
    return np.asarray(sp.omega(basis, basis))


def metric_gram(signs: Sequence[int], transform: np.ndarray | None = None) -> np.ndarray:
    sp = KreinSpace(tuple(signs))
    n = sp.dim
    basis = np.hstack([np.eye(n), 1j * np.eye(n)])
    if transform is not None:
        re = transform @ realify(basis)
        basis = re[:n] + 1j * re[n:]
    return np.asarray(sp.g(basis, basis))


def omega_comparison(momenta: Sequence[Sequence[float]], m: float) -> dict[str, float]:
    """``omega_z`` versus ``omega_t`` (and ``g_z`` versus ``g_t``) in global coordinates."""
    momenta = np.atleast_2d(np.asarray(momenta, dtype=float))
    t, labels = z_coordinates(momenta, m)
    st = equal_time_signs(len(momenta))
    sz = constant_z_signs([E for E, _ in labels])
    return {
        "omega": float(np.abs(symplectic_gram(sz, t) - symplectic_gram(st)).max()),
        "g": float(np.abs(metric_gram(sz, t) - metric_gram(st)).max()),
    }
