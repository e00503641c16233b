"""Amplitude maps of regions and the laws they satisfy.

For a region with boundary space ``L`` and solution space ``W`` every
boundary vector splits uniquely as ``xi = xi_R + J xi_I`` with
``xi_R, xi_I`` in ``W``.  The complexified vector ``xi^ = xi_R - i xi_I``
is kept as the pair ``(xi_R, -xi_I)`` and the inner product is extended
complex-bilinearly on such pairs.  The amplitude of a generating state is
the (anti)symmetrized pairing sum of the matrix ``A_ij = {xi^_i, xi^_j}``::

    rho(psi[xi_1..xi_2n]) = (1/n!) sum_sigma kappa^|sigma| prod_j A[sigma(j), sigma(2n+1-j)]

which equals ``2^n pf(A)`` for fermions and ``2^n haf(A)`` for bosons.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .config import settings
from .fock import (
    FockState,
    fock_inner,
    generating_state,
    gen_inner,
    index_sign,
    iota,
    linear_map_state,
    multiplicity,
    relabel,
    tau_merge,
)
from .krein import (
    BOSONIC,
    FERMIONIC,
    KreinSpace,
    RealDecomposer,
    RealSubspace,
    check_kappa,
    conjugation_from_subspace,
    orientation_reverse,
    real_rank,
)
from .report import Check, Report


@dataclass(frozen=True, eq=False)
class Hatted:
    """Complexified solution vectors ``re + i im`` (columns), ``re`` and ``im`` in ``W``."""

    re: np.ndarray
    im: np.ndarray

    def __getitem__(self, cols) -> "Hatted":
        return Hatted(self.re[:, cols], self.im[:, cols])


def pair_value(mat: np.ndarray, kappa: int, method: str = "auto") -> complex:
    """Amplitude of a generating state from its pairing matrix.

    ``method``: ``"auto"`` (gated closed form), ``"fast"`` (closed form) or
    ``"bruteforce"`` (literal sum over ``S_2n``).
    """
    mat = np.asarray(mat, dtype=complex)
    size = mat.shape[0]
    if size % 2:
        return 0j
    if size == 0:
        return complex(1.0)
    n = size // 2
    if method == "bruteforce":
        return kernels.pairing_sum(mat, kappa)
    if method == "auto":
        key = "pfaffian" if kappa == FERMIONIC else "hafnian"
        if not kernels.fast_paths()[key]:
            return kernels.pairing_sum(mat, kappa)
    elif method != "fast":
        raise ValueError(f"unknown method {method!r}")
    if kappa == FERMIONIC:
        return kernels.pairing_order_sign(n) * 2 ** n * kernels.pfaffian((mat - mat.T) / 2)
    return 2 ** n * kernels.hafnian((mat + mat.T) / 2)


def pair_value_repeated(mat: np.ndarray, reps: Sequence[int], kappa: int, method: str = "auto") -> complex:
    """Pairing value for the matrix with row/column ``i`` repeated ``reps[i]`` times."""
    reps = [int(r) for r in reps]
    total = sum(reps)
    if total % 2:
        return 0j
    if kappa == FERMIONIC:
        if any(r > 1 for r in reps):
            return 0j
        keep = [i for i, r in enumerate(reps) if r]
        return pair_value(mat[np.ix_(keep, keep)], kappa, method)
    if method == "auto" and kernels.fast_paths()["hafnian"]:
        sym = (mat + mat.T) / 2
        return 2 ** (total // 2) * kernels.hafnian_repeated(sym, reps)
    idx = np.repeat(np.arange(len(reps)), reps)
    return pair_value(mat[np.ix_(idx, idx)], kappa, "bruteforce" if method == "bruteforce" else "fast")


class AmplitudeContext:
    """Everything needed to evaluate the amplitude map of one region."""

    def __init__(self, space: KreinSpace, w: RealSubspace, kappa: int, name: str = ""):
        self.kappa = check_kappa(kappa)
        self.space = space
        self.w = w
        self.name = name
        self.u = conjugation_from_subspace(space, w, self.kappa)
        self._decomposer = RealDecomposer(space, w) if space.dim else None
        self._basis_pairing = None

    @classmethod
    def from_region(cls, theory, region: str) -> "AmplitudeContext":
        total, _ = theory.boundary_space(region)
        return cls(total, theory.solution_space(region), theory.kappa, region)

    # hat map ------------------------------------------------------------------
    def decompose(self, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``(xi_R, xi_I)`` with ``xi = xi_R + J xi_I``."""
        xi = self.space.check_vector(xi)
        if self._decomposer is None:
            return xi.copy(), np.zeros_like(xi)
        return self._decomposer(xi)

    def hat(self, xi: np.ndarray) -> Hatted:
        xi = np.asarray(xi, dtype=complex)
        if xi.ndim == 1:
            xi = xi[:, None]
        re, im = self.decompose(xi)
        return Hatted(re, -im)

    def bilinear(self, x: Hatted, y: Hatted, form: str = "full") -> np.ndarray:
        """Complex-bilinear extension of a real form, evaluated on hatted columns.

        ``form``: ``"full"`` the inner product, ``"omega"`` the part
        ``2i omega``, ``"g"`` the part ``g``.
        """
        def f(a, b):
            val = self.space.inner(a, b)
            val = np.atleast_2d(val)
            if form == "full":
                return val
            if form == "omega":
                return 1j * val.imag
            if form == "g":
                return val.real.astype(complex)
            raise ValueError(f"unknown form {form!r}")

        return f(x.re, y.re) - f(x.im, y.im) + 1j * (f(x.re, y.im) + f(x.im, y.re))

    def pairing_matrix(self, vectors: Sequence[np.ndarray], form: str = "full") -> np.ndarray:
        if len(vectors) == 0:
            return np.zeros((0, 0), dtype=complex)
        h = self.hat(np.column_stack([self.space.check_vector(v) for v in vectors]))
        return self.bilinear(h, h, form)

    def basis_pairing(self) -> np.ndarray:
        """Pairing matrix of the canonical basis vectors (cached)."""
        if self._basis_pairing is None:
            h = self.hat(np.eye(self.space.dim, dtype=complex))
            mat = self.bilinear(h, h)
            mat.setflags(write=False)
            self._basis_pairing = mat
        return self._basis_pairing

    # amplitudes -----------------------------------------------------------------
    def amplitude_gen(self, vectors: Sequence[np.ndarray], method: str = "auto", form: str = "full") -> complex:
        """Amplitude of the generating state ``psi[vectors]``."""
        if len(vectors) % 2:
            return 0j
        if len(vectors) == 0:
            return complex(1.0)
        return pair_value(self.pairing_matrix(vectors, form), self.kappa, method)

    def amplitude(self, state: FockState, method: str = "auto") -> complex:
        """Amplitude of an arbitrary Fock state (linear in the state)."""
        if not state.space.same_geometry(self.space) or state.kappa != self.kappa:
            raise ValueError("state does not live on this region's boundary")
        base = self.basis_pairing()
        total = 0j
        for idx, c in state.coeffs.items():
            m = len(idx)
            if m % 2:
                continue
            if m == 0:
                total += c
                continue
            counts = Counter(idx)
            labels = sorted(counts)
            sub = base[np.ix_(labels, labels)]
            val = pair_value_repeated(sub, [counts[a] for a in labels], self.kappa, method)
            total += c * val / math.sqrt(2 ** m * multiplicity(idx))
        return complex(total)


# ---------------------------------------------------------------------------
# checks


def _rand(rng, dim, count=None):
    shape = (dim,) if count is None else (dim, count)
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def _residual(a: complex, b: complex, relative: bool = False) -> float:
    diff = abs(a - b)
    return diff / max(1.0, abs(b)) if relative else diff


def check_t3x(kappa: int, signs: Sequence[int], rng: np.random.Generator, samples: int = 10,
              max_degree: int = 3, fock_path: bool = True) -> Report:
    """Slice amplitudes reproduce the inner product.

    For random generating states ``psi'`` and ``psi`` on ``S``, compares
    ``rho_slice(tau(iota psi' (x) psi))`` with ``<psi', psi>``.  The left
    side is evaluated directly on the generating vectors and, optionally,
    through the Fock-state maps.  Also checks the pairing identities of
    the slice.
    """
    from .spacetime import slice_theory

    kappa = check_kappa(kappa)
    theory = slice_theory(kappa, signs)
    ctx = theory.context("slice")
    sp = theory.spaces["S"]
    rev = theory.spaces["~S"]
    d = sp.dim
    rep = Report("T3x")

    def left(v):
        return np.concatenate([np.conj(v), np.zeros(d)])

    def right(v):
        return np.concatenate([np.zeros(d), v])

    worst_pair = 0.0
    for _ in range(samples):
        eta, eta2, xi, xi2 = (_rand(rng, d) for _ in range(4))
        h = ctx.hat(np.column_stack([left(eta), left(eta2), right(xi), right(xi2)]))
        mat = ctx.bilinear(h, h)
        worst_pair = max(worst_pair, abs(mat[0, 1]), abs(mat[2, 3]),
                         abs(mat[0, 2] - kappa * sp.inner(xi, eta)))
    rep.add(Check.from_residual("slice pairing identities", "T3x", worst_pair))

    worst_gen = worst_fock = 0.0
    for t in range(samples):
        n1 = int(rng.integers(0, max_degree + 1))
        n2 = n1 if t % 4 else int(rng.integers(0, max_degree + 1))
        etas = [_rand(rng, d) for _ in range(n1)]
        xis = [_rand(rng, d) for _ in range(n2)]
        rhs = gen_inner(sp, kappa, etas, xis)
        vecs = [left(e) for e in reversed(etas)] + [right(x) for x in xis]
        lhs = kappa ** n1 * ctx.amplitude_gen(vecs)
        worst_gen = max(worst_gen, _residual(lhs, rhs, relative=True))
        if fock_path:
            nmax = max(n1 + n2, 1)
            a = generating_state(sp, kappa, etas, nmax)
            b = generating_state(sp, kappa, xis, nmax)
            merged = tau_merge(iota(a, rev), b, nmax=nmax)
            worst_fock = max(worst_fock, _residual(ctx.amplitude(merged), rhs, relative=True))
    rep.add(Check.from_residual("slice amplitude equals inner product (generating vectors)", "T3x",
                                worst_gen, samples=samples))
    if fock_path:
        rep.add(Check.from_residual("slice amplitude equals inner product (Fock states)", "T3x",
                                    worst_fock, samples=samples))
    return rep


def check_conjugation_law(ctx: AmplitudeContext, state: FockState) -> Check:
    """``rho(U psi) = conj(rho(psi))``."""
    from .fock import conjugation_u

    lhs = ctx.amplitude(conjugation_u(ctx.u, state))
    rhs = np.conj(ctx.amplitude(state))
    return Check.from_residual("amplitude commutes with conjugation", "T4", _residual(lhs, rhs, True))


def check_graded_symmetry(ctx: AmplitudeContext, vectors: Sequence[np.ndarray], i: int, j: int) -> Check:
    """Swapping two arguments multiplies the amplitude by ``kappa``."""
    swapped = list(vectors)
    swapped[i], swapped[j] = swapped[j], swapped[i]
    a = ctx.amplitude_gen(vectors)
    b = ctx.kappa * ctx.amplitude_gen(swapped)
    return Check.from_residual("graded symmetry of the amplitude", "T4", _residual(a, b, True))


def check_form_replacement(ctx: AmplitudeContext, vectors: Sequence[np.ndarray]) -> Check:
    """The amplitude only sees ``2i omega`` (fermions) or ``g`` (bosons)."""
    form = "omega" if ctx.kappa == FERMIONIC else "g"
    a = ctx.amplitude_gen(vectors)
    b = ctx.amplitude_gen(vectors, form=form)
    return Check.from_residual(f"amplitude unchanged with {form} in place of the inner product", "T4",
                               _residual(a, b, True))


# ---------------------------------------------------------------------------
# evolution


class QuantumEvolution:
    """Evolution operator of a region whose boundary splits as ``~S2 | S1``.

    ``out_coords`` index the boundary coordinates of the reversed final
    hypersurface and ``in_coords`` those of the initial one.  The operator
    maps states on ``S1`` to states on ``S2``.
    """

    def __init__(self, ctx: AmplitudeContext, out_coords: Sequence[int], in_coords: Sequence[int]):
        self.ctx = ctx
        self.out_coords = np.asarray(out_coords, dtype=int)
        self.in_coords = np.asarray(in_coords, dtype=int)
        sp = ctx.space
        if sorted(np.r_[self.out_coords, self.in_coords].tolist()) != list(range(sp.dim)):
            raise ValueError("split does not partition the boundary coordinates")
        self.out_space = KreinSpace(tuple(sp.signs[i] for i in self.out_coords), "out")
        self.in_space = KreinSpace(tuple(sp.signs[i] for i in self.in_coords), "in")
        self.target_space, _ = orientation_reverse(self.out_space, ctx.kappa)
        eye = np.zeros((sp.dim, len(self.in_coords)), dtype=complex)
        eye[self.in_coords, np.arange(len(self.in_coords))] = 1.0
        images = ctx.u(eye)
        self.leak = float(np.abs(images[self.in_coords]).max(initial=0.0))
        if self.leak > settings.tol:
            raise ValueError(f"conjugation does not map the initial part to the final part (leak {self.leak:.3g})")
        self._u_images = images[self.out_coords]  # u(e_a) in out coordinates
        self.matrix = np.conj(self._u_images)

    def apply(self, state: FockState) -> FockState:
        """Evolve a state on the initial hypersurface."""
        return linear_map_state(self.matrix, state, self.target_space, state.nmax)

    def conjugate(self, state: FockState) -> FockState:
        """``U_M`` restricted to the initial part, landing on the reversed final part."""
        out = FockState.zero(self.out_space, state.kappa, state.nmax)
        for idx, c in state.coeffs.items():
            m = len(idx)
            vecs = [self._u_images[:, a] for a in reversed(idx)]
            gen = generating_state(self.out_space, state.kappa, vecs, state.nmax)
            out = out + gen * (state.kappa ** m * np.conj(c) / math.sqrt(2 ** m * multiplicity(idx)))
        return out

    def _merge(self, out_state: FockState, in_state: FockState) -> FockState:
        merged = tau_merge(out_state, in_state, nmax=out_state.nmax + in_state.nmax)
        mapping = list(self.out_coords) + list(self.in_coords)
        return relabel(merged, self.ctx.space, mapping)

    def check(self, rng: np.random.Generator, samples: int = 5, max_degree: int = 2) -> Report:
        kappa = self.ctx.kappa
        rep = Report("evolution")
        w73 = w74 = wiso = 0.0
        for _ in range(samples):
            n = int(rng.integers(0, max_degree + 1))
            nmax = max(n, 1)
            psi = generating_state(self.in_space, kappa, [_rand(rng, self.in_space.dim) for _ in range(n)], nmax)
            psi2 = generating_state(self.in_space, kappa, [_rand(rng, self.in_space.dim) for _ in range(n)], nmax)
            bar = generating_state(self.out_space, kappa, [_rand(rng, self.out_space.dim) for _ in range(n)], nmax)
            fin = generating_state(self.target_space, kappa,
                                   [_rand(rng, self.target_space.dim) for _ in range(n)], nmax)
            lhs = self.ctx.amplitude(self._merge(bar, psi))
            rhs = kappa ** n * fock_inner(self.conjugate(psi), bar)
            w73 = max(w73, _residual(lhs, rhs, True))
            lhs = self.ctx.amplitude(self._merge(iota(fin, self.out_space), psi))
            rhs = fock_inner(fin, self.apply(psi))
            w74 = max(w74, _residual(lhs, rhs, True))
            wiso = max(wiso, _residual(fock_inner(self.apply(psi2), self.apply(psi)), fock_inner(psi2, psi), True))
        rep.add(Check.from_residual("amplitude pairs final states with conjugated initial states", "T4",
                                    w73, samples=samples))
        rep.add(Check.from_residual("amplitude is the matrix element of the evolution", "T4", w74, samples=samples))
        rep.add(Check.from_residual("evolution is isometric", "T4", wiso, samples=samples))
        return rep


def quantum_evolution(ctx: AmplitudeContext, out_coords, in_coords) -> QuantumEvolution:
    return QuantumEvolution(ctx, out_coords, in_coords)


# ---------------------------------------------------------------------------
# probabilities


class ProbabilityError(ValueError):
    """Inadmissible subspaces or vanishing normalization."""


def _state_matrix(states: Sequence[FockState], basis: list) -> np.ndarray:
    if not states:
        return np.zeros((len(basis), 0), dtype=complex)
    return np.column_stack([s.vector(basis) for s in states])


def probability(ctx: AmplitudeContext, s_states: Sequence[FockState], a_states: Sequence[FockState]) -> float:
    """Probability that a measurement of ``A`` succeeds given the knowledge ``S``.

    Both lists span subspaces of boundary states.  They must satisfy ``A``
    inside ``S``, be stable under the projections onto the positive and
    negative Krein parts of Fock space, and (for fermions) contain only
    even Fock degrees.
    """
    rank_tol = 1e-8
    for st in list(s_states) + list(a_states):
        if not st.space.same_geometry(ctx.space) or st.kappa != ctx.kappa:
            raise ProbabilityError("state does not live on the boundary of this region")
        if ctx.kappa == FERMIONIC and st.parity_component(1).coeffs:
            raise ProbabilityError("fermionic subspaces must have even Fock degree")
    basis = sorted({idx for st in list(s_states) + list(a_states) for idx in st.coeffs},
                   key=lambda i: (len(i), i))
    if not basis:
        raise ProbabilityError("undefined probability: S is the zero space")
    signs = np.array([index_sign(ctx.space, idx) for idx in basis])
    smat = _state_matrix(s_states, basis)
    amat = _state_matrix(a_states, basis)
    rs = real_rank(smat, rank_tol)
    if amat.shape[1] and real_rank(np.hstack([smat, amat]), rank_tol) != rs:
        raise ProbabilityError("A is not contained in S")
    for name, mat in (("S", smat), ("A", amat)):
        if mat.shape[1] == 0:
            continue
        r = real_rank(mat, rank_tol)
        proj = mat * (signs > 0)[:, None]
        if real_rank(np.hstack([mat, proj]), rank_tol) != r:
            raise ProbabilityError(f"{name} is not a Krein subspace (not stable under the sign projections)")

    weights_a = weights_s = 0.0
    for part in (1, -1):
        mask = (signs == part)[:, None]
        kept: list[np.ndarray] = []
        from_a = 0
        for col_set, is_a in ((amat, True), (smat, False)):
            for col in range(col_set.shape[1]):
                v = col_set[:, col] * mask[:, 0]
                norm0 = np.linalg.norm(v)
                if norm0 == 0:
                    continue
                for q in kept:
                    v = v - np.vdot(q, v) * q
                if np.linalg.norm(v) > rank_tol * norm0:
                    kept.append(v / np.linalg.norm(v))
                    from_a += is_a
        for k, q in enumerate(kept):
            st = FockState(ctx.space, ctx.kappa, dict(zip(basis, q)), max(len(i) for i in basis) or 1)
            val = abs(ctx.amplitude(st)) ** 2
            weights_s += val
            if k < from_a:
                weights_a += val
    if weights_s < 1e-12:
        raise ProbabilityError("undefined probability: all amplitudes on S vanish")
    return float(weights_a / weights_s)


# ---------------------------------------------------------------------------
# coherent states


ROUNDING_SLACK = 16 * np.finfo(float).eps


@dataclass
class CoherentCheck:
    partial_sum: complex
    target: complex
    tail_bound: float
    exponent: complex

    @property
    def difference(self) -> float:
        return abs(self.partial_sum - self.target)

    @property
    def ok(self) -> bool:
        # the bound is exact; allow the rounding of the two evaluated sides
        return self.difference <= self.tail_bound + ROUNDING_SLACK * max(1.0, abs(self.target))


def coherent_amplitude_check(ctx: AmplitudeContext, xi: np.ndarray, order: int = 8) -> CoherentCheck:
    """Truncated coherent-state amplitude against ``exp({xi^, xi^} / 4)``."""
    if ctx.kappa != BOSONIC:
        raise ValueError("coherent states are a bosonic construction")
    xi = ctx.space.check_vector(xi)
    a = complex(ctx.pairing_matrix([xi])[0, 0])
    partial = 0j
    for n in range(order + 1):
        if n % 2:
            continue
        rho = pair_value_repeated(np.array([[a]]), [n], BOSONIC) if n else 1.0
        partial += rho / (math.factorial(n) * 2 ** n)
    k = order // 2
    x = abs(a) / 4
    bound = x ** (k + 1) / math.factorial(k + 1) * math.exp(x)
    return CoherentCheck(complex(partial), complex(np.exp(a / 4)), bound, a)
