"""Gluing: factorization over disjoint unions, gluing anomalies and self-gluing identities.

A self-gluing identifies the boundary component ``S`` of a region ``M``
with its reversed copy ``~S``; the result is ``M1`` with the remaining
boundary.  For a cutoff subspace ``L_alpha`` of ``L_S`` with Krein-orthonormal
basis ``xi_1..xi_k`` (signs ``s_a``) the regularized sum is::

    r_alpha(phi) = sum_m 1/(2^m m!) sum_{a_1..a_m} (-1)^{#(s_a < 0)} kappa^m
                   rho_M(phi.., (0, xi_a1.., 0), (0, 0, xi_am..))

where the last block lives on ``~S`` (conjugated coordinates).  The
anomaly is ``c_alpha = r_alpha()`` and the composition identity reads
``rho_M1(psi[phi..]) c_alpha = r_alpha(phi)`` once ``L_alpha`` contains the
lifts of the ``phi``.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .amplitude import AmplitudeContext, pair_value, pair_value_repeated
from .config import settings
from .fock import (
    FockState,
    fock_basis,
    index_sign,
    iota,
    linear_map_state,
    relabel,
    tau_merge,
)
from .krein import BOSONIC, FERMIONIC, KreinSpace, columns, random_unitary
from .report import ILL_DEFINED, INFO, Check, Report
from .spacetime import GluingGeometry, TheorySpec

# bosonic convergence surrogate: this many consecutive small, decreasing m-terms
CONVERGENCE_RUN = 3
CONVERGENCE_TOL = 1e-10
NEGLIGIBLE = 1e-30
ORDERED_MAX_DIM = 4


class CutoffError(ValueError):
    """The cutoff subspace does not contain the required lift span."""


class IllDefinedAnomaly(ArithmeticError):
    """The bosonic anomaly series failed the absolute-convergence test."""

    def __init__(self, message: str, partial_sums: Sequence[complex], abs_terms: Sequence[float]):
        super().__init__(message)
        self.partial_sums = list(partial_sums)
        self.abs_terms = list(abs_terms)


class UnsupportedStatistics(ValueError):
    """Operation only defined for one statistics."""


# ---------------------------------------------------------------------------
# cutoffs


@dataclass(frozen=True, eq=False)
class Cutoff:
    """Krein-orthonormal basis (columns) of a nondegenerate subspace of ``L_S``."""

    space: KreinSpace
    basis: np.ndarray
    signs: tuple[int, ...]

    def __post_init__(self):
        basis = columns(self.basis, self.space.dim)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "signs", tuple(int(s) for s in self.signs))
        if basis.shape[1] != len(self.signs):
            raise ValueError("one sign per basis vector required")
        gram = basis.conj().T @ (self.space.sign_array[:, None] * basis)
        err = np.abs(gram - np.diag(self.signs)).max(initial=0.0)
        if err > 1e-8:
            raise ValueError(f"cutoff basis is not Krein-orthonormal (error {err:.3g})")

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def krein_space(self) -> KreinSpace:
        return KreinSpace(self.signs, "alpha")

    @classmethod
    def empty(cls, space: KreinSpace) -> "Cutoff":
        return cls(space, np.zeros((space.dim, 0), dtype=complex), ())

    @classmethod
    def full(cls, space: KreinSpace) -> "Cutoff":
        return cls(space, np.eye(space.dim, dtype=complex), space.signs)

    @classmethod
    def adapted_span(cls, space: KreinSpace, vectors: Sequence[np.ndarray], tol: float = 1e-8) -> "Cutoff":
        """Smallest cutoff stable under the sign projections containing ``vectors``."""
        cols, signs = [], []
        for part in (1, -1):
            kept: list[np.ndarray] = []
            for v in vectors:
                w = space.project(space.check_vector(v), part)
                n0 = np.linalg.norm(w)
                if n0 == 0:
                    continue
                for q in kept:
                    w = w - np.vdot(q, w) * q
                if np.linalg.norm(w) > tol * max(n0, 1.0):
                    kept.append(w / np.linalg.norm(w))
            cols += kept
            signs += [part] * len(kept)
        basis = np.column_stack(cols) if cols else np.zeros((space.dim, 0), dtype=complex)
        return cls(space, basis, tuple(signs))

    def extend_random(self, rng: np.random.Generator, count: int = 1) -> "Cutoff":
        """Add ``count`` random orthonormal directions (if room is left)."""
        basis, signs = self.basis, list(self.signs)
        for _ in range(count):
            room = [part for part in (1, -1)
                    if signs.count(part) < (self.space.p if part > 0 else self.space.q)]
            if not room:
                break
            part = room[int(rng.integers(len(room)))]
            mask = self.space.sign_array == part
            while True:
                w = np.where(mask, rng.normal(size=self.space.dim) + 1j * rng.normal(size=self.space.dim), 0)
                for j, s in enumerate(signs):
                    if s == part:
                        w = w - np.vdot(basis[:, j], w) * basis[:, j]
                if np.linalg.norm(w) > 1e-6:
                    break
            basis = np.column_stack([basis, w / np.linalg.norm(w)])
            signs.append(part)
        return Cutoff(self.space, basis, tuple(signs))

    def rotate(self, rng: np.random.Generator) -> "Cutoff":
        """Same subspace, basis rotated by a random unitary within each sign block."""
        basis = self.basis.copy()
        for part in (1, -1):
            cols = [j for j, s in enumerate(self.signs) if s == part]
            if cols:
                basis[:, cols] = basis[:, cols] @ random_unitary(len(cols), rng)
        return Cutoff(self.space, basis, self.signs)

    def contains(self, v: np.ndarray) -> float:
        """Distance from ``v`` to the cutoff subspace (0 when contained)."""
        v = self.space.check_vector(v)
        coef = self.signs * (self.basis.conj().T @ (self.space.sign_array * v)) if self.dim else np.zeros(0)
        return float(np.linalg.norm(v - self.basis @ coef))

    def is_subspace_of(self, other: "Cutoff") -> bool:
        return all(other.contains(self.basis[:, j]) <= 1e-8 for j in range(self.dim))


# ---------------------------------------------------------------------------
# the regularized sums


class GluingData:
    """Geometry plus amplitude contexts of a self-gluing (contexts built once)."""

    def __init__(self, theory: TheorySpec, gluing: str):
        self.theory = theory
        self.geometry = GluingGeometry.build(theory, gluing)
        self.gluing = self.geometry.gluing
        self.kappa = theory.kappa
        self.ctx = theory.context(self.gluing.region)
        self._ctx1 = None

    @property
    def ctx_glued(self) -> AmplitudeContext:
        if self._ctx1 is None:
            self._ctx1 = self.theory.context(self.gluing.result)
        return self._ctx1

    @property
    def sigma_space(self) -> KreinSpace:
        return self.geometry.sigma_space

    def lift(self, phi: np.ndarray) -> np.ndarray:
        return self.geometry.lift(phi)[0]

    def lift_span(self, phis: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Lifts of the real-decomposition parts of each ``phi``."""
        out = []
        for phi in phis:
            re, im = self.ctx_glued.decompose(phi)
            out += [self.lift(re), self.lift(im)]
        return out

    def require_lifts(self, phis: Sequence[np.ndarray], cutoff: Cutoff) -> None:
        for i, v in enumerate(self.lift_span(phis)):
            dist = cutoff.contains(v)
            if dist > 1e-8 * max(1.0, float(np.linalg.norm(v))):
                raise CutoffError(f"cutoff misses the lift of argument {i // 2} "
                                  f"({'real' if i % 2 == 0 else 'imaginary'} part), distance {dist:.3g}")

    def pairing(self, phis: Sequence[np.ndarray], cutoff: Cutoff) -> np.ndarray:
        """Pairing matrix of ``phi..``, the cutoff basis on ``S`` and on ``~S``."""
        g = self.geometry
        cols = [g.embed_rest(self.geometry.rest_space.check_vector(p)) for p in phis]
        cols += [g.embed_sigma(cutoff.basis[:, a]) for a in range(cutoff.dim)]
        cols += [g.embed_sigma_bar(cutoff.basis[:, a]) for a in range(cutoff.dim)]
        return self.ctx.pairing_matrix(cols)


@dataclass
class MTerms:
    """Per-degree contributions of a regularized sum."""

    values: list[complex] = field(default_factory=list)
    abs_values: list[float] = field(default_factory=list)

    @property
    def partial_sums(self) -> list[complex]:
        return list(np.cumsum(self.values)) if self.values else []

    @property
    def total(self) -> complex:
        return complex(sum(self.values))


def _tuple_sign(cutoff: Cutoff, tup: Sequence[int]) -> int:
    return -1 if sum(cutoff.signs[a] < 0 for a in tup) % 2 else 1


def r_alpha_terms(data: GluingData, phis: Sequence[np.ndarray], cutoff: Cutoff, mmax: int | None = None,
                  method: str = "ordered") -> MTerms:
    """Degree-by-degree terms of ``r_alpha(phi)``.

    ``method="ordered"`` sums unrestricted ordered tuples with weight
    ``1/(2^m m!)``; ``"sorted"`` sums subsets (fermions) or multisets
    (bosons) with the matching multiplicity.  Fermionic tuples with a
    repeated index vanish identically and are skipped, so the fermionic
    series stops at ``m = dim L_alpha``.
    """
    kappa = data.kappa
    n = len(phis)
    k = cutoff.dim
    mmax = settings.mmax if mmax is None else mmax
    top = min(k, mmax) if kappa == FERMIONIC else mmax
    mat = data.pairing(phis, cutoff)
    head = list(range(n))
    out = MTerms()
    for m in range(top + 1):
        if (n + 2 * m) % 2:
            out.values.append(0j)
            out.abs_values.append(0.0)
            continue
        weight = kappa ** m / (2 ** m * math.factorial(m))
        total, atotal = 0j, 0.0
        if method == "ordered":
            tuples = itertools.permutations(range(k), m) if kappa == FERMIONIC else itertools.product(range(k), repeat=m)
            for tup in tuples:
                idx = head + [n + a for a in tup] + [n + k + a for a in reversed(tup)]
                val = _tuple_sign(cutoff, tup) * pair_value(mat[np.ix_(idx, idx)], kappa)
                total += val
                atotal += abs(val)
        elif method == "sorted":
            combos = (itertools.combinations(range(k), m) if kappa == FERMIONIC
                      else itertools.combinations_with_replacement(range(k), m))
            for tup in combos:
                counts = Counter(tup)
                mult = math.factorial(m)
                for c in counts.values():
                    mult //= math.factorial(c)
                if kappa == FERMIONIC:
                    idx = head + [n + a for a in tup] + [n + k + a for a in reversed(tup)]
                    val = pair_value(mat[np.ix_(idx, idx)], kappa)
                else:
                    labels = sorted(counts)
                    idx = head + [n + a for a in labels] + [n + k + a for a in labels]
                    reps = [1] * n + [counts[a] for a in labels] * 2
                    val = pair_value_repeated(mat[np.ix_(idx, idx)], reps, kappa)
                val *= mult * _tuple_sign(cutoff, tup)
                total += val
                atotal += abs(val)
        else:
            raise ValueError(f"unknown method {method!r}")
        out.values.append(complex(weight * total))
        out.abs_values.append(abs(weight) * atotal)
    return out


def bosonic_converged(abs_terms: Sequence[float], run: int = CONVERGENCE_RUN, tol: float = CONVERGENCE_TOL) -> bool:
    """Surrogate absolute-convergence test on the last ``run`` terms with ``m >= 1``.

    The terms must all be below ``tol`` and non-increasing; values below
    ``NEGLIGIBLE`` count as zero so exact cancellations do not break the run.
    """
    tail = [max(float(a), NEGLIGIBLE) for a in list(abs_terms)[1:]]
    if len(tail) < run:
        return False
    last = tail[-run:]
    return all(a < tol for a in last) and all(b <= a for a, b in zip(last, last[1:]))


@dataclass
class AnomalyResult:
    value: complex
    terms: MTerms
    cutoff_dim: int
    converged: bool

    @property
    def partial_sums(self) -> list[complex]:
        return self.terms.partial_sums


def _finish(data: GluingData, terms: MTerms, cutoff: Cutoff) -> AnomalyResult:
    if data.kappa == FERMIONIC:
        converged = True
    else:
        converged = cutoff.dim == 0 or bosonic_converged(terms.abs_values)
    return AnomalyResult(terms.total, terms, cutoff.dim, converged)


def regularized_sum(data: GluingData, phis: Sequence[np.ndarray], cutoff: Cutoff, mmax: int | None = None,
                    method: str | None = None, strict: bool = True) -> AnomalyResult:
    """``r_alpha(phi)``; raises :class:`IllDefinedAnomaly` for unconverged bosonic series when ``strict``."""
    if method is None:
        # ordered tuples for small fermionic cutoffs, subsets/multisets otherwise
        method = "ordered" if data.kappa == FERMIONIC and cutoff.dim <= ORDERED_MAX_DIM else "sorted"
    terms = r_alpha_terms(data, phis, cutoff, mmax, method)
    res = _finish(data, terms, cutoff)
    if strict and not res.converged:
        raise IllDefinedAnomaly(
            f"bosonic series not absolutely convergent within m <= {len(terms.values) - 1}",
            terms.partial_sums, terms.abs_values)
    return res


def anomaly(theory: TheorySpec, gluing: str, cutoff: Cutoff | None = None, mmax: int | None = None,
            method: str | None = None, data: GluingData | None = None) -> AnomalyResult:
    """Gluing anomaly ``c_alpha`` (full ``L_S`` when no cutoff is given)."""
    data = data or GluingData(theory, gluing)
    cutoff = Cutoff.full(data.sigma_space) if cutoff is None else cutoff
    return regularized_sum(data, [], cutoff, mmax, method)


def fock_basis_sum(data: GluingData, cutoff: Cutoff, rest_state: FockState | None = None) -> complex:
    """The same regularized sum written over a Fock basis of ``H_alpha``.

    ``sum_zeta sign(zeta) rho_M(tau(psi (x) zeta (x) iota(zeta)))`` with the
    Krein-orthonormal occupation basis ``zeta`` built on the cutoff basis.
    Bosonic sums are truncated at ``settings.mmax``.
    """
    g = data.geometry
    kappa = data.kappa
    region = g.region
    lab_sigma = region.boundary[g.gluing.sigma]
    lab_bar = region.boundary[g.gluing.sigma_bar]
    sigma = data.theory.spaces[lab_sigma]
    sigma_bar = data.theory.spaces[lab_bar]
    if rest_state is None:
        rest_state = FockState.vacuum(g.rest_space, kappa, 1)
    alpha = cutoff.krein_space
    mmax = settings.mmax if kappa == BOSONIC else cutoff.dim
    mapping = list(g.rest_coords) + list(range(g.sigma_coords.start, g.sigma_coords.stop)) \
        + list(range(g.sigma_bar_coords.start, g.sigma_bar_coords.stop))
    total = 0j
    for idx, _norm in fock_basis(alpha, kappa, mmax):
        zeta_a = FockState.basis(alpha, kappa, idx, max(len(idx), 1))
        zeta = linear_map_state(cutoff.basis, zeta_a, sigma, max(len(idx), 1))
        pair = tau_merge(zeta, iota(zeta, sigma_bar), nmax=2 * len(idx) + 1)
        full = tau_merge(rest_state, pair, nmax=rest_state.nmax + pair.nmax)
        full = relabel(full, data.ctx.space, mapping)
        total += index_sign(alpha, idx) * data.ctx.amplitude(full)
    return complex(total)


@dataclass
class AnomalySeries:
    gluing: str
    cutoff_dims: list[int]
    values: list[complex]
    converged: list[bool]
    abs_terms: list[list[float]]

    @property
    def differences(self) -> list[float]:
        return [abs(b - a) for a, b in zip(self.values, self.values[1:])]

    def stabilization_index(self, eps: float) -> int | None:
        """First chain index after which every value stays within ``eps`` of the last."""
        if not self.values:
            return None
        last = self.values[-1]
        for i in range(len(self.values)):
            if all(abs(v - last) <= eps for v in self.values[i:]):
                return i
        return None

    def to_dict(self) -> dict:
        return {"gluing": self.gluing, "cutoff_dims": self.cutoff_dims,
                "values": [[v.real, v.imag] for v in self.values], "converged": self.converged,
                "differences": self.differences}


def default_chain(data: GluingData, phis: Sequence[np.ndarray], rng: np.random.Generator) -> list[Cutoff]:
    """Lift span, lift span plus one random direction, full ``L_S``."""
    first = Cutoff.adapted_span(data.sigma_space, data.lift_span(phis))
    return [first, first.extend_random(rng, 1), Cutoff.full(data.sigma_space)]


def anomaly_limit(theory: TheorySpec, gluing: str, chain: Sequence[Cutoff], mmax: int | None = None,
                  data: GluingData | None = None) -> AnomalySeries:
    """Anomaly along a nested chain of cutoffs; bosonic divergence is recorded, not raised."""
    data = data or GluingData(theory, gluing)
    for a, b in zip(chain, chain[1:]):
        if not a.is_subspace_of(b):
            raise ValueError("cutoff chain is not nested")
    vals, conv, absl = [], [], []
    for cut in chain:
        res = regularized_sum(data, [], cut, mmax, strict=False)
        vals.append(res.value)
        conv.append(res.converged)
        absl.append(res.terms.abs_values)
    return AnomalySeries(data.gluing.name, [c.dim for c in chain], vals, conv, absl)


# ---------------------------------------------------------------------------
# checks


def _rel(a: complex, b: complex, scale: float = 1.0) -> float:
    return abs(a - b) / max(1.0, abs(b), scale)


def check_t5a(theory: TheorySpec, union: str, psi1: FockState, psi2: FockState) -> Check:
    """Amplitude of a disjoint union factorizes."""
    region = theory.regions[union]
    if len(region.parts) != 2:
        raise ValueError(f"{union!r} is not a union of two regions")
    c1, c2 = (theory.context(p) for p in region.parts)
    cm = theory.context(union)
    merged = tau_merge(psi1, psi2, nmax=psi1.nmax + psi2.nmax)
    merged = FockState(cm.space, merged.kappa, merged.coeffs, merged.nmax, merged.truncated)
    lhs = cm.amplitude(merged)
    rhs = c1.amplitude(psi1) * c2.amplitude(psi2)
    return Check.from_residual("amplitude of a disjoint union factorizes", "T5a", abs(lhs - rhs),
                               lhs=lhs, rhs=rhs)


def _ill_defined(name: str, axiom: str, err: IllDefinedAnomaly) -> Check:
    return Check(name, axiom, float("nan"), ILL_DEFINED,
                 {"reason": "anomaly ill-defined", "partial_sums": err.partial_sums, "abs_terms": err.abs_terms})


def check_t5b(theory: TheorySpec, gluing: str, phis: Sequence[np.ndarray], cutoff: Cutoff | None = None,
              mmax: int | None = None, data: GluingData | None = None, tol: float = 1e-8,
              expand: bool = False) -> Report:
    """Composition identity ``rho_M1(psi[phi..]) c_alpha = r_alpha(phi)``.

    With ``expand=True`` the right side is also evaluated through the
    decomposition ``phi = phi_R + J phi_I`` into solutions and compared.
    """
    data = data or GluingData(theory, gluing)
    rep = Report("T5b")
    if cutoff is None:
        cutoff = Cutoff.full(data.sigma_space)
    data.require_lifts(phis, cutoff)
    try:
        c = regularized_sum(data, [], cutoff, mmax)
        rhs = regularized_sum(data, phis, cutoff, mmax)
    except IllDefinedAnomaly as err:
        rep.add(_ill_defined("composition identity", "T5b", err))
        return rep
    lhs = data.ctx_glued.amplitude_gen(phis) * c.value
    scale = max(rhs.terms.abs_values, default=1.0)
    rep.add(Check.from_residual("composition identity", "T5b", _rel(lhs, rhs.value, scale), tol,
                                anomaly=c.value, lhs=lhs, rhs=rhs.value, cutoff_dim=cutoff.dim))
    if expand and phis:
        parts = [data.ctx_glued.decompose(p) for p in phis]
        total = 0j
        for choice in itertools.product((0, 1), repeat=len(phis)):
            vecs = [parts[i][ch] for i, ch in enumerate(choice)]
            total += (-1j) ** sum(choice) * regularized_sum(data, vecs, cutoff, mmax).value
        rep.add(Check.from_residual("composition identity via real decomposition", "T5b",
                                    _rel(total, rhs.value, scale), tol))
    return rep


def check_t5b_renormalized(theory: TheorySpec, gluing: str, phis: Sequence[np.ndarray],
                           chain: Sequence[Cutoff], data: GluingData | None = None, tol: float = 1e-9) -> Report:
    """Renormalized composition along a cutoff chain (fermions).

    For every cutoff containing the lift span the difference
    ``rho_M1(psi) c_gamma - r_gamma(phi)`` must vanish; cutoffs below the
    lift span are reported for information only.
    """
    data = data or GluingData(theory, gluing)
    if data.kappa != FERMIONIC:
        raise UnsupportedStatistics("the renormalized composition check is implemented for fermions only")
    rep = Report("T5b*")
    rho1 = data.ctx_glued.amplitude_gen(phis)
    for i, cut in enumerate(chain):
        c = regularized_sum(data, [], cut)
        r = regularized_sum(data, phis, cut)
        diff = rho1 * c.value - r.value
        scale = max(r.terms.abs_values, default=1.0)
        resid = abs(diff) / max(1.0, scale)
        try:
            data.require_lifts(phis, cut)
            covered = True
        except CutoffError:
            covered = False
        detail = {"cutoff_dim": cut.dim, "anomaly": c.value, "difference": diff}
        if abs(c.value) > 1e-12:
            detail["renormalized_error"] = abs(rho1 - r.value / c.value)
        if covered:
            rep.add(Check.from_residual(f"renormalized difference at cutoff {i}", "T5b*", resid, tol, **detail))
        else:
            rep.add(Check(f"renormalized difference at cutoff {i} (below lift span)", "T5b*", resid, INFO, detail))
    return rep


def appendix_identities(theory: TheorySpec, gluing: str, rng: np.random.Generator, samples: int = 4,
                        data: GluingData | None = None, tol: float = 1e-10) -> Report:
    """Pairing identities between glued and unglued boundary data."""
    data = data or GluingData(theory, gluing)
    g = data.geometry
    ctx = data.ctx
    kappa = data.kappa
    sig = data.sigma_space
    rest = g.rest_space
    w1 = data.ctx_glued.w.spanning

    def bil(x, y):
        h = ctx.hat(np.column_stack([x, y]))
        return ctx.bilinear(h[[0]], h[[1]])[0, 0]

    def solution():
        return w1 @ rng.normal(size=w1.shape[1]) if w1.shape[1] else np.zeros(rest.dim, dtype=complex)

    e1 = e2 = e3 = 0.0
    for _ in range(samples):
        xi = rng.normal(size=sig.dim) + 1j * rng.normal(size=sig.dim)
        phi1, phi2 = solution(), solution()
        t1, t2 = data.lift(phi1), data.lift(phi2)
        full1 = g.embed_sigma(t1) + g.embed_sigma_bar(t1)
        full2 = g.embed_sigma(t2) + g.embed_sigma_bar(t2)
        p1 = g.embed_rest(phi1)
        lhs = bil(g.embed_sigma(xi), p1)
        rhs = sig.inner(xi, t1) - bil(g.embed_sigma(xi), full1)
        e1 = max(e1, abs(lhs - rhs))
        lhs = bil(g.embed_sigma_bar(xi), p1)
        rhs = kappa * np.conj(sig.inner(xi, t1)) - bil(g.embed_sigma_bar(xi), full1)
        e2 = max(e2, abs(lhs - rhs))
        lhs = rest.inner(phi1, phi2)
        rhs = (bil(p1, g.embed_rest(phi2)) - bil(full1, full2) + sig.inner(t1, t2)
               + kappa * np.conj(sig.inner(t1, t2)))
        e3 = max(e3, abs(lhs - rhs))
    rep = Report("appendix identities")
    rep.add(Check.from_residual("pairing of S data with glued solutions", "T5b", e1, tol, samples=samples))
    rep.add(Check.from_residual("pairing of reversed-S data with glued solutions", "T5b", e2, tol, samples=samples))
    rep.add(Check.from_residual("expansion of the glued inner product", "T5b", e3, tol, samples=samples))
    return rep
