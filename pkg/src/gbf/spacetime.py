"""Combinatorial spacetime systems carrying classical field data.

A theory assigns a Krein space to every hypersurface label, pairs each
label with its orientation reverse, and gives every region a boundary (an
ordered tuple of labels) together with its space of boundary solutions: a
real subspace of the direct sum of the boundary spaces, stored by a
spanning matrix.

Coordinates of a reversed label are the complex conjugates of the
coordinates of the original label.  A slice region over ``S`` therefore has
boundary ``(~S, S)`` and solution space ``{(conj phi, phi)}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .config import settings
from .krein import (
    KreinSpace,
    RealSubspace,
    check_kappa,
    columns,
    check_subspace_c5,
    conjugation_from_subspace,
    random_solution_space,
    random_unitary,
    real_rank,
    realify,
)
from .report import Check, Report

REGULAR = "regular"
SLICE = "slice"
UNION = "union"


def reverse_label(label: str) -> str:
    return label[1:] if label.startswith("~") else "~" + label


def sum_space(spaces: Sequence[KreinSpace], label: str = "") -> tuple[KreinSpace, list[int]]:
    """Direct sum that also accepts an empty list (the zero space)."""
    offsets, signs, pos = [], [], 0
    for sp in spaces:
        offsets.append(pos)
        signs.extend(sp.signs)
        pos += sp.dim
    return KreinSpace(tuple(signs), label), offsets


@dataclass(frozen=True, eq=False)
class Region:
    """A region with its ordered boundary components and solution space."""

    name: str
    boundary: tuple[str, ...]
    lmtilde: np.ndarray
    kind: str = REGULAR
    parts: tuple[str, ...] = ()
    hypersurface: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", tuple(self.boundary))
        object.__setattr__(self, "parts", tuple(self.parts))
        span = np.asarray(self.lmtilde, dtype=complex)
        if span.ndim == 1:
            span = span.reshape(-1, 1) if span.size else np.zeros((0, 0), dtype=complex)
        span = span.copy()
        span.setflags(write=False)
        object.__setattr__(self, "lmtilde", span)


@dataclass(frozen=True)
class Gluing:
    """Self-gluing of ``region`` along boundary components ``sigma`` / ``sigma_bar``."""

    name: str
    region: str
    sigma: int
    sigma_bar: int
    result: str


@dataclass(frozen=True, eq=False)
class TheorySpec:
    kappa: int
    spaces: Mapping[str, KreinSpace]
    reversal: Mapping[str, str]
    regions: Mapping[str, Region]
    gluings: Mapping[str, Gluing] = field(default_factory=dict)
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kappa", check_kappa(self.kappa))
        for r in self.regions.values():
            for lab in r.boundary:
                if lab not in self.spaces:
                    raise KeyError(f"region {r.name!r} uses unknown hypersurface {lab!r}")
        for g in self.gluings.values():
            if g.region not in self.regions or g.result not in self.regions:
                raise KeyError(f"gluing {g.name!r} refers to an unknown region")

    def boundary_space(self, region: str) -> tuple[KreinSpace, list[int]]:
        r = self.regions[region]
        return sum_space([self.spaces[lab] for lab in r.boundary], region)

    def solution_space(self, region: str) -> RealSubspace:
        total, _ = self.boundary_space(region)
        return RealSubspace(total, columns(self.regions[region].lmtilde, total.dim))

    def context(self, region: str):
        from .amplitude import AmplitudeContext

        return AmplitudeContext.from_region(self, region)


# ---------------------------------------------------------------------------
# solution spaces of standard regions


def slice_solution_space(dim: int) -> np.ndarray:
    """Spanning matrix of ``{(conj phi, phi)}`` for a slice over a ``dim``-dimensional space."""
    eye = np.eye(dim, dtype=complex)
    return np.vstack([np.hstack([eye, -1j * eye]), np.hstack([eye, 1j * eye])])


def graph_solution_space(v: np.ndarray) -> np.ndarray:
    """Spanning matrix of ``{(conj(V phi), phi)}`` on boundary ``(~A, B)``.

    ``V`` maps the space of ``B`` into the space of ``A``.
    """
    v = np.asarray(v, dtype=complex)
    nb = v.shape[1]
    eye = np.eye(nb, dtype=complex)
    phis = np.hstack([eye, 1j * eye])
    return np.vstack([np.conj(v @ phis), phis])


def block_solution_space(blocks: Sequence[np.ndarray], dims: Sequence[int]) -> np.ndarray:
    """Solution space of a disjoint union (block diagonal spanning matrix)."""
    total = sum(dims)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((total, cols), dtype=complex)
    r = c = 0
    for b, d in zip(blocks, dims):
        out[r:r + d, c:c + b.shape[1]] = b
        r += d
        c += b.shape[1]
    return out


# ---------------------------------------------------------------------------
# gluing geometry


class ExactnessError(ValueError):
    """Boundary data does not come from a unique solution on the unglued region."""


@dataclass(frozen=True, eq=False)
class GluingGeometry:
    """Coordinate bookkeeping for a self-gluing ``M -> M1``."""

    theory: TheorySpec
    gluing: Gluing
    total: KreinSpace
    offsets: tuple[int, ...]
    sigma_space: KreinSpace
    rest_components: tuple[int, ...]
    rest_space: KreinSpace
    rest_coords: np.ndarray

    @classmethod
    def build(cls, theory: TheorySpec, gluing: Gluing | str) -> "GluingGeometry":
        if isinstance(gluing, str):
            gluing = theory.gluings[gluing]
        region = theory.regions[gluing.region]
        total, offsets = theory.boundary_space(gluing.region)
        nb = len(region.boundary)
        if not (0 <= gluing.sigma < nb and 0 <= gluing.sigma_bar < nb) or gluing.sigma == gluing.sigma_bar:
            raise ValueError(f"gluing {gluing.name!r}: invalid component indices")
        lab = region.boundary[gluing.sigma]
        sigma_space = theory.spaces[lab]
        rest = tuple(i for i in range(nb) if i not in (gluing.sigma, gluing.sigma_bar))
        rest_space, _ = sum_space([theory.spaces[region.boundary[i]] for i in rest], gluing.result)
        coords = [offsets[i] + a for i in rest for a in range(theory.spaces[region.boundary[i]].dim)]
        return cls(theory, gluing, total, tuple(offsets), sigma_space, rest, rest_space,
                   np.array(coords, dtype=int))

    @property
    def region(self) -> Region:
        return self.theory.regions[self.gluing.region]

    @property
    def sigma_coords(self) -> slice:
        o = self.offsets[self.gluing.sigma]
        return slice(o, o + self.sigma_space.dim)

    @property
    def sigma_bar_coords(self) -> slice:
        o = self.offsets[self.gluing.sigma_bar]
        return slice(o, o + self.sigma_space.dim)

    def embed_rest(self, phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=complex)
        out = np.zeros((self.total.dim,) + phi.shape[1:], dtype=complex)
        out[self.rest_coords] = phi
        return out

    def embed_sigma(self, xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros((self.total.dim,) + xi.shape[1:], dtype=complex)
        out[self.sigma_coords] = xi
        return out

    def embed_sigma_bar(self, xi: np.ndarray) -> np.ndarray:
        """Place ``xi`` of ``L_Sigma`` in the reversed copy (conjugated coordinates)."""
        xi = np.asarray(xi, dtype=complex)
        out = np.zeros((self.total.dim,) + xi.shape[1:], dtype=complex)
        out[self.sigma_bar_coords] = np.conj(xi)
        return out

    def restrict_rest(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v)[self.rest_coords]

    def _mismatch(self, span: np.ndarray) -> np.ndarray:
        """Realified ``P_Sigma x - conj(P_Sigma_bar x)`` on columns."""
        return realify(span[self.sigma_coords] - np.conj(span[self.sigma_bar_coords]))

    def glued_kernel(self) -> np.ndarray:
        """Basis of solutions whose two glued boundary parts match."""
        w = self.theory.solution_space(self.gluing.region).spanning
        constraint = self._mismatch(w)
        if constraint.size == 0:
            return w
        null = sla.null_space(constraint, rcond=settings.rank_rtol)
        return w @ null

    def glued_solution_space(self) -> np.ndarray:
        """Restriction of :meth:`glued_kernel` to the remaining boundary."""
        k = self.glued_kernel()
        return RealSubspace.from_vectors(self.rest_space, self.restrict_rest(k)).spanning

    def lift(self, phi: np.ndarray) -> tuple[np.ndarray, dict]:
        """Unique ``phi~`` in ``L_Sigma`` with ``(phi, phi~, phi~)`` a solution.

        Returns ``phi~`` and diagnostics (residual, kernel dimension).
        """
        w = self.theory.solution_space(self.gluing.region).spanning
        phi = self.rest_space.check_vector(phi)
        system = np.vstack([realify(self.restrict_rest(w)), self._mismatch(w)])
        rhs = np.concatenate([realify(phi), np.zeros(2 * self.sigma_space.dim)])
        coef, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        residual = float(np.linalg.norm(system @ coef - rhs))
        kernel_dim = w.shape[1] - real_rank(system)
        diag = {"residual": residual, "kernel_dim": int(kernel_dim)}
        if residual > settings.tol * max(1.0, float(np.linalg.norm(phi))):
            raise ExactnessError(f"boundary data is not induced by a solution (residual {residual:.3g})")
        if kernel_dim:
            raise ExactnessError(f"lift is not unique (kernel dimension {kernel_dim})")
        return (w @ coef)[self.sigma_coords], diag


def tilde_lift(theory: TheorySpec, gluing: Gluing | str, phi: np.ndarray) -> np.ndarray:
    """The unique ``phi~`` with ``(phi, phi~, phi~)`` in the unglued solution space."""
    return GluingGeometry.build(theory, gluing).lift(phi)[0]


# ---------------------------------------------------------------------------
# classical axioms


def _random_vectors(rng, dim: int, count: int) -> np.ndarray:
    return rng.normal(size=(dim, count)) + 1j * rng.normal(size=(dim, count))


def check_classical_axioms(theory: TheorySpec, seed: int = 0, samples: int = 4) -> Report:
    """Verify the classical axioms on every hypersurface, region and gluing."""
    rng = np.random.default_rng(seed)
    kappa = theory.kappa
    rep = Report("classical axioms")

    for lab in sorted(theory.spaces):
        sp = theory.spaces[lab]
        v, w = _random_vectors(rng, sp.dim, samples), _random_vectors(rng, sp.dim, samples)
        herm = np.abs(sp.inner(v, w) - sp.inner(w, v).conj().T).max(initial=0.0)
        gj = np.abs(sp.g(v, w) - 2 * sp.omega(v, 1j * w)).max(initial=0.0)
        rep.add(Check.from_residual(f"space {lab}: hermiticity and g = 2 omega(., J.)", "C1",
                                    max(herm, gj), p=sp.p, q=sp.q))

    for lab in sorted(theory.spaces):
        sp = theory.spaces[lab]
        rev = theory.reversal.get(lab)
        if rev is None or rev not in theory.spaces:
            rep.add(Check(f"orientation reverse of {lab}", "C2", float("inf"), "fail",
                          {"error": "missing reversed hypersurface"}))
            continue
        back = theory.reversal.get(rev)
        rsp = theory.spaces[rev]
        bad_signs = sum(1 for a, b in zip(sp.signs, rsp.signs) if b != kappa * a) + abs(sp.dim - rsp.dim)
        v, w = _random_vectors(rng, sp.dim, samples), _random_vectors(rng, sp.dim, samples)
        law = np.abs(rsp.inner(np.conj(v), np.conj(w)) - kappa * np.conj(sp.inner(v, w))).max(initial=0.0) \
            if rsp.dim == sp.dim else float("inf")
        rep.add(Check.from_residual(f"orientation reverse of {lab}", "C2",
                                    max(float(bad_signs), law, 0.0 if back == lab else float("inf"))))

    for name in sorted(theory.regions):
        region = theory.regions[name]
        total, offsets = theory.boundary_space(name)
        err = 0.0
        for lab, off in zip(region.boundary, offsets):
            sp = theory.spaces[lab]
            v, w = _random_vectors(rng, sp.dim, 2), _random_vectors(rng, sp.dim, 2)
            ev = np.zeros((total.dim, 2), dtype=complex)
            ew = np.zeros((total.dim, 2), dtype=complex)
            ev[off:off + sp.dim] = v
            ew[off:off + sp.dim] = w
            err = max(err, np.abs(total.inner(ev, ew) - sp.inner(v, w)).max(initial=0.0))
        rep.add(Check.from_residual(f"region {name}: boundary decomposition is isometric", "C3", err))

        if region.kind == SLICE:
            lab = region.hypersurface
            ok_boundary = lab is not None and region.boundary == (theory.reversal.get(lab), lab)
            resid = float("inf")
            if ok_boundary:
                diag = RealSubspace(total, slice_solution_space(theory.spaces[lab].dim))
                resid = 0.0 if diag.same_span(theory.solution_space(name)) else 1.0
            rep.add(Check.from_residual(f"slice region {name}: diagonal solution space", "C4", resid))

        try:
            w = theory.solution_space(name)
            c5 = check_subspace_c5(total, w, kappa)
            resid = max(c5.residuals.values(), default=0.0)
            rep.add(Check(f"region {name}: solution space", "C5", resid, "pass" if c5.passed else "fail",
                          {"failures": c5.failures, "residuals": c5.residuals}))
        except ValueError as exc:
            rep.add(Check(f"region {name}: solution space", "C5", float("inf"), "fail", {"error": str(exc)}))

        if region.kind == UNION:
            parts = [theory.regions[p] for p in region.parts]
            bnd = tuple(lab for p in parts for lab in p.boundary)
            dims = [theory.boundary_space(p.name)[0].dim for p in parts]
            block = block_solution_space([columns(p.lmtilde, d) for p, d in zip(parts, dims)], dims)
            same = bnd == region.boundary and RealSubspace.from_vectors(total, block).same_span(
                RealSubspace.from_vectors(total, columns(region.lmtilde, total.dim)))
            rep.add(Check.from_residual(f"union region {name}: additivity", "C6", 0.0 if same else 1.0))

    for gname in sorted(theory.gluings):
        rep.extend(check_gluing_exactness(theory, gname, rng))
    return rep


def check_gluing_exactness(theory: TheorySpec, gluing: str, rng=None) -> Report:
    """Bookkeeping, injectivity, exactness and the commuting square for one gluing."""
    rng = np.random.default_rng(0) if rng is None else rng
    rep = Report(f"gluing {gluing}")
    g = theory.gluings[gluing]
    region = theory.regions[g.region]
    try:
        geo = GluingGeometry.build(theory, g)
    except ValueError as exc:
        rep.add(Check(f"gluing {gluing}: geometry", "C7", float("inf"), "fail", {"error": str(exc)}))
        return rep
    lab = region.boundary[g.sigma]
    labels_ok = region.boundary[g.sigma_bar] == theory.reversal.get(lab)
    rest_labels = tuple(region.boundary[i] for i in geo.rest_components)
    labels_ok = labels_ok and rest_labels == theory.regions[g.result].boundary
    rep.add(Check.from_residual(f"gluing {gluing}: boundary bookkeeping", "C7", 0.0 if labels_ok else 1.0))
    if not labels_ok:
        return rep

    kernel = geo.glued_kernel()
    restricted = realify(geo.restrict_rest(kernel))
    target = theory.solution_space(g.result)
    kdim = kernel.shape[1]
    rep.add(Check.from_residual(f"gluing {gluing}: lift is injective", "C7",
                                float(kdim - real_rank(restricted)) if kdim else 0.0,
                                kernel_dim=kdim))
    both = np.hstack([restricted, target.real_matrix]) if kdim else target.real_matrix
    exact = abs(real_rank(both) - target.real_dim) + abs(kdim - target.real_dim)
    rep.add(Check.from_residual(f"gluing {gluing}: exact sequence", "C7", float(exact),
                                kernel_dim=kdim, glued_dim=target.real_dim))
    worst = 0.0
    if target.real_dim and exact == 0:
        full = theory.solution_space(g.region)
        for col in range(target.real_dim):
            phi = target.spanning[:, col]
            try:
                lifted, _ = geo.lift(phi)
            except ExactnessError:
                worst = float("inf")
                break
            x = geo.embed_rest(phi) + geo.embed_sigma(lifted) + geo.embed_sigma_bar(lifted)
            worst = max(worst, full.distance(x))
    rep.add(Check.from_residual(f"gluing {gluing}: commuting square", "C7", worst))
    return rep


@dataclass
class Evolution:
    """Classical evolution map between the two halves of a split boundary."""

    matrix: np.ndarray
    residuals: dict
    passed: bool


class SplitError(ValueError):
    """The boundary split is not compatible with the region's conjugation."""


def classical_evolution(theory: TheorySpec, region: str, out_coords: Sequence[int],
                        in_coords: Sequence[int]) -> Evolution:
    """Evolution ``L_1 -> L_2`` read off from the conjugation of a region.

    ``out_coords`` and ``in_coords`` partition the boundary coordinates into
    ``L_2`` (taken with reversed orientation) and ``L_1``.  The returned
    matrix maps ``L_1`` coordinates to ``L_2``-reversed coordinates.
    """
    total, _ = theory.boundary_space(region)
    out_c, in_c = np.asarray(out_coords, dtype=int), np.asarray(in_coords, dtype=int)
    if sorted(np.r_[out_c, in_c].tolist()) != list(range(total.dim)):
        raise SplitError("split does not partition the boundary coordinates")
    w = theory.solution_space(region)
    u = conjugation_from_subspace(total, w, theory.kappa)
    eye = np.zeros((total.dim, len(in_c)), dtype=complex)
    eye[in_c, np.arange(len(in_c))] = 1.0
    ue, uie = u(eye), u(1j * eye)
    leak = max(np.abs(ue[in_c]).max(initial=0.0), np.abs(uie[in_c]).max(initial=0.0))
    if leak > settings.tol:
        raise SplitError(f"u does not map L_1 into L_2 (leak {leak:.3g})")
    mat = np.conj(ue[out_c])
    linear = np.abs(np.conj(uie[out_c]) - 1j * mat).max(initial=0.0)
    rev_signs = theory.kappa * total.sign_array[out_c]
    iso = np.abs(mat.conj().T @ (rev_signs[:, None] * mat) - np.diag(total.sign_array[in_c])).max(initial=0.0)
    graph = RealSubspace.from_vectors(total, np.hstack([eye + ue, 1j * eye + uie]))
    graph_ok = 0.0 if graph.same_span(w) else 1.0
    res = {"leak": float(leak), "complex_linear": float(linear), "isometry": float(iso), "graph": graph_ok}
    return Evolution(mat, res, all(v <= settings.tol for v in res.values()))


# ---------------------------------------------------------------------------
# theory construction


class TheoryBuilder:
    """Incremental construction of a :class:`TheorySpec`."""

    def __init__(self, kappa: int):
        self.kappa = check_kappa(kappa)
        self.spaces: dict[str, KreinSpace] = {}
        self.reversal: dict[str, str] = {}
        self.regions: dict[str, Region] = {}
        self.gluings: dict[str, Gluing] = {}
        self.metadata: dict = {}

    def hypersurface(self, label: str, signs: Sequence[int]) -> "TheoryBuilder":
        """Add ``label`` and its reverse ``~label``."""
        rev = reverse_label(label)
        self.spaces[label] = KreinSpace(tuple(signs), label)
        self.spaces[rev] = KreinSpace(tuple(self.kappa * s for s in signs), rev)
        self.reversal[label] = rev
        self.reversal[rev] = label
        return self

    def region(self, name: str, boundary: Sequence[str], lmtilde: np.ndarray, kind: str = REGULAR,
               parts: Sequence[str] = (), hypersurface: str | None = None) -> "TheoryBuilder":
        self.regions[name] = Region(name, tuple(boundary), lmtilde, kind, tuple(parts), hypersurface)
        return self

    def slice(self, name: str, label: str) -> "TheoryBuilder":
        dim = self.spaces[label].dim
        return self.region(name, (self.reversal[label], label), slice_solution_space(dim), SLICE,
                           hypersurface=label)

    def union(self, name: str, parts: Sequence[str]) -> "TheoryBuilder":
        regs = [self.regions[p] for p in parts]
        dims = [sum(self.spaces[lab].dim for lab in r.boundary) for r in regs]
        block = block_solution_space([columns(r.lmtilde, d) for r, d in zip(regs, dims)], dims)
        bnd = tuple(lab for r in regs for lab in r.boundary)
        return self.region(name, bnd, block, UNION, parts=parts)

    def glue(self, name: str, region: str, sigma: int, sigma_bar: int, result: str,
             result_kind: str = REGULAR) -> "TheoryBuilder":
        """Add a gluing and, unless it exists, the glued region with its computed solutions."""
        if result not in self.regions:
            placeholder = Region(result, (), np.zeros((0, 0)))
            self.regions[result] = placeholder
            draft = self.build()
            geo = GluingGeometry.build(draft, Gluing(name, region, sigma, sigma_bar, result))
            bnd = tuple(draft.regions[region].boundary[i] for i in geo.rest_components)
            self.regions[result] = Region(result, bnd, np.zeros((geo.rest_space.dim, 0)))
            draft = self.build()
            geo = GluingGeometry.build(draft, Gluing(name, region, sigma, sigma_bar, result))
            self.regions[result] = Region(result, bnd, geo.glued_solution_space(), result_kind)
        self.gluings[name] = Gluing(name, region, sigma, sigma_bar, result)
        return self

    def build(self) -> TheorySpec:
        return TheorySpec(self.kappa, dict(self.spaces), dict(self.reversal), dict(self.regions),
                          dict(self.gluings), dict(self.metadata))


def random_region_span(signs: Sequence[int], kappa: int, rng: np.random.Generator) -> np.ndarray:
    """Spanning matrix of a random valid solution space with boundary signs ``signs``."""
    w, _ = random_solution_space(KreinSpace(tuple(signs)), kappa, rng)
    return w.spanning


def random_adapted_isometry(signs: Sequence[int], rng: np.random.Generator) -> np.ndarray:
    """Random unitary preserving the positive and negative parts.

    Isometries that mix the two parts give neutral graph subspaces whose
    induced conjugation is not conjugate-linear, so they are avoided.
    """
    sp = KreinSpace(tuple(signs))
    out = np.zeros((sp.dim, sp.dim), dtype=complex)
    for idx in (sp.positive_indices, sp.negative_indices):
        out[np.ix_(idx, idx)] = random_unitary(len(idx), rng)
    return out


def random_gluing_theory(kappa: int, sigma1_signs: Sequence[int], sigma_signs: Sequence[int],
                         rng: np.random.Generator) -> TheorySpec:
    """Random region ``M`` with boundary ``(S1, S, ~S)`` self-glued to ``M1``."""
    b = TheoryBuilder(kappa)
    b.hypersurface("S1", sigma1_signs)
    b.hypersurface("S", sigma_signs)
    signs = list(sigma1_signs) + list(sigma_signs) + [kappa * s for s in sigma_signs]
    b.region("M", ("S1", "S", "~S"), random_region_span(signs, kappa, rng))
    b.glue("g", "M", 1, 2, "M1")
    return b.build()


def random_cobordism_theory(kappa: int, signs_a: Sequence[int], signs_b: Sequence[int],
                            signs_c: Sequence[int], rng: np.random.Generator) -> TheorySpec:
    """Evolution region ``P`` (boundary ``(~A, B)``) glued to a random region ``Q``.

    ``P`` has solutions ``{(conj(V phi), phi)}`` for a random Krein
    isometry ``V: B -> A``, so its conjugation maps ``L_B`` onto ``L_~A``.
    ``Q`` has boundary ``(~B, C)``.  The union is glued along ``B``.
    """
    if sorted(signs_a) != sorted(signs_b):
        raise ValueError("A and B need the same signature")
    b = TheoryBuilder(kappa)
    b.hypersurface("A", signs_a).hypersurface("B", signs_b).hypersurface("C", signs_c)
    # isometry B -> A: permute B's directions onto A's, then mix within A
    pa = np.argsort(-np.asarray(signs_a), kind="stable")
    pb = np.argsort(-np.asarray(signs_b), kind="stable")
    perm = np.zeros((len(signs_a), len(signs_b)), dtype=complex)
    perm[pa, pb] = 1.0
    v = random_adapted_isometry(signs_a, rng) @ perm
    b.region("P", ("~A", "B"), graph_solution_space(v))
    q_signs = [kappa * s for s in signs_b] + list(signs_c)
    b.region("Q", ("~B", "C"), random_region_span(q_signs, kappa, rng))
    b.union("PQ", ("P", "Q"))
    b.glue("g", "PQ", 1, 2, "M1")
    b.metadata["isometry"] = v
    return b.build()


def random_disjoint_theory(kappa: int, signs1: Sequence[int], signs2: Sequence[int],
                           rng: np.random.Generator) -> TheorySpec:
    """Two random regions and their disjoint union ``M``."""
    b = TheoryBuilder(kappa)
    b.hypersurface("A", signs1).hypersurface("B", signs2)
    b.region("M1", ("A",), random_region_span(signs1, kappa, rng))
    b.region("M2", ("B",), random_region_span(signs2, kappa, rng))
    b.union("M", ("M1", "M2"))
    return b.build()


def slice_theory(kappa: int, signs: Sequence[int]) -> TheorySpec:
    """Slice region over ``S`` plus two slices glued back into one."""
    b = TheoryBuilder(kappa)
    b.hypersurface("S", signs)
    b.slice("slice", "S")
    b.slice("slice2", "S")
    b.union("pair", ("slice", "slice2"))
    b.gluings["join"] = Gluing("join", "pair", 1, 2, "slice")
    return b.build()


def random_evolution_theory(kappa: int, signs_in: Sequence[int], rng: np.random.Generator) -> TheorySpec:
    """Region ``P`` with boundary ``(~A, B)`` whose solutions are a graph ``B -> A``."""
    b = TheoryBuilder(kappa)
    b.hypersurface("A", signs_in).hypersurface("B", signs_in)
    v = random_adapted_isometry(signs_in, rng)
    b.region("P", ("~A", "B"), graph_solution_space(v))
    b.metadata["isometry"] = v
    return b.build()


def corrupt_region(theory: TheorySpec, region: str, rng: np.random.Generator, scale: float = 0.3) -> TheorySpec:
    """Copy of ``theory`` whose region solution space is perturbed off the valid set."""
    r = theory.regions[region]
    span = r.lmtilde + scale * (rng.normal(size=r.lmtilde.shape) + 1j * rng.normal(size=r.lmtilde.shape))
    regions = dict(theory.regions)
    regions[region] = Region(r.name, r.boundary, span, r.kind, r.parts, r.hypersurface)
    return TheorySpec(theory.kappa, theory.spaces, theory.reversal, regions, theory.gluings, theory.metadata)
