"""Truncated fermionic and bosonic Fock spaces over a Krein space.

States are sparse maps from sorted index tuples ``(a_1, ..., a_m)`` to
complex coefficients with respect to the orthonormal basis::

    b_(a_1..a_m) = psi[e_a1, ..., e_am] / sqrt(2^m K)

where ``K`` is the product of the factorials of the index multiplicities
(always 1 for fermions) and ``psi[...]`` are generating states.  Indices
are strictly increasing for fermions and non-decreasing for bosons.  The
Krein sign of a basis element is the product of the one-particle signs of
its labels.

Generating states are conjugate-linear in every argument, and::

    <psi[eta_1..eta_n], psi[xi_1..xi_n]> = 2^n sum_sigma kappa^|sigma| prod_i <xi_i, eta_sigma(i)>
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .config import settings
from .krein import FERMIONIC, Conjugation, KreinSpace, check_kappa, direct_sum, orientation_reverse

FockIndex = tuple


class TruncationError(ValueError):
    """A state would need a Fock degree above the truncation."""


def multiplicity(idx: Sequence[int]) -> int:
    """``K`` for a basis index: product of factorials of repeat counts."""
    return math.prod(math.factorial(c) for c in Counter(idx).values())


def index_sign(space: KreinSpace, idx: Sequence[int]) -> int:
    return math.prod(space.signs[a] for a in idx)


def is_valid_index(idx: Sequence[int], kappa: int) -> bool:
    if kappa == FERMIONIC:
        return all(a < b for a, b in zip(idx, idx[1:]))
    return all(a <= b for a, b in zip(idx, idx[1:]))


def fock_indices(dim: int, kappa: int, degree: int) -> Iterable[tuple[int, ...]]:
    """Sorted basis indices of a single Fock degree."""
    if kappa == FERMIONIC:
        return itertools.combinations(range(dim), degree)
    return itertools.combinations_with_replacement(range(dim), degree)


def fock_basis(space: KreinSpace, kappa: int, nmax: int | None = None) -> list[tuple[tuple[int, ...], float]]:
    """All basis indices up to degree ``nmax`` with their normalization factors.

    The factor multiplies ``psi[e_a1..e_am]`` to give the orthonormal basis
    element.  Fermionic bases stop at degree ``dim`` regardless of ``nmax``.
    """
    kappa = check_kappa(kappa)
    if nmax is None:
        nmax = space.dim if kappa == FERMIONIC else settings.nmax
    top = min(nmax, space.dim) if kappa == FERMIONIC else nmax
    out = []
    for m in range(top + 1):
        for idx in fock_indices(space.dim, kappa, m):
            out.append((idx, 1.0 / math.sqrt(2 ** m * multiplicity(idx))))
    return out


def _sort_index(idx: Sequence[int], kappa: int) -> tuple[tuple[int, ...], int]:
    """Sorted index and the graded sign of the sorting permutation (0 if it vanishes)."""
    order = sorted(range(len(idx)), key=lambda i: idx[i])
    out = tuple(idx[i] for i in order)
    if kappa == FERMIONIC:
        if any(a == b for a, b in zip(out, out[1:])):
            return out, 0
        return out, kernels.permutation_sign(order)
    return out, 1


@dataclass(frozen=True, eq=False)
class FockState:
    """Sparse vector in a truncated Fock space.

    Parameters
    ----------
    space : KreinSpace
        One-particle space.
    kappa : int
        -1 fermionic, +1 bosonic.
    coeffs : mapping
        Sorted index tuple -> coefficient.
    nmax : int
        Largest Fock degree retained.
    truncated : bool
        Set when an operation had to discard components above ``nmax``.
    """

    space: KreinSpace
    kappa: int
    coeffs: Mapping[tuple[int, ...], complex] = field(default_factory=dict)
    nmax: int = 6
    truncated: bool = False

    def __post_init__(self):
        kappa = check_kappa(self.kappa)
        object.__setattr__(self, "kappa", kappa)
        clean = {}
        for idx, c in self.coeffs.items():
            idx = tuple(int(a) for a in idx)
            if not is_valid_index(idx, kappa) or any(a < 0 or a >= self.space.dim for a in idx):
                raise ValueError(f"invalid Fock index {idx}")
            if len(idx) > self.nmax:
                raise TruncationError(f"degree {len(idx)} exceeds truncation {self.nmax}")
            c = complex(c)
            if abs(c) > settings.coeff_drop:
                clean[idx] = c
        object.__setattr__(self, "coeffs", clean)

    # constructors ------------------------------------------------------------
    @classmethod
    def vacuum(cls, space: KreinSpace, kappa: int, nmax: int | None = None) -> "FockState":
        return cls(space, kappa, {(): 1.0}, _default_nmax(space, kappa, nmax))

    @classmethod
    def zero(cls, space: KreinSpace, kappa: int, nmax: int | None = None) -> "FockState":
        return cls(space, kappa, {}, _default_nmax(space, kappa, nmax))

    @classmethod
    def basis(cls, space: KreinSpace, kappa: int, idx: Sequence[int], nmax: int | None = None) -> "FockState":
        return cls(space, kappa, {tuple(idx): 1.0}, _default_nmax(space, kappa, nmax))

    # structure ---------------------------------------------------------------
    def _like(self, coeffs, truncated=False, space=None) -> "FockState":
        return FockState(space or self.space, self.kappa, coeffs, self.nmax, self.truncated or truncated)

    def _check_compatible(self, other: "FockState") -> None:
        if not self.space.same_geometry(other.space) or self.kappa != other.kappa:
            raise ValueError("states live in different Fock spaces")

    def __add__(self, other: "FockState") -> "FockState":
        self._check_compatible(other)
        out = dict(self.coeffs)
        for idx, c in other.coeffs.items():
            out[idx] = out.get(idx, 0) + c
        return FockState(self.space, self.kappa, out, max(self.nmax, other.nmax),
                         self.truncated or other.truncated)

    def __neg__(self) -> "FockState":
        return self._like({k: -v for k, v in self.coeffs.items()})

    def __sub__(self, other: "FockState") -> "FockState":
        return self + (-other)

    def __mul__(self, scalar) -> "FockState":
        return self._like({k: scalar * v for k, v in self.coeffs.items()})

    __rmul__ = __mul__

    def degrees(self) -> set[int]:
        return {len(idx) for idx in self.coeffs}

    def degree(self) -> int:
        """Fock degree of a homogeneous state (0 for the zero state)."""
        degs = self.degrees()
        if len(degs) > 1:
            raise ValueError("state is not homogeneous in Fock degree")
        return degs.pop() if degs else 0

    def is_homogeneous(self) -> bool:
        return len(self.degrees()) <= 1

    def component(self, degree: int) -> "FockState":
        return self._like({k: v for k, v in self.coeffs.items() if len(k) == degree})

    def parity_component(self, parity: int) -> "FockState":
        return self._like({k: v for k, v in self.coeffs.items() if len(k) % 2 == parity})

    def sign_component(self, part: int) -> "FockState":
        """Projection onto the positive (``+1``) or negative (``-1``) Krein part."""
        return self._like({k: v for k, v in self.coeffs.items() if index_sign(self.space, k) == part})

    def vector(self, basis: Sequence[tuple[int, ...]]) -> np.ndarray:
        return np.array([self.coeffs.get(tuple(b), 0.0) for b in basis], dtype=complex)

    def norm_distance(self, other: "FockState") -> float:
        """Largest coefficient difference (a Euclidean-type distance)."""
        diff = (self - other).coeffs
        return max((abs(v) for v in diff.values()), default=0.0)


def _default_nmax(space: KreinSpace, kappa: int, nmax: int | None) -> int:
    if nmax is not None:
        return nmax
    return space.dim if kappa == FERMIONIC else settings.nmax


# ---------------------------------------------------------------------------
# generating states and inner products


def _minor_kernel(kappa: int):
    flags = kernels.fast_paths()
    if kappa == FERMIONIC:
        return kernels.determinant if flags["determinant"] else (lambda m: kernels.permutation_sum(m, -1))
    return kernels.permanent if flags["permanent"] else (lambda m: kernels.permutation_sum(m, 1))


def generating_state(space: KreinSpace, kappa: int, vectors: Sequence[np.ndarray],
                     nmax: int | None = None) -> FockState:
    """Expand ``psi[xi_1, ..., xi_n]`` in the orthonormal Fock basis.

    The coefficient on ``(a_1..a_n)`` is ``sqrt(2^n / K)`` times the
    determinant (fermions) or permanent (bosons) of
    ``M[i, j] = conj(xi_i[a_j])``.
    """
    kappa = check_kappa(kappa)
    nmax = _default_nmax(space, kappa, nmax)
    vecs = [space.check_vector(v) for v in vectors]
    n = len(vecs)
    if n > nmax:
        raise TruncationError(f"generating state of degree {n} exceeds truncation {nmax}")
    if n == 0:
        return FockState.vacuum(space, kappa, nmax)
    if kappa == FERMIONIC and n > space.dim:
        return FockState.zero(space, kappa, nmax)
    mat = np.conj(np.array(vecs))  # n x d
    kernel = _minor_kernel(kappa)
    coeffs = {}
    for idx in fock_indices(space.dim, kappa, n):
        minor = mat[:, list(idx)]
        val = kernel(minor)
        if val != 0:
            coeffs[idx] = math.sqrt(2 ** n / multiplicity(idx)) * val
    return FockState(space, kappa, coeffs, nmax)


def gen_inner(space: KreinSpace, kappa: int, etas: Sequence[np.ndarray], xis: Sequence[np.ndarray],
              method: str = "auto") -> complex:
    """``<psi[eta_1..eta_n], psi[xi_1..xi_n]>`` from the permutation formula.

    ``method`` is ``"auto"`` (gated determinant/permanent), ``"fast"`` or
    ``"bruteforce"`` (explicit permutation sum).
    """
    kappa = check_kappa(kappa)
    if len(etas) != len(xis):
        return 0j
    n = len(xis)
    if n == 0:
        return complex(1.0)
    xi = np.column_stack([space.check_vector(v) for v in xis])
    eta = np.column_stack([space.check_vector(v) for v in etas])
    gram = space.inner(xi, eta)  # G[i, j] = <xi_i, eta_j>
    if method == "bruteforce":
        val = kernels.permutation_sum(gram, kappa)
    elif method in ("auto", "fast"):
        if method == "fast":
            val = kernels.determinant(gram) if kappa == FERMIONIC else kernels.permanent(gram)
        else:
            val = _minor_kernel(kappa)(gram)
    else:
        raise ValueError(f"unknown method {method!r}")
    return complex(2 ** n * val)


def fock_inner(left: FockState, right: FockState) -> complex:
    """Krein inner product of two Fock states (conjugate-linear in ``left``)."""
    left._check_compatible(right)
    total = 0j
    small, big = (left, right) if len(left.coeffs) <= len(right.coeffs) else (right, left)
    for idx in small.coeffs:
        if idx in big.coeffs:
            total += index_sign(left.space, idx) * np.conj(left.coeffs[idx]) * right.coeffs[idx]
    return complex(total)


# ---------------------------------------------------------------------------
# structure maps


def iota(state: FockState, reversed_space: KreinSpace | None = None) -> FockState:
    """Orientation-reversal map onto the Fock space of the reversed space.

    On basis elements ``b_I -> kappa^(m(m+1)/2) conj-basis b_I`` and
    conjugate-linear on coefficients, which realizes
    ``iota psi[xi_1..xi_n] = kappa^n psi[conj xi_n, ..., conj xi_1]``.
    """
    kappa = state.kappa
    if reversed_space is None:
        reversed_space, _ = orientation_reverse(state.space, kappa)
    elif reversed_space.signs != tuple(kappa * s for s in state.space.signs):
        raise ValueError("target space is not the orientation reverse")
    coeffs = {}
    for idx, c in state.coeffs.items():
        m = len(idx)
        coeffs[idx] = kappa ** (m * (m + 1) // 2) * np.conj(c)
    return FockState(reversed_space, kappa, coeffs, state.nmax, state.truncated)


def tau_merge(first: FockState, second: FockState, nmax: int | None = None,
              total: KreinSpace | None = None) -> FockState:
    """Tensor product into the Fock space of the direct sum.

    ``psi[eta..] (x) psi[xi..] -> psi[(eta, 0).., (0, xi)..]``; coefficients
    multiply and indices of the second factor are shifted.  Components above
    the truncation are discarded and flagged.
    """
    if first.kappa != second.kappa:
        raise ValueError("cannot merge fermionic and bosonic states")
    if total is None:
        total, _ = direct_sum([first.space, second.space])
    elif total.signs != first.space.signs + second.space.signs:
        raise ValueError("target space is not the direct sum")
    if nmax is None:
        nmax = first.nmax + second.nmax if first.kappa != FERMIONIC else total.dim
    shift = first.space.dim
    coeffs = {}
    truncated = first.truncated or second.truncated
    for i, a in first.coeffs.items():
        for j, b in second.coeffs.items():
            if len(i) + len(j) > nmax:
                truncated = True
                continue
            coeffs[i + tuple(x + shift for x in j)] = a * b
    return FockState(total, first.kappa, coeffs, nmax, truncated)


def relabel(state: FockState, target: KreinSpace, mapping: Sequence[int]) -> FockState:
    """Move mode ``a`` to mode ``mapping[a]`` of ``target`` (graded reordering).

    The mapping must be injective and preserve the one-particle signs.
    """
    if len(set(mapping)) != len(mapping):
        raise ValueError("mode mapping is not injective")
    for a, b in enumerate(mapping):
        if state.space.signs[a] != target.signs[b]:
            raise ValueError("mode mapping does not preserve signs")
    coeffs = {}
    for idx, c in state.coeffs.items():
        new, sign = _sort_index([mapping[a] for a in idx], state.kappa)
        if sign:
            coeffs[new] = coeffs.get(new, 0) + sign * c
    return FockState(target, state.kappa, coeffs, state.nmax, state.truncated)


def swap_factors(first: FockState, second: FockState) -> FockState:
    """``tau(second (x) first)`` carried back to the ordering ``first (+) second``."""
    merged = tau_merge(second, first)
    d1, d2 = first.space.dim, second.space.dim
    total, _ = direct_sum([first.space, second.space])
    mapping = [d1 + a for a in range(d2)] + list(range(d1))
    return relabel(merged, total, mapping)


def conjugation_u(u: Conjugation, state: FockState) -> FockState:
    """Fock-space conjugation induced by a one-particle conjugation.

    ``U psi[xi_1..xi_n] = kappa^n psi[u(xi_n), ..., u(xi_1)]``; conjugate-linear.
    """
    if not u.ambient.same_geometry(state.space):
        raise ValueError("conjugation lives on a different one-particle space")
    if u.kappa != state.kappa:
        raise ValueError("conjugation and state have different statistics")
    kappa = state.kappa
    images = u(np.eye(state.space.dim, dtype=complex))
    out = FockState.zero(state.space, kappa, state.nmax)
    for idx, c in state.coeffs.items():
        m = len(idx)
        vecs = [images[:, a] for a in reversed(idx)]
        gen = generating_state(state.space, kappa, vecs, state.nmax)
        norm = 1.0 / math.sqrt(2 ** m * multiplicity(idx))
        out = out + gen * (kappa ** m * norm * np.conj(c))
    return FockState(state.space, kappa, out.coeffs, state.nmax, state.truncated)


def linear_map_state(matrix: np.ndarray, state: FockState, target: KreinSpace,
                     nmax: int | None = None) -> FockState:
    """Second quantization of a complex-linear map ``L`` (``psi[xi..] -> psi[L xi..]``).

    Linear on states, since ``psi`` is conjugate-linear in each slot and
    ``L`` is complex-linear.
    """
    matrix = np.asarray(matrix, dtype=complex)
    nmax = state.nmax if nmax is None else nmax
    out = FockState.zero(target, state.kappa, nmax)
    for idx, c in state.coeffs.items():
        m = len(idx)
        vecs = [matrix[:, a] for a in idx]
        gen = generating_state(target, state.kappa, vecs, nmax)
        out = out + gen * (c / math.sqrt(2 ** m * multiplicity(idx)))
    return FockState(target, state.kappa, out.coeffs, nmax, state.truncated)


def random_state(space: KreinSpace, kappa: int, rng: np.random.Generator, degrees: Iterable[int],
                 nmax: int | None = None) -> FockState:
    """Random state with Gaussian coefficients on the given Fock degrees."""
    nmax = _default_nmax(space, kappa, nmax)
    coeffs = {}
    for m in degrees:
        for idx in fock_indices(space.dim, kappa, m):
            coeffs[idx] = rng.normal() + 1j * rng.normal()
    return FockState(space, kappa, coeffs, nmax)
