"""Finite-dimensional complex Krein spaces and their real subspaces.

Vectors are plain complex numpy arrays in the canonical basis of a
:class:`KreinSpace`, either of shape ``(d,)`` or stacked as columns of
shape ``(d, k)``.  Real-linear maps act on the realified coordinates
``[Re v; Im v]`` in ``R^{2d}``; in these coordinates the complex structure
``J`` (multiplication by ``i``) is the block matrix ``[[0, -1], [1, 0]]``.

The inner product is conjugate-linear in its first argument::

    <v, w> = sum_a s_a conj(v_a) w_a

with ``g = Re <.,.>`` and ``omega = Im <.,.> / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
from scipy.stats import unitary_group

from .config import settings

FERMIONIC = -1
BOSONIC = 1


def check_kappa(kappa: int) -> int:
    if kappa not in (FERMIONIC, BOSONIC):
        raise ValueError(f"kappa must be -1 (fermionic) or +1 (bosonic), got {kappa!r}")
    return int(kappa)


# ---------------------------------------------------------------------------
# realification helpers


def columns(v, rows: int, dtype=complex) -> np.ndarray:
    """``v`` as a ``rows x k`` matrix (a single vector becomes one column)."""
    v = np.asarray(v, dtype=dtype)
    if v.ndim == 2 and v.shape[0] == rows:
        return v
    if v.ndim == 1 and v.shape[0] == rows:
        return v[:, None]
    if v.size == 0:
        return np.zeros((rows, 0), dtype=dtype)
    return v.reshape(rows, -1)


def realify(v: np.ndarray) -> np.ndarray:
    """Stack real and imaginary parts along the first axis."""
    v = np.asarray(v, dtype=complex)
    return np.concatenate([v.real, v.imag], axis=0)


def complexify(x: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify`."""
    x = np.asarray(x, dtype=float)
    d = x.shape[0] // 2
    return x[:d] + 1j * x[d:]


def j_matrix(d: int) -> np.ndarray:
    """Realified complex structure on ``C^d``."""
    eye = np.eye(d)
    zero = np.zeros((d, d))
    return np.block([[zero, -eye], [eye, zero]])


def real_rank(mat: np.ndarray, rtol: float | None = None) -> int:
    """Numerical rank with the global relative singular-value threshold."""
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    rtol = settings.rank_rtol if rtol is None else rtol
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random ``n x n`` unitary (``n = 0, 1`` included)."""
    if n == 0:
        return np.zeros((0, 0), dtype=complex)
    if n == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(n, random_state=rng)


# ---------------------------------------------------------------------------
# Krein spaces


def _flip_label(label: str) -> str:
    return label[1:] if label.startswith("~") else "~" + label


@dataclass(frozen=True)
class KreinSpace:
    """Complex Krein space stored in a basis that diagonalizes the inner product.

    Parameters
    ----------
    signs : sequence of +1/-1
        ``<e_a, e_b> = signs[a] * delta_ab``.  Positive directions need not
        come first; reversed and direct-sum spaces keep the coordinate order
        of their constituents.
    label : str
        Bookkeeping identifier.
    """

    signs: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        signs = tuple(int(s) for s in self.signs)
        if any(s not in (1, -1) for s in signs):
            raise ValueError("signs must be +1 or -1")
        object.__setattr__(self, "signs", signs)

    @classmethod
    def canonical(cls, p: int, q: int, label: str = "") -> "KreinSpace":
        return cls((1,) * p + (-1,) * q, label)

    @classmethod
    def from_gram(cls, gram: np.ndarray, label: str = "") -> tuple["KreinSpace", np.ndarray]:
        """Orthonormalize a nondegenerate Hermitian Gram matrix.

        Returns the space together with the matrix ``B`` whose columns are
        the new basis expressed in the old one, ``B^H G B = diag(signs)``.
        Positive directions come first.
        """
        gram = np.asarray(gram, dtype=complex)
        if np.abs(gram - gram.conj().T).max(initial=0.0) > settings.tol * max(1.0, np.abs(gram).max(initial=0.0)):
            raise ValueError("Gram matrix is not Hermitian")
        w, v = np.linalg.eigh(gram)
        scale = np.abs(w).max(initial=0.0)
        if scale == 0.0 or np.abs(w).min() <= settings.rank_rtol * scale:
            raise ValueError("Gram matrix is degenerate")
        order = np.argsort(-np.sign(w), kind="stable")
        w, v = w[order], v[:, order]
        basis = v / np.sqrt(np.abs(w))
        return cls(tuple(np.sign(w).astype(int)), label), basis

    # basic data ------------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self.signs)

    @property
    def p(self) -> int:
        return sum(1 for s in self.signs if s > 0)

    @property
    def q(self) -> int:
        return sum(1 for s in self.signs if s < 0)

    @property
    def sign_array(self) -> np.ndarray:
        return np.array(self.signs, dtype=float)

    @property
    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.sign_array > 0)

    @property
    def negative_indices(self) -> np.ndarray:
        return np.flatnonzero(self.sign_array < 0)

    def same_geometry(self, other: "KreinSpace") -> bool:
        """True when both spaces have the same sign vector (labels ignored)."""
        return self.signs == other.signs

    def basis_vector(self, a: int) -> np.ndarray:
        e = np.zeros(self.dim, dtype=complex)
        e[a] = 1.0
        return e

    def check_vector(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != self.dim:
            raise ValueError(f"vector of length {v.shape[0]} does not live in a space of dimension {self.dim}")
        return v

    # forms -------------------------------------------------------------------
    def inner(self, v: np.ndarray, w: np.ndarray):
        """``<v, w>``; column stacks give the matrix of pairwise products."""
        v = self.check_vector(v)
        w = self.check_vector(w)
        s = self.sign_array
        if v.ndim == 1 and w.ndim == 1:
            return complex(np.sum(s * np.conj(v) * w))
        v2 = columns(v, self.dim)
        w2 = columns(w, self.dim)
        return v2.conj().T @ (s[:, None] * w2)

    def g(self, v, w):
        return np.real(self.inner(v, w))

    def omega(self, v, w):
        return 0.5 * np.imag(self.inner(v, w))

    def project(self, v: np.ndarray, part: int) -> np.ndarray:
        """Orthogonal projection onto the positive (``part=+1``) or negative part."""
        v = self.check_vector(v)
        mask = (self.sign_array == part).astype(float)
        return v * (mask if v.ndim == 1 else mask[:, None])

    def real_projector(self, part: int) -> np.ndarray:
        """Realified matrix of :meth:`project`."""
        mask = np.tile((self.sign_array == part).astype(float), 2)
        return np.diag(mask)


def inner(space: KreinSpace, v, w):
    """Krein inner product ``<v, w>`` on ``space``."""
    return space.inner(v, w)


def orientation_reverse(space: KreinSpace, kappa: int) -> tuple[KreinSpace, Callable[[np.ndarray], np.ndarray]]:
    """Reversed space and the conjugate-linear identification map.

    The identification is coordinatewise complex conjugation; the signs of
    the reversed space are ``kappa * signs`` so that
    ``<conj a, conj b>_rev = kappa * conj(<a, b>)``.
    """
    kappa = check_kappa(kappa)
    rev = KreinSpace(tuple(kappa * s for s in space.signs), _flip_label(space.label))
    return rev, np.conj


def direct_sum(spaces: Sequence[KreinSpace], label: str = "") -> tuple[KreinSpace, list[int]]:
    """Block direct sum and the coordinate offset of each summand."""
    if not spaces:
        raise ValueError("direct sum of an empty list")
    offsets, signs, pos = [], [], 0
    for sp in spaces:
        offsets.append(pos)
        signs.extend(sp.signs)
        pos += sp.dim
    if not label:
        label = "+".join(sp.label for sp in spaces)
    return KreinSpace(tuple(signs), label), offsets


def embed(total: KreinSpace, offset: int, v: np.ndarray) -> np.ndarray:
    """Embed ``v`` into ``total`` starting at coordinate ``offset``."""
    v = np.asarray(v, dtype=complex)
    out = np.zeros((total.dim,) + v.shape[1:], dtype=complex)
    out[offset:offset + v.shape[0]] = v
    return out


# ---------------------------------------------------------------------------
# real subspaces


@dataclass(frozen=True, eq=False)
class RealSubspace:
    """Real-linear subspace given by independent complex spanning columns."""

    ambient: KreinSpace
    spanning: np.ndarray

    def __post_init__(self):
        span = np.asarray(self.spanning, dtype=complex)
        if span.ndim == 1:
            span = span[:, None]
        if span.shape[0] != self.ambient.dim:
            raise ValueError("spanning vectors do not match the ambient dimension")
        if real_rank(realify(span)) != span.shape[1]:
            raise ValueError("spanning vectors are not real-linearly independent")
        span = span.copy()
        span.setflags(write=False)
        object.__setattr__(self, "spanning", span)

    @classmethod
    def from_vectors(cls, ambient: KreinSpace, vectors: np.ndarray) -> "RealSubspace":
        """Real span of arbitrary (possibly dependent) columns."""
        vectors = columns(vectors, ambient.dim)
        real = realify(vectors)
        if real.size == 0:
            return cls(ambient, np.zeros((ambient.dim, 0), dtype=complex))
        u, sv, _ = np.linalg.svd(real, full_matrices=False)
        r = int(np.sum(sv > settings.rank_rtol * sv[0])) if sv.size and sv[0] > 0 else 0
        return cls(ambient, complexify(u[:, :r]))

    @property
    def real_dim(self) -> int:
        return self.spanning.shape[1]

    @property
    def real_matrix(self) -> np.ndarray:
        return realify(self.spanning)

    def j_image(self) -> "RealSubspace":
        return RealSubspace(self.ambient, 1j * self.spanning)

    def orthonormal_real_basis(self) -> np.ndarray:
        """Columns spanning the same real space, orthonormal in ``R^{2d}``."""
        if self.real_dim == 0:
            return self.spanning
        q, _ = np.linalg.qr(self.real_matrix)
        return complexify(q)

    def contains(self, v: np.ndarray, tol: float | None = None) -> bool:
        return self.distance(v) <= (settings.tol if tol is None else tol)

    def distance(self, v: np.ndarray) -> float:
        """Euclidean distance of ``v`` (or max over columns) to the subspace."""
        x = columns(realify(self.ambient.check_vector(v)), 2 * self.ambient.dim, float)
        if self.real_dim == 0:
            return float(np.linalg.norm(x, axis=0).max(initial=0.0))
        coef, *_ = np.linalg.lstsq(self.real_matrix, x, rcond=None)
        return float(np.linalg.norm(self.real_matrix @ coef - x, axis=0).max(initial=0.0))

    def same_span(self, other: "RealSubspace") -> bool:
        if self.real_dim != other.real_dim:
            return False
        both = np.hstack([self.real_matrix, other.real_matrix])
        return real_rank(both) == self.real_dim


# ---------------------------------------------------------------------------
# conjugations


@dataclass(frozen=True, eq=False)
class Conjugation:
    """Real-linear map on a Krein space, stored by its realified matrix."""

    ambient: KreinSpace
    matrix: np.ndarray
    kappa: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        d2 = 2 * self.ambient.dim
        if m.shape != (d2, d2):
            raise ValueError(f"conjugation matrix must be {d2}x{d2}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "kappa", check_kappa(self.kappa))

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = self.ambient.check_vector(v)
        return complexify(self.matrix @ realify(v))

    def residuals(self) -> dict[str, float]:
        """Violation of each defining property (0 means exact)."""
        sp, m = self.ambient, self.matrix
        d = sp.dim
        eye = np.eye(2 * d)
        jm = j_matrix(d)
        basis = complexify(eye)
        images = complexify(m @ eye)
        law = sp.inner(images, images) - self.kappa * np.conj(sp.inner(basis, basis))
        target = -1 if self.kappa == FERMIONIC else 1
        leak = 0.0
        for part in (1, -1):
            src = sp.real_projector(part)
            wrong = sp.real_projector(-part * target)
            leak = max(leak, float(np.abs(wrong @ m @ src).max(initial=0.0)))
        return {
            "involution": float(np.abs(m @ m - eye).max(initial=0.0)),
            "conjugate_linear": float(np.abs(m @ jm + jm @ m).max(initial=0.0)),
            "inner_product_law": float(np.abs(law).max(initial=0.0)),
            "adapted": leak,
        }

    def is_valid(self, tol: float | None = None) -> bool:
        tol = settings.tol if tol is None else tol
        return all(r <= tol for r in self.residuals().values())

    def fixed_points(self) -> RealSubspace:
        """Eigenspace of eigenvalue +1 as a :class:`RealSubspace`."""
        d2 = 2 * self.ambient.dim
        null = sla.null_space(self.matrix - np.eye(d2), rcond=settings.rank_rtol)
        return RealSubspace(self.ambient, complexify(null))

    def complex_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A, B)`` with ``u(v) = A v + B conj(v)``."""
        d = self.ambient.dim
        eye = np.eye(d, dtype=complex)
        ue = self(eye)
        uie = self(1j * eye)
        a = (ue - 1j * uie) / 2
        b = (ue + 1j * uie) / 2
        return a, b


class SubspaceError(ValueError):
    """A real subspace violates the conditions required of a solution space."""

    def __init__(self, failures, residuals):
        self.failures = list(failures)
        self.residuals = dict(residuals)
        super().__init__("subspace violates: " + ", ".join(self.failures))


@dataclass
class C5Report:
    passed: bool
    kappa: int
    residuals: dict[str, float] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


def _graph_map(space: KreinSpace, w: RealSubspace):
    """Realified ``T`` with ``W = {x + T x : x in V+}`` (or ``None``)."""
    pos = np.concatenate([space.positive_indices, space.positive_indices + space.dim])
    neg = np.concatenate([space.negative_indices, space.negative_indices + space.dim])
    real = w.real_matrix
    top, bottom = real[pos], real[neg]
    if top.shape[0] != top.shape[1] or real_rank(top) < top.shape[0]:
        return None
    return bottom @ np.linalg.inv(top), pos, neg


def _fermionic_matrix(space: KreinSpace, w: RealSubspace):
    graph = _graph_map(space, w)
    if graph is None:
        return None
    t, pos, neg = graph
    if real_rank(t) < t.shape[0]:
        return None
    m = np.zeros((2 * space.dim, 2 * space.dim))
    m[np.ix_(neg, pos)] = t
    m[np.ix_(pos, neg)] = np.linalg.inv(t)
    return m


def _bosonic_matrix(space: KreinSpace, w: RealSubspace):
    b = np.hstack([w.real_matrix, j_matrix(space.dim) @ w.real_matrix])
    if b.shape[0] != b.shape[1] or real_rank(b) < b.shape[0]:
        return None
    half = w.real_dim
    sign = np.diag(np.r_[np.ones(half), -np.ones(half)])
    return b @ sign @ np.linalg.inv(b)


def check_subspace_c5(space: KreinSpace, w: RealSubspace, kappa: int) -> C5Report:
    """Test whether ``w`` can serve as a solution space on ``space``.

    Fermionic (``kappa=-1``): real hypermaximal neutral for ``g`` and
    compatible with ``J``.  Bosonic (``kappa=+1``): adapted Lagrangian for
    ``omega``.  Residuals measure violations (0 is exact); rank-type
    properties report the rank deficiency.
    """
    kappa = check_kappa(kappa)
    tol = settings.tol
    res: dict[str, float] = {}
    d = space.dim
    res["dimension"] = float(abs(w.real_dim - d))
    basis = w.orthonormal_real_basis()
    gram = space.inner(basis, basis) if w.real_dim else np.zeros((0, 0), dtype=complex)
    if kappa == FERMIONIC:
        res["signature"] = float(abs(space.p - space.q))
        res["neutrality"] = float(np.abs(gram.real).max(initial=0.0))
        pairing = gram.imag  # g(w, J w') = -Im <w, w'>
        res["nondegeneracy"] = float(w.real_dim - real_rank(pairing)) if w.real_dim else 0.0
        m = _fermionic_matrix(space, w) if res["dimension"] == 0 and res["signature"] == 0 else None
        if m is None:
            res["compatibility"] = float("inf")
        else:
            jm = j_matrix(d)
            res["compatibility"] = float(np.abs(m @ jm + jm @ m).max(initial=0.0))
    else:
        res["isotropy"] = float(np.abs(gram.imag).max(initial=0.0))
        proj = space.real_projector(1) @ w.real_matrix
        res["adaptedness"] = float(real_rank(np.hstack([w.real_matrix, proj])) - w.real_dim)
        jw = j_matrix(d) @ w.real_matrix
        res["complement"] = float(2 * d - real_rank(np.hstack([w.real_matrix, jw])))
    failures = [k for k, v in res.items() if not v <= tol]
    return C5Report(not failures, kappa, res, failures)


def conjugation_from_subspace(space: KreinSpace, w: RealSubspace, kappa: int) -> Conjugation:
    """The conjugation whose fixed-point set is ``w`` and which negates ``J w``.

    Fermionic: built from the graph map ``T: V+ -> V-`` of ``w``.
    Bosonic: identity on ``w``, minus identity on ``J w``.

    Raises
    ------
    SubspaceError
        If ``w`` fails :func:`check_subspace_c5`.
    """
    report = check_subspace_c5(space, w, kappa)
    if not report.passed:
        raise SubspaceError(report.failures, report.residuals)
    if kappa == FERMIONIC:
        m = _fermionic_matrix(space, w)
    else:
        m = _bosonic_matrix(space, w)
    return Conjugation(space, m, kappa)


def conjugation_from_decomposition(space: KreinSpace, w: RealSubspace, kappa: int) -> Conjugation:
    """Identity on ``w`` and minus identity on ``J w``, without checks.

    For valid fermionic subspaces this agrees with the graph construction
    used by :func:`conjugation_from_subspace`.
    """
    m = _bosonic_matrix(space, w)
    if m is None:
        raise SubspaceError(["complement"], {"complement": 1.0})
    return Conjugation(space, m, check_kappa(kappa))


class RealDecomposer:
    """Solver for ``v = vR + J vI`` with ``vR, vI`` in a fixed real subspace."""

    def __init__(self, space: KreinSpace, w: RealSubspace, cond_max: float = 1e12):
        self.space = space
        self.w = w
        b = np.hstack([w.real_matrix, j_matrix(space.dim) @ w.real_matrix])
        if b.shape[0] != b.shape[1]:
            raise SubspaceError(["dimension"], {"dimension": abs(b.shape[1] - b.shape[0]) / 2})
        cond = np.linalg.cond(b) if b.size else 1.0
        if not np.isfinite(cond) or cond > cond_max:
            raise SubspaceError(["complement"], {"condition": float(cond)})
        self._lu = sla.lu_factor(b) if b.size else None

    def coefficients(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Real coordinates of ``vR`` and ``vI`` in the spanning basis."""
        v = self.space.check_vector(v)
        k = self.w.real_dim
        if k == 0:
            shape = (0,) + v.shape[1:]
            return np.zeros(shape), np.zeros(shape)
        sol = sla.lu_solve(self._lu, realify(v))
        return sol[:k], sol[k:]

    def __call__(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        a, b = self.coefficients(v)
        return self.w.spanning @ a, self.w.spanning @ b


def decompose_real(space: KreinSpace, w: RealSubspace, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split ``v = vR + J vI`` with ``vR, vI`` in ``w``."""
    return RealDecomposer(space, w)(v)


# ---------------------------------------------------------------------------
# random valid data


def random_conjugation(space: KreinSpace, kappa: int, rng: np.random.Generator) -> Conjugation:
    """Random involutive adapted conjugation with the inner-product law.

    Fermionic: ``u(x+, y-) = (D^T conj y, D conj x)`` with ``D`` a Haar
    unitary between the positive and negative parts (needs ``p = q``).
    Bosonic: ``u(x) = Q Q^T conj x`` on each part with ``Q`` Haar unitary.
    """
    kappa = check_kappa(kappa)
    d = space.dim
    pos, neg = space.positive_indices, space.negative_indices
    a = np.zeros((d, d), dtype=complex)  # u(v) = a @ conj(v)
    if kappa == FERMIONIC:
        if space.p != space.q:
            raise ValueError("a fermionic solution space needs equally many positive and negative directions")
        dmat = random_unitary(space.p, rng)
        a[np.ix_(neg, pos)] = dmat
        a[np.ix_(pos, neg)] = dmat.T
    else:
        for idx in (pos, neg):
            q = random_unitary(len(idx), rng)
            a[np.ix_(idx, idx)] = q @ q.T
    # realified matrix of v -> a conj(v)
    m = np.block([[a.real, a.imag], [a.imag, -a.real]])
    return Conjugation(space, m, kappa)


def random_solution_space(space: KreinSpace, kappa: int, rng: np.random.Generator) -> tuple[RealSubspace, Conjugation]:
    """Random valid solution space, generated conjugation first."""
    u = random_conjugation(space, kappa, rng)
    d = space.dim
    eye = np.eye(2 * d)
    # fixed points of an involution: image of (1 + u)/2
    w = RealSubspace.from_vectors(space, complexify((eye + u.matrix) @ eye / 2))
    return w, u
