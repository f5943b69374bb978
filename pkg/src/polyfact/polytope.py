"""Convex polytopes in halfspace, vertex and feature-spec form.

A :class:`Polytope` keeps one primary representation and lazily derives the
others.  Representation conversion is done by brute-force subset enumeration,
which is exact and cheap at the small dimensions used here (``r <= 6``).

Conventions
-----------
* Halfspace form: ``A @ x <= b`` with ``A`` of shape ``(f, r)``.
* Vertex form: vertices are the *columns* of an ``(r, m)`` array.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence, Union

import numpy as np
from scipy.optimize import linprog

#: Tolerance used when deciding whether a point is a vertex / satisfies a
#: facet in numerically computed vertex forms.
VERTEX_TOL = 1e-8
#: Tolerance for deduplicating unit-normalized facets.
FACET_TOL = 1e-9
#: Largest vertex/facet list materialized for the special polytopes.
MAX_CACHE_SIZE = 2**20
#: Brute-force conversion limits.
MAX_CONVERT_DIM = 6
MAX_CONVERT_COUNT = 64


class Special(str, Enum):
    """The four polytopes with closed-form MVIE and polar."""

    BINF = "binf"
    B1 = "b1"
    BINF_PLUS = "binf_plus"
    B1_PLUS = "b1_plus"

    @classmethod
    def parse(cls, name: Union[str, "Special"]) -> "Special":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "_").replace("+", "_plus")
        aliases = {"binfplus": "binf_plus", "b1plus": "b1_plus",
                   "binf__plus": "binf_plus", "b1__plus": "b1_plus"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown special polytope {name!r}") from None


def _frozen(a, ndim: int) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HalfspaceForm:
    """Polytope ``{x | A x <= b}``; rows of ``A`` are the facet normals."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = _frozen(self.A, 2)
        b = _frozen(self.b, 1)
        if A.shape[0] != b.shape[0]:
            raise ValueError("A and b disagree on the number of halfspaces")
        if np.any(np.linalg.norm(A, axis=1) == 0):
            raise ValueError("zero normal in halfspace form")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def __len__(self) -> int:
        return self.A.shape[0]

    def normalized(self) -> "HalfspaceForm":
        """Unit-normalize every row and drop duplicates (tolerance FACET_TOL)."""
        return dedup_halfspaces(self.A, self.b)


@dataclass(frozen=True)
class VertexForm:
    """Convex hull of the columns of ``V`` (shape ``(r, m)``)."""

    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "V", _frozen(self.V, 2))

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    def __len__(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class Box:
    index: int
    lo: float
    hi: float


@dataclass(frozen=True)
class L1Ball:
    indices: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))


@dataclass(frozen=True)
class SimplexCap:
    """``sum(x[indices]) <= radius``; nonnegativity comes from Box entries."""

    indices: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))


Constraint = Union[Box, L1Ball, SimplexCap]


@dataclass(frozen=True)
class FeatureSpec:
    """A polytope given as an intersection of per-feature constraints."""

    dim: int
    constraints: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        bounded = set()
        for c in self.constraints:
            idx = (c.index,) if isinstance(c, Box) else c.indices
            if not idx or any(i < 0 or i >= self.dim for i in idx):
                raise ValueError(f"constraint {c} has an index outside [0, {self.dim})")
            if isinstance(c, Box):
                if not c.lo < c.hi:
                    raise ValueError(f"empty box {c}")
                bounded.add(c.index)
            else:
                if c.radius <= 0:
                    raise ValueError(f"radius must be positive in {c}")
                if isinstance(c, L1Ball):
                    bounded.update(c.indices)
        missing = set(range(self.dim)) - bounded
        if missing:
            raise ValueError(f"coordinates {sorted(missing)} are unbounded")


class Polytope:
    """Convex polytope with one primary representation and cached alternates.

    Use the constructors :meth:`from_halfspaces`, :meth:`from_vertices`,
    :meth:`from_featurespec` or :func:`make_special` rather than calling
    ``Polytope(...)`` directly.
    """

    def __init__(self, dim: int, *, hform: HalfspaceForm = None,
                 vform: VertexForm = None, featurespec: FeatureSpec = None,
                 special: Special = None, name: str = None):
        if dim < 1:
            raise ValueError("polytope dimension must be >= 1")
        self.dim = int(dim)
        self.special = special
        self.name = name
        self._featurespec = featurespec
        if special is not None:
            self.kind = "special"
        elif featurespec is not None:
            self.kind = "featurespec"
        elif hform is not None:
            self.kind = "hform"
        elif vform is not None:
            self.kind = "vform"
        else:
            raise ValueError("a polytope needs at least one representation")
        # cached_property stores into __dict__; prime it with what we know
        if hform is not None:
            if hform.dim != self.dim:
                raise ValueError("halfspace form has the wrong dimension")
            self.__dict__["halfspaces"] = hform
        if vform is not None:
            if vform.dim != self.dim:
                raise ValueError("vertex form has the wrong dimension")
            self.__dict__["vertex_form"] = vform

    @classmethod
    def from_halfspaces(cls, A, b, name=None) -> "Polytope":
        """Polytope ``{x | A x <= b}``; rows are unit-normalized and deduplicated.

        Raises ValueError if the set is unbounded or empty.
        """
        h = dedup_halfspaces(A, b)
        check_bounded(h)
        return cls(h.dim, hform=h, name=name)

    @classmethod
    def from_vertices(cls, V, name=None) -> "Polytope":
        v = VertexForm(V)
        return cls(v.dim, vform=v, name=name)

    @classmethod
    def from_featurespec(cls, spec: FeatureSpec, name=None) -> "Polytope":
        return cls(spec.dim, featurespec=spec, name=name)

    @property
    def featurespec(self) -> FeatureSpec:
        return self._featurespec

    @cached_property
    def halfspaces(self) -> HalfspaceForm:
        if self._featurespec is not None:
            return feature_spec_to_halfspaces(self._featurespec)
        if "vertex_form" in self.__dict__:
            return vertices_to_halfspaces(self.vertex_form)
        raise ValueError(f"no halfspace form available for {self!r}")

    @cached_property
    def vertex_form(self) -> VertexForm:
        if "halfspaces" in self.__dict__ or self._featurespec is not None:
            return halfspaces_to_vertices(self.halfspaces)
        raise ValueError(f"no vertex form available for {self!r}")

    @property
    def vertices(self) -> np.ndarray:
        """Vertices as columns of an ``(r, m)`` array."""
        return self.vertex_form.V

    def has_cached(self, form: str) -> bool:
        key = {"hform": "halfspaces", "vform": "vertex_form"}[form]
        return key in self.__dict__

    def __repr__(self) -> str:
        label = self.name or (self.special.value if self.special else self.kind)
        return f"Polytope({label}, dim={self.dim})"


# ---------------------------------------------------------------------------
# constructors for the special polytopes and the P_ex example

def _sign_vectors(r: int) -> np.ndarray:
    return np.array(list(itertools.product([1.0, -1.0], repeat=r)))


def make_special(kind, r: int) -> Polytope:
    """Build one of the four special polytopes with both caches filled.

    Parameters
    ----------
    kind : Special or str
        ``binf``, ``b1``, ``binf_plus`` or ``b1_plus``.
    r : int
        Dimension.

    Notes
    -----
    A cache whose size would exceed ``2**20`` rows/columns is skipped with a
    warning; projection and the closed-form MVIE do not need it.
    """
    kind = Special.parse(kind)
    if r < 1:
        raise ValueError("dimension must be >= 1")
    I = np.eye(r)
    exp_big = r > 20
    A = b = V = None
    if kind is Special.BINF:
        A, b = np.vstack([I, -I]), np.ones(2 * r)
        if not exp_big:
            V = _sign_vectors(r).T
    elif kind is Special.B1:
        if not exp_big:
            A, b = _sign_vectors(r), np.ones(2**r)
        V = np.hstack([I, -I])
    elif kind is Special.BINF_PLUS:
        A, b = np.vstack([I, -I]), np.concatenate([np.ones(r), np.zeros(r)])
        if not exp_big:
            V = np.array(list(itertools.product([0.0, 1.0], repeat=r))).T
    else:
        A = np.vstack([np.ones((1, r)), -I])
        b = np.concatenate([[1.0], np.zeros(r)])
        V = np.hstack([np.zeros((r, 1)), I])
    if exp_big:
        warnings.warn(f"{kind.value} in dimension {r}: vertex/facet list would exceed "
                      f"{MAX_CACHE_SIZE} entries; cache skipped", stacklevel=2)
    return Polytope(r, hform=None if A is None else HalfspaceForm(A, b),
                    vform=None if V is None else VertexForm(V), special=kind)


PEX_VERTICES = np.array([[1.0, -1.0, 0.0, 0.0, 1.0, -1.0],
                         [0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
                         [0.0, 0.0, 0.0, 0.0, 1.0, 1.0]])
#: Vertices of the polar of P_ex about its MVIE center.
PEX_POLAR_VERTICES = np.array([[1.0, 1.0, -1.0, -1.0, 0.0, 0.0, 0.0],
                               [1.0, -1.0, 1.0, -1.0, 1.6, -1.6, 0.0],
                               [0.0, 0.0, 0.0, 0.0, 1.6, 1.6, -8.0 / 3.0]])
PEX_MVIE_CENTER = np.array([0.0, 0.0, 0.375])

PEX_SPEC = FeatureSpec(3, (Box(0, -1.0, 1.0), Box(1, -1.0, 1.0), Box(2, 0.0, 1.0),
                           L1Ball((0, 1), 1.0), L1Ball((1, 2), 1.0)))


def pex() -> Polytope:
    """Three-dimensional example with mixed signed/nonnegative and sparse features."""
    return Polytope.from_featurespec(PEX_SPEC, name="pex")


# ---------------------------------------------------------------------------
# halfspace utilities

def dedup_halfspaces(A, b, tol: float = FACET_TOL) -> HalfspaceForm:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms == 0):
        raise ValueError("zero normal in halfspace form")
    An, bn = A / norms[:, None], b / norms
    rows = np.column_stack([An, bn])
    keep = []
    for i, row in enumerate(rows):
        if not any(np.max(np.abs(rows[j] - row)) <= tol for j in keep):
            keep.append(i)
    return HalfspaceForm(An[keep], bn[keep])


def dedup_points(P, tol: float = VERTEX_TOL) -> np.ndarray:
    """Drop duplicate columns of ``P`` (max-abs distance <= tol), keeping order."""
    P = np.asarray(P, dtype=float)
    keep = []
    for j in range(P.shape[1]):
        if not any(np.max(np.abs(P[:, k] - P[:, j])) <= tol for k in keep):
            keep.append(j)
    return P[:, keep]


def feature_spec_to_halfspaces(spec: FeatureSpec) -> HalfspaceForm:
    """Expand a feature spec into a deduplicated halfspace list.

    A box gives two halfspaces, an l1 ball on ``J`` gives ``2**len(J)`` and a
    simplex cap gives one.
    """
    rows, offsets = [], []
    r = spec.dim
    for c in spec.constraints:
        if isinstance(c, Box):
            e = np.zeros(r)
            e[c.index] = 1.0
            rows += [e, -e]
            offsets += [c.hi, -c.lo]
        elif isinstance(c, L1Ball):
            if len(c.indices) > 20:
                raise ValueError("l1 ball on more than 20 coordinates would need "
                                 "over 2**20 halfspaces")
            for signs in itertools.product([1.0, -1.0], repeat=len(c.indices)):
                a = np.zeros(r)
                a[list(c.indices)] = signs
                rows.append(a)
                offsets.append(c.radius)
        elif isinstance(c, SimplexCap):
            a = np.zeros(r)
            a[list(c.indices)] = 1.0
            rows.append(a)
            offsets.append(c.radius)
        else:
            raise TypeError(f"unknown constraint {c!r}")
    return dedup_halfspaces(np.array(rows), np.array(offsets))


def _lp_support(A, b, c):
    """max c @ x subject to A x <= b; returns (status, value)."""
    res = linprog(-np.asarray(c), A_ub=A, b_ub=b, bounds=[(None, None)] * len(c),
                  method="highs")
    return res.status, (-res.fun if res.status == 0 else None)


def check_bounded(h: HalfspaceForm) -> None:
    """Raise ValueError unless every coordinate direction has finite support."""
    for k in range(h.dim):
        for sign in (1.0, -1.0):
            c = np.zeros(h.dim)
            c[k] = sign
            status, _ = _lp_support(h.A, h.b, c)
            if status == 3:
                raise ValueError("halfspace form is unbounded")
            if status == 2:
                raise ValueError("halfspace form is empty")
            if status != 0:
                raise ValueError(f"LP failed while checking boundedness (status {status})")


def chebyshev_center(h: HalfspaceForm):
    """Center and radius of the largest ball inside ``A x <= b`` (one LP)."""
    A, b = h.A, h.b
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(h.dim + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.column_stack([A, norms]), b_ub=b,
                  bounds=[(None, None)] * h.dim + [(0, None)], method="highs")
    if res.status != 0:
        raise ValueError("could not find an interior point (empty or unbounded polytope)")
    return res.x[:-1], res.x[-1]


# ---------------------------------------------------------------------------
# representation conversion

def _check_scale(dim: int, count: int, what: str):
    if dim > MAX_CONVERT_DIM or count > MAX_CONVERT_COUNT:
        raise ValueError(f"brute-force {what} conversion limited to r <= {MAX_CONVERT_DIM} "
                         f"and {MAX_CONVERT_COUNT} inputs (got r={dim}, {count})")


def _chunks(iterable, size=100_000):
    it = iter(iterable)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block)


def vertices_to_halfspaces(v, tol: float = FACET_TOL, *, check_scale: bool = True) -> HalfspaceForm:
    """Exact facet list of ``conv(V)`` by enumerating r-subsets of vertices.

    Parameters
    ----------
    v : VertexForm or array of shape (r, m)
    tol : float
        Side test and deduplication tolerance (scaled by the coordinate range).
    """
    V = v.V if isinstance(v, VertexForm) else np.asarray(v, dtype=float)
    r, m = V.shape
    if check_scale:
        _check_scale(r, m, "vertex-to-halfspace")
    if m < r + 1 or np.linalg.matrix_rank(V - V.mean(axis=1, keepdims=True)) < r:
        raise ValueError("vertex set is degenerate (not full-dimensional)")
    scale = max(1.0, float(np.max(np.abs(V))))
    side_tol = tol * scale * 10
    normals, offsets = [], []
    for combos in _chunks(itertools.combinations(range(m), r)):
        P = V.T[combos]                                  # (k, r, r) points
        if r == 1:
            N = np.ones((len(combos), 1))
        else:
            D = P[:, 1:, :] - P[:, :1, :]
            _, s, vt = np.linalg.svd(D)
            ok = s[:, -1] > 1e-10 * scale
            P, D, N = P[ok], D[ok], vt[ok, -1, :]
        off = np.einsum("kr,kr->k", N, P[:, 0, :])
        S = N @ V - off[:, None]
        upper = np.all(S <= side_tol, axis=1)
        lower = np.all(S >= -side_tol, axis=1)
        normals += [N[upper], -N[lower]]
        offsets += [off[upper], -off[lower]]
    A = np.vstack(normals)
    b = np.concatenate(offsets)
    if len(A) == 0:
        raise ValueError("no facets found")
    return dedup_halfspaces(A, b, tol=tol * scale * 100)


def halfspaces_to_vertices(h: HalfspaceForm, tol: float = VERTEX_TOL, *,
                           check_scale: bool = True) -> VertexForm:
    """Vertex list of a bounded ``{x | A x <= b}`` by enumerating r-subsets of facets."""
    r, f = h.dim, len(h)
    if check_scale:
        _check_scale(r, f, "halfspace-to-vertex")
    check_bounded(h)
    A, b = h.A, h.b
    scale = max(1.0, float(np.max(np.abs(b))))
    pts = []
    for combos in _chunks(itertools.combinations(range(f), r)):
        As = A[combos]
        bs = b[combos]
        rn = np.prod(np.linalg.norm(As, axis=2), axis=1)
        ok = np.abs(np.linalg.det(As)) > 1e-10 * rn
        if not np.any(ok):
            continue
        X = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
        feas = np.all(X @ A.T - b <= tol * scale, axis=1)
        pts.append(X[feas])
    X = np.vstack(pts) if pts else np.zeros((0, r))
    if len(X) == 0:
        raise ValueError("no vertices found (empty polytope?)")
    return VertexForm(dedup_points(X.T, tol=tol * scale))


def _in_hull_lp(V, x) -> bool:
    m = V.shape[1]
    A_eq = np.vstack([V, np.ones((1, m))])
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(np.zeros(m), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * m, method="highs")
    return res.status == 0


def extreme_points(V, tol: float = VERTEX_TOL) -> np.ndarray:
    """Columns of ``V`` that are not convex combinations of the other columns."""
    V = dedup_points(np.asarray(V, dtype=float), tol=tol)
    keep = []
    for j in range(V.shape[1]):
        others = np.delete(V, j, axis=1)
        if others.shape[1] == 0 or not _in_hull_lp(others, V[:, j]):
            keep.append(j)
    return V[:, keep]


def polar(p: Polytope, d=None, tol: float = 0.0) -> Polytope:
    """Polar of ``p - d`` in vertex form.

    Every facet ``a_i @ x <= b_i`` maps to the point ``a_i / (b_i - a_i @ d)``;
    points produced by redundant facets are dropped so that the result lists
    only extreme points.
    """
    h = p.halfspaces
    d = np.zeros(p.dim) if d is None else np.asarray(d, dtype=float)
    if d.shape != (p.dim,):
        raise ValueError("interior point has the wrong dimension")
    slack = h.b - h.A @ d
    if np.any(slack <= tol):
        raise ValueError("not an interior point")
    pts = (h.A / slack[:, None]).T
    return Polytope.from_vertices(extreme_points(pts), name=None)


def contains(p: Polytope, x, tol: float = 0.0):
    """Membership test; ``x`` may be a point ``(r,)`` or columns ``(r, N)``."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = X.reshape(p.dim, -1)
    if p.special is not None:
        ok = _special_contains(p.special, X, tol)
    elif p.featurespec is not None:
        ok = np.ones(X.shape[1], dtype=bool)
        for c in p.featurespec.constraints:
            if isinstance(c, Box):
                ok &= (X[c.index] <= c.hi + tol) & (X[c.index] >= c.lo - tol)
            elif isinstance(c, L1Ball):
                ok &= np.abs(X[list(c.indices)]).sum(axis=0) <= c.radius + tol
            else:
                ok &= X[list(c.indices)].sum(axis=0) <= c.radius + tol
    elif p.has_cached("hform"):
        h = p.halfspaces
        ok = np.all(h.A @ X <= h.b[:, None] + tol, axis=0)
    else:
        V = p.vertices
        ok = np.array([_in_hull_lp(V, X[:, j]) or _dist_to_hull(V, X[:, j]) <= tol
                       for j in range(X.shape[1])])
    return bool(ok[0]) if single else ok


def _dist_to_hull(V, x) -> float:
    # l_inf distance to conv(V) by LP; only used for a tolerant V-form membership
    r, m = V.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.block([[V, -np.ones((r, 1))], [-V, -np.ones((r, 1))]])
    b_ub = np.concatenate([x, -x])
    A_eq = np.concatenate([np.ones(m), [0.0]])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (m + 1), method="highs")
    return res.fun if res.status == 0 else np.inf


def _special_contains(kind: Special, X, tol):
    if kind is Special.BINF:
        return np.all(np.abs(X) <= 1 + tol, axis=0)
    if kind is Special.B1:
        return np.abs(X).sum(axis=0) <= 1 + tol
    if kind is Special.BINF_PLUS:
        return np.all((X >= -tol) & (X <= 1 + tol), axis=0)
    return np.all(X >= -tol, axis=0) & (X.sum(axis=0) <= 1 + tol)


def same_point_set(P, Q, tol: float = 1e-7) -> bool:
    """True if the columns of P and Q agree as sets (max-abs tolerance)."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape[0] != Q.shape[0]:
        return False
    D = np.max(np.abs(P[:, :, None] - Q[:, None, :]), axis=0)
    return bool(np.all(D.min(axis=1) <= tol) and np.all(D.min(axis=0) <= tol))


def max_violation(p: Polytope, X) -> np.ndarray:
    """Largest constraint violation per column (<= 0 means feasible)."""
    h = p.halfspaces
    X = np.asarray(X, dtype=float).reshape(p.dim, -1)
    return np.max(h.A @ X - h.b[:, None], axis=0)


__all__ = [
    "Special", "HalfspaceForm", "VertexForm", "Box", "L1Ball", "SimplexCap",
    "FeatureSpec", "Polytope", "make_special", "pex", "PEX_VERTICES",
    "PEX_POLAR_VERTICES", "PEX_MVIE_CENTER", "PEX_SPEC", "feature_spec_to_halfspaces",
    "vertices_to_halfspaces", "halfspaces_to_vertices", "polar", "contains",
    "extreme_points", "dedup_points", "dedup_halfspaces", "chebyshev_center",
    "check_bounded", "same_point_set", "max_violation",
]
