"""Identifiability and sufficient-scattering certificates."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .mvie import Ellipsoid, mvie_of
from .polytope import Polytope, contains, dedup_halfspaces, polar, same_point_set

MAX_ID_VERTICES = 24
MAX_ID_DIM = 6
MAX_SCATTER_DIM = 4
MAX_SCATTER_SAMPLES = 200


@dataclass
class IdentifiabilityReport:
    identifiable: bool
    automorphism_count: int
    witness: Optional[np.ndarray] = None
    automorphisms: List[np.ndarray] = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"identifiable": self.identifiable,
                "automorphism_count": self.automorphism_count,
                "witness": None if self.witness is None else self.witness.tolist()}


def is_signed_permutation(A, tol: float = 1e-7) -> bool:
    """True if ``A`` has exactly one +-1 entry per row and column, zeros elsewhere."""
    A = np.asarray(A, dtype=float)
    big = np.abs(A) > tol
    if not (np.all(big.sum(axis=0) == 1) and np.all(big.sum(axis=1) == 1)):
        return False
    return bool(np.all(np.abs(np.abs(A[big]) - 1) <= tol))


def _independent_columns(V, r):
    chosen = []
    for j in range(V.shape[1]):
        trial = chosen + [j]
        if np.linalg.matrix_rank(V[:, trial], tol=1e-9) == len(trial):
            chosen = trial
            if len(chosen) == r:
                return chosen
    raise ValueError("vertex set does not span the space (degenerate polytope)")


def vertex_automorphisms(V, tol: float = 1e-7) -> List[np.ndarray]:
    """All linear maps ``A`` with ``A(V) = V`` as a set.

    A linear map is fixed by the images of ``r`` independent vertices, so it
    suffices to try every ordered r-tuple of distinct vertices as images.
    """
    V = np.asarray(V, dtype=float)
    r, K = V.shape
    base = _independent_columns(V, r)
    Binv = np.linalg.inv(V[:, base])
    scale = max(1.0, float(np.max(np.abs(V))))
    found = []
    tuples = itertools.permutations(range(K), r)
    chunk = max(1, 2_000_000 // (r * K * K))
    while True:
        block = np.array(list(itertools.islice(tuples, chunk)))
        if len(block) == 0:
            break
        W = np.transpose(V[:, block], (1, 0, 2))         # (n, r, r): images as columns
        As = W @ Binv
        AV = As @ V                                        # (n, r, K)
        dist = np.max(np.abs(AV[:, :, :, None] - V[None, :, None, :]), axis=1)  # (n, K, K)
        hit = dist <= tol * scale
        ok = np.all(hit.sum(axis=2) >= 1, axis=1) & np.all(hit.sum(axis=1) >= 1, axis=1)
        for A in As[ok]:
            found.append(A)
    return found


def check_identifiable(p: Polytope, tol: float = 1e-7) -> IdentifiabilityReport:
    """Decide whether the only linear symmetries of ext(p) are signed permutations."""
    V = p.vertices
    r, K = V.shape
    if K > MAX_ID_VERTICES or r > MAX_ID_DIM:
        raise ValueError(f"identifiability check limited to {MAX_ID_VERTICES} vertices "
                         f"and r <= {MAX_ID_DIM} (got {K} vertices, r={r})")
    autos = vertex_automorphisms(V, tol)
    bad = [A for A in autos if not is_signed_permutation(A, tol)]
    return IdentifiabilityReport(identifiable=not bad, automorphism_count=len(autos),
                                 witness=bad[0] if bad else None, automorphisms=autos)


@dataclass
class ScatterReport:
    ss1_holds: bool
    ss2_holds: bool
    inside_polytope: bool
    tangent_polar_points: np.ndarray = field(repr=False)
    violating_points: np.ndarray = field(repr=False)

    def to_dict(self):
        return {"ss1_holds": self.ss1_holds, "ss2_holds": self.ss2_holds,
                "inside_polytope": self.inside_polytope,
                "tangent_polar_points": self.tangent_polar_points.T.tolist(),
                "violating_points": self.violating_points.T.tolist()}


def hull_halfspaces(S):
    """Unit-normal facets ``(A, b)`` of conv(columns of S), or None if degenerate."""
    try:
        hull = ConvexHull(np.asarray(S, dtype=float).T)
    except QhullError:
        return None
    eq = hull.equations
    h = dedup_halfspaces(eq[:, :-1], -eq[:, -1], tol=1e-9)
    return h.A, h.b


def check_scattered(S, p: Polytope, tol: float = 1e-6,
                    ellipsoid: Ellipsoid = None) -> ScatterReport:
    """Test both sufficient-scattering conditions for the columns of ``S``.

    (i) every column lies in ``p`` and the MVIE of ``p`` lies in conv(S);
    (ii) the facets of conv(S) that touch the MVIE map, through the polar about
    the MVIE center, exactly onto the vertices of the polar of ``p``.
    """
    S = np.asarray(S, dtype=float)
    r, N = S.shape
    if r != p.dim:
        raise ValueError("sample dimension does not match the polytope")
    if r > MAX_SCATTER_DIM or N > MAX_SCATTER_SAMPLES:
        raise ValueError(f"scattering check limited to r <= {MAX_SCATTER_DIM} and "
                         f"N <= {MAX_SCATTER_SAMPLES} (got r={r}, N={N})")
    e = ellipsoid if ellipsoid is not None else mvie_of(p)
    inside = contains(p, S, tol)
    outside_cols = S[:, ~inside]
    hull = hull_halfspaces(S)
    empty = np.zeros((r, 0))
    if hull is None:
        return ScatterReport(False, False, bool(np.all(inside)), empty,
                             np.hstack([outside_cols, e.g[:, None]]))
    A, b = hull
    CA = A @ e.C
    nCA = np.linalg.norm(CA, axis=1)
    room = b - A @ e.g
    gap = room - nCA
    cut = gap < -tol
    # deepest ellipsoid point beyond each violated facet
    probes = (e.g[:, None] + e.C @ (CA[cut] / nCA[cut, None]).T) if np.any(cut) else empty
    ss1 = bool(np.all(inside) and not np.any(cut))
    tight = np.abs(gap) <= tol
    polar_pts = (A[tight] / room[tight, None]).T if np.any(tight) else empty
    ss2 = False
    if ss1 and polar_pts.shape[1]:
        ext = polar(p, e.g).vertices
        scale = max(1.0, float(np.max(np.abs(ext))))
        ss2 = same_point_set(polar_pts, ext, tol=1e-6 * scale * 10)
    return ScatterReport(ss1, ss2, bool(np.all(inside)), polar_pts,
                         np.hstack([outside_cols, probes]))
