"""A tour of the geometry behind polytopic matrix factorization.

Run with ``python3 demos/01_geometry_tour.py``.

The factorization Y = H S is only meaningful when the polytope that holds the
columns of S pins down H up to a signed permutation.  This script walks through
the objects that decide that: the polytope itself, its maximum volume inscribed
ellipsoid (MVIE), the polar about the MVIE center, and the two certificates.
"""
import numpy as np

from polyfact import (check_identifiable, check_scattered, generate_polar_domain, make_special,
                      mvie_closed_form, mvie_of, mvie_solve, pex, polar)
from polyfact.polytope import Polytope


def section(title):
    print(f"\n== {title} " + "=" * (60 - len(title)))


section("1. A polytope given by feature constraints")
# P_ex: x1, x2 in [-1, 1], x3 in [0, 1], plus two l1-type couplings.  It is
# written as a short feature list and expanded to halfspaces on demand.
p = pex()
print(f"{p.halfspaces.A.shape[0]} halfspaces, {p.vertices.shape[1]} vertices:")
print(np.round(p.vertices, 3))

section("2. Its maximum volume inscribed ellipsoid")
e = mvie_of(p)
print("center g =", np.round(e.g, 4))
print("shape  C =\n", np.round(e.C, 4))
# For the special polytopes there are closed forms; the numeric solver agrees.
ref = mvie_closed_form("b1plus", 3)
num = mvie_solve(make_special("b1plus", 3).halfspaces)
print("simplex-cap MVIE, closed form vs numeric: |dC| =",
      f"{np.linalg.norm(ref.C - num.C):.1e}")

section("3. The polar about the MVIE center")
# Facets of P become vertices of the polar.  Sufficiently scattered samples
# must reach the boundary of the MVIE exactly where these polar vertices point.
print(np.round(polar(p, e.g).vertices, 3))

section("4. Identifiability")
rep = check_identifiable(p)
print(f"P_ex: identifiable={rep.identifiable} "
      f"({rep.automorphism_count} linear symmetries of its vertex set)")
t = np.arange(6) * np.pi / 3
hexagon = Polytope.from_vertices(np.vstack([np.cos(t), np.sin(t)]))
rep = check_identifiable(hexagon)
print(f"hexagon: identifiable={rep.identifiable}; a symmetry that is not a signed permutation:")
print(np.round(rep.witness, 4))

section("5. Sufficient scattering")
# L = 30 points in the polar domain; every facet of their hull gives a sample.
S = generate_polar_domain(p, 30, seed=0)
rep = check_scattered(S, p)
print(f"{S.shape[1]} polar-domain samples: SS.i={rep.ss1_holds}, SS.ii={rep.ss2_holds}")
W = np.random.default_rng(0).standard_normal((3, 30))
inner = e.C @ (0.9 * W / np.linalg.norm(W, axis=0)) + e.g[:, None]
rep = check_scattered(inner, p)
print(f"30 samples strictly inside the MVIE: SS.i={rep.ss1_holds} "
      f"({rep.violating_points.shape[1]} boundary probes escape their hull)")
