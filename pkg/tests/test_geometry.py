import os

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyfact.datagen import generate_polar_domain
from polyfact.geometry import (check_identifiable, check_scattered, is_signed_permutation,
                               vertex_automorphisms)
from polyfact.io import load_polytope
from polyfact.mvie import mvie_closed_form
from polyfact.polytope import PEX_VERTICES, Polytope, make_special, pex

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def _random_signed_permutation(rng, r):
    return np.diag(rng.choice([-1.0, 1.0], r)) @ np.eye(r)[rng.permutation(r)]


# --- identifiability ---------------------------------------------------------

def test_binf2_identifiable_with_hyperoctahedral_group():
    rep = check_identifiable(make_special("binf", 2))
    assert rep.identifiable and rep.witness is None
    assert rep.automorphism_count == 8


@pytest.mark.parametrize("kind", ["binf", "b1", "binfplus", "b1plus"])
@pytest.mark.parametrize("r", [2, 3])
def test_specials_identifiable(kind, r):
    assert check_identifiable(make_special(kind, r)).identifiable


def test_pex_identifiable():
    assert check_identifiable(Polytope.from_vertices(PEX_VERTICES)).identifiable
    assert check_identifiable(pex()).identifiable


def test_hexagon_not_identifiable():
    p = load_polytope(os.path.join(FIXTURES, "hexagon.json"))
    rep = check_identifiable(p)
    assert not rep.identifiable
    A = rep.witness
    assert not is_signed_permutation(A)
    V = p.vertices
    AV = A @ V
    # the witness permutes the vertex set
    d = np.abs(AV[:, :, None] - V[:, None, :]).max(axis=0)
    assert np.all(d.min(axis=1) <= 1e-7) and np.all(d.min(axis=0) <= 1e-7)
    rot60 = np.array([[0.5, -np.sqrt(3) / 2], [np.sqrt(3) / 2, 0.5]])
    assert any(np.allclose(B, rot60, atol=1e-7) for B in rep.automorphisms)
    assert rep.automorphism_count == 12  # dihedral group of order 12


def test_signed_permutation_predicate():
    assert is_signed_permutation(np.array([[0, -1], [1, 0.0]]))
    assert not is_signed_permutation(np.array([[0, -2], [1, 0.0]]))
    assert not is_signed_permutation(np.array([[1, 1], [0, 1.0]]))


def test_identifiability_limits():
    with pytest.raises(ValueError):
        check_identifiable(make_special("binf", 5))  # 32 vertices


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(["binf", "b1", "b1plus"]))
def test_identifiability_invariant_under_relabeling(seed, kind):
    rng = np.random.default_rng(seed)
    V = make_special(kind, 3).vertices
    D = _random_signed_permutation(rng, 3)
    moved = Polytope.from_vertices((D @ V)[:, rng.permutation(V.shape[1])])
    assert check_identifiable(moved).identifiable


def test_automorphisms_of_square_count():
    assert len(vertex_automorphisms(make_special("binf", 2).vertices)) == 8


# --- sufficient scattering ---------------------------------------------------

def test_b1plus_vertices_are_scattered():
    p = make_special("b1plus", 2)
    rep = check_scattered(p.vertices, p)
    assert rep.inside_polytope and rep.ss1_holds and rep.ss2_holds


@pytest.mark.parametrize("kind", ["binf", "b1", "binfplus", "b1plus"])
def test_special_vertices_are_scattered(kind):
    p = make_special(kind, 3)
    rep = check_scattered(p.vertices, p)
    assert rep.ss1_holds and rep.ss2_holds


def test_pex_vertices_are_scattered():
    rep = check_scattered(PEX_VERTICES, pex())
    assert rep.ss1_holds and rep.ss2_holds


def test_interior_samples_fail():
    p = make_special("binf", 3)
    e = mvie_closed_form("binf", 3)
    rng = np.random.default_rng(0)
    W = rng.standard_normal((3, 50))
    S = e.C @ (0.95 * W / np.linalg.norm(W, axis=0)) + e.g[:, None]
    rep = check_scattered(S, p)
    assert rep.inside_polytope and not rep.ss1_holds
    assert rep.violating_points.shape[1] > 0


def test_outside_points_fail_membership():
    p = make_special("binf", 2)
    S = np.hstack([p.vertices, [[1.5], [0.0]]])
    rep = check_scattered(S, p)
    assert not rep.inside_polytope and not rep.ss1_holds


def test_scattered_but_not_tangent_only_at_polar_vertices():
    # the disk-circumscribing octagon contains the MVIE and touches it along
    # extra facets, so SS.i holds but SS.ii does not
    p = make_special("binf", 2)
    t = np.pi / 8 + np.arange(8) * np.pi / 4
    S = np.vstack([np.cos(t), np.sin(t)]) / np.cos(np.pi / 8)
    rep = check_scattered(S, p)
    assert rep.inside_polytope and rep.ss1_holds and not rep.ss2_holds


def test_generated_pex_samples_are_scattered():
    S = generate_polar_domain(pex(), 30, seed=0)
    rep = check_scattered(S, pex())
    assert rep.ss1_holds and rep.ss2_holds


def test_generated_binf2_samples_are_scattered():
    p = make_special("binf", 2)
    S = generate_polar_domain(p, 10, seed=1)
    rep = check_scattered(S, p)
    assert rep.inside_polytope and rep.ss1_holds and rep.ss2_holds


def test_scatter_limits():
    p = make_special("binf", 5)
    with pytest.raises(ValueError):
        check_scattered(p.vertices, p)
