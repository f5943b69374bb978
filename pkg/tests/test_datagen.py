import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyfact.datagen import (GroundTruth, InflationParams, add_noise, generate_inflated_mvie,
                              generate_mixing, generate_polar_domain, make_ground_truth,
                              pad_with_interior, snr_db)
from polyfact.factorizer import detmax_objective
from polyfact.geometry import check_scattered
from polyfact.mvie import mvie_closed_form
from polyfact.polytope import PEX_VERTICES, contains, make_special, pex, same_point_set


# --- polar-domain generator --------------------------------------------------

def test_polar_domain_without_random_points_gives_vertices():
    S = generate_polar_domain(pex(), 7, seed=0)
    assert same_point_set(S, PEX_VERTICES, 1e-9)


def _vertex_hits(S):
    d = np.abs(S[:, :, None] - PEX_VERTICES[:, None, :]).max(axis=0)
    return d.min(axis=0) < 1e-6


def test_polar_domain_pex_l30():
    for seed in range(3):
        S = generate_polar_domain(pex(), 30, seed=seed)
        rep = check_scattered(S, pex())
        assert rep.ss1_holds and rep.ss2_holds
        assert np.all(contains(pex(), S, 1e-8))


@pytest.mark.xfail(strict=True, reason="a vertex of P_ex survives whenever no random polar point "
                   "cuts its polar facet, which happens for about half of all seeds")
def test_polar_domain_pex_l30_never_hits_vertices():
    assert not any(_vertex_hits(generate_polar_domain(pex(), 30, seed=s)).any() for s in range(10))


def test_polar_domain_vertex_survival_rate():
    # vertex v survives iff none of the L - 7 uniform points of the 0.9-ball
    # (whitened polar frame) lies beyond the plane <u, C^{-1}(v - g)> = 1
    from polyfact.mvie import mvie_of
    e = mvie_of(pex())
    v = PEX_VERTICES[:, 0]
    t = 1 / np.linalg.norm(np.linalg.solve(e.C, v - e.g)) / 0.9
    cap = (1 - t) ** 2 * (2 + t) / 4  # volume fraction of a 3-ball cap
    expected = (1 - cap) ** 23
    n = 100
    rate = np.mean([_vertex_hits(generate_polar_domain(pex(), 30, seed=s))[0] for s in range(n)])
    assert abs(rate - expected) <= 4 * np.sqrt(expected * (1 - expected) / n)


@pytest.mark.parametrize("kind,r,L", [("binf", 2, 10), ("b1", 3, 20), ("b1plus", 3, 12),
                                      ("binfplus", 3, 20)])
def test_polar_domain_specials_are_scattered(kind, r, L):
    p = make_special(kind, r)
    S = generate_polar_domain(p, L, seed=5)
    assert np.all(contains(p, S, 1e-8))
    rep = check_scattered(S, p)
    assert rep.ss1_holds and rep.ss2_holds


def test_polar_domain_argument_errors():
    with pytest.raises(ValueError):
        generate_polar_domain(pex(), 5, seed=0)  # fewer than the 7 seed points
    with pytest.raises(ValueError):
        generate_polar_domain(make_special("binf", 5), 40, seed=0)


def test_polar_domain_deterministic():
    a = generate_polar_domain(pex(), 30, seed=11)
    b = generate_polar_domain(pex(), 30, seed=11)
    assert np.array_equal(a, b)


def test_padding_keeps_hull():
    S = generate_polar_domain(pex(), 30, seed=2)
    P = pad_with_interior(S, 100, seed=3)
    assert P.shape == (3, 100)
    assert np.array_equal(P[:, :S.shape[1]], S)
    rep = check_scattered(P, pex())
    assert rep.ss1_holds and rep.ss2_holds
    with pytest.raises(ValueError):
        pad_with_interior(S, 2)


# --- inflated-MVIE generator -------------------------------------------------

def test_inflated_rho_one_stays_in_mvie():
    p = make_special("b1plus", 3)
    e = mvie_closed_form("b1plus", 3)
    rng = np.random.default_rng(0)
    W = rng.standard_normal((3, 200)) / np.sqrt(3)
    norms = np.linalg.norm(W, axis=0)
    U = np.where(norms > 1, W / norms, W)
    Z = e.C @ U + e.g[:, None]
    S = generate_inflated_mvie(p, InflationParams(1.0, 200), seed=0)
    assert np.allclose(S, Z)
    assert np.all(e.contains(S, 1e-9))


def test_inflated_binf_no_vertices():
    p = make_special("binf", 2)
    S = generate_inflated_mvie(p, InflationParams(0.85 * np.sqrt(2), 500), seed=1)
    assert np.all(contains(p, S, 1e-12))
    assert np.any(np.isclose(np.abs(S), 1.0).any(axis=0))      # some on the boundary
    assert not np.any(np.all(np.isclose(np.abs(S), 1.0), axis=0))  # none at a corner


def test_inflated_b1_reaches_boundary():
    p = make_special("b1", 3)
    S = generate_inflated_mvie(p, InflationParams(np.sqrt(3), 10_000), seed=2)
    assert np.abs(S).sum(axis=0).max() == pytest.approx(1.0, abs=1e-12)


def test_inflation_monotone_in_rho():
    p = make_special("binf", 3)
    means = []
    for rho in (1.0, 1.5, 2.0, 2.5):
        means.append(np.mean([detmax_objective(
            generate_inflated_mvie(p, InflationParams(rho, 100), seed=s)) for s in range(20)]))
    assert np.all(np.diff(means) >= 0)


def test_inflation_params_validation():
    with pytest.raises(ValueError):
        InflationParams(0.0, 10)
    with pytest.raises(ValueError):
        InflationParams(1.0, 0)


def test_inflated_pex_feasible():
    S = generate_inflated_mvie(pex(), InflationParams(2.0, 300), seed=4)
    assert np.all(contains(pex(), S, 1e-6))


# --- mixing and noise --------------------------------------------------------

@pytest.mark.parametrize("M,r", [(4, 3), (20, 10), (3, 3)])
def test_mixing_full_rank(M, r):
    H = generate_mixing(M, r, seed=0)
    assert H.shape == (M, r)
    assert np.linalg.svd(H, compute_uv=False).min() > 1e-6


def test_mixing_needs_tall():
    with pytest.raises(ValueError):
        generate_mixing(2, 3)


def test_noise_none_and_inf():
    Y = np.arange(12.0).reshape(3, 4)
    assert np.array_equal(add_noise(Y, None), Y)
    assert np.array_equal(add_noise(Y, np.inf), Y)


def test_noise_zero_db():
    Y = np.random.default_rng(0).standard_normal((20, 100))
    N = add_noise(Y, 0.0, seed=1) - Y
    assert abs(np.linalg.norm(N) / np.linalg.norm(Y) - 1) <= 0.1


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 60), st.integers(0, 2**31))
def test_realized_snr_close_to_target(target, seed):
    # with M N = 2000 the realized SNR has a standard deviation of about 0.14 dB
    Y = np.random.default_rng(seed).standard_normal((20, 100))
    assert abs(snr_db(Y, add_noise(Y, target, seed=seed + 1)) - target) <= 0.75


@pytest.mark.parametrize("seed", range(10))
def test_realized_snr_within_half_db(seed):
    Y = np.random.default_rng(seed).standard_normal((4, 100))
    assert abs(snr_db(Y, add_noise(Y, 20.0, seed=1000 + seed)) - 20.0) <= 0.5


# --- ground truth bundles ----------------------------------------------------

def test_ground_truth_invariants_and_round_trip(tmp_path):
    p = pex()
    S = pad_with_interior(generate_polar_domain(p, 30, seed=0), 60, seed=1)
    gt = make_ground_truth(p, S, 4, 30.0, seed=7)
    assert np.array_equal(gt.Y_clean, gt.H_g @ gt.S_g)
    assert np.all(contains(p, gt.S_g, 1e-8))
    gt.save(tmp_path / "gt")
    back = GroundTruth.load(tmp_path / "gt")
    assert np.allclose(back.H_g, gt.H_g) and np.allclose(back.Y_noisy, gt.Y_noisy)
    assert back.seed == 7 and back.snr_db == 30.0
    again = make_ground_truth(p, S, 4, 30.0, seed=7)
    assert np.array_equal(again.Y_noisy, gt.Y_noisy)


def test_ground_truth_warns_on_infeasible_latents():
    with pytest.warns(UserWarning):
        make_ground_truth(make_special("binf", 2), np.array([[2.0, 0, 1], [0, 1, -1]]), 3, seed=0)


def test_ground_truth_rejects_rank_deficient_mixing():
    with pytest.raises(ValueError):
        GroundTruth(np.zeros((3, 2)), np.eye(2), np.zeros((3, 2)), np.zeros((3, 2)), None, 0)
