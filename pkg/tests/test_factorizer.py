import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polyfact.datagen import generate_polar_domain, make_ground_truth, pad_with_interior
from polyfact.factorizer import (FactorizationProblem, SolverAborted, detmax_objective,
                                 evaluate_lagrangian, factorize, initialize, recovery_preset,
                                 spectral_norm_sym, whiten_data, whitened_init)
from polyfact.metrics import sir
from polyfact.polytope import contains, make_special, pex


@pytest.fixture(scope="module")
def binf_truth():
    p = make_special("binf", 3)
    S = pad_with_interior(generate_polar_domain(p, 30, seed=1), 100, seed=2)
    return p, S, make_ground_truth(p, S, 4, None, seed=3)


# --- objective functions -----------------------------------------------------

def test_lagrangian_orthonormal_exact_fit():
    Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((5, 3)))
    S = np.random.default_rng(1).standard_normal((3, 20))
    assert evaluate_lagrangian(Q, S, 0.7, 0.0, Q @ S) == pytest.approx(0.0, abs=1e-10)


def test_lagrangian_all_zero():
    assert evaluate_lagrangian(np.zeros((4, 2)), np.zeros((2, 6)), 0.3, 1.0,
                               np.zeros((4, 6))) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(1e-3, 10), st.floats(1e-8, 1))
def test_lagrangian_matches_eigenvalue_formula(seed, lam, tau):
    rng = np.random.default_rng(seed)
    H, S, Y = (rng.standard_normal((3, 3)) for _ in range(3))
    resid = sum(float(v) ** 2 for v in (Y - H @ S).ravel())
    logdet = float(np.sum(np.log(np.linalg.eigvalsh(H.T @ H + tau * np.eye(3)).astype(np.longdouble))))
    assert evaluate_lagrangian(H, S, lam, tau, Y) == pytest.approx(resid + lam * logdet, rel=1e-10)


def test_detmax_examples():
    assert detmax_objective(np.eye(3)) == pytest.approx(1.0)
    assert detmax_objective(np.hstack([np.eye(3), np.eye(3)])) == pytest.approx(8.0)
    S = np.random.default_rng(0).standard_normal((3, 10))
    S[1] = 0
    assert detmax_objective(S) == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_detmax_and_detmin_rank_identically(seed):
    # on the exact-fit set {H S = Y}, det(S S^T) up <=> det(H^T H) down
    rng = np.random.default_rng(seed)
    H0, S0 = rng.standard_normal((5, 3)), rng.standard_normal((3, 30))
    pairs = []
    for _ in range(6):
        A = rng.standard_normal((3, 3))
        H, S = H0 @ np.linalg.inv(A), A @ S0
        assert np.allclose(H @ S, H0 @ S0, atol=1e-6 * np.abs(H0 @ S0).max() * np.linalg.cond(A))
        pairs.append((detmax_objective(S), np.linalg.det(H.T @ H)))
    by_max = np.argsort([-p[0] for p in pairs])
    by_min = np.argsort([p[1] for p in pairs])
    assert np.array_equal(by_max, by_min)


def test_spectral_norm_matches_svd():
    H = np.random.default_rng(0).standard_normal((6, 3))
    assert spectral_norm_sym(H.T @ H) == pytest.approx(np.linalg.norm(H, 2) ** 2)


# --- problem validation ------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"lam": 0.0}, {"tau": -1.0}, {"step_scale": 0.0}, {"restarts": 0}, {"init": "svd"},
    {"lam_start": -1.0}, {"lam_decay": 1.5}, {"rank": 2},
])
def test_problem_validation(kwargs):
    with pytest.raises(ValueError):
        FactorizationProblem(np.ones((4, 10)), make_special("binf", 3), **kwargs)


def test_problem_rejects_bad_data():
    p = make_special("binf", 3)
    with pytest.raises(ValueError):
        FactorizationProblem(np.ones((2, 10)), p)  # rank 3 > M
    Y = np.ones((4, 10))
    Y[0, 0] = np.nan
    with pytest.raises(ValueError):
        FactorizationProblem(Y, p)
    with pytest.raises(ValueError):
        FactorizationProblem(np.ones((4, 10)), p, H0=np.ones((4, 3)))


def test_lam_schedule():
    prob = FactorizationProblem(np.ones((4, 10)), make_special("binf", 3), lam=1e-3,
                                lam_start=0.1, lam_decay=0.5)
    assert prob.lam_at(1) == pytest.approx(0.05)
    assert prob.lam_at(100) == pytest.approx(1e-3)
    assert FactorizationProblem(np.ones((4, 10)), make_special("binf", 3)).lam_at(7) == 0.01


# --- initialization ----------------------------------------------------------

def test_random_init_is_feasible_and_seeded(binf_truth):
    p, _, gt = binf_truth
    prob = FactorizationProblem(gt.Y_clean, p, seed=5)
    H1, S1 = initialize(prob)
    H2, S2 = initialize(prob)
    assert np.array_equal(H1, H2) and np.array_equal(S1, S2)
    assert np.all(contains(p, S1, 1e-12))
    H3, _ = initialize(prob, start=1)
    assert not np.array_equal(H1, H3)


def test_whitened_init_fits_data(binf_truth):
    p, _, gt = binf_truth
    Z, back = whiten_data(gt.Y_clean, 3)
    assert np.allclose(back @ Z, gt.Y_clean)
    assert np.allclose(Z @ Z.T, np.eye(3))
    H0, S0 = whitened_init(Z, p)
    assert np.all(contains(p, S0, 1e-9))
    assert np.linalg.norm(Z - H0 @ S0) <= 1e-8 * np.linalg.norm(Z)


# --- factorization runs ------------------------------------------------------

def test_identity_mixing_recovers_latents(binf_truth):
    p, S, _ = binf_truth
    kw = recovery_preset()
    kw["lam"] = 1e-4
    res = factorize(FactorizationProblem(S, p, seed=0, **kw))
    score = sir(res.S, S)
    A = np.diag(score.signs) @ np.eye(3)[score.permutation]
    assert res.converged
    assert np.abs(res.S - A @ S).max() <= 1e-3


def test_one_dimensional_scale_is_fixed_by_the_boundary():
    p = make_special("binfplus", 1)
    s = np.random.default_rng(0).uniform(0, 1, (1, 50))
    s[0, :2] = [0.0, 1.0]
    res = factorize(FactorizationProblem(0.7 * s, p, seed=0))
    assert res.S.max() == pytest.approx(1.0, abs=1e-6)
    assert res.H[0, 0] == pytest.approx(0.7, abs=0.02)


def test_pex_example_with_recovery_settings():
    p = pex()
    S = generate_polar_domain(p, 30, seed=0)
    gt = make_ground_truth(p, S, 4, None, seed=0)
    res = factorize(FactorizationProblem(gt.Y_clean, p, seed=0, restarts=4, **recovery_preset()))
    assert sir(res.S, S).mean_db >= 30
    assert len(res.extra["restart_objectives"]) == 4
    assert res.objective_trace[-1] == min(res.extra["restart_objectives"])


def test_pex_example_with_published_defaults_falls_short():
    # documents the behaviour of the literal settings (see the decision ledger)
    p = pex()
    S = generate_polar_domain(p, 30, seed=0)
    gt = make_ground_truth(p, S, 4, None, seed=0)
    res = factorize(FactorizationProblem(gt.Y_clean, p, seed=0, max_iters=2000))
    assert not res.converged
    assert sir(res.S, S).mean_db < 30


def test_every_iterate_is_feasible_and_trend_is_monotone(binf_truth):
    p, _, gt = binf_truth
    worst = []

    def check(t, H, S):
        worst.append(np.max(np.abs(S)))

    res = factorize(FactorizationProblem(gt.Y_clean, p, seed=1, max_iters=1500), callback=check)
    assert max(worst) <= 1 + 1e-6
    assert np.all(np.isfinite(res.objective_trace))
    steps = np.diff(res.objective_trace)
    assert np.mean(steps <= 1e-12 * np.abs(res.objective_trace[1:])) >= 0.95


@pytest.mark.parametrize("kind", ["b1", "b1plus", "binfplus"])
def test_result_is_feasible(kind):
    p = make_special(kind, 3)
    S = pad_with_interior(generate_polar_domain(p, 20, seed=4), 60, seed=5)
    gt = make_ground_truth(p, S, 5, 30.0, seed=6)
    res = factorize(FactorizationProblem(gt.Y_noisy, p, seed=2, max_iters=300))
    assert np.all(contains(p, res.S, 1e-6))
    assert res.H.shape == (5, 3) and res.iterations == len(res.objective_trace)


def test_seeded_runs_are_reproducible(binf_truth):
    p, _, gt = binf_truth
    a = factorize(FactorizationProblem(gt.Y_noisy, p, seed=9, max_iters=200))
    b = factorize(FactorizationProblem(gt.Y_noisy, p, seed=9, max_iters=200))
    assert np.array_equal(a.S, b.S) and a.objective_trace == b.objective_trace


def test_provided_start_is_used(binf_truth):
    p, S, gt = binf_truth
    # at the truth the data term has zero gradient, so the first S-step keeps S
    for whiten in (False, True):
        res = factorize(FactorizationProblem(gt.Y_clean, p, H0=gt.H_g, S0=S, max_iters=1,
                                             whiten=whiten))
        assert np.allclose(res.S, S, atol=1e-12)
        assert np.allclose(res.H @ res.S, gt.Y_clean, atol=1e-2)


def test_literal_step_variant_runs(binf_truth):
    p, _, gt = binf_truth
    res = factorize(FactorizationProblem(gt.Y_clean, p, seed=0, max_iters=50, raw_paper_step=True))
    assert np.all(contains(p, res.S, 1e-9))


def test_dykstra_projection_option():
    p = pex()
    S = generate_polar_domain(p, 30, seed=1)
    gt = make_ground_truth(p, S, 4, None, seed=1)
    res = factorize(FactorizationProblem(gt.Y_clean, p, seed=1, max_iters=100, dykstra=True))
    assert np.all(contains(p, res.S, 1e-6))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_nonfinite_objective_aborts(binf_truth):
    p, _, gt = binf_truth
    with pytest.raises(SolverAborted):
        factorize(FactorizationProblem(gt.Y_clean * 1e200, p, seed=0, max_iters=20))
