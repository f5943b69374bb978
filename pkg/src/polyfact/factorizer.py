"""Polytopic matrix factorization by alternating accelerated projected gradient.

Minimizes::

    ||Y - H S||_F^2 + lam * log det(H^T H + tau I)   s.t.  S[:, j] in P

S takes a momentum-accelerated projected gradient step with step ``1/L``,
``L = step_scale * ||H^T H||_2``; H takes the regularized least-squares
update ``H = Y S^T (S S^T + lam F)^{-1}`` with ``F = (H^T H + tau I)^{-1}``
from the previous iterate.

These opt-in options make recovery far more reliable on ill-conditioned
mixtures (see :func:`recovery_preset`):

``whiten``
    iterate on ``V_r^T`` (the top right singular vectors of Y) instead of Y.
    Every exact factorization of Y maps to one of ``V_r^T`` with the same S,
    and the determinant criterion ranks them identically, but the S-step no
    longer crawls along the weak directions of an ill-conditioned mixing
    matrix.  ``lam`` is then relative to the (unit) singular values.
``init="whitened"``
    start from a whitened linear image of the data shrunk into the MVIE,
    so that ``H0 S0`` already fits Y and S only has to expand.
``lam_start`` / ``lam_decay``
    anneal ``lam_t = max(lam, lam_start * lam_decay**t)``: a large weight
    inflates S quickly, the small final weight removes most of its bias.

``dykstra``
    use Dykstra's corrected sweeps (the exact projection) instead of plain
    alternation when the polytope is a feature spec.

``restarts`` repeats the run from independent starts and keeps the lowest
final Lagrangian, which escapes the rotated local optima that polytopes with
few symmetries (such as the composite example polytope) tend to have.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .polytope import Polytope
from .projection import make_projector

logger = logging.getLogger(__name__)

INIT_CHOICES = ("random", "whitened")


class SolverAborted(RuntimeError):
    """Raised when the iteration produces non-finite values."""


@dataclass
class FactorizationProblem:
    """Data, polytope and hyperparameters of one factorization run.

    The defaults follow the published experiment (``lam=0.01``,
    ``tau=1e-8``, ``step_scale=5``, random initialization).
    """
    Y: np.ndarray
    polytope: Polytope
    rank: Optional[int] = None
    lam: float = 0.01
    tau: float = 1e-8
    step_scale: float = 5.0
    max_iters: int = 10_000
    rel_tol: float = 1e-8
    patience: int = 10
    seed: Optional[int] = None
    H0: Optional[np.ndarray] = None
    S0: Optional[np.ndarray] = None
    init: str = "random"
    whiten: bool = False
    lam_start: Optional[float] = None
    lam_decay: float = 0.999
    restarts: int = 1
    sweeps: int = 5
    dykstra: bool = False
    raw_paper_step: bool = False

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        if self.Y.ndim != 2:
            raise ValueError("Y must be a matrix")
        if self.rank is None:
            self.rank = self.polytope.dim
        if self.rank != self.polytope.dim:
            raise ValueError("rank must equal the polytope dimension")
        M, N = self.Y.shape
        if self.rank > min(M, N):
            raise ValueError(f"rank {self.rank} exceeds min(M, N) = {min(M, N)}")
        if self.lam <= 0 or self.tau <= 0:
            raise ValueError("lam and tau must be positive")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if self.lam_start is not None and self.lam_start <= 0:
            raise ValueError("lam_start must be positive")
        if not 0 < self.lam_decay <= 1:
            raise ValueError("lam_decay must lie in (0, 1]")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES}")
        if not np.all(np.isfinite(self.Y)):
            raise ValueError("Y contains non-finite values")
        if (self.H0 is None) != (self.S0 is None):
            raise ValueError("provide both H0 and S0 or neither")

    def lam_at(self, t: int) -> float:
        """Regularization weight used in iteration ``t``."""
        if self.lam_start is None:
            return self.lam
        return max(self.lam, self.lam_start * self.lam_decay ** t)


@dataclass
class FactorizationResult:
    H: np.ndarray
    S: np.ndarray
    objective_trace: List[float]
    iterations: int
    converged: bool
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)


def recovery_preset() -> dict:
    """Keyword overrides that recover noiseless sufficiently scattered data reliably.

    Whitened iterations and initialization, unit step scale, and ``lam``
    annealed from 0.1 down to 3e-4 (relative to the whitened data).
    """
    return {"whiten": True, "init": "whitened", "step_scale": 1.0,
            "lam": 3e-4, "lam_start": 0.1, "lam_decay": 0.999}


def evaluate_lagrangian(H, S, lam, tau, Y) -> float:
    """``||Y - H S||_F^2 + lam * log det(H^T H + tau I)``."""
    H = np.asarray(H, dtype=float)
    R = np.asarray(Y, dtype=float) - H @ np.asarray(S, dtype=float)
    sign, logdet = np.linalg.slogdet(H.T @ H + tau * np.eye(H.shape[1]))
    if sign <= 0:
        logdet = -np.inf
    return float(np.sum(R * R) + lam * logdet)


def detmax_objective(S) -> float:
    """``det(S S^T)``, the scattering volume measure."""
    S = np.asarray(S, dtype=float)
    return float(max(np.linalg.det(S @ S.T), 0.0))


def spectral_norm_sym(M) -> float:
    """Largest eigenvalue of a small symmetric PSD matrix (the spectral norm)."""
    return float(np.linalg.eigvalsh(M)[-1])


def whiten_data(Y, r: int):
    """Return ``(Z, back)`` with ``Z = V_r^T`` and ``Y ~ back @ Z``.

    ``back = U_r diag(s_r)`` maps factors of ``Z`` back: if ``Z = H' S``
    then ``Y ~ (back @ H') S``.
    """
    U, s, Vt = np.linalg.svd(np.asarray(Y, dtype=float), full_matrices=False)
    if s[r - 1] <= s[0] * 1e-12:
        raise ValueError(f"Y has numerical rank below {r}; cannot whiten")
    return Vt[:r].copy(), U[:, :r] * s[:r]


def whitened_init(Y, polytope: Polytope, rng=None):
    """Shrunk whitened image of the data, centered on the MVIE center.

    The data are reduced to their top-r coordinates ``Z``, whitened, and
    reflected so that their mean points along the MVIE center; the result
    ``S0 = A Z`` is scaled to fit inside the MVIE.  ``S0`` is a linear image
    of the data, so ``H0 = Y pinv(S0)`` fits Y exactly when Y has rank r.
    """
    from .mvie import mvie_of

    e = mvie_of(polytope)
    r = polytope.dim
    Y = np.asarray(Y, dtype=float)
    U, _, _ = np.linalg.svd(Y, full_matrices=False)
    Z = U[:, :r].T @ Y
    zbar = Z.mean(axis=1)
    w, V = np.linalg.eigh(np.cov(Z) + 1e-12 * np.eye(r))
    A = (V / np.sqrt(np.maximum(w, 1e-300))) @ V.T
    if rng is not None:
        Q, R = np.linalg.qr(rng.standard_normal((r, r)))
        A = (Q * np.sign(np.diag(R))) @ A
    m = A @ zbar
    g_norm = np.linalg.norm(e.g)
    if g_norm > 1e-12 and np.linalg.norm(m) > 1e-12:
        d = m / np.linalg.norm(m) - e.g / g_norm
        if np.linalg.norm(d) > 1e-12:
            A = (np.eye(r) - 2 * np.outer(d, d) / (d @ d)) @ A
        A = A * (g_norm / np.linalg.norm(m))
    S0 = A @ Z
    rad = np.max(np.linalg.norm(np.linalg.solve(e.C, S0 - e.g[:, None]), axis=0))
    if rad > 1:
        S0 = S0 / rad
    S0 = make_projector(polytope)(S0)
    return Y @ np.linalg.pinv(S0), S0


def initialize(prob: FactorizationProblem, Y=None, start: int = 0):
    """Starting pair ``(H0, S0)`` for restart ``start`` of ``prob``.

    ``Y`` is the matrix actually iterated on (the whitened data when
    ``prob.whiten`` is set).  Start 0 uses the provided pair if any, the
    unrotated whitened image, or the ``prob.seed`` random draw; later starts
    draw from independent child streams of ``prob.seed``.
    """
    Y = prob.Y if Y is None else Y
    if start == 0 and prob.H0 is not None:
        return np.array(prob.H0, dtype=float), np.array(prob.S0, dtype=float)
    if start == 0:
        rng = np.random.default_rng(prob.seed)
    else:
        rng = np.random.default_rng(np.random.SeedSequence(prob.seed).spawn(start)[-1])
    if prob.init == "whitened":
        return whitened_init(Y, prob.polytope, None if start == 0 else rng)
    M, N = Y.shape
    H = rng.standard_normal((M, prob.rank))
    S = make_projector(prob.polytope, prob.sweeps)(rng.standard_normal((prob.rank, N)))
    return H, S


def _iterate(prob: FactorizationProblem, Y, H, S, project, callback):
    tau, r = prob.tau, prob.rank
    I = np.eye(r)
    X = S.copy()
    F = I.copy()
    q = 1.0
    trace = []
    calm = 0
    converged = False
    t = 0
    for t in range(1, prob.max_iters + 1):
        lam = prob.lam_at(t)
        L = prob.step_scale * spectral_norm_sym(H.T @ H)
        resid = Y - H @ X
        if prob.raw_paper_step:
            S_new = project(X - H.T @ resid)
        else:
            S_new = project(X + (H.T @ resid) / L)
        q_new = (1 + np.sqrt(1 + q * q)) / 2
        X = S_new + ((q - 1) / q_new) * (S_new - S)
        S, q = S_new, q_new

        G = S @ S.T + lam * F
        try:
            H = np.linalg.solve(G, S @ Y.T).T
        except np.linalg.LinAlgError:
            warnings.warn("singular S S^T + lam F; adding a 1e-12 ridge", RuntimeWarning)
            H = np.linalg.solve(G + 1e-12 * I, S @ Y.T).T
        F = np.linalg.inv(H.T @ H + tau * I)

        obj = evaluate_lagrangian(H, S, lam, tau, Y)
        if not np.isfinite(obj):
            raise SolverAborted(f"non-finite objective at iteration {t} "
                                f"(||H||={np.linalg.norm(H):.3g}, L={L:.3g})")
        # calm iterations only count once the weight has stopped moving
        if trace and lam == prob.lam:
            rel = abs(trace[-1] - obj) / max(abs(obj), 1e-12)
            calm = calm + 1 if rel < prob.rel_tol else 0
        trace.append(obj)
        if callback is not None:
            callback(t, H, S)
        if calm >= prob.patience:
            converged = True
            break
    return H, S, trace, t, converged


def factorize(prob: FactorizationProblem,
              callback: Callable[[int, np.ndarray, np.ndarray], None] = None) -> FactorizationResult:
    """Run the alternating Det-Min iteration on ``prob``.

    With ``prob.restarts > 1`` the iteration is repeated from independent
    starting points and the run with the lowest final Lagrangian is kept.

    Parameters
    ----------
    prob : FactorizationProblem
    callback : callable, optional
        Called as ``callback(t, H, S)`` after every iteration of every
        restart.  With ``prob.whiten`` the H passed is the factor of the
        whitened data.

    Returns
    -------
    FactorizationResult
        ``objective_trace`` holds the Lagrangian of the iterated problem
        (the whitened one when ``prob.whiten`` is set) at the weight used
        in that iteration, for the kept restart.

    Raises
    ------
    SolverAborted
        If the objective becomes NaN/inf (in any restart).
    """
    if prob.whiten:
        Y, back = whiten_data(prob.Y, prob.rank)
    else:
        Y, back = prob.Y, None
    project = make_projector(prob.polytope, prob.sweeps, prob.dykstra)
    best = None
    finals = []
    for start in range(prob.restarts):
        if start == 0 and prob.H0 is not None and back is not None:
            # a provided H0 lives in data space; carry it into whitened coordinates
            H, S = np.linalg.pinv(back) @ np.asarray(prob.H0, float), np.array(prob.S0, float)
        else:
            H, S = initialize(prob, Y, start)
        run = _iterate(prob, Y, H, S, project, callback)
        finals.append(run[2][-1])
        if best is None or finals[-1] < best[2][-1]:
            best, best_start = run, start
    H, S, trace, t, converged = best
    logger.debug("factorize: restart %d kept, %d iterations, converged=%s, objective=%.6g",
                 best_start, t, converged, trace[-1])
    extra = {"final_lam": prob.lam_at(t), "whitened": bool(prob.whiten),
             "restart_objectives": finals, "best_restart": best_start}
    if back is not None:
        H = back @ H
    return FactorizationResult(H, S, trace, t, converged, prob.seed, extra)
