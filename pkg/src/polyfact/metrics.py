"""Recovery scores that are blind to the permutation/sign ambiguity."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

SIR_CAP_DB = 300.0


@dataclass
class SirScore:
    per_source_db: np.ndarray
    mean_db: float
    permutation: np.ndarray
    signs: np.ndarray


def _sir_rows(G, perm):
    r = G.shape[0]
    rows = np.arange(r)
    target = G[rows, perm] ** 2
    interference = np.maximum(np.sum(G ** 2, axis=1) - target, 0.0)
    # the floor is relative to the target so that the cap is scale free
    floor = target * 10 ** (-SIR_CAP_DB / 10)
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10 * np.log10(target / np.maximum(interference, floor))
    db = np.where(interference <= floor, SIR_CAP_DB, db)
    return np.minimum(db, SIR_CAP_DB)


def sir(S_est, S_g) -> SirScore:
    """Signal-to-interference ratio of ``S_est`` against the true latents ``S_g``.

    The global transform ``G = S_est @ pinv(S_g)`` is matched to a signed
    permutation by maximum-|entry| assignment; row ``i`` of ``S_est`` then
    scores ``10 log10(G[i, pi(i)]**2 / sum_{j != pi(i)} G[i, j]**2)``.
    Values are capped at 300 dB.
    """
    S_est = np.asarray(S_est, dtype=float)
    S_g = np.asarray(S_g, dtype=float)
    if S_est.shape != S_g.shape:
        raise ValueError("S_est and S_g must have the same shape")
    r = S_g.shape[0]
    if np.linalg.matrix_rank(S_g) < r:
        raise ValueError("S_g is rank deficient")
    G = S_est @ np.linalg.pinv(S_g)
    rows, perm = linear_sum_assignment(-np.abs(G))
    per = _sir_rows(G, perm)
    signs = np.sign(G[rows, perm])
    signs[signs == 0] = 1.0
    return SirScore(per, float(per.mean()), perm, signs)


@dataclass
class FactorMatch:
    permutation: np.ndarray
    scales: np.ndarray
    signs: np.ndarray
    residual: float


def match_factors(H_est, H_g) -> FactorMatch:
    """Align the columns of ``H_est`` with those of ``H_g``.

    Column ``i`` of ``H_est`` is paired with column ``permutation[i]`` of
    ``H_g`` so that the summed absolute cosine is maximal.  ``scales`` are the
    least-squares factors with ``H_est[:, i] ~ scales[i] * H_g[:, permutation[i]]``
    and ``residual`` is the relative Frobenius misfit after alignment.
    """
    H_est = np.asarray(H_est, dtype=float)
    H_g = np.asarray(H_g, dtype=float)
    if H_est.shape != H_g.shape:
        raise ValueError("H_est and H_g must have the same shape")
    r = H_g.shape[1]
    if np.linalg.matrix_rank(H_g) < r or np.linalg.matrix_rank(H_est) < r:
        raise ValueError("factor matrices must have full column rank")
    ne = H_est / np.linalg.norm(H_est, axis=0)
    ng = H_g / np.linalg.norm(H_g, axis=0)
    _, perm = linear_sum_assignment(-np.abs(ne.T @ ng))
    ref = H_g[:, perm]
    scales = np.sum(H_est * ref, axis=0) / np.sum(ref * ref, axis=0)
    residual = np.linalg.norm(H_est - ref * scales) / np.linalg.norm(H_est)
    return FactorMatch(perm, scales, np.sign(scales), float(residual))
