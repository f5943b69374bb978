"""Independent reference computations used as test oracles."""
import itertools

import numpy as np


def l1_halfspaces(r, nonneg=False, radius=1.0):
    """H-form of the l1 ball (or its nonnegative part) written out by hand."""
    if nonneg:
        A = np.vstack([np.ones((1, r)), -np.eye(r)])
        b = np.concatenate([[radius], np.zeros(r)])
    else:
        A = np.array(list(itertools.product([-1.0, 1.0], repeat=r)))
        b = np.full(len(A), radius)
    return A, b


def active_set_projection(x, A, b, tol=1e-12):
    """Euclidean projection onto ``{y | A y <= b}`` by enumerating active sets.

    The projection is the projection onto the affine hull of the face that
    contains it, so the nearest feasible candidate over all active sets of
    size <= r is exact.
    """
    x = np.asarray(x, dtype=float)
    r = x.shape[0]
    if np.all(A @ x <= b + tol):
        return x.copy()
    best, best_d = None, np.inf
    for k in range(1, r + 1):
        for T in itertools.combinations(range(len(A)), k):
            AT = A[list(T)]
            if np.linalg.matrix_rank(AT) < k:
                continue
            y = x - AT.T @ np.linalg.solve(AT @ AT.T, AT @ x - b[list(T)])
            if np.all(A @ y <= b + 1e-10):
                d = np.linalg.norm(y - x)
                if d < best_d:
                    best, best_d = y, d
    return best


def grid_nearest(x, inside, lo, hi, step):
    """Nearest point of a regular grid that satisfies ``inside``."""
    axes = [np.arange(l, h + step / 2, step) for l, h in zip(lo, hi)]
    G = np.stack(np.meshgrid(*axes, indexing="ij"), axis=0).reshape(len(lo), -1)
    G = G[:, inside(G)]
    d = np.linalg.norm(G - np.asarray(x)[:, None], axis=0)
    j = int(np.argmin(d))
    return G[:, j], float(d[j])


def brute_force_sir(S_est, S_g):
    """SIR by trying every permutation, straight from the definition."""
    G = S_est @ np.linalg.pinv(S_g)
    r = G.shape[0]
    best = None
    for perm in itertools.permutations(range(r)):
        perm = np.array(perm)
        score = np.sum(np.abs(G[np.arange(r), perm]))
        if best is None or score > best[0]:
            best = (score, perm)
    perm = best[1]
    out = []
    for i in range(r):
        target = G[i, perm[i]] ** 2
        interference = np.sum(G[i] ** 2) - target
        out.append(10 * np.log10(target / max(interference, 1e-30)))
    return np.minimum(np.array(out), 300.0), perm
