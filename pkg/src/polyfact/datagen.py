"""Synthetic ground truth: scattered latent samples, mixing matrices, noise."""
from __future__ import annotations

import json
import os
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mvie import Ellipsoid, mvie_of
from .polytope import PEX_POLAR_VERTICES, Polytope, extreme_points, polar, vertices_to_halfspaces
from .projection import make_projector


@dataclass(frozen=True)
class InflationParams:
    rho: float
    N: int

    def __post_init__(self):
        if self.rho <= 0:
            raise ValueError("inflation constant must be positive")
        if self.N < 1:
            raise ValueError("need at least one sample")


def _uniform_ball(rng, r, n, radius):
    W = rng.standard_normal((r, n))
    W /= np.linalg.norm(W, axis=0)
    return W * radius * rng.uniform(size=n) ** (1.0 / r)


def polar_seed_points(p: Polytope, e: Ellipsoid) -> np.ndarray:
    """ext of the polar of ``p`` about the MVIE center (the fixed part of K)."""
    if p.name == "pex":
        return PEX_POLAR_VERTICES.copy()
    return polar(p, e.g).vertices.copy()


def generate_polar_domain(p: Polytope, L: int, seed=None, *, radius: float = 0.9,
                          ellipsoid: Ellipsoid = None) -> np.ndarray:
    """Sufficiently scattered samples built in the polar domain.

    The polar set conv(K) is seeded with the vertices of the polar of ``p``
    (which touch the polar MVIE) plus ``L - f0`` random points strictly inside
    the polar MVIE.  The facets ``(a_i, b_i)`` of conv(K) then give the
    samples ``a_i / b_i + g``, which are the vertices of conv(S).

    Returns
    -------
    ndarray of shape ``(r, f')``; ``f'`` (the number of facets of conv(K)) is
    random.
    """
    if p.dim > 4:
        raise ValueError("polar-domain generation needs facet enumeration; r <= 4 only")
    e = ellipsoid if ellipsoid is not None else mvie_of(p)
    K0 = polar_seed_points(p, e)
    f0 = K0.shape[1]
    if L < f0:
        raise ValueError(f"L must be at least the number of facets of the polytope ({f0})")
    rng = np.random.default_rng(seed)
    if L > f0:
        U = _uniform_ball(rng, p.dim, L - f0, radius)
        K = np.hstack([K0, np.linalg.solve(e.C, U)])
    else:
        K = K0
    Vk = extreme_points(K)
    h = vertices_to_halfspaces(Vk)
    if np.any(h.b <= 0):
        raise RuntimeError("polar set does not contain the origin in its interior")
    return (h.A / h.b[:, None]).T + e.g[:, None]


def generate_inflated_mvie(p: Polytope, params: InflationParams, seed=None, *,
                           ellipsoid: Ellipsoid = None, sweeps: int = 5) -> np.ndarray:
    """Project samples from the rho-inflated MVIE onto ``p``.

    ``w ~ N(0, rho**2/r I)``, saturated to norm ``rho``, mapped through the
    MVIE ``z = C u + g`` and projected onto the polytope.
    """
    e = ellipsoid if ellipsoid is not None else mvie_of(p)
    r = p.dim
    rng = np.random.default_rng(seed)
    W = rng.standard_normal((r, params.N)) * (params.rho / np.sqrt(r))
    norms = np.linalg.norm(W, axis=0)
    over = norms > params.rho
    U = W.copy()
    U[:, over] *= params.rho / norms[over]
    Z = e.C @ U + e.g[:, None]
    return make_projector(p, sweeps)(Z)


def pad_with_interior(S, N: int, seed=None) -> np.ndarray:
    """Append random convex combinations of ``r + 1`` columns until ``N`` columns.

    The convex hull (and so the scattering certificate) is unchanged.
    """
    S = np.asarray(S, dtype=float)
    r, n = S.shape
    if N < n:
        raise ValueError(f"cannot pad {n} columns down to {N}")
    rng = np.random.default_rng(seed)
    extra = np.empty((r, N - n))
    k = min(n, r + 1)
    for j in range(N - n):
        idx = rng.choice(n, size=k, replace=False)
        extra[:, j] = S[:, idx] @ rng.dirichlet(np.ones(k))
    return np.hstack([S, extra])


def generate_mixing(M: int, r: int, seed=None) -> np.ndarray:
    """i.i.d. standard normal ``M x r`` matrix with full column rank."""
    if M < r:
        raise ValueError("need M >= r")
    rng = np.random.default_rng(seed)
    while True:
        H = rng.standard_normal((M, r))
        if np.linalg.svd(H, compute_uv=False).min() >= 1e-6:
            return H


def add_noise(Y_clean, snr_db: Optional[float], seed=None) -> np.ndarray:
    """Add white Gaussian noise at ``snr_db`` (per-entry average power).

    ``None`` or ``inf`` returns an unchanged copy.
    """
    Y_clean = np.asarray(Y_clean, dtype=float)
    if snr_db is None or np.isinf(snr_db):
        return Y_clean.copy()
    sigma2 = np.mean(Y_clean ** 2) / 10 ** (snr_db / 10)
    rng = np.random.default_rng(seed)
    return Y_clean + np.sqrt(sigma2) * rng.standard_normal(Y_clean.shape)


def snr_db(Y_clean, Y_noisy) -> float:
    noise = np.asarray(Y_noisy) - np.asarray(Y_clean)
    return float(10 * np.log10(np.sum(np.square(Y_clean)) / np.sum(noise ** 2)))


@dataclass
class GroundTruth:
    H_g: np.ndarray
    S_g: np.ndarray
    Y_clean: np.ndarray
    Y_noisy: np.ndarray
    snr_db: Optional[float]
    seed: Optional[int]
    polytope_spec: Optional[dict] = None

    def __post_init__(self):
        if self.H_g.shape[1] != self.S_g.shape[0]:
            raise ValueError("H_g and S_g disagree on the rank")
        if np.linalg.svd(self.H_g, compute_uv=False).min() <= 1e-8:
            raise ValueError("H_g must have full column rank")

    def save(self, directory):
        from .io import write_matrix
        os.makedirs(directory, exist_ok=True)
        write_matrix(os.path.join(directory, "Hg.csv"), self.H_g)
        write_matrix(os.path.join(directory, "Sg.csv"), self.S_g)
        write_matrix(os.path.join(directory, "Y.csv"), self.Y_noisy)
        meta = {"seed": self.seed,
                "snr_db": None if self.snr_db is None or np.isinf(self.snr_db) else self.snr_db,
                "polytope": self.polytope_spec}
        with open(os.path.join(directory, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2)

    @classmethod
    def load(cls, directory) -> "GroundTruth":
        from .io import read_matrix
        H = read_matrix(os.path.join(directory, "Hg.csv"))
        S = read_matrix(os.path.join(directory, "Sg.csv"))
        Y = read_matrix(os.path.join(directory, "Y.csv"))
        with open(os.path.join(directory, "meta.json")) as fh:
            meta = json.load(fh)
        return cls(H, S, H @ S, Y, meta.get("snr_db"), meta.get("seed"), meta.get("polytope"))


def make_ground_truth(p: Polytope, S_g, M: int, snr: Optional[float] = None,
                      seed=None, polytope_spec: dict = None) -> GroundTruth:
    """Mix ``S_g`` with a random ``M x r`` matrix and add noise.

    Mixing and noise use independent child streams of ``seed``.
    """
    S_g = np.asarray(S_g, dtype=float)
    from .polytope import contains
    if not np.all(contains(p, S_g, 1e-8)):
        warnings.warn("some latent columns lie outside the polytope", stacklevel=2)
    ss = np.random.SeedSequence(seed)
    mix_seed, noise_seed = ss.spawn(2)
    H = generate_mixing(M, p.dim, np.random.default_rng(mix_seed))
    Y = H @ S_g
    return GroundTruth(H, S_g, Y, add_noise(Y, snr, np.random.default_rng(noise_seed)),
                       snr, seed, polytope_spec)
