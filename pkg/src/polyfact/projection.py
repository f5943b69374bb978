"""Euclidean projections onto the supported polytopes.

All operators act on a single point ``(r,)`` or column-wise on an ``(r, N)``
array, so a whole latent matrix can be projected in one call.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polytope import (Box, FeatureSpec, L1Ball, Polytope, SimplexCap, Special,
                       chebyshev_center, feature_spec_to_halfspaces)

CLOSED = "closed"
DUCHI_L1 = "duchi_l1"
CYCLIC = "cyclic"
DYKSTRA = "dykstra"


def project_binf(x, lo=-1.0, hi=1.0):
    """Clip every coordinate to ``[lo, hi]``."""
    if not lo < hi:
        raise ValueError("need lo < hi")
    return np.clip(np.asarray(x, dtype=float), lo, hi)


def _simplex_columns(V, radius):
    """Project each column of V onto {y >= 0, sum(y) = radius} (sort-based)."""
    n = V.shape[0]
    u = -np.sort(-V, axis=0)
    css = np.cumsum(u, axis=0) - radius
    k = np.arange(1, n + 1)[:, None]
    cond = u - css / k > 0
    # last index where cond holds
    rho = n - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[rho, np.arange(V.shape[1])] / (rho + 1)
    return np.maximum(V - theta, 0.0)


def project_l1(x, radius=1.0, nonneg=False):
    """Project onto ``{y : ||y||_1 <= radius}`` (and ``y >= 0`` if ``nonneg``).

    Columns that are already feasible are returned unchanged.

    Parameters
    ----------
    x : array of shape (n,) or (n, N)
    radius : float
        Radius of the l1 ball, must be positive.
    nonneg : bool
        Intersect the ball with the nonnegative orthant.

    Returns
    -------
    ndarray of the same shape as ``x``.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    x = np.asarray(x, dtype=float)
    X = x.reshape(x.shape[0], -1).copy()
    if nonneg:
        Y = np.maximum(X, 0.0)
        need = Y.sum(axis=0) > radius
        if np.any(need):
            Y[:, need] = _simplex_columns(X[:, need], radius)
    else:
        Y = X
        need = np.abs(X).sum(axis=0) > radius
        if np.any(need):
            Y[:, need] = np.sign(X[:, need]) * _simplex_columns(np.abs(X[:, need]), radius)
    return Y.reshape(x.shape)


@lru_cache(maxsize=64)
def _spec_geometry(spec: FeatureSpec):
    h = feature_spec_to_halfspaces(spec)
    center, _ = chebyshev_center(h)
    return h, center


def _clamp_into(X, A, b, center):
    """Pull infeasible columns toward ``center`` until they meet the boundary."""
    viol = np.max(A @ X - b[:, None], axis=0)
    bad = viol > 0
    if not np.any(bad):
        return X
    D = X[:, bad] - center[:, None]
    AD = A @ D
    room = (b - A @ center)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(AD > 0, room / AD, np.inf)
    t = np.clip(ratio.min(axis=0), 0.0, 1.0)
    X = X.copy()
    X[:, bad] = center[:, None] + t * D
    return X


def _constraint_step(Z, c):
    """Project the columns of Z onto one constraint, in place."""
    if isinstance(c, Box):
        np.clip(Z[c.index], c.lo, c.hi, out=Z[c.index])
    elif isinstance(c, L1Ball):
        J = list(c.indices)
        Z[J] = project_l1(Z[J], c.radius)
    elif isinstance(c, SimplexCap):
        J = list(c.indices)
        excess = Z[J].sum(axis=0) - c.radius
        Z[J] -= np.maximum(excess, 0.0) / len(J)


def project_featurespec(x, spec: FeatureSpec, sweeps: int = 5, clamp: bool = True,
                        dykstra: bool = False):
    """Cyclic projection onto a feature-spec polytope.

    Each sweep applies the constraint-wise projections in spec order.  Plain
    alternation is only feasible in the limit, so a final pass moves any
    still-infeasible column along the segment to an interior point until it is
    feasible.

    Plain alternation lands on *a* feasible point, not necessarily the
    nearest one.  ``dykstra=True`` adds Dykstra's correction terms, which make
    the sweeps converge to the exact Euclidean projection (at the price of
    needing more sweeps).
    """
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    x = np.asarray(x, dtype=float)
    X = x.reshape(spec.dim, -1).copy()
    h, center = _spec_geometry(spec)
    # feasible columns are fixed points of every step, so only the others move
    active = np.flatnonzero(np.any(h.A @ X > h.b[:, None] + 1e-12, axis=0))
    if dykstra and active.size:
        Z = X[:, active]
        incr = [np.zeros_like(Z) for _ in spec.constraints]
        for _ in range(sweeps):
            for c, p in zip(spec.constraints, incr):
                W = Z + p
                Z = W.copy()
                _constraint_step(Z, c)
                p[...] = W - Z
        X[:, active] = Z
        active = active[np.any(h.A @ Z > h.b[:, None] + 1e-12, axis=0)]
    else:
        for _ in range(sweeps):
            if active.size == 0:
                break
            Z = X[:, active]
            for c in spec.constraints:
                _constraint_step(Z, c)
            X[:, active] = Z
            active = active[np.any(h.A @ Z > h.b[:, None] + 1e-12, axis=0)]
    if clamp and active.size:
        X = _clamp_into(X, h.A, h.b, center)
        assert np.all(h.A @ X <= h.b[:, None] + 1e-6), "feasibility clamp failed"
    return X.reshape(x.shape)


@dataclass(frozen=True)
class Projector:
    """Callable projection onto ``target`` using the method that fits it."""

    target: Polytope
    method: str
    sweeps: int = 5

    def __post_init__(self):
        kind = self.target.special
        allowed = {
            CLOSED: kind in (Special.BINF, Special.BINF_PLUS),
            DUCHI_L1: kind in (Special.B1, Special.B1_PLUS),
            CYCLIC: self.target.featurespec is not None,
            DYKSTRA: self.target.featurespec is not None,
        }
        if not allowed.get(self.method, False):
            raise ValueError(f"method {self.method!r} does not apply to {self.target!r}")

    def __call__(self, x):
        kind = self.target.special
        if kind is Special.BINF:
            return project_binf(x, -1.0, 1.0)
        if kind is Special.BINF_PLUS:
            return project_binf(x, 0.0, 1.0)
        if kind is Special.B1:
            return project_l1(x, 1.0)
        if kind is Special.B1_PLUS:
            return project_l1(x, 1.0, nonneg=True)
        return project_featurespec(x, self.target.featurespec, self.sweeps,
                                   dykstra=self.method == DYKSTRA)


def make_projector(p: Polytope, sweeps: int = 5, dykstra: bool = False) -> Projector:
    """Projector for ``p``: clipping, sort-based l1, or sweeps over a feature spec."""
    if p.special in (Special.BINF, Special.BINF_PLUS):
        return Projector(p, CLOSED)
    if p.special in (Special.B1, Special.B1_PLUS):
        return Projector(p, DUCHI_L1)
    if p.featurespec is not None:
        return Projector(p, DYKSTRA if dykstra else CYCLIC, sweeps)
    raise ValueError(f"no projector for {p!r}: only the special polytopes and "
                     "feature specs are supported")
