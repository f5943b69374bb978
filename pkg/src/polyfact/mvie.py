"""Maximum-volume inscribed ellipsoids.

An ellipsoid is stored as the pair ``(C, g)`` describing
``{C u + g : ||u||_2 <= 1}``.  The MVIE of ``{x | A x <= b}`` solves::

    minimize    -log det C
    subject to  ||C a_i||_2 + a_i^T g <= b_i   for every facet i

which :func:`mvie_solve` handles with a log-barrier Newton method over the
upper triangle of a symmetric ``C`` and the center ``g``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .polytope import HalfspaceForm, Polytope, Special, chebyshev_center, check_bounded


@dataclass(frozen=True)
class Ellipsoid:
    """Image of the unit ball under ``u -> C u + g``."""

    C: np.ndarray
    g: np.ndarray

    def __post_init__(self):
        C = np.array(self.C, dtype=float)
        g = np.array(self.g, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1] or g.shape != (C.shape[0],):
            raise ValueError("C must be square and g a matching vector")
        if np.max(np.abs(C - C.T)) > 1e-10 * max(1.0, np.max(np.abs(C))):
            raise ValueError("C must be symmetric")
        if np.min(np.linalg.eigvalsh(C)) <= 0:
            raise ValueError("C must be positive definite")
        C.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.C.shape[0]

    def logdet(self) -> float:
        return float(np.linalg.slogdet(self.C)[1])

    def contains(self, x, tol: float = 0.0):
        X = np.asarray(x, dtype=float).reshape(self.dim, -1)
        U = np.linalg.solve(self.C, X - self.g[:, None])
        ok = np.linalg.norm(U, axis=0) <= 1 + tol
        return bool(ok[0]) if np.ndim(x) == 1 else ok

    def slack(self, h: HalfspaceForm) -> np.ndarray:
        """``b_i - ||C a_i|| - a_i^T g`` per facet (>= 0 means inscribed)."""
        return h.b - np.linalg.norm(h.A @ self.C, axis=1) - h.A @ self.g


def mvie_closed_form(kind, r: int) -> Ellipsoid:
    """MVIE of a special polytope in dimension ``r``."""
    kind = Special.parse(kind)
    I = np.eye(r)
    if kind is Special.BINF:
        return Ellipsoid(I, np.zeros(r))
    if kind is Special.B1:
        return Ellipsoid(I / np.sqrt(r), np.zeros(r))
    if kind is Special.BINF_PLUS:
        return Ellipsoid(0.5 * I, 0.5 * np.ones(r))
    one = np.ones((r, r))
    C = (I / np.sqrt(r + 1) - (np.sqrt(r + 1) - 1) / (r * r + r) * one) / np.sqrt(r)
    return Ellipsoid(C, np.ones(r) / (r + 1))


# ---------------------------------------------------------------------------
# barrier Newton solver

def _sym_basis(r):
    idx = [(i, j) for i in range(r) for j in range(i, r)]
    E = np.zeros((len(idx), r, r))
    for k, (i, j) in enumerate(idx):
        E[k, i, j] = 1.0
        E[k, j, i] = 1.0
    return idx, E


class _BarrierProblem:
    def __init__(self, A, b):
        self.A, self.b = A, b
        self.f, self.r = A.shape
        self.idx, self.E = _sym_basis(self.r)
        self.p = len(self.idx)
        # J[i] maps the upper-triangle parameters to C a_i
        self.J = np.einsum("kab,ib->iak", self.E, A)

    def unpack(self, z):
        C = np.einsum("k,kab->ab", z[: self.p], self.E)
        return C, z[self.p:]

    def pack(self, C, g):
        x = np.array([C[i, j] for i, j in self.idx])
        return np.concatenate([x, g])

    def in_domain(self, z):
        C, g = self.unpack(z)
        try:
            np.linalg.cholesky(C)
        except np.linalg.LinAlgError:
            return False
        s = self.b - self.A @ g
        v = self.A @ C
        return bool(np.all(s > 0) and np.all(s * s - np.einsum("ia,ia->i", v, v) > 0))

    def value(self, z, mu):
        C, g = self.unpack(z)
        s = self.b - self.A @ g
        v = self.A @ C
        D = s * s - np.einsum("ia,ia->i", v, v)
        return -np.linalg.slogdet(C)[1] - mu * np.sum(np.log(D))

    def derivatives(self, z, mu):
        C, g = self.unpack(z)
        p, r = self.p, self.r
        W = np.linalg.inv(C)
        WE = W @ self.E
        grad = np.zeros(p + r)
        hess = np.zeros((p + r, p + r))
        grad[:p] = -np.einsum("kaa->k", WE)
        hess[:p, :p] = np.einsum("kab,lba->kl", WE, WE)

        s = self.b - self.A @ g
        v = self.A @ C
        D = s * s - np.einsum("ia,ia->i", v, v)
        # gradient / Hessian of -log D in (v, s), then chain through (x, g)
        gv = 2 * v / D[:, None]
        gs = -2 * s / D
        Jt = self.J                                          # (f, r, p)
        grad[:p] += mu * np.einsum("ia,iak->k", gv, Jt)
        grad[p:] += mu * np.einsum("i,ia->a", gs, -self.A)

        Hvv = (2 / D)[:, None, None] * np.eye(r) + 4 * np.einsum("ia,ib->iab", v, v) / (D * D)[:, None, None]
        Hvs = -4 * (s / (D * D))[:, None] * v
        Hss = -2 / D + 4 * s * s / (D * D)
        hxx = np.einsum("iak,iab,ibl->kl", Jt, Hvv, Jt)
        hxg = np.einsum("iak,ia,ib->kb", Jt, Hvs, -self.A)
        hgg = np.einsum("i,ia,ib->ab", Hss, self.A, self.A)
        hess[:p, :p] += mu * hxx
        hess[:p, p:] += mu * hxg
        hess[p:, :p] += mu * hxg.T
        hess[p:, p:] += mu * hgg
        return grad, hess


def mvie_solve(h: HalfspaceForm, tol: float = 1e-10, *, mu_start: float = 1.0,
               mu_end: float = 1e-9, max_newton: int = 200, return_info: bool = False):
    """Numerically compute the MVIE of a bounded, full-dimensional ``{x | A x <= b}``.

    The barrier weight decreases tenfold from ``mu_start`` to ``mu_end``; each
    stage is solved by damped Newton steps.  The loop also stops once the
    change of ``log det C`` between stages drops below ``tol``.

    Returns
    -------
    Ellipsoid, or ``(Ellipsoid, info)`` when ``return_info`` is set.  ``info``
    holds ``logdet`` (value after each stage) and ``newton_steps``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    check_bounded(h)
    norms = np.linalg.norm(h.A, axis=1)
    A, b = h.A / norms[:, None], h.b / norms
    g0, radius = chebyshev_center(HalfspaceForm(A, b))
    if radius <= 1e-12:
        raise ValueError("polytope is not full-dimensional")
    prob = _BarrierProblem(A, b)
    z = prob.pack(0.9 * radius * np.eye(h.dim), g0)

    logdets, steps = [], 0
    mu = mu_start
    n_stages = int(round(np.log10(mu_start / mu_end))) + 1
    for _ in range(n_stages):
        for it in range(max_newton + 1):
            if it == max_newton:
                raise RuntimeError(f"Newton did not converge at barrier weight {mu:g}")
            grad, hess = prob.derivatives(z, mu)
            try:
                dz = -np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                dz = -np.linalg.lstsq(hess, grad, rcond=None)[0]
            dec = -grad @ dz
            if dec / 2 <= 1e-14 * max(1.0, mu):
                break
            t, f0 = 1.0, prob.value(z, mu)
            while t > 1e-14:
                zn = z + t * dz
                if prob.in_domain(zn) and prob.value(zn, mu) <= f0 - 0.25 * t * dec:
                    break
                t *= 0.5
            else:
                break
            z = zn
            steps += 1
        C, _ = prob.unpack(z)
        logdets.append(float(np.linalg.slogdet(C)[1]))
        if len(logdets) > 1 and abs(logdets[-1] - logdets[-2]) <= tol * max(1.0, abs(logdets[-1])):
            break
        mu /= 10
    C, g = prob.unpack(z)
    e = Ellipsoid((C + C.T) / 2, g)
    if return_info:
        return e, {"logdet": logdets, "newton_steps": steps}
    return e


def mvie_of(p: Polytope) -> Ellipsoid:
    """MVIE of ``p``: closed form for the special polytopes, numeric otherwise.

    The result is cached on the polytope.
    """
    cached = p.__dict__.get("_mvie")
    if cached is None:
        if p.special is not None:
            cached = mvie_closed_form(p.special, p.dim)
        else:
            cached = mvie_solve(p.halfspaces)
        p.__dict__["_mvie"] = cached
    return cached


# ---------------------------------------------------------------------------
# certificates

@dataclass
class JohnReport:
    contact_count: int
    is_plausible_mvie: bool
    residual: float
    contacts: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)


def verify_john(e: Ellipsoid, h: HalfspaceForm, tol: float = 1e-6) -> JohnReport:
    """Check the contact-point condition for ``e`` being the MVIE of ``h``.

    Facets are mapped to the frame where ``e`` is the unit ball; tight facets
    give contact directions ``u_i`` and a nonnegative least-squares fit of
    ``sum c_i u_i u_i^T = I``, ``sum c_i u_i = 0`` decides plausibility.
    """
    hn = h.normalized()
    CA = hn.A @ e.C
    lhs = np.linalg.norm(CA, axis=1) + hn.A @ e.g
    gap = hn.b - lhs
    scale = np.maximum(1.0, np.abs(hn.b))
    if np.any(gap < -tol * scale):
        raise ValueError("ellipsoid is not inside the polytope")
    tight = np.abs(gap) <= tol * scale
    U = CA[tight] / np.linalg.norm(CA[tight], axis=1)[:, None]
    r = e.dim
    n = len(U)
    if n == 0:
        return JohnReport(0, False, float(np.sqrt(r)), U, np.zeros(0))
    iu = np.triu_indices(r)
    outer = np.einsum("ia,ib->iab", U, U)[:, iu[0], iu[1]]
    M = np.vstack([outer.T, U.T])
    target = np.concatenate([np.eye(r)[iu], np.zeros(r)])
    weights, residual = nnls(M, target)
    plausible = n >= r and residual <= 1e-4
    return JohnReport(int(n), bool(plausible), float(residual), U, weights)


def ellipsoid_polar(e: Ellipsoid) -> Ellipsoid:
    """Polar of ``e`` about its own center: ``{C^{-1} u : ||u|| <= 1}``."""
    try:
        W = np.linalg.inv(e.C)
    except np.linalg.LinAlgError:
        raise ValueError("singular ellipsoid matrix") from None
    return Ellipsoid((W + W.T) / 2, np.zeros(e.dim))


def boundary_probes(e: Ellipsoid, n_dirs: int = 0, seed=None) -> np.ndarray:
    """Points on the ellipsoid boundary along +-axes (and optional random directions)."""
    r = e.dim
    U = [np.eye(r), -np.eye(r)]
    if n_dirs:
        W = np.random.default_rng(seed).standard_normal((r, n_dirs))
        U.append(W / np.linalg.norm(W, axis=0))
    U = np.hstack(U)
    return e.C @ U + e.g[:, None]

