"""Operator splitting for balance laws with a non-local source.

One local-flow step of length ``dt`` runs the homogeneous front tracking for
``dt`` and then adds ``dt * Pi_N G(u)`` on ``[gamma, inf)``.  Composing steps
of fixed length gives the Euler polygonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainExceeded
from .functionals import FunctionalWeights
from .piecewise import Staircase
from .tracking import FrontTracker, SolverParams, approximate_data


# -- projection ------------------------------------------------------------------

def grid_edges(N):
    """Edges ``k / N`` of the projection cells, ``k = -1 - N^2 .. N^2``."""
    k = np.arange(-1 - N * N, N * N + 1)
    return k / N


def project_PiN(u, N, dim=None, nodes=8):
    """Cell averages of ``u`` on the cells ``]k/N, (k+1)/N]``, zero outside.

    ``u`` is a :class:`Staircase` (exact cell integrals) or a callable of
    ``x`` (Gauss-Legendre quadrature with ``nodes`` points per cell).
    """
    N = int(N)
    if N < 1:
        raise ValueError("N must be a positive integer")
    edges = grid_edges(N)
    if isinstance(u, Staircase):
        d = u.dim
        vals = N * _cell_integrals(u, edges)
    else:
        x, w = np.polynomial.legendre.leggauss(nodes)
        h = 1.0 / N
        mids = 0.5 * (edges[:-1] + edges[1:])
        pts = mids[:, None] + 0.5 * h * x[None, :]
        fv = np.asarray(u(pts.ravel()), dtype=float).reshape(pts.shape[0], nodes, -1)
        vals = 0.5 * np.einsum("k,mkd->md", w, fv)
        d = vals.shape[1]
    zero = np.zeros((1, d))
    return Staircase(edges, np.vstack([zero, vals, zero]))


def _cell_integrals(u, edges):
    """Exact integrals of the staircase ``u`` over consecutive cells."""
    inner = u.breaks[(u.breaks > edges[0]) & (u.breaks < edges[-1])]
    pts = np.union1d(edges, inner)
    vals = u(pts[:-1])
    F = np.vstack([np.zeros((1, u.dim)), np.cumsum(vals * np.diff(pts)[:, None], axis=0)])
    return np.diff(F[np.searchsorted(pts, edges)], axis=0)


# -- source operators -------------------------------------------------------------

@dataclass(frozen=True)
class SourceOp:
    """Source ``G`` acting on staircases.

    ``apply(u, t)`` returns a staircase vanishing at infinity.
    ``lipschitz_L1`` and ``tv_bound`` are the constants of the standing
    hypothesis on ``G``; they are used for spot checks only.
    """

    name: str
    apply: Callable
    lipschitz_L1: float
    tv_bound: float
    params: dict = field(default_factory=dict)

    def __call__(self, u, t=0.0):
        return self.apply(u, t)


_SOURCES = {}


def register_source(name):
    def deco(factory):
        _SOURCES[name] = factory
        return factory
    return deco


def get_source(name, **params):
    if name not in _SOURCES:
        raise KeyError(f"unknown source {name!r}; available: {sorted(_SOURCES)}")
    return _SOURCES[name](**params)


def available_sources():
    return sorted(_SOURCES)


@register_source("nonlocal-window")
def nonlocal_window(a=0.0, b=1.0, c=3.0, d=4.0, coefficient=1.0, base=None):
    """``G(u)(x) = coefficient * (int_a^b (u - base)) * indicator_[c,d](x)``."""
    if not (a < b and c < d):
        raise ValueError("need a < b and c < d")

    def apply(u, t=0.0):
        ref = np.zeros(u.dim) if base is None else np.asarray(base, dtype=float)
        mass = coefficient * ((u - Staircase.constant(ref)).integrate(a, b))
        vals = np.vstack([np.zeros(u.dim), mass, np.zeros(u.dim)])
        return Staircase(np.array([c, d]), vals)

    L = abs(coefficient) * (d - c)
    return SourceOp("nonlocal-window", apply, L, 2.0 * abs(coefficient),
                    dict(a=a, b=b, c=c, d=d, coefficient=coefficient))


@register_source("zero")
def zero_source():
    def apply(u, t=0.0):
        return Staircase.constant(np.zeros(u.dim))
    return SourceOp("zero", apply, 0.0, 0.0)


def check_source_hypothesis(src, samples, rng=None):
    """Largest observed ``|G(u)-G(w)|_1 / |u-w|_1`` and ``TV(G(u))`` on pairs."""
    lips, tvs = [], []
    for u, w in samples:
        du = u.l1_distance(w)
        gu, gw = src(u), src(w)
        if du > 0:
            lips.append(gu.l1_distance(gw) / du)
        tvs.append(gu.total_variation())
    return (max(lips) if lips else 0.0), (max(tvs) if tvs else 0.0)


# -- splitting ------------------------------------------------------------------------

@dataclass(frozen=True)
class SplittingParams:
    eps_split: float
    N: int
    M: float = math.inf
    C_domain: float = 0.0
    delta: float = math.inf

    def __post_init__(self):
        if not self.eps_split > 0 or int(self.N) < 1 or not self.M > 0:
            raise ValueError("eps_split, N and M must be positive")


def splitting_step(tracker, src, dt, N, t_end=None):
    """Advance ``tracker`` by ``dt`` (or up to ``t_end``) and add the
    projected source increment."""
    t_end = tracker.time + dt if t_end is None else float(t_end)
    dt = t_end - tracker.time
    tracker.run_until(t_end)
    u = tracker.configuration().staircase()
    incr = project_PiN(src(u, t_end), N).scale(dt)
    x_b = float(tracker.boundary.gamma(t_end))
    incr = incr.with_left(x_b, np.zeros(incr.dim)).simplify()
    if incr.breaks.size == 0 and not np.any(incr.values):
        return tracker
    tracker.apply_increment(incr)
    return tracker


@dataclass
class PolygonalResult:
    tracker: FrontTracker
    steps: list  # (time, Upsilon or nan, L1 norm)

    @property
    def trajectory(self):
        return self.tracker.trajectory

    @property
    def final(self):
        return self.tracker.configuration()


def _l1_norm(tracker):
    cfg = tracker.configuration()
    return cfg.staircase().l1_norm(ref=cfg.base_state)


def euler_polygonal(system, boundary, src, params, sparams, u0, T, weights=None, support=None):
    """Compose local-flow steps of length ``eps_split`` up to time ``T``.

    Records ``(t, Upsilon, ||u - base||_1)`` after every step and raises
    :class:`DomainExceeded` when the norm leaves ``M e^{Ct} + C t`` or the
    potential exceeds ``delta``.
    """
    u_eps, g_eps = approximate_data(u0, boundary.gdata, params.epsilon, support=support, horizon=T,
                                    delta0=params.delta0, base=system.base_state)
    bdry = boundary if g_eps is boundary.gdata else boundary.with_data(g_eps)
    tr = FrontTracker(system, bdry, params, weights).initialize(u_eps)
    steps = [(0.0, _ups(tr), _l1_norm(tr))]
    _check_domain(steps[-1], sparams)
    k = 0
    while True:
        t_next = min((k + 1) * sparams.eps_split, T)
        if t_next <= tr.time + 1e-14:
            break
        splitting_step(tr, src, t_next - tr.time, sparams.N, t_end=t_next)
        k += 1
        steps.append((tr.time, _ups(tr), _l1_norm(tr)))
        _check_domain(steps[-1], sparams)
        if t_next >= T:
            break
    return PolygonalResult(tr, steps)


def _ups(tr):
    rep = tr.report()
    return rep.Upsilon if rep is not None else float("nan")


def _check_domain(step, sp):
    t, ups, norm = step
    bound = sp.M * math.exp(sp.C_domain * t) + sp.C_domain * t
    if norm > bound * (1 + 1e-12):
        raise DomainExceeded(f"L1 norm {norm:.4g} exceeds {bound:.4g} at t = {t:g}")
    if math.isfinite(sp.delta) and ups == ups and ups > sp.delta:
        raise DomainExceeded(f"potential {ups:.4g} exceeds delta = {sp.delta:g} at t = {t:g}")


def local_flow(system, boundary, src, params, u, t0, t, N):
    """One local-flow step of length ``t`` from the staircase ``u`` at ``t0``."""
    tr = FrontTracker(system, boundary, params)
    tr.initialize(u, t0=t0)
    if t > 0:
        splitting_step(tr, src, t, N, t_end=t0 + t)
    return tr.configuration().staircase()


def verify_local_flow(system, boundary, src, params, u, k, tau, N, t0=0.0):
    """L1 distance between ``F(k tau) o F(tau) u`` and ``F((k+1) tau) u``."""
    if tau == 0:
        return 0.0
    once = local_flow(system, boundary, src, params, u, t0, tau, N)
    twice = local_flow(system, boundary, src, params, once, t0 + tau, k * tau, N)
    direct = local_flow(system, boundary, src, params, u, t0, (k + 1) * tau, N)
    return twice.l1_distance(direct)


def fit_growth_constant(steps, ups0=None, norm0=None, M=None):
    """Smallest ``C`` with ``Ups(t) <= Ups(0) + C t`` and
    ``|u(t)| <= M e^{Ct} + C t`` along the recorded steps."""
    ts = np.array([s[0] for s in steps])
    ups = np.array([s[1] for s in steps])
    nrm = np.array([s[2] for s in steps])
    ups0 = ups[0] if ups0 is None else ups0
    M = nrm[0] if M is None else M
    pos = ts > 0
    C1 = float(np.max(np.maximum((ups[pos] - ups0) / ts[pos], 0.0))) if np.any(pos) and np.all(np.isfinite(ups)) else 0.0
    C2 = 0.0
    for t, v in zip(ts[pos], nrm[pos]):
        lo, hi = 0.0, 1.0
        while M * math.exp(hi * t) + hi * t < v:
            hi *= 2
        if M * math.exp(lo * t) + lo * t >= v:
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if M * math.exp(mid * t) + mid * t >= v:
                hi = mid
            else:
                lo = mid
        C2 = max(C2, hi)
    return max(C1, C2)
