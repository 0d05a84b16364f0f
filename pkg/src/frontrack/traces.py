"""Traces along curves in the ``(t, x)`` plane and the experiments built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import Boundary, check_noncharacteristic
from .piecewise import Polyline, Staircase
from .tracking import run


@dataclass(frozen=True)
class CurveSpec:
    """Piecewise linear curve ``t -> Gamma(t)`` with ``ell_tilde`` families
    crossing it from right to left, separated from the bands by ``margin``."""

    gamma: Polyline
    ell_tilde: int
    margin: float = 0.0

    @classmethod
    def vertical(cls, x, ell_tilde, margin=0.0):
        return cls(Polyline.constant(x), ell_tilde, margin)

    def validate(self, sys):
        check_noncharacteristic(sys, self.gamma, self.ell_tilde, max(self.margin, 1e-12), "curve")
        return self


def _crossing_times(traj, curve, t_hi):
    """Times in ``(0, t_hi)`` when some segment meets the curve or is born on it."""
    a = traj.arrays
    times = []
    t0, t1, x0, v = a["t0"], np.minimum(a["t1"], t_hi), a["x0"], a["v"]
    for ta, tb, xa, slope in curve.gamma.pieces(0.0, t_hi):
        lo = np.maximum(t0, ta)
        hi = np.minimum(t1, tb)
        ok = lo < hi
        rel = v - slope
        # front minus curve at lo, solved for the zero
        gap = x0 + v * (lo - t0) - (xa + slope * (lo - ta))
        with np.errstate(divide="ignore", invalid="ignore"):
            tz = lo - gap / rel
        hit = ok & (rel != 0) & (tz >= lo) & (tz < hi)
        times.append(tz[hit])
        born = ok & (np.abs(gap) <= 1e-12) & (lo == t0)
        times.append(t0[born])
    ts = np.unique(np.concatenate(times)) if times else np.empty(0)
    return ts[(ts > 0) & (ts < t_hi)]


def _states_on_curve(traj, curve, ts):
    """Right limits ``u(t, Gamma(t)+)`` at the times ``ts``."""
    a = traj.arrays
    n = traj.system.n
    out = np.empty((ts.size, n))
    if len(traj) == 0:
        out[:] = traj.far
        out[curve.gamma(ts) < traj.boundary.gamma(ts)] = traj.base
        return out
    chunk = max(1, int(2e6 // max(len(traj), 1)))
    for s in range(0, ts.size, chunk):
        tt = ts[s:s + chunk]
        gx = curve.gamma(tt)
        alive = (a["t0"][None, :] <= tt[:, None]) & (tt[:, None] < a["t1"][None, :])
        pos = a["x0"][None, :] + a["v"][None, :] * (tt[:, None] - a["t0"][None, :])
        cand = np.where(alive & (pos > gx[:, None]), pos, np.inf)
        k = np.argmin(cand, axis=1)
        has = np.isfinite(cand[np.arange(tt.size), k])
        out[s:s + chunk] = np.where(has[:, None], a["left"][k], traj.far[None, :])
        below = gx < traj.boundary.gamma(tt)
        out[s:s + chunk][below] = traj.base
    return out


def sample_trace(traj, curve, T=None):
    """Trace ``t -> u(t, Gamma(t)+)`` on ``[0, T]`` as a right-continuous staircase.

    Breakpoints are the exact times at which fronts cross the curve; values
    are read at interval midpoints.
    """
    if isinstance(curve, CurveSpec):
        curve.validate(traj.system)
    else:
        curve = CurveSpec(curve, 0)
    if T is None:
        ev = traj.event_times()
        T = float(ev.max()) + 1.0 if ev.size else 1.0
    ts = _crossing_times(traj, curve, T)
    edges = np.concatenate([[0.0], ts, [T]])
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = _states_on_curve(traj, curve, mids)
    return Staircase(ts, vals).simplify()


def trace_distance(traj, curve0, curve1, T):
    """``int_0^T |u(t, Gamma0(t)+) - u(t, Gamma1(t)+)| dt``."""
    tr0 = sample_trace(traj, curve0, T)
    tr1 = sample_trace(traj, curve1, T)
    return (tr0 - tr1).l1_norm(0.0, T)


def harvest_boundary_data(traj, bdry, curve, T):
    """Boundary datum ``b(u(t, Gamma(t)+))`` on the trace's own breakpoints."""
    tr = sample_trace(traj, curve, T)
    vals = np.array([bdry.b(v) for v in tr.values])
    return Staircase(tr.breaks, vals).simplify()


def restricted_boundary(bdry, curve, gdata):
    return Boundary(bdry.system, curve.gamma, bdry.bmap, bdry.ell, bdry.margin_c, gdata, bdry.bjac)


def restriction_experiment(system, bdry, params, u0, gamma_tilde, T, times=None, weights=None,
                           reference_params=None):
    """Distance between a solution and the solution of the problem restricted
    to ``x >= gamma_tilde(t)`` with boundary data read off along ``gamma_tilde``.

    By default the datum is read off the same approximate solution, which makes
    the two runs agree up to round-off.  With ``reference_params`` the datum is
    harvested from a finer reference run (a proxy for the exact trace) and the
    restricted problem is tracked from the original data at ``params``; the
    discrepancy then measures how fast both sides approach a common limit.

    Returns the largest L1 distance on ``x >= gamma_tilde(t)`` over ``times``.
    """
    if times is None:
        times = np.linspace(0.0, T, 11)
    x0 = float(gamma_tilde.gamma(0.0))
    big = run(system, bdry, params, u0, T, weights=weights, record_events=False)
    if reference_params is None:
        gt = harvest_boundary_data(big.trajectory, bdry, gamma_tilde, T)
        u_small = big.trajectory.snapshot(0.0).with_left(x0, system.base_state)
    else:
        ref = run(system, bdry, reference_params, u0, T, weights=weights, record_events=False)
        gt = harvest_boundary_data(ref.trajectory, bdry, gamma_tilde, T)
        if isinstance(u0, Staircase):
            u_small = u0.with_left(x0, system.base_state)
        else:
            base = np.asarray(system.base_state, dtype=float)

            def u_small(x, _u0=u0):
                x = np.asarray(x, dtype=float)
                return np.where((x < x0)[..., None], base, _u0(x))
    small = run(system, restricted_boundary(bdry, gamma_tilde, gt), params, u_small, T,
                weights=weights, record_events=False)
    worst = 0.0
    for t in times:
        x = float(gamma_tilde.gamma(t))
        d = big.trajectory.snapshot(t).l1_distance(small.trajectory.snapshot(t), x, np.inf)
        worst = max(worst, d)
    return worst


def trace_continuity_probe(traj, curve, T, eps_prime, samples=64):
    """``(1/e) int_0^e int_0^T |u(t, Gamma(t) - x) - u(t, Gamma(t))| dt dx``.

    The inner integral is exact; the outer one uses the midpoint rule with
    ``samples`` nodes.
    """
    if eps_prime <= 0:
        return 0.0
    base_tr = sample_trace(traj, curve, T)
    xs = (np.arange(samples) + 0.5) / samples * eps_prime
    acc = 0.0
    for x in xs:
        shifted = CurveSpec(Polyline(curve.gamma.knots, curve.gamma.positions - x, curve.gamma.tail_slope),
                            curve.ell_tilde, 0.0)
        tr = sample_trace(traj, shifted, T)
        acc += (tr - base_tr).l1_norm(0.0, T)
    return acc / samples


def nonuniqueness_experiment(epsilon=0.01, N=20, eps_split=0.05, T=1.0, coefficient=1.0,
                             curve_x=2.0):
    """Full and restricted runs of the advection problem with a source fed
    by the solution on ``[0, 1]`` and acting on ``[3, 4]``.

    Returns ``(mass_on_34, restricted_norm, trace)`` where ``trace`` is the
    harvested datum along ``x = curve_x``.
    """
    from .boundary import identity_boundary
    from .splitting import SplittingParams, euler_polygonal, get_source
    from .systems import get_system
    from .tracking import SolverParams

    sys = get_system("advection")
    bdry = identity_boundary(sys, Polyline.constant(0.0), margin_c=0.5)
    src = get_source("nonlocal-window", a=0.0, b=1.0, c=3.0, d=4.0, coefficient=coefficient)
    params = SolverParams(epsilon, epsilon ** 2)
    sp = SplittingParams(eps_split, N)
    u0 = Staircase.indicator(0.0, 1.0)
    full = euler_polygonal(sys, bdry, src, params, sp, u0, T)
    u_T = full.final.staircase()
    mass = u_T.l1_norm(3.0, 4.0)
    curve = CurveSpec.vertical(curve_x, 0, 0.5)
    gt = harvest_boundary_data(full.trajectory, bdry, curve, T)
    small_bdry = restricted_boundary(bdry, curve, gt)
    u_small = u0.with_left(curve_x, sys.base_state)
    small = euler_polygonal(sys, small_bdry, src, params, sp, u_small, T)
    restricted_norm = small.final.staircase().l1_norm(ref=sys.base_state)
    return mass, restricted_norm, gt
