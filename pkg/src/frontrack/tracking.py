"""Event-driven wave-front tracking on ``x >= gamma(t)``.

The solution is a chain of fronts kept in a doubly linked list.  Each front
moves on a straight line.  Collisions between neighbours, arrivals of
leaving-family fronts at the boundary and jumps of the boundary datum are
processed in time order from a heap with lazy invalidation.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import EventBudgetExceeded, InvariantViolation, TVTooLarge
from .functionals import FunctionalWeights, upsilon_from_arrays
from .piecewise import Staircase
from .riemann import CONTACT, RAREFACTION, SHOCK, make_wave, solve_boundary_riemann, solve_riemann
from .systems import char_speed, rarefaction_curve

NONPHYSICAL = "nonphysical"

COLLISION = "collision"
BOUNDARY_HIT = "boundary_hit"
DATA_JUMP = "data_jump"
SPLIT_STEP = "split_step"
INITIAL = "initial"


@dataclass(frozen=True)
class SolverParams:
    """Tracking parameters.

    Parameters
    ----------
    epsilon : float
        Data approximation accuracy and maximal size of rarefaction wavelets.
    rho : float
        Interaction threshold: collisions with ``|s' s''| < rho`` use the
        simplified solver.
    delta0 : float
        Largest admissible initial potential (and total variation of data).
    """

    epsilon: float
    rho: float
    delta0: float = math.inf
    max_events: int = 10_000_000
    drop_tol: float = 1e-13
    joint_tol: float = 1e-10
    trust_radius: float = 1.0
    check_invariants: bool = False

    def __post_init__(self):
        if not self.epsilon > 0 or not self.rho > 0:
            raise ValueError("epsilon and rho must be positive")
        if self.max_events < 1:
            raise ValueError("max_events must be positive")


class WaveFront:
    """A moving jump ``left -> right`` along ``x = x0 + speed (t - t0)``."""

    __slots__ = ("id", "x0", "t0", "speed", "family", "strength", "generation", "left",
                 "right", "kind", "perturbation", "prev", "next", "alive", "seg")

    def __init__(self, id, x0, t0, speed, family, strength, generation, left, right, kind,
                 perturbation):
        self.id = id
        self.x0 = x0
        self.t0 = t0
        self.speed = speed
        self.family = family
        self.strength = strength
        self.generation = generation
        self.left = left
        self.right = right
        self.kind = kind
        self.perturbation = perturbation
        self.prev = None
        self.next = None
        self.alive = True
        self.seg = -1

    def position(self, t):
        return self.x0 + self.speed * (t - self.t0)

    @property
    def physical(self):
        return self.kind != NONPHYSICAL

    def __repr__(self):
        return (f"WaveFront(id={self.id}, fam={self.family}, s={self.strength:.3g}, "
                f"x0={self.x0:.4g}@t0={self.t0:.4g}, v={self.speed:.4g}, gen={self.generation})")


@dataclass(frozen=True)
class FrontView:
    id: int
    position: float
    speed: float
    family: int
    strength: float
    generation: int
    left: np.ndarray
    right: np.ndarray
    kind: str
    perturbation: float


@dataclass(frozen=True)
class Configuration:
    """Piecewise constant solution at one time."""

    time: float
    fronts: tuple
    boundary_position: float
    trace_state: np.ndarray
    far_state: np.ndarray
    base_state: np.ndarray
    ell: int
    system: object = field(repr=False)

    def staircase(self):
        """Solution as a function of ``x`` (base state left of the boundary)."""
        breaks = [self.boundary_position] + [f.position for f in self.fronts]
        values = [self.base_state, self.trace_state] + [f.right for f in self.fronts]
        return Staircase(np.maximum.accumulate(np.asarray(breaks)), np.asarray(values))

    def check(self, tol=0.0):
        """Raise :class:`InvariantViolation` if the chain is broken."""
        state = self.trace_state
        for f in self.fronts:
            if np.max(np.abs(f.left - state)) > tol:
                raise InvariantViolation(f"chain broken at front {f.id}")
            if f.position < self.boundary_position - 1e-9:
                raise InvariantViolation(f"front {f.id} left of the boundary")
            state = f.right
        if np.max(np.abs(state - self.far_state)) > tol:
            raise InvariantViolation("last front does not reach the far state")

    @property
    def nonphysical_strength(self):
        return float(sum(f.strength for f in self.fronts if f.kind == NONPHYSICAL))


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    location: float
    incoming: tuple = ()
    outgoing: tuple = ()
    solver: str = ""
    dV: float = 0.0
    dQ: float = 0.0
    dUpsilon: float = 0.0

    @property
    def product(self):
        if len(self.incoming) != 2:
            return 0.0
        return abs(self.incoming[0][1] * self.incoming[1][1])

    def record(self):
        return {"time": self.time, "kind": self.kind, "location": self.location,
                "incoming": [list(w) for w in self.incoming],
                "outgoing": [list(w) for w in self.outgoing], "solver": self.solver,
                "dV": self.dV, "dQ": self.dQ, "dUpsilon": self.dUpsilon}


class Trajectory:
    """Log of front segments, enough to evaluate the solution anywhere."""

    def __init__(self, system, boundary, far_state):
        self.system = system
        self.boundary = boundary
        self.base = system.base_state.copy()
        self.far = np.asarray(far_state, dtype=float).copy()
        self._fronts = []
        self._t1 = []
        self._cache = None

    def open(self, front):
        # fronts are read back lazily: flanking states may be re-chained
        # right after creation
        self._fronts.append(front)
        self._t1.append(math.inf)
        self._cache = None
        return len(self._fronts) - 1

    def close(self, seg, t):
        self._t1[seg] = t
        self._cache = None

    def __len__(self):
        return len(self._fronts)

    @property
    def arrays(self):
        if self._cache is None:
            n = self.system.n
            fr = self._fronts

            def col(name, dtype=float):
                return np.asarray([getattr(f, name) for f in fr], dtype=dtype)

            self._cache = dict(
                t0=col("t0"), t1=np.asarray(self._t1, dtype=float), x0=col("x0"), v=col("speed"),
                left=np.asarray([f.left for f in fr], dtype=float).reshape(-1, n),
                right=np.asarray([f.right for f in fr], dtype=float).reshape(-1, n),
                family=col("family", int), strength=col("strength"), id=col("id", int),
                generation=col("generation", int))
        return self._cache

    def alive_at(self, t):
        a = self.arrays
        sel = np.nonzero((a["t0"] <= t) & (t < a["t1"]))[0]
        pos = a["x0"][sel] + a["v"][sel] * (t - a["t0"][sel])
        order = np.lexsort((a["v"][sel], pos))
        sel, pos = sel[order], pos[order]
        # fronts about to collide may have crossed by round-off; restore the
        # chain order inside clusters of (nearly) coincident fronts
        close = np.diff(pos) <= 1e-9 * (1.0 + np.abs(pos[1:]))
        if np.any(close):
            sel = self._chain_clusters(sel, close)
        return sel, pos

    def _chain_clusters(self, sel, close):
        left, right = self.arrays["left"], self.arrays["right"]
        sel = sel.copy()
        k = 0
        m = sel.size
        while k < m - 1:
            if not close[k]:
                k += 1
                continue
            j = k
            while j < m - 1 and close[j]:
                j += 1
            members = list(sel[k:j + 1])
            rights = [right[s] for s in members]
            start = [s for s in members if not any(np.array_equal(left[s], r) for r in rights)]
            if len(start) == 1:
                chain = [start[0]]
                rest = [s for s in members if s != start[0]]
                while rest:
                    nxt = [s for s in rest if np.array_equal(left[s], right[chain[-1]])]
                    if len(nxt) != 1:
                        break
                    chain.append(nxt[0])
                    rest.remove(nxt[0])
                if not rest:
                    sel[k:j + 1] = chain
            k = j + 1
        return sel

    def snapshot(self, t):
        """Solution at time ``t`` as a staircase in ``x``."""
        sel, pos = self.alive_at(t)
        a = self.arrays
        g = float(self.boundary.gamma(t))
        first = a["left"][sel[0]] if sel.size else self.far
        breaks = np.concatenate([[g], np.maximum(pos, g)])
        values = np.vstack([self.base[None, :], first[None, :], a["right"][sel]])
        return Staircase(breaks, values)

    def state(self, t, x):
        """Right limit ``u(t, x+)``."""
        if x < self.boundary.gamma(t):
            return self.base.copy()
        sel, pos = self.alive_at(t)
        k = np.searchsorted(pos, x, side="right")
        if k >= sel.size:
            return self.far.copy()
        return self.arrays["left"][sel[k]].copy()

    def fronts_at(self, t):
        sel, pos = self.alive_at(t)
        a = self.arrays
        return [dict(id=int(a["id"][k]), position=float(p), speed=float(a["v"][k]),
                     family=int(a["family"][k]), strength=float(a["strength"][k]))
                for k, p in zip(sel, pos)]

    def event_times(self, t_hi=math.inf):
        a = self.arrays
        ts = np.concatenate([a["t0"], a["t1"][np.isfinite(a["t1"])]])
        return np.unique(ts[ts <= t_hi])

    def write_snapshots(self, path, times):
        """CSV rows ``time, x_left, x_right, u_1..u_n``."""
        n = self.system.n
        with open(path, "w") as fh:
            fh.write(",".join(["time", "x_left", "x_right"] + [f"u_{i + 1}" for i in range(n)]) + "\n")
            for t in times:
                st = self.snapshot(t)
                edges = np.concatenate([[-np.inf], st.breaks, [np.inf]])
                for k in range(st.values.shape[0]):
                    if edges[k + 1] <= edges[k] and np.isfinite(edges[k]):
                        continue
                    vals = ",".join(repr(float(v)) for v in st.values[k])
                    fh.write(f"{float(t)!r},{float(edges[k])!r},{float(edges[k + 1])!r},{vals}\n")


# -- data approximation --------------------------------------------------------

def _sample(fn, x, d=None):
    vals = np.asarray(fn(x), dtype=float)
    if vals.shape[:1] != x.shape:
        vals = np.array([np.atleast_1d(np.asarray(fn(xi), dtype=float)) for xi in x])
    return vals.reshape(x.size, -1)


def approximate_data(u0, g, epsilon, support=None, horizon=None, delta0=math.inf, base=None):
    """Piecewise constant approximations of initial and boundary data.

    Staircases are returned unchanged.  A callable ``u0`` is replaced by its
    cell averages on ``support`` with cells short enough for an L1 error
    below ``epsilon``; a callable ``g`` is sampled on ``[0, horizon]`` and a
    new value is taken whenever it drifts by ``epsilon / 2``.  Outside the
    support the approximation equals ``base`` (zero by default).

    Raises
    ------
    TVTooLarge
        If the total variation of either approximation exceeds ``delta0``.
    """
    if isinstance(u0, Staircase):
        u_eps = u0.simplify()
    else:
        if support is None:
            raise ValueError("a callable initial datum needs a support interval")
        a, b = map(float, support)
        fine = np.linspace(a, b, 4001)
        fv = _sample(u0, fine)
        tv = float(np.linalg.norm(np.diff(fv, axis=0), axis=1).sum())
        m = max(1, int(math.ceil(2.0 * (b - a) * max(tv, 1e-12) / epsilon)))
        edges = np.linspace(a, b, m + 1)
        nodes, wts = np.polynomial.legendre.leggauss(6)
        h = (b - a) / m
        mids = 0.5 * (edges[:-1] + edges[1:])
        pts = (mids[:, None] + 0.5 * h * nodes[None, :]).ravel()
        pv = _sample(u0, pts).reshape(m, nodes.size, -1)
        avg = 0.5 * np.einsum("k,mkd->md", wts, pv)
        outside = np.zeros(avg.shape[1]) if base is None else np.asarray(base, dtype=float)
        u_eps = Staircase.from_intervals(edges, avg, outside).simplify()
    if g is None or isinstance(g, Staircase):
        g_eps = g
    else:
        if horizon is None:
            raise ValueError("a callable boundary datum needs a horizon")
        ts = np.linspace(0.0, float(horizon), 20001)
        gv = _sample(g, ts)
        breaks, vals = [], [gv[0]]
        for t, v in zip(ts[1:], gv[1:]):
            if np.linalg.norm(v - vals[-1]) >= 0.5 * epsilon:
                breaks.append(t)
                vals.append(v)
        g_eps = Staircase(np.asarray(breaks), np.asarray(vals))
    tv_u = u_eps.total_variation()
    tv_g = 0.0 if g_eps is None else g_eps.total_variation(0.0, np.inf)
    if tv_u > delta0 or tv_g > delta0:
        raise TVTooLarge(f"TV(u0) = {tv_u:.4g}, TV(g) = {tv_g:.4g} exceed delta0 = {delta0:g}")
    return u_eps, g_eps


# -- the engine ------------------------------------------------------------------

class FrontTracker:
    """Front tracking solver for one initial-boundary value problem.

    Parameters
    ----------
    system : SystemSpec
    boundary : Boundary
        Its ``gdata`` must already be piecewise constant.
    params : SolverParams
    weights : FunctionalWeights, optional
        When given, the potentials are evaluated after every event and their
        changes attached to the event record.
    """

    def __init__(self, system, boundary, params, weights=None, record_events=True):
        if boundary.system is not system:
            raise ValueError("boundary belongs to a different system")
        self.system = system
        self.boundary = boundary
        self.params = params
        self.weights = weights
        self.record_events = record_events
        self.n = system.n
        self.np_family = system.n + 1
        self.lam_hat = system.lambda_hat
        self.time = 0.0
        self.head = None
        self.far = system.base_state.copy()
        self.events = []
        self.functionals = []
        self.event_count = 0
        self.trajectory = None
        self._next_id = 0
        self._seq = 0
        self._heap = []
        self._data_times = []
        self._data_ptr = 0
        self._last_report = None

    # -- construction -------------------------------------------------------
    def _new_front(self, x, t, speed, family, strength, gen, left, right, kind):
        fid = self._next_id
        self._next_id += 1
        pert = ((fid % 999) + 1) * 1e-12 * self.lam_hat
        f = WaveFront(fid, float(x), float(t), float(speed), int(family), float(strength), int(gen),
                      left, right, kind, pert)
        f.seg = self.trajectory.open(f)
        return f

    def _kill(self, f, t):
        f.alive = False
        self.trajectory.close(f.seg, t)

    def _fronts_from_waves(self, waves, x, t, gen_of, split_families):
        """Fronts for an elementary-wave fan born at ``(t, x)``.

        Rarefactions of a family in ``split_families`` are cut into
        ``ceil(s / epsilon)`` wavelets.
        """
        out = []
        sys = self.system
        eps = self.params.epsilon
        for w in waves:
            if abs(w.strength) < self.params.drop_tol:
                continue
            gen = gen_of(w.family)
            if w.kind == RAREFACTION:
                m = int(math.ceil(w.strength / eps - 1e-9)) if w.family in split_families else 1
                m = max(m, 1)
                states = [w.left]
                for k in range(1, m):
                    states.append(rarefaction_curve(sys, w.left, w.family, w.strength * k / m))
                states.append(w.right)
                for k in range(m):
                    lam = char_speed(sys, states[k + 1], w.family)
                    out.append(self._new_front(x, t, lam, w.family, w.strength / m, gen,
                                               states[k], states[k + 1], RAREFACTION))
            else:
                out.append(self._new_front(x, t, w.speed_lo, w.family, w.strength, gen,
                                           w.left, w.right, w.kind))
        self._rechain(out)
        return out

    def _rechain(self, fronts):
        for a, b in zip(fronts[:-1], fronts[1:]):
            b.left = a.right

    def _insert_between(self, before, after, fronts):
        """Link ``fronts`` between ``before`` and ``after`` (either may be None)."""
        prev = before
        for f in fronts:
            f.prev = prev
            if prev is None:
                self.head = f
            else:
                prev.next = f
            prev = f
        if prev is None:
            self.head = after
        else:
            prev.next = after
        if after is not None:
            after.prev = prev

    def iter_fronts(self):
        f = self.head
        while f is not None:
            yield f
            f = f.next

    def trace_state(self):
        return self.head.left if self.head is not None else self.far

    def initialize(self, u0, t0=0.0):
        """Build the initial chain from a staircase ``u0`` (values left of the
        boundary are ignored)."""
        sys = self.system
        self.time = float(t0)
        x_b = float(self.boundary.gamma(self.time))
        u0 = u0.simplify()
        self.far = np.asarray(u0.values[-1], dtype=float).copy()
        sys.check_state(self.far, "far state")
        self.trajectory = Trajectory(sys, self.boundary, self.far)
        all_split = set(range(1, self.n + 1))
        chain = []
        xs, _ = u0.jumps()
        for x in xs:
            if x <= x_b:
                continue
            ul = np.asarray(u0.left_limit(x), dtype=float)
            ur = np.asarray(u0(x), dtype=float)
            sol = solve_riemann(sys, ul, ur, self.params.trust_radius)
            chain.extend(self._fronts_from_waves(sol.waves, float(x), self.time, lambda k: 1, all_split))
        u_o = np.asarray(u0(x_b), dtype=float)
        bsol = solve_boundary_riemann(self.boundary, u_o, self.boundary.g(self.time),
                                      trust_radius=self.params.trust_radius)
        bfronts = self._fronts_from_waves(bsol.waves, x_b, self.time, lambda k: 1, all_split)
        chain = bfronts + chain
        self._rechain(chain)
        self._insert_between(None, None, chain)
        self._data_times = [float(t) for t in self.boundary.data_jump_times(self.time, math.inf)]
        self._data_ptr = 0
        self._reschedule_all()
        self._log_event(Event(self.time, INITIAL, x_b, (), tuple((f.family, f.strength) for f in chain),
                              "accurate"), initial=True)
        return self

    # -- scheduling ----------------------------------------------------------
    def _push(self, t, x, kind, a, b=None):
        ids = a.id if b is None else min(a.id, b.id)
        self._seq += 1
        heapq.heappush(self._heap, (t, x, ids, self._seq, kind, a, b))

    def _schedule_pair(self, a, b):
        if a is None or b is None:
            return
        if a.kind == NONPHYSICAL and b.kind == NONPHYSICAL:
            return
        closing = (a.speed + a.perturbation) - (b.speed + b.perturbation)
        if closing <= 0.0:
            return
        t = self.time
        gap = max(b.position(t) - a.position(t), 0.0)
        t_hit = t + gap / closing
        if not math.isfinite(t_hit):
            return
        x = 0.5 * (a.position(t_hit) + b.position(t_hit))
        self._push(t_hit, x, COLLISION, a, b)

    def _schedule_boundary(self, f):
        if f is None or f.family > self.boundary.ell or f.kind == NONPHYSICAL:
            return
        t_hit = self._boundary_hit_time(f)
        if t_hit is not None:
            self._push(t_hit, float(self.boundary.gamma(t_hit)), BOUNDARY_HIT, f)

    def _boundary_hit_time(self, f):
        t_now = self.time
        for ta, tb, xa, slope in self.boundary.gamma.pieces(t_now, math.inf):
            lo = max(ta, t_now)
            gap_lo = f.position(lo) - (xa + slope * (lo - ta))
            if gap_lo <= 0.0:
                return lo
            rate = f.speed - slope
            if rate >= 0.0:
                continue
            t_hit = lo - gap_lo / rate
            if t_hit <= tb:
                return t_hit
        return None

    def _reschedule_all(self):
        self._heap = []
        prev = None
        for f in self.iter_fronts():
            self._schedule_pair(prev, f)
            prev = f
        self._schedule_boundary(self.head)

    def _next_data_time(self):
        if self._data_ptr < len(self._data_times):
            return self._data_times[self._data_ptr]
        return math.inf

    def _pop_valid(self):
        while self._heap:
            item = self._heap[0]
            _, _, _, _, kind, a, b = item
            if kind == COLLISION:
                ok = a.alive and b.alive and a.next is b
            else:
                ok = a.alive and a.prev is None
            if ok:
                return item
            heapq.heappop(self._heap)
        return None

    def next_event_time(self):
        item = self._pop_valid()
        t_heap = item[0] if item is not None else math.inf
        return min(t_heap, self._next_data_time())

    # -- evolution ------------------------------------------------------------
    def step(self):
        """Process the earliest pending event; returns it (or None)."""
        item = self._pop_valid()
        t_heap = item[0] if item is not None else math.inf
        t_data = self._next_data_time()
        if not math.isfinite(min(t_heap, t_data)):
            return None
        self.event_count += 1
        if self.event_count > self.params.max_events:
            raise EventBudgetExceeded(f"more than {self.params.max_events} events")
        tol = self.params.joint_tol
        if item is not None and item[4] == BOUNDARY_HIT and abs(t_heap - t_data) <= tol:
            heapq.heappop(self._heap)
            self._data_ptr += 1
            return self._boundary_event(max(t_heap, t_data), item[5], data_jump=True)
        if t_data <= t_heap:
            self._data_ptr += 1
            return self._boundary_event(t_data, None, data_jump=True)
        heapq.heappop(self._heap)
        if item[4] == BOUNDARY_HIT:
            return self._boundary_event(t_heap, item[5], data_jump=False)
        return self._collision(t_heap, item[1], item[5], item[6])

    def run_until(self, t_end):
        """Process every event with time ``<= t_end`` and advance the clock."""
        while self.next_event_time() <= t_end:
            self.step()
        self.time = max(self.time, float(t_end))
        return self

    def _collision(self, t, x, a, b):
        sys = self.system
        self.time = t
        ul, ur = a.left, b.right
        incoming = ((a.family, a.strength), (b.family, b.strength))
        physical = a.physical and b.physical
        if physical and abs(a.strength * b.strength) >= self.params.rho:
            sol = solve_riemann(sys, ul, ur, self.params.trust_radius)
            fams = {a.family, b.family}

            def gen_of(k):
                if k == a.family and k == b.family:
                    return min(a.generation, b.generation)
                if k == a.family:
                    return a.generation
                if k == b.family:
                    return b.generation
                return max(a.generation, b.generation) + 1

            split = set(range(1, self.n + 1)) - fams
            out = self._fronts_from_waves(sol.waves, x, t, gen_of, split)
            solver = "accurate"
        else:
            out = self._simplified(a, b, t, x)
            solver = "simplified"
        before, after = a.prev, b.next
        if out:
            out[0].left = ul
            out[-1].right = ur
        elif after is not None:
            after.left = ul
        else:
            self.far = ul
        self._kill(a, t)
        self._kill(b, t)
        old_head = self.head
        self._insert_between(before, after, out)
        self._after_change(before, after, out, old_head)
        return self._log_event(Event(t, COLLISION, x, incoming,
                                     tuple((f.family, f.strength) for f in out), solver))

    def _simplified(self, a, b, t, x):
        sys = self.system
        ul, ur = a.left, b.right
        pieces = []  # (family, strength, generation)
        if a.kind == NONPHYSICAL:
            pieces.append((b.family, b.strength, b.generation))
            np_gen = a.generation
        elif a.family > b.family:
            pieces.append((b.family, b.strength, b.generation))
            pieces.append((a.family, a.strength, a.generation))
            np_gen = max(a.generation, b.generation) + 1
        else:
            pieces.append((a.family, a.strength + b.strength, min(a.generation, b.generation)))
            np_gen = max(a.generation, b.generation) + 1
        out = []
        state = ul
        for fam, s, gen in pieces:
            if abs(s) < self.params.drop_tol:
                continue
            w = make_wave(sys, state, fam, s)
            speed = w.speed_hi if w.kind == RAREFACTION else w.speed_lo
            out.append(self._new_front(x, t, speed, fam, s, gen, state, w.right, w.kind))
            state = w.right
        sys.check_state(state, "simplified-solver state")
        jump = float(np.linalg.norm(ur - state))
        if jump >= self.params.drop_tol:
            out.append(self._new_front(x, t, self.lam_hat, self.np_family, jump, np_gen, state, ur,
                                       NONPHYSICAL))
        return out

    def _boundary_event(self, t, front, data_jump):
        self.time = t
        x_b = float(self.boundary.gamma(t))
        incoming = ()
        if front is not None:
            incoming = ((front.family, front.strength),)
            u_o = front.right
            after = front.next
            self._kill(front, t)
            gen = 1 if data_jump else front.generation
        else:
            u_o = self.trace_state()
            after = self.head
            gen = 1
        bsol = solve_boundary_riemann(self.boundary, u_o, self.boundary.g(t),
                                      trust_radius=self.params.trust_radius)
        out = self._fronts_from_waves(bsol.waves, x_b, t, lambda k: gen, set(range(1, self.n + 1)))
        if out:
            out[-1].right = u_o
        old_head = self.head if front is None else front
        self._insert_between(None, after, out)
        self._after_change(None, after, out, old_head)
        kind = DATA_JUMP if front is None else BOUNDARY_HIT
        return self._log_event(Event(t, kind, x_b, incoming,
                                     tuple((f.family, f.strength) for f in out), "boundary"))

    def _after_change(self, before, after, out, old_head):
        if out:
            self._schedule_pair(before, out[0])
            for p, q in zip(out[:-1], out[1:]):
                self._schedule_pair(p, q)
            self._schedule_pair(out[-1], after)
        else:
            self._schedule_pair(before, after)
        if self.head is not old_head:
            self._schedule_boundary(self.head)
        if self.params.check_invariants:
            self.configuration().check()

    # -- source increments ----------------------------------------------------
    def apply_increment(self, incr, label=SPLIT_STEP):
        """Add the staircase ``incr`` to the current solution on ``x >= gamma``.

        Fronts whose flanking states are unchanged are kept; clusters of
        fronts at a point where the increment is nonzero or jumps are
        replaced by a fresh fan, new jumps of the increment get new fans and
        the boundary problem is re-solved when the trace changes.  All new
        waves have generation 1.
        """
        sys = self.system
        t = self.time
        x_b = float(self.boundary.gamma(t))
        incr = incr.with_left(x_b, np.zeros(self.n)).simplify()
        all_split = set(range(1, self.n + 1))
        fronts = list(self.iter_fronts())
        # group fronts sharing a position
        clusters = []
        for f in fronts:
            x = f.position(t)
            if clusters and x == clusters[-1][0]:
                clusters[-1][1].append(f)
            else:
                clusters.append((x, [f]))
        d_jumps = set(float(x) for x in incr.breaks if x > x_b)
        chain = []
        incoming, outgoing = [], []
        trace_old = self.trace_state()

        def new_fan(x, ul, ur):
            if np.array_equal(ul, ur):
                return []
            sol = solve_riemann(sys, ul, ur, self.params.trust_radius)
            fr = self._fronts_from_waves(sol.waves, x, t, lambda k: 1, all_split)
            if fr:
                fr[0].left = ul
                fr[-1].right = ur
            outgoing.extend((g.family, g.strength) for g in fr)
            return fr

        cluster_x = [c[0] for c in clusters]
        pending = sorted(x for x in d_jumps if x not in set(cluster_x))
        pi = 0
        state_old = trace_old
        for x, members in clusters + [(math.inf, [])]:
            while pi < len(pending) and pending[pi] < x:
                xp = pending[pi]
                chain.extend(new_fan(xp, state_old + incr.left_limit(xp), state_old + incr(xp)))
                pi += 1
            if not members:
                break
            ul_old, ur_old = members[0].left, members[-1].right
            dm, dp = incr.left_limit(x), incr(x)
            if not np.any(dm) and not np.any(dp):
                chain.extend(members)
            else:
                for f in members:
                    incoming.append((f.family, f.strength))
                    self._kill(f, t)
                chain.extend(new_fan(x, ul_old + dm, ur_old + dp))
            state_old = ur_old
        # boundary: the trace state may have moved
        d_trace = incr(x_b)
        if np.any(d_trace):
            u_o = trace_old + d_trace
            sys.check_state(u_o, "trace after source step")
            bsol = solve_boundary_riemann(self.boundary, u_o, self.boundary.g(t),
                                          trust_radius=self.params.trust_radius)
            bfr = self._fronts_from_waves(bsol.waves, x_b, t, lambda k: 1, all_split)
            if bfr:
                bfr[-1].right = u_o
            outgoing.extend((g.family, g.strength) for g in bfr)
            chain = bfr + chain
        far_new = self.far + incr.values[-1]
        if np.any(incr.values[-1]):
            raise ValueError("source increment must vanish at +infinity")
        self.far = far_new
        # restore exact chaining
        self._rechain(chain)
        for f in chain:
            sys.check_state(f.right, "state after source step")
        self._insert_between(None, None, chain)
        self._reschedule_all()
        return self._log_event(Event(t, label, x_b, tuple(incoming), tuple(outgoing), "source"))

    # -- reporting ---------------------------------------------------------
    def configuration(self):
        t = self.time
        views = tuple(FrontView(f.id, f.position(t), f.speed, f.family, f.strength, f.generation,
                                f.left, f.right, f.kind, f.perturbation) for f in self.iter_fronts())
        return Configuration(t, views, float(self.boundary.gamma(t)), self.trace_state(), self.far,
                             self.system.base_state, self.boundary.ell, self.system)

    def report(self):
        if self.weights is None:
            return None
        fam, s, sh = [], [], []
        for f in self.iter_fronts():
            fam.append(f.family)
            s.append(f.strength)
            sh.append(f.kind == SHOCK)
        return upsilon_from_arrays(self.time, fam, s, sh, self.system, self.boundary.ell,
                                   self.boundary.gdata, self.weights)

    def nonphysical_strength(self):
        return float(sum(f.strength for f in self.iter_fronts() if f.kind == NONPHYSICAL))

    def _log_event(self, ev, initial=False):
        rep = self.report()
        if rep is not None:
            if self._last_report is not None and not initial:
                prev = self._last_report
                ev = Event(ev.time, ev.kind, ev.location, ev.incoming, ev.outgoing, ev.solver,
                           rep.V - prev.V, rep.Q - prev.Q, rep.Upsilon - prev.Upsilon)
            self._last_report = rep
            self.functionals.append(rep)
        if self.record_events:
            self.events.append(ev)
        return ev

    def write_events(self, path):
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(json.dumps(ev.record()) + "\n")


@dataclass
class RunResult:
    tracker: FrontTracker
    trajectory: Trajectory
    events: list
    functionals: list
    final: Configuration
    snapshots: dict

    @property
    def u_final(self):
        return self.final.staircase()


def run(system, boundary, params, u0, T, snapshots=(), weights=None, g=None, support=None,
        record_events=True):
    """Approximate the data, track fronts up to time ``T`` and collect output."""
    u_eps, g_eps = approximate_data(u0, boundary.gdata if g is None else g, params.epsilon,
                                    support=support, horizon=T, delta0=params.delta0,
                                    base=system.base_state)
    bdry = boundary if g_eps is boundary.gdata else boundary.with_data(g_eps)
    tr = FrontTracker(system, bdry, params, weights, record_events).initialize(u_eps)
    if weights is not None:
        ups0 = tr.report().Upsilon
        if ups0 > params.delta0:
            raise TVTooLarge(f"initial potential {ups0:.4g} exceeds delta0 = {params.delta0:g}")
    snaps = {}
    for ts in sorted(float(s) for s in snapshots if s <= T):
        tr.run_until(ts)
        snaps[ts] = tr.configuration()
    tr.run_until(T)
    final = tr.configuration()
    return RunResult(tr, tr.trajectory, tr.events, tr.functionals, final, snaps)
