"""Glimm-type potentials, the weighted distance functional and the curve functional.

Fronts are described by three parallel arrays in spatial order: family
(``n + 1`` marks a non-physical front), signed strength and a shock flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NoConvergence
from .riemann import riemann_strengths, solve_boundary_riemann
from .systems import glue_shock, eigen_decompose, lax_curve


@dataclass(frozen=True)
class FunctionalWeights:
    """Coefficients of the potentials.

    ``K`` weighs waves of the families leaving through the boundary, ``H1``
    the residual boundary-data variation, ``H2`` the interaction potential.
    ``kappa1``, ``kappa2`` and ``Kbar`` enter the distance functional,
    ``Kcheck`` and ``Khat`` the curve functional.
    """

    K: float
    H1: float
    H2: float
    kappa1: float = 0.5
    kappa2: float = 0.5
    Kbar: float = 2.0
    Kcheck: float = 2.5
    Khat: float = 2.0
    C: float = float("nan")

    def __post_init__(self):
        for name in ("K", "H1", "H2"):
            if getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be at least 1")

    @classmethod
    def from_constant(cls, C, margin_c=None, **kw):
        """Weights built from an interaction constant ``C``: ``K`` first,
        then ``H1``, then ``H2``."""
        K = 4.0 * C + 1.0
        H1 = 3.0 * C + 1.0
        H2 = 4.0 * C * K + 1.0
        if margin_c is not None and "Kbar" not in kw:
            kw["Kbar"] = max(2.0, 2.0 * C / margin_c)
        return cls(K=K, H1=H1, H2=H2, C=C, **kw)

    @classmethod
    def from_fit(cls, bdry, strength=0.05, samples=200, seed=0, **kw):
        C = fit_interaction_constant(bdry, strength, samples, seed)
        return cls.from_constant(C, bdry.margin_c, **kw)

    @property
    def delta0_theory(self):
        return 1.0 / (2.0 * self.H2)

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class FunctionalReport:
    time: float
    V: float
    Vg: float
    Q: float
    Upsilon: float
    V_by_family: np.ndarray = field(repr=False)
    approaching_pairs: int = 0

    def as_row(self):
        return {"time": self.time, "V": self.V, "Vg": self.Vg, "Q": self.Q, "Upsilon": self.Upsilon}


def linear_potential(families, strengths, ell, K, n):
    """Weighted total strength and its per-family breakdown (index ``n`` is
    the non-physical family)."""
    fam = np.asarray(families, dtype=int)
    a = np.abs(np.asarray(strengths, dtype=float))
    by_fam = np.bincount(fam - 1, weights=a, minlength=n + 1)[: n + 1]
    w = np.ones(n + 1)
    w[:ell] = K
    return float((w * by_fam).sum()), by_fam


def interaction_potential(families, strengths, shocks, n, gnl):
    """Sum of ``|s_x s_y|`` over approaching pairs ``x < y``.

    A pair approaches when the left family is larger, or when both belong to
    the same genuinely nonlinear family and at least one is a shock.  The
    non-physical family ``n + 1`` is larger than every physical family.
    Returns ``(Q, pair_count)``.
    """
    fam = np.asarray(families, dtype=int)
    if fam.size < 2:
        return 0.0, 0
    a = np.abs(np.asarray(strengths, dtype=float))
    sh = np.asarray(shocks, dtype=bool)
    m = n + 1
    N = fam.size
    onehot = np.zeros((N, m))
    onehot[np.arange(N), fam - 1] = 1.0
    # exclusive prefix sums: what lies to the left of each front
    left_a = np.cumsum(onehot * a[:, None], axis=0) - onehot * a[:, None]
    left_c = np.cumsum(onehot, axis=0) - onehot
    shock_a = onehot * (a * sh)[:, None]
    shock_c = onehot * sh[:, None]
    left_sa = np.cumsum(shock_a, axis=0) - shock_a
    left_sc = np.cumsum(shock_c, axis=0) - shock_c
    # sum over families strictly greater than fam[k]
    greater_a = np.cumsum(left_a[:, ::-1], axis=1)[:, ::-1]
    greater_c = np.cumsum(left_c[:, ::-1], axis=1)[:, ::-1]
    idx = np.arange(N)
    nxt = np.minimum(fam, m - 1)  # column index of family fam+1
    over_a = np.where(fam < m, greater_a[idx, nxt], 0.0)
    over_c = np.where(fam < m, greater_c[idx, nxt], 0.0)
    g = np.zeros(m, dtype=bool)
    g[: n] = np.asarray(gnl, dtype=bool)
    same_gnl = g[fam - 1]
    same_a = np.where(sh, left_a[idx, fam - 1], left_sa[idx, fam - 1])
    same_c = np.where(sh, left_c[idx, fam - 1], left_sc[idx, fam - 1])
    tot_a = over_a + np.where(same_gnl, same_a, 0.0)
    tot_c = over_c + np.where(same_gnl, same_c, 0.0)
    return float((a * tot_a).sum()), int(round(tot_c.sum()))


def boundary_variation(gdata, t):
    """Variation of the boundary datum over jumps strictly after ``t``."""
    return gdata.total_variation(t, np.inf)


def upsilon_from_arrays(t, families, strengths, shocks, sys, ell, gdata, weights):
    n = sys.n
    gnl = [sys.is_gnl(i) for i in range(1, n + 1)]
    V, by_fam = linear_potential(families, strengths, ell, weights.K, n)
    Q, pairs = interaction_potential(families, strengths, shocks, n, gnl)
    Vg = boundary_variation(gdata, t)
    ups = V + weights.H1 * Vg + weights.H2 * Q
    return FunctionalReport(float(t), V, Vg, Q, ups, by_fam, pairs)


def compute_upsilon(cfg, gdata, weights, variant="approximate", bdry=None):
    """Potentials of a configuration.

    ``variant="approximate"`` counts non-physical fronts as an extra family.
    ``variant="exact"`` drops them and replaces the boundary waves by a fresh
    boundary Riemann solve between the base state and the trace (needs
    ``bdry``).
    """
    sys = cfg.system
    fam = [f.family for f in cfg.fronts]
    s = [f.strength for f in cfg.fronts]
    sh = [f.kind == "shock" for f in cfg.fronts]
    if variant == "exact":
        keep = [i for i, f in enumerate(fam) if f <= sys.n]
        fam = [fam[i] for i in keep]
        s = [s[i] for i in keep]
        sh = [sh[i] for i in keep]
        if bdry is not None:
            from .riemann import solve_boundary_riemann
            sol = solve_boundary_riemann(bdry, cfg.trace_state, bdry.g(cfg.time))
            lead = [(w.family, w.strength, w.kind == "shock") for w in sol.waves if w.strength != 0.0]
            fam = [w[0] for w in lead] + fam
            s = [w[1] for w in lead] + s
            sh = [w[2] for w in lead] + sh
    elif variant != "approximate":
        raise ValueError("variant must be 'approximate' or 'exact'")
    return upsilon_from_arrays(cfg.time, fam, s, sh, sys, cfg.ell, gdata, weights)


# -- interaction constant fitting --------------------------------------------

def _random_state(sys, rng, shrink=0.5):
    lo, hi = sys.omega_lo, sys.omega_hi
    c = sys.base_state
    return c + shrink * (rng.uniform(lo, hi) - c)


def interior_interaction_ratios(sys, strength, samples, rng):
    """Ratios ``sum_k |s_out_k - s_in_k| / |s' s''|`` over random collisions."""
    n = sys.n
    out = []
    tries = 0
    while len(out) < samples and tries < 20 * samples:
        tries += 1
        i = rng.integers(1, n + 1)
        j = rng.integers(1, n + 1)
        if i < j:
            i, j = j, i
        s1 = rng.uniform(-strength, strength)
        s2 = rng.uniform(-strength, strength)
        if i == j and (not sys.is_gnl(i) or (s1 > 0 and s2 > 0)):
            continue
        if abs(s1 * s2) < 1e-8:
            continue
        try:
            ul = _random_state(sys, rng)
            um = lax_curve(sys, ul, i, s1)
            ur = lax_curve(sys, um, j, s2)
            sig = riemann_strengths(sys, ul, ur)
        except Exception:
            continue
        incoming = np.zeros(n)
        incoming[i - 1] += s1
        incoming[j - 1] += s2
        out.append(np.abs(sig - incoming).sum() / abs(s1 * s2))
    return np.asarray(out)


def boundary_interaction_ratios(bdry, strength, samples, rng, data_jump=True):
    """Ratios ``sum_{i>ell} |s~_i - s_i| / (sum_{i<=ell}|s_i| + |dg|)``.

    Each sample draws a trace state on the boundary manifold, a jump of the
    leaving families arriving from the interior and optionally a jump of the
    datum, then compares the re-solved entering strengths with the old ones.
    """
    sys = bdry.system
    ell, n = bdry.ell, sys.n
    out = []
    tries = 0
    while len(out) < samples and tries < 20 * samples:
        tries += 1
        try:
            u_o = _random_state(sys, rng)
            g_old = bdry.b(u_o) * rng.uniform(0.0, 1.0)
            sol0 = solve_boundary_riemann(bdry, u_o, g_old)
            # incoming leaving-family waves between the trace and u_o
            inc = rng.uniform(-strength, strength, ell)
            v = sol0.trace_state
            for fam in range(1, ell + 1):
                v = lax_curve(sys, v, fam, inc[fam - 1])
            # new interior state carries the incident waves on its left
            u_in = v
            sig_rest = sol0.strengths
            # build the interior state to the right of the incident waves
            w = u_in
            for k, fam in enumerate(range(ell + 1, n + 1)):
                w = lax_curve(sys, w, fam, sig_rest[k])
            dg = rng.uniform(-strength, strength, n - ell) if data_jump else np.zeros(n - ell)
            sol1 = solve_boundary_riemann(bdry, w, g_old + dg)
        except Exception:
            continue
        denom = np.abs(inc).sum() + np.linalg.norm(dg)
        if denom < 1e-8:
            continue
        out.append(np.abs(sol1.strengths - sig_rest).sum() / denom)
    return np.asarray(out)


def boundary_shock_form_ratios(bdry, strength, samples, rng):
    """Ratios ``sum |q~_i - q_i| / (sum_{i<=ell}|q_i| + |dg| + |omega|)``.

    Same sampling as :func:`boundary_interaction_ratios` but with Hugoniot
    curves throughout and a small perturbation ``omega`` of the interior
    state.
    """
    sys = bdry.system
    ell, n = bdry.ell, sys.n
    out = []
    tries = 0
    while len(out) < samples and tries < 20 * samples:
        tries += 1
        try:
            u_o = _random_state(sys, rng)
            g_old = bdry.b(u_o) * rng.uniform(0.0, 1.0)
            sol0 = solve_boundary_riemann(bdry, u_o, g_old, curve_kind="shock")
            inc = rng.uniform(-strength, strength, ell)
            v = glue_shock(sys, sol0.trace_state, inc, tuple(range(1, ell + 1)))
            w = glue_shock(sys, v, sol0.strengths, sol0.families)
            omega = rng.uniform(-strength, strength, n) * 0.1
            dg = rng.uniform(-strength, strength, n - ell)
            sol1 = solve_boundary_riemann(bdry, w + omega, g_old + dg, curve_kind="shock")
        except Exception:
            continue
        denom = np.abs(inc).sum() + np.linalg.norm(dg) + np.linalg.norm(omega)
        if denom < 1e-8:
            continue
        out.append(np.abs(sol1.strengths - sol0.strengths).sum() / denom)
    return np.asarray(out)


def holdout_fit(ratios, slack=0.2):
    """Fit ``C`` as the largest ratio of the first half and validate it on the second.

    Returns ``(C, worst_holdout_ratio / C, passed)``; the check passes when no
    held-out ratio exceeds ``(1 + slack) C``.
    """
    r = np.asarray(ratios, dtype=float)
    if r.size < 2:
        raise ValueError("need at least two samples")
    half = r.size // 2
    C = float(r[:half].max())
    worst = float(r[half:].max()) / C if C > 0 else (0.0 if r[half:].max() == 0 else np.inf)
    return C, worst, worst <= 1.0 + slack


def fit_interaction_constant(bdry, strength=0.05, samples=200, seed=0, slack=1.1):
    """Empirical constant bounding interior and boundary interaction estimates."""
    rng = np.random.default_rng(seed)
    sys = bdry.system
    r_int = interior_interaction_ratios(sys, strength, samples, rng) if sys.n > 1 else np.zeros(1)
    r_bd = boundary_interaction_ratios(bdry, strength, samples, rng)
    vals = [r.max() for r in (r_int, r_bd) if r.size]
    C = max(vals) if vals else 1.0
    return float(slack * max(C, 1e-3))


# -- shock coordinates and the distance functional -----------------------------

@dataclass(frozen=True)
class QCoordinates:
    """Vectors ``q`` with ``w = S(q)(u)`` on each interval of the common
    refinement of two staircases (``values[k]`` lives on the ``k``-th
    interval, as in :class:`Staircase`)."""

    breaks: np.ndarray
    q: np.ndarray
    u: np.ndarray
    w: np.ndarray

    def lengths(self, lo=-np.inf, hi=np.inf):
        edges = np.concatenate([[-np.inf], self.breaks, [np.inf]])
        return np.clip(edges[1:], lo, hi) - np.clip(edges[:-1], lo, hi)


def shock_coordinates(sys, u, w, trust_radius=1.0):
    """Solve ``glue_shock(u, q) = w`` for ``q``."""
    from .riemann import newton_solve

    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.array_equal(u, w):
        return np.zeros(sys.n)
    R = eigen_decompose(sys, 0.5 * (u + w))[1]
    guess = np.linalg.solve(R, w - u)

    def fun(q):
        return glue_shock(sys, u, q, check=False) - w

    return newton_solve(fun, guess, trust_radius, "shock coordinates")


def compute_q_coordinates(sys, u_stair, w_stair):
    grid = np.union1d(u_stair.breaks, w_stair.breaks)
    if grid.size:
        mids = np.concatenate([[grid[0] - 1.0], 0.5 * (grid[:-1] + grid[1:]), [grid[-1] + 1.0]])
    else:
        mids = np.zeros(1)
    uv = u_stair(mids)
    wv = w_stair(mids)
    cache = {}
    q = np.empty_like(uv)
    for k in range(uv.shape[0]):
        key = (uv[k].tobytes(), wv[k].tobytes())
        if key not in cache:
            cache[key] = shock_coordinates(sys, uv[k], wv[k])
        q[k] = cache[key]
    return QCoordinates(grid, q, uv, wv)


def _jump_table(cfg):
    """Positions, families and sizes of the physical fronts of a configuration."""
    fr = [f for f in cfg.fronts if f.family <= cfg.system.n]
    pos = np.array([f.position for f in fr], dtype=float)
    fam = np.array([f.family for f in fr], dtype=int)
    a = np.array([abs(f.strength) for f in fr], dtype=float)
    return pos, fam, a


def _sum_left_right(pos, fam, a, n, x):
    """For each point of ``x`` and family ``k``: total size of family-``k``
    jumps strictly left and strictly right of the point."""
    left = np.zeros((x.size, n))
    right = np.zeros((x.size, n))
    for k in range(1, n + 1):
        sel = fam == k
        if not np.any(sel):
            continue
        p = pos[sel]
        order = np.argsort(p)
        p, s = p[order], a[sel][order]
        cs = np.concatenate([[0.0], np.cumsum(s)])
        il = np.searchsorted(p, x, side="left")
        ir = np.searchsorted(p, x, side="right")
        left[:, k - 1] = cs[il]
        right[:, k - 1] = cs[-1] - cs[ir]
    return left, right


def interaction_weights(u_cfg, w_cfg, qc):
    """The functions ``A_i`` on every interval of ``qc``; shape ``(m, n)``."""
    sys = u_cfg.system
    n = sys.n
    grid = qc.breaks
    if grid.size:
        mids = np.concatenate([[grid[0] - 1.0], 0.5 * (grid[:-1] + grid[1:]), [grid[-1] + 1.0]])
    else:
        mids = np.zeros(1)
    pu = _jump_table(u_cfg)
    pw = _jump_table(w_cfg)
    lu, ru = _sum_left_right(*pu, n, mids)
    lw, rw = _sum_left_right(*pw, n, mids)
    lt, rt = lu + lw, ru + rw
    A = np.zeros((mids.size, n))
    for i in range(1, n + 1):
        # faster families on the left, slower ones on the right
        A[:, i - 1] = lt[:, i:].sum(axis=1) + rt[:, : i - 1].sum(axis=1)
        if sys.is_gnl(i):
            neg = qc.q[:, i - 1] < 0
            same = np.where(neg, lu[:, i - 1] + rw[:, i - 1], lw[:, i - 1] + ru[:, i - 1])
            A[:, i - 1] += same
    return A


def compute_phi(u_cfg, w_cfg, weights, gdata_u=None, gdata_w=None, details=False):
    """Weighted L1-type distance between two configurations on the same domain.

    ``sum_i Kbar_i int |q_i| W_i`` with ``Kbar_i = Kbar`` for the leaving
    families and 1 otherwise, ``W_i = 1 + kappa1 A_i + kappa2 (Ups(u) + Ups(w))``.
    """
    from .piecewise import Staircase

    sys = u_cfg.system
    zero_g = Staircase.constant(np.zeros(1))
    ups_u = compute_upsilon(u_cfg, gdata_u if gdata_u is not None else zero_g, weights).Upsilon
    ups_w = compute_upsilon(w_cfg, gdata_w if gdata_w is not None else zero_g, weights).Upsilon
    qc = compute_q_coordinates(sys, u_cfg.staircase(), w_cfg.staircase())
    A = interaction_weights(u_cfg, w_cfg, qc)
    W = 1.0 + weights.kappa1 * A + weights.kappa2 * (ups_u + ups_w)
    kb = np.ones(sys.n)
    kb[: u_cfg.ell] = weights.Kbar
    lengths = qc.lengths()
    dens = (np.abs(qc.q) * W * kb).sum(axis=1)
    used = dens > 0
    if np.any(np.isinf(lengths[used])):
        val = np.inf
    else:
        val = float((lengths[used] * dens[used]).sum())
    if details:
        return val, dict(W_min=float(W.min()), W_max=float(W.max()), q=qc, A=A)
    return val


# -- the curve functional ------------------------------------------------------

def compute_xi(trajectory, curve, weights, ell_tilde, times, gdata=None, trace_tv=None):
    """Curve functional at each of ``times``.

    Counts the waves still to cross ``curve`` (families ``<= ell_tilde`` to
    its right, faster ones between the boundary and the curve), adds
    ``Khat`` times the Glimm potential and the variation of the trace along
    the curve accumulated so far.
    """
    from .traces import sample_trace

    sys = trajectory.system
    bdry = trajectory.boundary
    gdata = bdry.gdata if gdata is None else gdata
    times = np.atleast_1d(np.asarray(times, dtype=float))
    horizon = float(times.max()) + 1.0 if times.size else 1.0
    trace = sample_trace(trajectory, curve, horizon) if trace_tv is None else trace_tv
    out = []
    a = trajectory.arrays
    for t in times:
        sel, pos = trajectory.alive_at(t)
        fam = a["family"][sel]
        s = a["strength"][sel]
        gx = float(curve.gamma(t))
        bx = float(bdry.gamma(t))
        right = (pos >= gx) & (fam <= ell_tilde)
        between = (pos >= bx) & (pos <= gx) & (fam > ell_tilde)
        crossing = float(np.abs(s[right]).sum() + np.abs(s[between]).sum())
        shock = np.array([_is_shock(trajectory, k) for k in sel], dtype=bool)
        rep = upsilon_from_arrays(t, fam, s, shock, sys, bdry.ell, gdata, weights)
        tv = trace.total_variation(-np.inf, t)
        out.append(weights.Kcheck * (crossing + weights.Khat * rep.Upsilon) + tv)
    return np.asarray(out)


def _is_shock(trajectory, k):
    return trajectory._fronts[k].kind == "shock"
