"""Interior and boundary Riemann problems.

``solve_riemann`` inverts the glued Lax curves, ``solve_boundary_riemann``
finds the trace state and the entering waves at a non-characteristic
boundary.  Both use Newton's method with a finite-difference Jacobian and a
trust radius on the strengths; outside the radius they fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LeftOmega, NoConvergence
from .systems import (char_speed, eigen_decompose, glue_lax, inverse_lax_curve, lax_curve,
                      rarefaction_curve, shock_curve)

SHOCK = "shock"
RAREFACTION = "rarefaction"
CONTACT = "contact"

RIEMANN_TOL = 1e-13
MAXITER = 50
DEFAULT_TRUST = 1.0


@dataclass(frozen=True)
class Wave:
    family: int
    kind: str
    strength: float
    left: np.ndarray
    right: np.ndarray
    speed_lo: float
    speed_hi: float

    @property
    def speed(self):
        return self.speed_hi if self.kind == RAREFACTION else self.speed_lo


def make_wave(sys, left, family, strength, right=None, use_shock_curve=False):
    """Elementary wave of ``family`` leaving ``left`` with ``strength``.

    ``right`` overrides the computed right state (used to absorb round-off
    so that consecutive waves chain exactly).
    """
    left = np.asarray(left, dtype=float)
    if not sys.is_gnl(family):
        new_right = rarefaction_curve(sys, left, family, strength)
        lam = char_speed(sys, left, family)
        return Wave(family, CONTACT, strength, left, new_right if right is None else right, lam, lam)
    if strength < 0.0 or use_shock_curve:
        new_right, s = shock_curve(sys, left, family, strength)
        return Wave(family, SHOCK, strength, left, new_right if right is None else right, s, s)
    new_right = rarefaction_curve(sys, left, family, strength)
    right = new_right if right is None else right
    return Wave(family, RAREFACTION, strength, left, right,
                char_speed(sys, left, family), char_speed(sys, right, family))


@dataclass(frozen=True)
class RiemannSolution:
    system: object = field(repr=False)
    left: np.ndarray
    right: np.ndarray
    strengths: np.ndarray
    waves: tuple

    def __call__(self, xi):
        return evaluate_fan(self, xi)


@dataclass(frozen=True)
class BoundaryRiemannSolution:
    system: object = field(repr=False)
    trace_state: np.ndarray
    interior_state: np.ndarray
    datum: np.ndarray
    strengths: np.ndarray
    waves: tuple
    families: tuple


def _fd_jacobian(fun, x, f0, h=1e-7):
    J = np.empty((f0.size, x.size))
    for k in range(x.size):
        e = np.zeros(x.size)
        e[k] = h
        J[:, k] = (fun(x + e) - fun(x - e)) / (2 * h)
    return J


def newton_solve(fun, x0, trust, what):
    """Damped Newton with a finite-difference Jacobian; fails outside ``|x| <= trust``."""
    x = np.asarray(x0, dtype=float)
    F = fun(x)
    for _ in range(MAXITER):
        fnorm = np.linalg.norm(F)
        if fnorm <= RIEMANN_TOL:
            return x
        J = _fd_jacobian(fun, x, F)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"{what}: singular Jacobian") from exc
        t = 1.0
        while True:
            x_new = x + t * step
            if np.linalg.norm(x_new) > trust:
                raise NoConvergence(f"{what}: strengths left the trust radius {trust}")
            F_new = fun(x_new)
            if np.linalg.norm(F_new) < (1.0 - 1e-4 * t) * fnorm or t < 1.0 / 64:
                break
            t *= 0.5
        x, F = x_new, F_new
    if np.linalg.norm(F) <= 1e2 * RIEMANN_TOL:
        return x
    raise NoConvergence(f"{what}: residual {np.linalg.norm(F):.2e} after {MAXITER} iterations")


def _build_fan(sys, left, right, strengths, families, use_shock_curve=False):
    waves = []
    state = np.asarray(left, dtype=float)
    active = [(f, s) for f, s in zip(families, strengths) if s != 0.0]
    for k, (fam, s) in enumerate(active):
        last = k == len(active) - 1
        w = make_wave(sys, state, fam, s, right=right if last else None,
                      use_shock_curve=use_shock_curve)
        waves.append(w)
        state = w.right
    return tuple(waves)


def riemann_strengths(sys, u_minus, u_plus, trust_radius=DEFAULT_TRUST):
    """Strength vector ``E(u_minus, u_plus)``."""
    ul = np.atleast_1d(np.asarray(u_minus, dtype=float))
    ur = np.atleast_1d(np.asarray(u_plus, dtype=float))
    if np.array_equal(ul, ur):
        return np.zeros(sys.n)
    mid = 0.5 * (ul + ur)
    R = eigen_decompose(sys, mid)[1]
    guess = np.linalg.solve(R, ur - ul)

    def fun(sig):
        return glue_lax(sys, ul, sig, check=False) - ur

    return newton_solve(fun, guess, trust_radius, "Riemann problem")


def solve_riemann(sys, u_minus, u_plus, trust_radius=DEFAULT_TRUST):
    ul = np.atleast_1d(np.asarray(u_minus, dtype=float))
    ur = np.atleast_1d(np.asarray(u_plus, dtype=float))
    sys.check_state(ul, "left state")
    sys.check_state(ur, "right state")
    sig = riemann_strengths(sys, ul, ur, trust_radius)
    sig[np.abs(sig) < 1e-15] = 0.0
    waves = _build_fan(sys, ul, ur, sig, range(1, sys.n + 1))
    return RiemannSolution(sys, ul, ur, sig, waves)


def evaluate_fan(sol, xi):
    """Self-similar value at ``x / t = xi`` (right-continuous across shocks)."""
    state = sol.left
    for w in sol.waves:
        if xi < w.speed_lo:
            return state
        if w.kind == RAREFACTION and xi < w.speed_hi:
            return rarefaction_curve(sol.system, w.left, w.family, xi - w.speed_lo)
        state = w.right
    return state


def _trace_from(sys, u_o, sig, families, curve_kind):
    v = np.asarray(u_o, dtype=float)
    for fam, s in sorted(zip(families, sig), reverse=True):
        if s == 0.0:
            continue
        if curve_kind == "lax":
            v = inverse_lax_curve(sys, v, fam, -s, check=False)
        else:
            v = shock_curve(sys, v, fam, -s, check=False)[0]
    return v


def solve_boundary_riemann(bdry, u_o, g_o, curve_kind="lax", trust_radius=DEFAULT_TRUST):
    """Trace state ``u^sigma`` with ``b(u^sigma) = g_o`` connected to ``u_o``
    by waves of the entering families ``ell+1..n``.

    ``curve_kind`` is ``"lax"`` (Lax curves) or ``"shock"`` (Hugoniot curves).
    """
    if curve_kind not in ("lax", "shock"):
        raise ValueError("curve_kind must be 'lax' or 'shock'")
    sys = bdry.system
    u_o = np.atleast_1d(np.asarray(u_o, dtype=float))
    g_o = np.atleast_1d(np.asarray(g_o, dtype=float))
    sys.check_state(u_o, "interior state")
    families = tuple(range(bdry.ell + 1, sys.n + 1))
    R = eigen_decompose(sys, u_o)[1][:, bdry.ell:]
    resid0 = bdry.b(u_o) - g_o
    if np.max(np.abs(resid0)) == 0.0:
        sig = np.zeros(len(families))
    else:
        guess = np.linalg.solve(bdry.db(u_o) @ R, resid0)

        def fun(sig):
            return bdry.b(_trace_from(sys, u_o, sig, families, curve_kind)) - g_o

        sig = newton_solve(fun, guess, trust_radius, "boundary Riemann problem")
        sig[np.abs(sig) < 1e-15] = 0.0
    trace = _trace_from(sys, u_o, sig, families, curve_kind)
    sys.check_state(trace, "boundary trace")
    waves = _build_fan(sys, trace, u_o, sig, families, use_shock_curve=curve_kind == "shock")
    return BoundaryRiemannSolution(sys, trace, u_o, g_o, sig, waves, families)


def lax_then_back(sys, u, family, sigma):
    """``inverse_lax(-sigma)(lax(sigma)(u))``; identity up to round-off."""
    return inverse_lax_curve(sys, lax_curve(sys, u, family, sigma), family, -sigma)


__all__ = [
    "Wave", "RiemannSolution", "BoundaryRiemannSolution", "make_wave", "riemann_strengths",
    "solve_riemann", "solve_boundary_riemann", "evaluate_fan", "LeftOmega", "NoConvergence",
    "SHOCK", "RAREFACTION", "CONTACT",
]
