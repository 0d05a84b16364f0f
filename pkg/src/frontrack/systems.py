"""Strictly hyperbolic systems and their elementary wave curves.

Strengths follow the usual normalization: along a genuinely nonlinear
family the characteristic speed grows with unit rate both on the
rarefaction and on the shock branch, so that ``lambda_i(psi_i(s)(u)) =
lambda_i(u) + s``.  Along a linearly degenerate family ``s`` is arc length.
Families are numbered ``1..n``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import LeftOmega, NoConvergence, NonHyperbolic

GNL = "GNL"
LD = "LD"

ANALYTIC = "analytic"
NUMERIC = "numeric"

CURVE_RTOL = 1e-12
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
# below this strength the shock and rarefaction branches agree to O(s^3)
TINY_STRENGTH = 1e-7


@dataclass(frozen=True)
class AnalyticCurves:
    """Closed-form eigenstructure and wave curves of a system.

    ``eigen(u)`` returns ``(eigenvalues, R)`` with normalized eigenvectors as
    columns, ``rarefaction(u, i, s)`` a state and ``shock(u, i, s)`` a
    ``(state, speed)`` pair.
    """

    eigen: Callable
    rarefaction: Callable
    shock: Callable


@dataclass(frozen=True, eq=False)
class SystemSpec:
    name: str
    n: int
    flux: Callable
    jacobian: Callable
    fields: tuple
    omega_lo: np.ndarray
    omega_hi: np.ndarray
    base_state: np.ndarray
    lambda_hat: Optional[float] = None
    curve_provider: Optional[tuple] = None
    analytic: Optional[AnalyticCurves] = None
    speed_bounds: np.ndarray = field(init=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.omega_lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.omega_hi, dtype=float))
        base = np.atleast_1d(np.asarray(self.base_state, dtype=float))
        if not (lo.size == hi.size == base.size == self.n == len(self.fields)):
            raise ValueError("dimension mismatch in system definition")
        if np.any(lo >= hi) or np.any(base < lo) or np.any(base > hi):
            raise ValueError("base state must lie inside a non-empty box")
        for tag in self.fields:
            if tag not in (GNL, LD):
                raise ValueError(f"unknown field type {tag!r}")
        provider = self.curve_provider
        if provider is None:
            provider = (ANALYTIC if self.analytic else NUMERIC,) * self.n
        if any(p == ANALYTIC for p in provider) and self.analytic is None:
            raise ValueError("analytic provider requested without closed forms")
        object.__setattr__(self, "omega_lo", lo)
        object.__setattr__(self, "omega_hi", hi)
        object.__setattr__(self, "base_state", base)
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "curve_provider", tuple(provider))

        bounds = _sample_speed_bounds(self)
        object.__setattr__(self, "speed_bounds", bounds)
        top = float(np.max(np.abs(bounds)))
        if self.lambda_hat is None:
            object.__setattr__(self, "lambda_hat", 1.1 * top + 0.05)
        elif self.lambda_hat <= top:
            raise ValueError(f"lambda_hat={self.lambda_hat} must exceed max |lambda| = {top}")

    def in_box(self, u, tol=1e-12):
        u = np.asarray(u, dtype=float)
        slack = tol * (1.0 + np.abs(self.omega_hi - self.omega_lo))
        return bool(np.all(u >= self.omega_lo - slack) and np.all(u <= self.omega_hi + slack))

    def check_state(self, u, what="state"):
        if not self.in_box(u):
            raise LeftOmega(f"{what} {np.asarray(u).tolist()} outside the admissible box of {self.name}")

    def is_gnl(self, i):
        return self.fields[i - 1] == GNL

    def with_provider(self, provider):
        """Copy of this system using ``provider`` for every family."""
        return SystemSpec(self.name, self.n, self.flux, self.jacobian, self.fields,
                          self.omega_lo, self.omega_hi, self.base_state, self.lambda_hat,
                          (provider,) * self.n, self.analytic)

    def with_box(self, lo, hi, base=None, lambda_hat=None):
        return SystemSpec(self.name, self.n, self.flux, self.jacobian, self.fields, lo, hi,
                          self.base_state if base is None else base, lambda_hat,
                          self.curve_provider, self.analytic)


# ---------------------------------------------------------------------------
# eigenstructure


def _raw_eigenvalues(sys, u):
    w = np.linalg.eigvals(np.atleast_2d(sys.jacobian(u)))
    scale = 1.0 + np.max(np.abs(w))
    if np.max(np.abs(w.imag)) > 1e-10 * scale:
        raise NonHyperbolic(f"complex eigenvalues at {np.asarray(u).tolist()}")
    w = np.sort(w.real)
    if w.size > 1 and np.min(np.diff(w)) <= 1e-10 * scale:
        raise NonHyperbolic(f"repeated eigenvalues at {np.asarray(u).tolist()}")
    return w


def _numeric_eigen(sys, u):
    u = np.asarray(u, dtype=float)
    A = np.atleast_2d(sys.jacobian(u))
    w, V = np.linalg.eig(A)
    scale = 1.0 + np.max(np.abs(w))
    if np.max(np.abs(w.imag)) > 1e-10 * scale:
        raise NonHyperbolic(f"complex eigenvalues at {u.tolist()}")
    order = np.argsort(w.real)
    lam = w.real[order]
    R = V.real[:, order]
    if lam.size > 1 and np.min(np.diff(lam)) <= 1e-10 * scale:
        raise NonHyperbolic(f"repeated eigenvalues at {u.tolist()}")
    h = 1e-5
    for k in range(sys.n):
        r = R[:, k] / np.linalg.norm(R[:, k])
        if sys.fields[k] == GNL:
            dl = (_raw_eigenvalues(sys, u + h * r)[k] - _raw_eigenvalues(sys, u - h * r)[k]) / (2 * h)
            if abs(dl) < 1e-10:
                raise NonHyperbolic(f"family {k + 1} is not genuinely nonlinear at {u.tolist()}")
            R[:, k] = r / dl
        else:
            R[:, k] = r if r[np.argmax(np.abs(r))] > 0 else -r
    return lam, R


def eigen_decompose(sys, u):
    """Eigenvalues (increasing) and normalized right eigenvectors (columns)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if sys.analytic is not None:
        lam, R = sys.analytic.eigen(u)
        return np.asarray(lam, dtype=float), np.asarray(R, dtype=float)
    return _numeric_eigen(sys, u)


def eigenvalues(sys, u):
    return eigen_decompose(sys, u)[0]


def char_speed(sys, u, i):
    return float(eigen_decompose(sys, u)[0][i - 1])


def _sample_speed_bounds(sys):
    axes = [np.linspace(a, b, 7) for a, b in zip(sys.omega_lo, sys.omega_hi)]
    lam = np.array([eigen_decompose(sys, np.array(p))[0] for p in itertools.product(*axes)])
    bounds = np.column_stack([lam.min(axis=0), lam.max(axis=0)])
    if np.any(bounds[1:, 0] <= bounds[:-1, 1]):
        raise NonHyperbolic(f"characteristic speed ranges of {sys.name} overlap on the box")
    return bounds


# ---------------------------------------------------------------------------
# elementary curves


def _provider(sys, i):
    return sys.curve_provider[i - 1]


def _numeric_rarefaction(sys, u, i, sigma):
    if sigma == 0.0:
        return u.copy()

    def rhs(_, y):
        return eigen_decompose(sys, y)[1][:, i - 1]

    sol = solve_ivp(rhs, (0.0, sigma), u, method="DOP853", rtol=CURVE_RTOL, atol=1e-13)
    if not sol.success:
        raise NoConvergence(f"rarefaction integration failed: {sol.message}")
    return sol.y[:, -1]


def _grad_lambda(sys, v, i):
    g = np.empty(sys.n)
    for k in range(sys.n):
        h = 1e-6 * max(1.0, abs(v[k]))
        e = np.zeros(sys.n)
        e[k] = h
        g[k] = (char_speed(sys, v + e, i) - char_speed(sys, v - e, i)) / (2 * h)
    return g


def _numeric_shock(sys, u, i, sigma):
    lam_u = char_speed(sys, u, i)
    v = _numeric_rarefaction(sys, u, i, sigma)
    if abs(sigma) < TINY_STRENGTH:
        return v, lam_u + 0.5 * sigma
    s = 0.5 * (lam_u + char_speed(sys, v, i))
    fu = np.atleast_1d(sys.flux(u))
    n = sys.n

    def residual(v, s):
        return np.concatenate([np.atleast_1d(sys.flux(v)) - fu - s * (v - u),
                               [char_speed(sys, v, i) - lam_u - sigma]])

    F = residual(v, s)
    for _ in range(NEWTON_MAXITER):
        fnorm = np.linalg.norm(F)
        if fnorm <= NEWTON_TOL:
            return v, s
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = np.atleast_2d(sys.jacobian(v)) - s * np.eye(n)
        J[:n, n] = -(v - u)
        J[n, :n] = _grad_lambda(sys, v, i)
        step = np.linalg.solve(J, -F)
        t = 1.0
        while True:
            v_new, s_new = v + t * step[:n], s + t * step[n]
            F_new = residual(v_new, s_new)
            if np.linalg.norm(F_new) < (1.0 - 1e-4 * t) * fnorm or t < 1.0 / 64:
                break
            t *= 0.5
        v, s, F = v_new, s_new, F_new
    if np.linalg.norm(F) <= 1e3 * NEWTON_TOL:
        return v, s
    raise NoConvergence(f"shock curve of family {i} from {u.tolist()} with strength {sigma}")


def rarefaction_curve(sys, u, family, sigma, check=True):
    """State ``R_i(sigma)(u)``; ``sigma`` may have either sign (curve extension)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sigma = float(sigma)
    if check:
        sys.check_state(u)
    if _provider(sys, family) == ANALYTIC:
        v = np.atleast_1d(np.asarray(sys.analytic.rarefaction(u, family, sigma), dtype=float))
    else:
        v = _numeric_rarefaction(sys, u, family, sigma)
    if check:
        sys.check_state(v, f"R_{family}({sigma})")
    return v


def shock_curve(sys, u, family, sigma, check=True):
    """``(S_i(sigma)(u), shock speed)``; linearly degenerate families return the
    contact curve with speed ``lambda_i``."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    sigma = float(sigma)
    if check:
        sys.check_state(u)
    if sigma == 0.0:
        return u.copy(), char_speed(sys, u, family)
    if _provider(sys, family) == ANALYTIC:
        v, s = sys.analytic.shock(u, family, sigma)
        v = np.atleast_1d(np.asarray(v, dtype=float))
    elif sys.is_gnl(family):
        v, s = _numeric_shock(sys, u, family, sigma)
    else:
        v, s = _numeric_rarefaction(sys, u, family, sigma), char_speed(sys, u, family)
    if check:
        sys.check_state(v, f"S_{family}({sigma})")
    return v, float(s)


def lax_curve(sys, u, family, sigma, check=True):
    if sigma >= 0.0 or not sys.is_gnl(family):
        return rarefaction_curve(sys, u, family, sigma, check)
    return shock_curve(sys, u, family, sigma, check)[0]


def inverse_lax_curve(sys, u, family, sigma, check=True):
    if sigma < 0.0 or not sys.is_gnl(family):
        return rarefaction_curve(sys, u, family, sigma, check)
    return shock_curve(sys, u, family, sigma, check)[0]


def glue_lax(sys, u, sigmas, families=None, check=True):
    """Apply ``psi_i(sigma_i)`` in increasing family order."""
    families = range(1, sys.n + 1) if families is None else families
    v = np.atleast_1d(np.asarray(u, dtype=float))
    for fam, s in zip(families, sigmas):
        if s != 0.0:
            v = lax_curve(sys, v, fam, s, check)
    return v


def glue_shock(sys, u, q, families=None, check=True):
    """Apply ``S_i(q_i)`` in increasing family order regardless of sign."""
    families = range(1, sys.n + 1) if families is None else families
    v = np.atleast_1d(np.asarray(u, dtype=float))
    for fam, s in zip(families, q):
        if s != 0.0:
            v = shock_curve(sys, v, fam, s, check)[0]
    return v


# ---------------------------------------------------------------------------
# built-in systems

_REGISTRY = {}


def register_system(name):
    """Decorator registering a system factory under ``name``."""

    def deco(factory):
        _REGISTRY[name] = factory
        return factory

    return deco


def get_system(name, **params):
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown system {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(**params)


def available_systems():
    return sorted(_REGISTRY)


def custom_system(name, flux, jacobian, fields, omega_lo, omega_hi, base_state=None,
                  lambda_hat=None):
    """A system with numeric curves only: flux, Jacobian, field tags and box."""
    lo = np.atleast_1d(np.asarray(omega_lo, dtype=float))
    hi = np.atleast_1d(np.asarray(omega_hi, dtype=float))
    base = 0.5 * (lo + hi) if base_state is None else base_state
    return SystemSpec(name, lo.size, flux, jacobian, tuple(fields), lo, hi, base, lambda_hat)


@register_system("advection")
def linear_advection(speed=1.0, lo=-2.0, hi=2.0, lambda_hat=None, provider=ANALYTIC):
    a = float(speed)
    curves = AnalyticCurves(
        eigen=lambda u: (np.array([a]), np.array([[1.0]])),
        rarefaction=lambda u, i, s: u + s,
        shock=lambda u, i, s: (u + s, a),
    )
    return SystemSpec("advection", 1, lambda u: a * np.asarray(u, dtype=float),
                      lambda u: np.array([[a]]), (LD,), [lo], [hi], [0.0],
                      lambda_hat, (provider,), curves)


@register_system("burgers")
def burgers(lo=-0.5, hi=1.5, base=0.0, lambda_hat=None, provider=ANALYTIC):
    curves = AnalyticCurves(
        eigen=lambda u: (np.array([u[0]]), np.array([[1.0]])),
        rarefaction=lambda u, i, s: u + s,
        shock=lambda u, i, s: (u + s, u[0] + 0.5 * s),
    )
    return SystemSpec("burgers", 1, lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
                      lambda u: np.array([[u[0]]]), (GNL,), [lo], [hi], [base],
                      lambda_hat, (provider,), curves)


def _psystem_eigen(u):
    rho, q = u
    v = q / rho
    lam = np.array([v - 1.0, v + 1.0])
    R = np.array([[-rho, rho], [-rho * (v - 1.0), rho * (v + 1.0)]])
    return lam, R


def _psystem_rarefaction(u, i, s):
    rho, q = u
    v = q / rho
    rho_new = rho * np.exp(-s if i == 1 else s)
    return np.array([rho_new, rho_new * (v + s)])


def _psystem_shock(u, i, s):
    rho, q = u
    v = q / rho
    root = np.sqrt(s * s + 4.0)
    z = 0.5 * (-s + root) if i == 1 else 0.5 * (s + root)
    rho_new = rho * z * z
    speed = v - z if i == 1 else v + z
    return np.array([rho_new, rho_new * (v + s)]), speed


@register_system("psystem")
def isothermal_psystem(base=(1.0, 0.0), rho_range=(0.6, 1.5), q_range=(-0.3, 0.3),
                       lambda_hat=None, provider=ANALYTIC):
    """Isothermal gas dynamics, unit sound speed, conservative variables
    ``(rho, q)``; both families genuinely nonlinear."""

    def flux(u):
        rho, q = u
        return np.array([q, q * q / rho + rho])

    def jac(u):
        rho, q = u
        v = q / rho
        return np.array([[0.0, 1.0], [1.0 - v * v, 2.0 * v]])

    curves = AnalyticCurves(_psystem_eigen, _psystem_rarefaction, _psystem_shock)
    lo = [rho_range[0], q_range[0]]
    hi = [rho_range[1], q_range[1]]
    return SystemSpec("psystem", 2, flux, jac, (GNL, GNL), lo, hi, base, lambda_hat,
                      (provider, provider), curves)
