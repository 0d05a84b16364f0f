"""Moving boundary: curve, boundary map and piecewise-constant boundary data."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateBoundary, NotNonCharacteristic
from .piecewise import Polyline, Staircase
from .systems import eigen_decompose

DET_THRESHOLD = 1e-8


def check_noncharacteristic(sys, curve, ell, c, what="curve"):
    """Raise unless every slope of ``curve`` is ``c``-separated from the
    characteristic bands of families ``ell`` and ``ell + 1``."""
    bounds = sys.speed_bounds
    for slope in curve.slopes:
        if ell >= 1 and slope < bounds[ell - 1, 1] + c:
            raise NotNonCharacteristic(
                f"{what} slope {slope:g} is within {c:g} of the family-{ell} speed band "
                f"[{bounds[ell - 1, 0]:g}, {bounds[ell - 1, 1]:g}]")
        if ell < sys.n and slope > bounds[ell, 0] - c:
            raise NotNonCharacteristic(
                f"{what} slope {slope:g} is within {c:g} of the family-{ell + 1} speed band "
                f"[{bounds[ell, 0]:g}, {bounds[ell, 1]:g}]")


def margin_of(sys, curve, ell):
    """Largest ``c`` for which ``curve`` is ``ell``-non-characteristic."""
    bounds = sys.speed_bounds
    gaps = []
    for slope in curve.slopes:
        if ell >= 1:
            gaps.append(slope - bounds[ell - 1, 1])
        if ell < sys.n:
            gaps.append(bounds[ell, 0] - slope)
    return float(min(gaps))


@dataclass(frozen=True, eq=False)
class Boundary:
    """Boundary ``x = gamma(t)`` carrying the condition ``b(u(t, gamma(t)+)) = g(t)``.

    ``ell`` families leave the domain through the boundary, the remaining
    ``n - ell`` enter it and are fixed by ``b``.  ``ell = 0`` (every family
    entering, full boundary data) is admitted for scalar problems.
    """

    system: object
    gamma: Polyline
    bmap: Callable
    ell: int
    margin_c: float
    gdata: Optional[Staircase] = None
    bjac: Optional[Callable] = None

    def __post_init__(self):
        sys = self.system
        if not 0 <= self.ell < sys.n:
            raise ValueError(f"ell must be in 0..{sys.n - 1}")
        if self.margin_c <= 0:
            raise ValueError("margin_c must be positive")
        m = sys.n - self.ell
        if self.gdata is None:
            object.__setattr__(self, "gdata", Staircase.constant(np.zeros(m)))
        if self.gdata.dim != m:
            raise ValueError(f"boundary data must have {m} components")
        check_noncharacteristic(sys, self.gamma, self.ell, self.margin_c, "boundary")
        b0 = self.b(sys.base_state)
        if np.max(np.abs(b0)) > 1e-12:
            raise ValueError(f"boundary map must vanish at the base state, got {b0.tolist()}")
        if abs(self.determinant()) < DET_THRESHOLD:
            raise DegenerateBoundary(
                f"det[Db r_{self.ell + 1} .. Db r_{sys.n}] = {self.determinant():.3e} at the base state")

    @property
    def n_entering(self):
        return self.system.n - self.ell

    def b(self, u):
        return np.atleast_1d(np.asarray(self.bmap(np.asarray(u, dtype=float)), dtype=float))

    def db(self, u):
        u = np.asarray(u, dtype=float)
        if self.bjac is not None:
            return np.atleast_2d(np.asarray(self.bjac(u), dtype=float))
        n = u.size
        J = np.empty((self.n_entering, n))
        for k in range(n):
            h = 1e-7 * max(1.0, abs(u[k]))
            e = np.zeros(n)
            e[k] = h
            J[:, k] = (self.b(u + e) - self.b(u - e)) / (2 * h)
        return J

    def determinant(self, u=None):
        u = self.system.base_state if u is None else u
        R = eigen_decompose(self.system, u)[1]
        return float(np.linalg.det(self.db(u) @ R[:, self.ell:]))

    def g(self, t):
        return self.gdata(float(t))

    def data_jump_times(self, t_lo=-np.inf, t_hi=np.inf):
        """Times in ``(t_lo, t_hi]`` where the boundary datum jumps."""
        x, _ = self.gdata.jumps()
        return x[(x > t_lo) & (x <= t_hi)]

    def with_data(self, gdata):
        return Boundary(self.system, self.gamma, self.bmap, self.ell, self.margin_c, gdata, self.bjac)

    def with_curve(self, gamma):
        return Boundary(self.system, gamma, self.bmap, self.ell, self.margin_c, self.gdata, self.bjac)


def identity_boundary(sys, gamma=None, gdata=None, margin_c=0.1):
    """Full Dirichlet data ``b(u) = u - base`` with every family entering."""
    base = sys.base_state.copy()
    gamma = Polyline.constant(0.0) if gamma is None else gamma
    return Boundary(sys, gamma, lambda u: u - base, 0, margin_c, gdata, lambda u: np.eye(sys.n))


def component_boundary(sys, component, ell, gamma=None, gdata=None, margin_c=0.1):
    """Prescribe ``u[component] - base[component]`` (one entering family)."""
    base = sys.base_state.copy()
    gamma = Polyline.constant(0.0) if gamma is None else gamma

    def bmap(u):
        return np.array([u[component] - base[component]])

    def bjac(u):
        row = np.zeros((1, sys.n))
        row[0, component] = 1.0
        return row

    return Boundary(sys, gamma, bmap, ell, margin_c, gdata, bjac)


# -- named boundary maps ---------------------------------------------------------

def _identity_map(sys):
    base = sys.base_state.copy()
    return (lambda u: u - base), (lambda u: np.eye(sys.n))


def _component_map(sys, component=0):
    base = sys.base_state.copy()
    k = int(component)
    if not 0 <= k < sys.n:
        raise ValueError(f"component must be in 0..{sys.n - 1}")

    def bjac(u):
        row = np.zeros((1, sys.n))
        row[0, k] = 1.0
        return row

    return (lambda u: np.array([u[k] - base[k]])), bjac


def _psystem_invariant_map(sys):
    """``q / rho + log rho`` minus its base value: unchanged across 1-rarefactions,
    so arriving 1-waves are absorbed with little reflection."""
    if sys.name != "psystem":
        raise ValueError("the riemann-invariant boundary map needs the p-system")
    rho0, q0 = sys.base_state
    w0 = q0 / rho0 + np.log(rho0)

    def bmap(u):
        return np.array([u[1] / u[0] + np.log(u[0]) - w0])

    def bjac(u):
        return np.array([[(1.0 - u[1] / u[0]) / u[0], 1.0 / u[0]]])

    return bmap, bjac


BOUNDARY_MAPS = {
    "identity": _identity_map,
    "component": _component_map,
    "riemann-invariant": _psystem_invariant_map,
}


def make_boundary(sys, kind, ell, gamma=None, gdata=None, margin_c=0.1, **params):
    """Boundary with a named map (``identity``, ``component``, ``riemann-invariant``)."""
    if kind not in BOUNDARY_MAPS:
        raise KeyError(f"unknown boundary map {kind!r}; available: {sorted(BOUNDARY_MAPS)}")
    bmap, bjac = BOUNDARY_MAPS[kind](sys, **params)
    gamma = Polyline.constant(0.0) if gamma is None else gamma
    return Boundary(sys, gamma, bmap, ell, margin_c, gdata, bjac)
