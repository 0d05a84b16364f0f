"""Piecewise-constant functions of one variable and piecewise-linear curves.

A :class:`Staircase` is right-continuous: on ``[breaks[k-1], breaks[k])`` it
takes ``values[k]``.  ``values[0]`` holds on ``(-inf, breaks[0])`` and
``values[-1]`` on ``[breaks[-1], inf)``.  Values are vectors (shape ``(d,)``),
norms are Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_values(values, m):
    vals = np.asarray(values, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if vals.shape[0] != m + 1:
        raise ValueError(f"need {m + 1} values for {m} breaks, got {vals.shape[0]}")
    return vals


@dataclass(frozen=True)
class Staircase:
    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        breaks = np.asarray(self.breaks, dtype=float).reshape(-1)
        if breaks.size > 1 and np.any(np.diff(breaks) < 0):
            raise ValueError("breaks must be non-decreasing")
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "values", _as_values(self.values, breaks.size))

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(np.empty(0), value[None, :])

    @classmethod
    def from_intervals(cls, edges, inner, outside):
        """Function equal to ``inner[k]`` on ``[edges[k], edges[k+1])`` and
        ``outside`` elsewhere."""
        edges = np.asarray(edges, dtype=float)
        outside = np.atleast_1d(np.asarray(outside, dtype=float))
        inner = np.asarray(inner, dtype=float)
        if inner.ndim == 1:
            inner = inner[:, None]
        vals = np.vstack([outside[None, :], inner, outside[None, :]])
        return cls(edges, vals)

    @classmethod
    def indicator(cls, a, b, height=1.0):
        return cls.from_intervals([a, b], [[height]], [0.0])

    # -- basic queries ----------------------------------------------------
    @property
    def dim(self):
        return self.values.shape[1]

    def __call__(self, x):
        idx = np.searchsorted(self.breaks, x, side="right")
        return self.values[idx]

    def left_limit(self, x):
        idx = np.searchsorted(self.breaks, x, side="left")
        return self.values[idx]

    def jumps(self):
        """Positions and sizes (Euclidean) of the nonzero jumps."""
        d = np.linalg.norm(np.diff(self.values, axis=0), axis=1)
        keep = d > 0
        return self.breaks[keep], d[keep]

    def total_variation(self, lo=-np.inf, hi=np.inf):
        """Variation over jumps located in ``(lo, hi]``."""
        x, d = self.jumps()
        sel = (x > lo) & (x <= hi)
        return float(d[sel].sum())

    def simplify(self, tol=0.0):
        """Drop zero-width pieces and breaks whose jump is not larger than ``tol``."""
        breaks, values = self.breaks, self.values
        if breaks.size > 1:
            # a piece [b_k, b_{k+1}) with b_k == b_{k+1} is never attained
            wide = np.concatenate([breaks[1:] > breaks[:-1], [True]])
            breaks = breaks[wide]
            values = np.vstack([values[:1], values[1:][wide]])
        d = np.linalg.norm(np.diff(values, axis=0), axis=1)
        keep = d > tol
        vals = np.vstack([values[:1], values[1:][keep]])
        return Staircase(breaks[keep], vals)

    # -- algebra ------------------------------------------------------------
    def _refine(self, other):
        grid = np.union1d(self.breaks, other.breaks)
        if grid.size == 0:
            return grid, self.values[:1], other.values[:1]
        mids = np.concatenate([[grid[0] - 1.0], 0.5 * (grid[:-1] + grid[1:]), [grid[-1] + 1.0]])
        return grid, self(mids), other(mids)

    def combine(self, other, op):
        grid, a, b = self._refine(other)
        return Staircase(grid, op(a, b))

    def __add__(self, other):
        return self.combine(other, np.add)

    def __sub__(self, other):
        return self.combine(other, np.subtract)

    def scale(self, c):
        return Staircase(self.breaks, c * self.values)

    def shift(self, dx):
        return Staircase(self.breaks + dx, self.values)

    def with_left(self, a, value):
        """Replace the function by ``value`` on ``(-inf, a)``."""
        value = np.atleast_1d(np.asarray(value, dtype=float))
        keep = self.breaks > a
        vals = np.vstack([value[None, :], self(np.array([a])), self.values[1:][keep]])
        return Staircase(np.concatenate([[a], self.breaks[keep]]), vals)

    # -- integrals ----------------------------------------------------------
    def cell_lengths(self, lo, hi):
        """Lengths of the pieces clipped to ``[lo, hi]`` (inf allowed)."""
        edges = np.concatenate([[-np.inf], self.breaks, [np.inf]])
        a = np.clip(edges[:-1], lo, hi)
        b = np.clip(edges[1:], lo, hi)
        return b - a

    def integrate(self, lo, hi):
        lengths = self.cell_lengths(lo, hi)
        used = lengths > 0
        if np.any(np.isinf(lengths[used])):
            raise ValueError("unbounded integral")
        return (lengths[used, None] * self.values[used]).sum(axis=0)

    def l1_norm(self, lo=-np.inf, hi=np.inf, ref=None):
        """Integral of ``|u - ref|`` over ``[lo, hi]``; pieces equal to ``ref``
        may be unbounded."""
        ref = np.zeros(self.dim) if ref is None else np.asarray(ref, dtype=float)
        lengths = self.cell_lengths(lo, hi)
        dev = np.linalg.norm(self.values - ref, axis=1)
        used = (lengths > 0) & (dev > 0)
        if np.any(np.isinf(lengths[used])):
            return np.inf
        return float((lengths[used] * dev[used]).sum())

    def l1_distance(self, other, lo=-np.inf, hi=np.inf):
        return (self - other).l1_norm(lo, hi)


@dataclass(frozen=True)
class Polyline:
    """Continuous piecewise-linear curve ``t -> x`` for ``t >= knots[0]``.

    Beyond the last knot the curve continues with ``tail_slope``.
    """

    knots: np.ndarray
    positions: np.ndarray
    tail_slope: float = 0.0

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float).reshape(-1)
        pos = np.asarray(self.positions, dtype=float).reshape(-1)
        if knots.size == 0 or knots.size != pos.size:
            raise ValueError("knots and positions must be non-empty and of equal size")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tail_slope", float(self.tail_slope))

    @classmethod
    def constant(cls, x):
        return cls([0.0], [x], 0.0)

    @classmethod
    def line(cls, x0, slope):
        return cls([0.0], [x0], slope)

    @property
    def slopes(self):
        inner = np.diff(self.positions) / np.diff(self.knots)
        return np.concatenate([inner, [self.tail_slope]])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.knots.size - 1)
        return self.positions[k] + self.slopes[k] * (t - self.knots[k])

    def slope_at(self, t):
        """Right derivative at ``t``."""
        k = int(np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.knots.size - 1))
        return float(self.slopes[k])

    def pieces(self, t_lo=0.0, t_hi=np.inf):
        """Linear pieces ``(ta, tb, x(ta), slope)`` covering ``[t_lo, t_hi]``."""
        lo_edges = self.knots.copy()
        lo_edges[0] = -np.inf
        hi_edges = np.concatenate([self.knots[1:], [np.inf]])
        slopes = self.slopes
        out = []
        for k in range(self.knots.size):
            ta, tb = max(lo_edges[k], t_lo), min(hi_edges[k], t_hi)
            if ta < tb or (ta == tb == t_lo and not out):
                out.append((ta, tb, float(self(ta)), float(slopes[k])))
        return out

    def sup_distance(self, other, t_hi):
        ts = np.union1d(self.knots, other.knots)
        ts = np.concatenate([[0.0], ts[(ts > 0) & (ts < t_hi)], [t_hi]])
        return float(np.max(np.abs(self(ts) - other(ts))))
