import numpy as np
import pytest
from hypothesis import given, strategies as st

from frontrack.piecewise import Polyline, Staircase


def stairs(draw_pts, draw_vals):
    return Staircase(np.sort(draw_pts), np.asarray(draw_vals)[:, None])


pts = st.lists(st.floats(-5, 5), min_size=1, max_size=8)


@st.composite
def staircases(draw):
    xs = draw(pts)
    vals = draw(st.lists(st.floats(-3, 3), min_size=len(xs) + 1, max_size=len(xs) + 1))
    vals[0] = vals[-1] = 0.0
    return stairs(xs, vals)


def test_right_continuity():
    u = Staircase.indicator(0.0, 1.0)
    assert u(0.0)[0] == 1.0 and u(1.0)[0] == 0.0
    assert u.left_limit(0.0)[0] == 0.0 and u.left_limit(1.0)[0] == 1.0


@given(u=staircases(), w=staircases())
def test_triangle_inequality(u, w):
    assert (u + w).l1_norm() <= u.l1_norm() + w.l1_norm() + 1e-9


@given(u=staircases())
def test_simplify_preserves_function(u):
    v = u.simplify()
    assert u.l1_distance(v) == pytest.approx(0.0, abs=1e-12)
    # zero-width pieces carry no variation of the function itself
    assert v.total_variation() <= u.total_variation() + 1e-9


def test_duplicate_breaks_removed():
    u = Staircase([0.0, 0.0, 1.0], [[0.0], [5.0], [1.0], [0.0]])
    v = u.simplify()
    np.testing.assert_allclose(v.breaks, [0.0, 1.0])
    assert v(0.0)[0] == 1.0


def test_integrals():
    u = Staircase.indicator(0.0, 2.0, 3.0)
    assert u.integrate(1.0, 5.0)[0] == pytest.approx(3.0)
    assert u.l1_norm() == pytest.approx(6.0)
    assert Staircase.constant(1.0).l1_norm() == np.inf
    assert u.shift(1.0).l1_distance(u) == pytest.approx(6.0)
    assert u.with_left(1.0, [0.0]).l1_norm() == pytest.approx(3.0)


def test_polyline():
    c = Polyline([0.0, 1.0], [0.0, 1.0], -1.0)
    np.testing.assert_allclose(c.slopes, [1.0, -1.0])
    assert c(0.5) == pytest.approx(0.5) and c(2.0) == pytest.approx(0.0)
    assert c.sup_distance(Polyline.constant(0.0), 3.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        Polyline([0.0, 0.0], [0.0, 1.0])
