import numpy as np
import pytest
from hypothesis import given, strategies as st

from frontrack.errors import LeftOmega
from frontrack.systems import (NUMERIC, char_speed, custom_system, eigen_decompose, eigenvalues,
                               get_system, glue_lax, inverse_lax_curve, lax_curve,
                               rarefaction_curve, shock_curve)

small = st.floats(-0.08, 0.08)


def test_registry_and_box(psys):
    assert psys.n == 2
    np.testing.assert_allclose(psys.speed_bounds, [[-1.5, -0.5], [0.5, 1.5]], atol=1e-12)
    with pytest.raises(KeyError):
        get_system("no-such-system")


def test_overlapping_bands_rejected():
    with pytest.raises(Exception):
        get_system("psystem", rho_range=(0.5, 1.5), q_range=(-1.0, 1.0))


def test_psystem_eigenvalues_closed_form(psys):
    u = np.array([1.2, 0.24])
    np.testing.assert_allclose(eigenvalues(psys, u), [0.2 - 1.0, 0.2 + 1.0], atol=1e-14)


def test_left_omega(psys):
    with pytest.raises(LeftOmega):
        lax_curve(psys, psys.base_state, 2, 2.0)


@given(u=st.tuples(st.floats(0.8, 1.2), st.floats(-0.1, 0.1)), fam=st.sampled_from([1, 2]), s=small)
def test_strength_normalization(psys, u, fam, s):
    u = np.array(u)
    v = lax_curve(psys, u, fam, s)
    assert char_speed(psys, v, fam) == pytest.approx(char_speed(psys, u, fam) + s, abs=1e-10)


@given(u=st.tuples(st.floats(0.8, 1.2), st.floats(-0.1, 0.1)), fam=st.sampled_from([1, 2]), s=small)
def test_inverse_curve_round_trip(psys, u, fam, s):
    u = np.array(u)
    back = inverse_lax_curve(psys, lax_curve(psys, u, fam, s), fam, -s)
    np.testing.assert_allclose(back, u, atol=1e-10)


@given(u=st.tuples(st.floats(0.8, 1.2), st.floats(-0.1, 0.1)), fam=st.sampled_from([1, 2]),
       s=st.floats(-0.08, -1e-3))
def test_rankine_hugoniot(psys, u, fam, s):
    u = np.array(u)
    v, speed = shock_curve(psys, u, fam, s)
    np.testing.assert_allclose(psys.flux(v) - psys.flux(u), speed * (v - u), atol=1e-12)


@given(u=st.tuples(st.floats(0.8, 1.2), st.floats(-0.1, 0.1)), fam=st.sampled_from([1, 2]), s=small)
def test_numeric_curves_match_closed_forms(psys, u, fam, s):
    num = psys.with_provider(NUMERIC)
    u = np.array(u)
    np.testing.assert_allclose(rarefaction_curve(num, u, fam, s), rarefaction_curve(psys, u, fam, s), atol=1e-9)
    if s != 0:
        a, sa = shock_curve(num, u, fam, s)
        b, sb = shock_curve(psys, u, fam, s)
        np.testing.assert_allclose(a, b, atol=1e-9)
        assert sa == pytest.approx(sb, abs=1e-9)


def test_shock_and_rarefaction_osculate(psys):
    u = psys.base_state
    for s in (1e-2, 5e-3):
        r = rarefaction_curve(psys, u, 2, -s)
        h = shock_curve(psys, u, 2, -s)[0]
        assert np.linalg.norm(r - h) < 1e-1 * s ** 2


def test_burgers_and_advection(burgers, advection):
    v, speed = shock_curve(burgers, np.array([1.0]), 1, -1.0)
    assert v[0] == pytest.approx(0.0) and speed == pytest.approx(0.5)
    assert lax_curve(advection, np.array([0.0]), 1, 0.7)[0] == pytest.approx(0.7)
    assert advection.fields == ("LD",)


def test_custom_system_numeric_curves():
    a = 0.7
    sys = custom_system("shifted-burgers", lambda u: 0.5 * u ** 2 + a * u,
                        lambda u: np.array([[u[0] + a]]), ["GNL"], [-1.0], [1.0], [0.0])
    v = rarefaction_curve(sys, np.array([0.1]), 1, 0.2)
    assert v[0] == pytest.approx(0.3, abs=1e-10)
    w, speed = shock_curve(sys, np.array([0.3]), 1, -0.2)
    assert w[0] == pytest.approx(0.1, abs=1e-10)
    assert speed == pytest.approx(0.2 + a, abs=1e-10)


def test_eigenvectors_follow_speed_normalization(psys):
    rho, q = 1.1, 0.05
    lam, R = eigen_decompose(psys, np.array([rho, q]))
    grad = np.array([-q / rho ** 2, 1.0 / rho])
    np.testing.assert_allclose(grad @ R, [1.0, 1.0], atol=1e-12)
    assert lam[0] < lam[1]


def test_glue_order(psys):
    u = psys.base_state
    v = glue_lax(psys, u, [0.03, -0.02])
    w = lax_curve(psys, lax_curve(psys, u, 1, 0.03), 2, -0.02)
    np.testing.assert_allclose(v, w)
