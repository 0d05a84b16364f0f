import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from frontrack.boundary import identity_boundary
from frontrack.errors import DomainExceeded
from frontrack.functionals import FunctionalWeights, compute_phi
from frontrack.piecewise import Staircase
from frontrack.splitting import (SplittingParams, available_sources, check_source_hypothesis,
                                 euler_polygonal, fit_growth_constant, get_source, grid_edges,
                                 local_flow, project_PiN, splitting_step, verify_local_flow)
from frontrack.tracking import FrontTracker, SolverParams, run


@pytest.fixture(scope="module")
def adv(advection):
    return advection, identity_boundary(advection, margin_c=0.5)


def window_oracle(x):
    """Exact solution at t = 1 on [3, 5] of the advection problem with the
    window source fed by [0, 1]."""
    x = np.asarray(x, dtype=float)
    return np.where((x >= 3) & (x < 4), 0.5 * (x - 3) ** 2,
                    np.where((x >= 4) & (x < 5), (5 - x) - 0.5 * (5 - x) ** 2, 0.0))


# -- projection ------------------------------------------------------------------

def test_grid():
    e = grid_edges(3)
    assert e[0] == pytest.approx(-10 / 3) and e[-1] == pytest.approx(3.0)


def test_projection_examples():
    assert project_PiN(Staircase.constant([0.0]).with_left(0.0, [0.0]), 10).l1_norm() == 0.0
    u = Staircase.indicator(0.0, 1.0)
    assert project_PiN(u, 10).l1_distance(u) == pytest.approx(0.0, abs=1e-12)
    p = project_PiN(Staircase.indicator(0.05, 1.0), 10)
    assert p(0.01)[0] == pytest.approx(0.5)
    assert p.total_variation() == pytest.approx(2.0)


@st.composite
def bv(draw):
    xs = sorted(draw(st.lists(st.floats(-2.5, 2.5), min_size=1, max_size=6)))
    vals = draw(st.lists(st.floats(-2, 2), min_size=len(xs) + 1, max_size=len(xs) + 1))
    vals[0] = vals[-1] = 0.0
    return Staircase(xs, np.asarray(vals)[:, None])


@given(u=bv(), w=bv(), a=st.floats(-2, 2), N=st.integers(1, 12))
def test_projection_properties(u, w, a, N):
    lhs = project_PiN(u + w.scale(a), N)
    rhs = project_PiN(u, N) + project_PiN(w, N).scale(a)
    assert lhs.l1_distance(rhs) <= 1e-9
    assert project_PiN(u, N).l1_norm() <= u.l1_norm() + 1e-9
    assert project_PiN(u, N).total_variation() <= 2 * u.total_variation() + 1e-9


def test_projection_converges():
    u = lambda x: np.where((x > 0) & (x < 1), np.sqrt(np.abs(x)), 0.0) + np.where((x > 1.3) & (x < 2), 1.0, 0.0)
    errs = []
    for N in (10, 40, 160):
        p = project_PiN(u, N)
        errs.append(quad(lambda x: abs(u(x) - p(x)[0]), -1, 3, limit=2000)[0])
    assert errs[0] > errs[1] > errs[2]


# -- sources -----------------------------------------------------------------------

def test_source_registry():
    assert {"nonlocal-window", "zero"} <= set(available_sources())
    with pytest.raises(KeyError):
        get_source("none-such")


def test_source_hypothesis_spot_check():
    src = get_source("nonlocal-window", coefficient=2.0)
    rng = np.random.default_rng(0)
    pairs = []
    for _ in range(20):
        a, b = np.sort(rng.uniform(-1, 2, 2))
        c, d = np.sort(rng.uniform(-1, 2, 2))
        pairs.append((Staircase.indicator(a, b, rng.uniform(-1, 1)), Staircase.indicator(c, d, rng.uniform(-1, 1))))
    L, tv = check_source_hypothesis(src, pairs)
    assert L <= src.lipschitz_L1 + 1e-12 and tv <= src.tv_bound + 1e-12


# -- local flow ---------------------------------------------------------------------

def test_zero_source_matches_homogeneous(adv):
    sys, bd = adv
    u0 = Staircase.indicator(0.0, 1.0)
    res = euler_polygonal(sys, bd, get_source("zero"), SolverParams(0.05, 1e-3), SplittingParams(0.1, 10), u0, 2.0)
    hom = run(sys, bd, SolverParams(0.05, 1e-3), u0, 2.0)
    assert res.final.staircase().l1_distance(hom.u_final) == 0.0


def test_one_step_adds_projected_source(adv):
    sys, bd = adv
    tr = FrontTracker(sys, bd, SolverParams(0.01, 1e-4)).initialize(Staircase.indicator(0.0, 1.0))
    splitting_step(tr, get_source("nonlocal-window"), 0.1, 10)
    u = tr.configuration().staircase()
    # the source sees the evolved state: mass 0.9 on [0, 1]
    assert u(3.5)[0] == pytest.approx(0.1 * 0.9)
    assert u.l1_norm(3.0, 4.0) == pytest.approx(0.09)
    assert u.l1_norm(1.2, 3.0) == 0.0


def test_zero_state_stays_zero(adv):
    sys, bd = adv
    z = Staircase.constant([0.0])
    out = local_flow(sys, bd, get_source("nonlocal-window"), SolverParams(0.01, 1e-4), z, 0.0, 0.5, 10)
    assert out.l1_norm() == 0.0


def test_polygonal_vanishes_between(adv):
    sys, bd = adv
    res = euler_polygonal(sys, bd, get_source("nonlocal-window"), SolverParams(0.01, 1e-4),
                          SplittingParams(0.05, 20), Staircase.indicator(0.0, 1.0), 1.0)
    u = res.final.staircase()
    assert u.l1_norm(3.0, 4.0) > 0.1
    assert u.l1_norm(2.0 + 1e-12, 2.5) == 0.0 and u.l1_norm(0.0, 1.0) == 0.0


def test_splitting_error_first_order(adv):
    sys, bd = adv
    xs = np.linspace(3, 5, 8001)
    errs = []
    for es in (0.1, 0.05, 0.025):
        res = euler_polygonal(sys, bd, get_source("nonlocal-window"), SolverParams(0.01, 1e-4),
                              SplittingParams(es, 20), Staircase.indicator(0.0, 1.0), 1.0)
        errs.append(np.trapezoid(np.abs(res.final.staircase()(xs)[:, 0] - window_oracle(xs)), xs))
    r = np.array(errs[1:]) / np.array(errs[:-1])
    assert np.all((r > 0.4) & (r < 0.6)), errs


def test_local_flow_discrepancy(adv):
    sys, bd = adv
    src = get_source("nonlocal-window")
    p = SolverParams(0.01, 1e-4)
    u0 = Staircase.indicator(0.0, 1.0)
    assert verify_local_flow(sys, bd, src, p, u0, 2, 0.0, 20) == 0.0
    assert verify_local_flow(sys, bd, get_source("zero"), p, u0, 2, 0.1, 20) == 0.0
    # oracle: 6 tau^2 - 12 tau^3 for this source and datum
    for tau in (0.2, 0.1):
        assert verify_local_flow(sys, bd, src, p, u0, 2, tau, 20) == pytest.approx(6 * tau ** 2 - 12 * tau ** 3, rel=1e-9)


def test_domain_budget(adv):
    sys, bd = adv
    with pytest.raises(DomainExceeded):
        euler_polygonal(sys, bd, get_source("nonlocal-window", coefficient=5.0), SolverParams(0.01, 1e-4),
                        SplittingParams(0.1, 10, M=1.0, C_domain=0.01), Staircase.indicator(0.0, 1.0), 1.0)


def test_growth_constant_and_lipschitz(adv):
    sys, bd = adv
    W = FunctionalWeights.from_constant(0.1)
    src = get_source("nonlocal-window")
    res = euler_polygonal(sys, bd, src, SolverParams(0.01, 1e-4), SplittingParams(0.05, 20),
                          Staircase.indicator(0.0, 1.0), 1.0, weights=W)
    C = fit_growth_constant(res.steps)
    t = np.array([s[0] for s in res.steps])
    ups = np.array([s[1] for s in res.steps])
    nrm = np.array([s[2] for s in res.steps])
    assert np.all(ups <= ups[0] + C * t + 1e-12)
    assert np.all(nrm <= nrm[0] * np.exp(C * t) + C * t + 1e-12)

    # Lipschitz dependence on the data, stable under halving the splitting step
    u, w = Staircase.indicator(0.0, 1.0), Staircase.indicator(0.0, 1.0, 1.1)
    L = []
    for es in (0.1, 0.05):
        a = euler_polygonal(sys, bd, src, SolverParams(0.01, 1e-4), SplittingParams(es, 20), u, 1.0)
        b = euler_polygonal(sys, bd, src, SolverParams(0.01, 1e-4), SplittingParams(es, 20), w, 1.0)
        L.append(a.final.staircase().l1_distance(b.final.staircase()) / u.l1_distance(w))
    assert abs(L[1] / L[0] - 1) < 0.25


def test_phi_growth_over_one_step(adv):
    """Phi after a step of length t is at most (1 + C t) Phi before, C fitted on one set of pairs."""
    sys, bd = adv
    src = get_source("nonlocal-window")
    W = FunctionalWeights.from_constant(0.1)
    p = SolverParams(0.01, 1e-4)

    def needed(pairs, t=0.2):
        c = 0.0
        for u, w in pairs:
            before = [FrontTracker(sys, bd, p).initialize(v) for v in (u, w)]
            phi0 = compute_phi(before[0].configuration(), before[1].configuration(), W)
            for tr in before:
                splitting_step(tr, src, t, 20)
            phi1 = compute_phi(before[0].configuration(), before[1].configuration(), W)
            c = max(c, (phi1 / phi0 - 1) / t)
        return c

    fit = needed([(Staircase.indicator(0.0, 1.0), Staircase.indicator(0.0, 1.0, h)) for h in (1.1, 1.3)])
    check = needed([(Staircase.indicator(0.2, 0.9), Staircase.indicator(0.1, 0.9, 1.2))])
    assert check <= 1.2 * max(fit, 1e-3)
