"""Scenario files, the built-in scenario library, the batch runner and the
convergence-study harness.

A scenario is a YAML mapping::

    name: psystem-boundary
    system: {name: psystem, params: {}}
    boundary:
      gamma: {knots: [0.0], positions: [0.0], tail_slope: 0.0}
      map: {kind: riemann-invariant}
      ell: 1
      margin: 0.1
      data: {breaks: [0.5], values: [[0.0], [0.02]]}
    initial: {profile: random-jumps, count: 20, tv: 0.3, lo: 0.05, hi: 3.0, seed: 1}
    source: {name: nonlocal-window, params: {c: 3.0, d: 4.0}}
    solver: {epsilon: 0.02, rho: 4.0e-5, T: 2.0, eps_split: 0.05, N: 20, snapshots: [1.0]}
    outputs: [snapshots, events, functionals]
    checks: {upsilon_monotone: true}

``solver.epsilon`` and ``solver.rho`` have no defaults.
"""

from __future__ import annotations

import copy
import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Optional, Union

import numpy as np
import yaml

from .boundary import BOUNDARY_MAPS, Boundary, make_boundary
from .errors import FrontTrackError, NotNonCharacteristic, ParseError, ValidationError
from .functionals import FunctionalWeights
from .piecewise import Polyline, Staircase
from .splitting import SplittingParams, euler_polygonal, get_source
from .systems import get_system
from .tracking import SolverParams, run

OUTPUT_KINDS = ("snapshots", "events", "functionals", "experiments")


@dataclass
class Scenario:
    name: str
    system: Any
    boundary: Boundary
    u0: Union[Staircase, Callable]
    support: Optional[tuple]
    source: Any
    params: SolverParams
    split: Optional[SplittingParams]
    T: float
    snapshots: tuple
    outputs: tuple
    checks: dict
    raw: dict = field(repr=False)

    def with_epsilon(self, epsilon, rho=None):
        """Same scenario at accuracy ``epsilon``; ``rho`` keeps its ratio to
        ``epsilon**2`` unless given."""
        if rho is None:
            rho = self.params.rho * (epsilon / self.params.epsilon) ** 2
        raw = copy.deepcopy(self.raw)
        raw["solver"]["epsilon"] = float(epsilon)
        raw["solver"]["rho"] = float(rho)
        return replace(self, params=replace(self.params, epsilon=float(epsilon), rho=float(rho)), raw=raw)


# -- parsing helpers -------------------------------------------------------------

def _get(d, key, path, required=True, default=None):
    if not isinstance(d, dict):
        raise ValidationError(path, "expected a mapping")
    if key not in d:
        if required:
            raise ValidationError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return d[key]


def _number(x, path, positive=False, nonneg=False):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValidationError(path, f"expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(path, "must be finite")
    if positive and x <= 0:
        raise ValidationError(path, "must be positive")
    if nonneg and x < 0:
        raise ValidationError(path, "must be non-negative")
    return x


def _staircase(d, path, dim):
    breaks = np.asarray(_get(d, "breaks", path), dtype=float).reshape(-1)
    values = np.asarray(_get(d, "values", path), dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if values.shape != (breaks.size + 1, dim):
        raise ValidationError(f"{path}.values",
                              f"need {breaks.size + 1} rows of {dim} components, got shape {values.shape}")
    try:
        return Staircase(breaks, values)
    except ValueError as exc:
        raise ValidationError(f"{path}.breaks", str(exc)) from None


def _curve(d, path):
    if d is None:
        return Polyline.constant(0.0)
    if "constant" in d:
        return Polyline.constant(_number(d["constant"], f"{path}.constant"))
    if "line" in d:
        x0, slope = d["line"]
        return Polyline.line(_number(x0, f"{path}.line[0]"), _number(slope, f"{path}.line[1]"))
    try:
        return Polyline(_get(d, "knots", path), _get(d, "positions", path), d.get("tail_slope", 0.0))
    except ValueError as exc:
        raise ValidationError(path, str(exc)) from None


def random_jumps(base, count, tv, lo, hi, seed):
    """Staircase with ``count`` random jumps of total Euclidean size ``tv``
    in ``(lo, hi)``, equal to ``base`` on the left."""
    rng = np.random.default_rng(seed)
    base = np.asarray(base, dtype=float)
    xs = np.sort(rng.uniform(lo, hi, count))
    jumps = rng.normal(size=(count, base.size))
    jumps *= tv / np.linalg.norm(jumps, axis=1).sum()
    return Staircase(xs, np.vstack([base, base + np.cumsum(jumps, axis=0)]))


def smooth_pulse(base, rho_amp, q_amp):
    """Smooth compactly supported p-system pulse on ``(0, 2.5)``."""
    base = np.asarray(base, dtype=float)

    def u0(x):
        x = np.asarray(x, dtype=float)
        s = np.where((x > 0) & (x < 2), np.sin(np.pi * x / 2) ** 2, 0.0)
        c = np.where((x > 0.5) & (x < 2.5), np.sin(np.pi * (x - 0.5) / 2), 0.0)
        return np.stack([base[0] + rho_amp * s, base[1] + q_amp * c], axis=-1)

    return u0


def _initial(d, path, sys):
    if "profile" not in d:
        if "breaks" in d:
            return _staircase(d, path, sys.n), None
        raise ValidationError(f"{path}.profile", "missing required field (or give breaks/values)")
    name = d["profile"]
    if name == "indicator":
        a = _number(_get(d, "a", path), f"{path}.a")
        b = _number(_get(d, "b", path), f"{path}.b")
        h = np.atleast_1d(np.asarray(d.get("height", 1.0), dtype=float))
        if a >= b:
            raise ValidationError(f"{path}.b", "need a < b")
        return Staircase.from_intervals([a, b], h[None, :], sys.base_state), None
    if name == "random-jumps":
        return random_jumps(sys.base_state, int(_get(d, "count", path)),
                            _number(_get(d, "tv", path), f"{path}.tv", positive=True),
                            _number(d.get("lo", 0.05), f"{path}.lo"), _number(d.get("hi", 3.0), f"{path}.hi"),
                            int(d.get("seed", 0))), None
    if name == "smooth-pulse":
        if sys.name != "psystem":
            raise ValidationError(f"{path}.profile", "smooth-pulse is defined for the p-system")
        return smooth_pulse(sys.base_state, float(d.get("rho_amplitude", 0.15)),
                            float(d.get("q_amplitude", 0.08))), (0.0, 2.5)
    raise ValidationError(f"{path}.profile", f"unknown profile {name!r}")


def _boundary_data(d, path, m):
    if d is None:
        return None
    if d.get("profile") == "random-jumps":
        rng = np.random.default_rng(int(d.get("seed", 0)))
        count = int(_get(d, "count", path))
        tv = _number(_get(d, "tv", path), f"{path}.tv", positive=True)
        jumps = rng.normal(size=(count, m))
        jumps *= tv / np.linalg.norm(jumps, axis=1).sum()
        ts = np.sort(rng.uniform(float(d.get("lo", 0.1)), float(d.get("hi", 1.8)), count))
        return Staircase(ts, np.vstack([np.zeros(m), np.cumsum(jumps, axis=0)]))
    g = _staircase(d, path, m)
    if np.any(g.breaks < 0):
        raise ValidationError(f"{path}.breaks", "boundary data is defined for t >= 0")
    return g


def scenario_from_dict(raw):
    """Validate a scenario mapping and build every object it describes."""
    if not isinstance(raw, dict):
        raise ValidationError("<root>", "expected a mapping")
    raw = copy.deepcopy(raw)
    name = str(_get(raw, "name", ""))

    sd = _get(raw, "system", "")
    try:
        system = get_system(_get(sd, "name", "system"), **(sd.get("params") or {}))
    except (KeyError, TypeError, ValueError, FrontTrackError) as exc:
        raise ValidationError("system", str(exc)) from None

    bd = _get(raw, "boundary", "")
    ell = _get(bd, "ell", "boundary")
    if isinstance(ell, bool) or not isinstance(ell, int):
        raise ValidationError("boundary.ell", f"expected an integer, got {ell!r}")
    if not 0 <= ell < system.n:
        raise ValidationError("boundary.ell", f"must be in 0..{system.n - 1}")
    margin = _number(_get(bd, "margin", "boundary"), "boundary.margin", positive=True)
    gamma = _curve(bd.get("gamma"), "boundary.gamma")
    md = _get(bd, "map", "boundary")
    kind = _get(md, "kind", "boundary.map")
    if kind not in BOUNDARY_MAPS:
        raise ValidationError("boundary.map.kind", f"unknown map {kind!r}; available: {sorted(BOUNDARY_MAPS)}")
    gdata = _boundary_data(bd.get("data"), "boundary.data", system.n - ell)
    try:
        boundary = make_boundary(system, kind, ell, gamma, gdata, margin,
                                 **{k: v for k, v in md.items() if k != "kind"})
    except NotNonCharacteristic as exc:
        raise ValidationError("boundary.gamma", str(exc)) from None
    except (TypeError, ValueError, FrontTrackError) as exc:
        raise ValidationError("boundary", str(exc)) from None

    u0, support = _initial(_get(raw, "initial", ""), "initial", system)
    if "support" in raw["initial"]:
        support = tuple(float(s) for s in raw["initial"]["support"])

    sol = _get(raw, "solver", "")
    eps = _number(_get(sol, "epsilon", "solver"), "solver.epsilon", positive=True)
    rho = _number(_get(sol, "rho", "solver"), "solver.rho", positive=True)
    T = _number(_get(sol, "T", "solver"), "solver.T", positive=True)
    extra = {k: sol[k] for k in ("delta0", "max_events", "trust_radius") if k in sol}
    params = SolverParams(eps, rho, **extra)
    snaps = tuple(sorted(_number(s, f"solver.snapshots[{i}]", nonneg=True)
                         for i, s in enumerate(sol.get("snapshots", []))))

    source, split = None, None
    if raw.get("source") is not None:
        src = raw["source"]
        try:
            source = get_source(_get(src, "name", "source"), **(src.get("params") or {}))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("source", str(exc)) from None
        split = SplittingParams(_number(_get(sol, "eps_split", "solver"), "solver.eps_split", positive=True),
                                int(_get(sol, "N", "solver")))

    outputs = tuple(raw.get("outputs", OUTPUT_KINDS))
    for k, o in enumerate(outputs):
        if o not in OUTPUT_KINDS:
            raise ValidationError(f"outputs[{k}]", f"unknown output {o!r}; choose from {OUTPUT_KINDS}")
    checks = dict(raw.get("checks") or {})
    return Scenario(name, system, boundary, u0, support, source, params, split, T, snaps, outputs,
                    checks, raw)


def load_scenario(path):
    """Read a scenario from a YAML file or a built-in name."""
    if path in BUILTINS and not os.path.exists(path):
        return scenario_from_dict(BUILTINS[path])
    if not os.path.exists(path):
        raise FileNotFoundError(f"no scenario file or built-in named {path!r}")
    with open(path) as fh:
        text = fh.read()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return scenario_from_dict(raw)


# -- built-in library --------------------------------------------------------------

BUILTINS = {
    "nonlocal-nonuniqueness": {
        "name": "nonlocal-nonuniqueness",
        "system": {"name": "advection", "params": {"speed": 1.0}},
        "boundary": {"gamma": {"constant": 0.0}, "map": {"kind": "identity"}, "ell": 0, "margin": 0.5},
        "initial": {"profile": "indicator", "a": 0.0, "b": 1.0},
        "source": {"name": "nonlocal-window", "params": {"a": 0.0, "b": 1.0, "c": 3.0, "d": 4.0}},
        "solver": {"epsilon": 0.01, "rho": 1.0e-4, "T": 1.0, "eps_split": 0.05, "N": 20,
                   "snapshots": [0.5]},
        "checks": {"nonuniqueness": {"curve_x": 2.0, "oracle_mass": 1.0 / 6.0, "rel_tol": 0.1}},
    },
    "advection-exact": {
        "name": "advection-exact",
        "system": {"name": "advection", "params": {"speed": 1.0}},
        "boundary": {"gamma": {"constant": 0.0}, "map": {"kind": "identity"}, "ell": 0, "margin": 0.5},
        "initial": {"profile": "indicator", "a": 0.0, "b": 1.0},
        "solver": {"epsilon": 0.01, "rho": 1.0e-4, "T": 5.0, "snapshots": [1.0, 2.5]},
        "checks": {"transport": {"speed": 1.0, "tol": 0.0}},
    },
    "psystem-boundary": {
        "name": "psystem-boundary",
        "system": {"name": "psystem"},
        "boundary": {"gamma": {"constant": 0.0}, "map": {"kind": "riemann-invariant"}, "ell": 1,
                     "margin": 0.1,
                     "data": {"profile": "random-jumps", "count": 5, "tv": 0.05, "seed": 1}},
        "initial": {"profile": "random-jumps", "count": 20, "tv": 0.3, "lo": 0.05, "hi": 3.0, "seed": 1},
        "solver": {"epsilon": 0.02, "rho": 4.0e-5, "T": 2.0, "snapshots": [0.5, 1.0]},
        "checks": {"upsilon_monotone": True},
    },
    "psystem-smooth": {
        "name": "psystem-smooth",
        "system": {"name": "psystem"},
        "boundary": {"gamma": {"constant": 0.0}, "map": {"kind": "riemann-invariant"}, "ell": 1,
                     "margin": 0.1},
        "initial": {"profile": "smooth-pulse", "rho_amplitude": 0.15, "q_amplitude": 0.08},
        "solver": {"epsilon": 0.02, "rho": 4.0e-5, "T": 2.0, "snapshots": [1.0]},
        "checks": {"upsilon_monotone": True},
    },
}


def builtin_names():
    return sorted(BUILTINS)


# -- running ------------------------------------------------------------------------

@dataclass
class ScenarioOutcome:
    name: str
    checks: dict
    summary: dict
    files: list

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks.values())


def _check(value, passed, **info):
    return {"value": value, "passed": bool(passed), **info}


def _weights(s):
    return FunctionalWeights.from_fit(s.boundary)


def _simulate(s, snapshots, budget, weights):
    params = s.params if budget is None else replace(s.params, max_events=int(budget))
    if s.source is None:
        res = run(s.system, s.boundary, params, s.u0, s.T, snapshots=snapshots, weights=weights,
                  support=s.support)
        return res.tracker, res.trajectory, None
    poly = euler_polygonal(s.system, s.boundary, s.source, params, s.split, s.u0, s.T,
                           weights=weights, support=s.support)
    return poly.tracker, poly.trajectory, poly.steps


def run_scenario(s, out_dir=None, snapshots=None, budget=None):
    """Run a scenario, evaluate its invariant suite and write the artifact bundle.

    Files (when selected in ``outputs``): ``snapshots.csv``, ``events.jsonl``,
    ``functionals.csv``, ``experiments.json``; ``summary.json`` is always written
    when ``out_dir`` is given.
    """
    snaps = tuple(s.snapshots if snapshots is None else snapshots)
    weights = _weights(s)
    tracker, traj, steps = _simulate(s, snaps, budget, weights)
    final = tracker.configuration()
    checks = {}

    final.check(1e-9)
    checks["chain"] = _check(0.0, True)
    bc = float(np.max(np.abs(s.boundary.b(final.trace_state) - tracker.boundary.g(final.time))))
    checks["boundary_condition"] = _check(bc, bc <= 1e-8)
    np_max = max([0.0] + [float(r.V_by_family[s.system.n]) for r in tracker.functionals])
    checks["nonphysical_total"] = _check(np_max, np_max <= 2 * s.params.epsilon, bound=2 * s.params.epsilon)

    experiments = {}
    if s.source is None and s.checks.get("upsilon_monotone"):
        ups = np.array([r.Upsilon for r in tracker.functionals])
        worst = float(np.max(np.diff(ups))) if ups.size > 1 else 0.0
        checks["upsilon_monotone"] = _check(worst, worst <= 1e-9)
    if "transport" in s.checks:
        c = s.checks["transport"]
        u_ex = s.u0.shift(float(c["speed"]) * s.T) if isinstance(s.u0, Staircase) else None
        err = final.staircase().l1_distance(u_ex) if u_ex is not None else math.nan
        checks["transport_exact"] = _check(err, err <= float(c.get("tol", 0.0)) + 1e-12)
    if "nonuniqueness" in s.checks:
        from .traces import nonuniqueness_experiment
        c = s.checks["nonuniqueness"]
        mass, rnorm, gt = nonuniqueness_experiment(s.params.epsilon, s.split.N, s.split.eps_split, s.T,
                                                   s.source.params.get("coefficient", 1.0),
                                                   float(c.get("curve_x", 2.0)))
        oracle = float(c["oracle_mass"])
        experiments["nonuniqueness"] = {"mass_on_window": mass, "oracle_mass": oracle,
                                        "restricted_norm": rnorm,
                                        "trace_variation": gt.total_variation(),
                                        "trace_sup": float(np.max(np.abs(gt.values)))}
        checks["restricted_norm_zero"] = _check(rnorm, rnorm == 0.0)
        checks["trace_zero"] = _check(experiments["nonuniqueness"]["trace_sup"],
                                      experiments["nonuniqueness"]["trace_sup"] == 0.0)
        rel = abs(mass - oracle) / oracle
        checks["window_mass"] = _check(mass, rel <= float(c.get("rel_tol", 0.1)), oracle=oracle)
    if steps is not None:
        from .splitting import fit_growth_constant
        experiments["splitting_steps"] = [list(map(float, st)) for st in steps]
        experiments["growth_constant"] = fit_growth_constant(steps)

    summary = {"scenario": s.name, "epsilon": s.params.epsilon, "rho": s.params.rho, "T": s.T,
               "fronts": len(final.fronts), "events": len(tracker.events),
               "passed": all(c["passed"] for c in checks.values()),
               "checks": checks}
    files = []
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)

        def path(name):
            p = os.path.join(out_dir, name)
            files.append(p)
            return p

        if "snapshots" in s.outputs:
            traj.write_snapshots(path("snapshots.csv"), sorted(set(snaps) | {s.T}))
        if "events" in s.outputs:
            tracker.write_events(path("events.jsonl"))
        if "functionals" in s.outputs:
            with open(path("functionals.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["time", "V", "Vg", "Q", "Upsilon"])
                for r in tracker.functionals:
                    w.writerow([repr(float(v)) for v in (r.time, r.V, r.Vg, r.Q, r.Upsilon)])
        if "experiments" in s.outputs and experiments:
            with open(path("experiments.json"), "w") as fh:
                json.dump(experiments, fh, indent=2, sort_keys=True)
        with open(path("summary.json"), "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
    return ScenarioOutcome(s.name, checks, summary, files)


def convergence_study(s, eps_grid, out_dir=None):
    """Run ``s`` for each accuracy in ``eps_grid`` and compare successive
    final states in L1.

    Returns a list of rows ``(eps, eps_next, distance, ratio)`` where
    ``ratio`` is the distance divided by the previous one (``nan`` first).
    """
    eps_grid = sorted((float(e) for e in eps_grid), reverse=True)
    if len(eps_grid) < 3:
        raise ValueError("a convergence study needs at least three accuracies")
    finals = []
    for eps in eps_grid:
        se = s.with_epsilon(eps)
        tracker, _, _ = _simulate(se, (), None, None)
        finals.append(tracker.configuration().staircase())
    rows = []
    prev = math.nan
    for k in range(len(eps_grid) - 1):
        d = finals[k].l1_distance(finals[k + 1])
        rows.append((eps_grid[k], eps_grid[k + 1], d, d / prev if prev == prev and prev > 0 else math.nan))
        prev = d
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "convergence.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epsilon", "epsilon_next", "l1_distance", "ratio"])
            for r in rows:
                w.writerow([repr(float(v)) for v in r])
    return rows


def _sweep_one(job):
    src, out_dir, budget = job
    s = load_scenario(src)
    try:
        res = run_scenario(s, out_dir, budget=budget)
        return s.name, res.passed, None
    except FrontTrackError as exc:
        return s.name, False, f"{type(exc).__name__}: {exc}"


def sweep(sources, out_dir, budget=None, workers=None):
    """Run several scenarios in a process pool, one output folder each."""
    jobs = []
    for k, src in enumerate(sources):
        name = os.path.splitext(os.path.basename(src))[0]
        jobs.append((src, os.path.join(out_dir, f"{k:02d}-{name}"), budget))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_sweep_one, jobs))
