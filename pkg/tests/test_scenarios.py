import copy
import json

import numpy as np
import pytest
import yaml

from frontrack.cli import main
from frontrack.errors import ParseError, ValidationError
from frontrack.scenarios import (BUILTINS, builtin_names, convergence_study, load_scenario,
                                 run_scenario, scenario_from_dict)


def write(tmp_path, raw, name="s.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(raw))
    return str(p)


def psys_raw():
    return copy.deepcopy(BUILTINS["psystem-boundary"])


def test_builtins_load():
    assert {"nonlocal-nonuniqueness", "advection-exact", "psystem-boundary"} <= set(builtin_names())
    s = load_scenario("nonlocal-nonuniqueness")
    assert s.system.name == "advection" and s.boundary.ell == 0
    assert s.source.params == dict(a=0.0, b=1.0, c=3.0, d=4.0, coefficient=1.0)
    assert s.u0(0.5)[0] == 1.0 and s.u0(1.0)[0] == 0.0 and s.u0(0.0)[0] == 1.0


def test_missing_ell():
    raw = psys_raw()
    del raw["boundary"]["ell"]
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict(raw)
    assert exc.value.path == "boundary.ell"


def test_characteristic_boundary_names_band():
    raw = psys_raw()
    raw["boundary"]["gamma"] = {"line": [0.0, 0.45]}
    with pytest.raises(ValidationError, match=r"family-2 speed band \[0\.5, 1\.5\]") as exc:
        scenario_from_dict(raw)
    assert exc.value.path == "boundary.gamma"


@pytest.mark.parametrize("key", ["epsilon", "rho"])
def test_no_accuracy_defaults(key):
    raw = psys_raw()
    del raw["solver"][key]
    with pytest.raises(ValidationError, match=f"solver.{key}"):
        scenario_from_dict(raw)


def test_bad_values_have_paths():
    raw = psys_raw()
    raw["initial"] = {"breaks": [1.0], "values": [[1.0, 0.0]]}
    with pytest.raises(ValidationError) as exc:
        scenario_from_dict(raw)
    assert exc.value.path == "initial.values"
    raw = psys_raw()
    raw["outputs"] = ["pictures"]
    with pytest.raises(ValidationError, match=r"outputs\[0\]"):
        scenario_from_dict(raw)


def test_parse_error(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("name: [unclosed\n")
    with pytest.raises(ParseError):
        load_scenario(str(p))


def test_yaml_file_round_trip(tmp_path):
    s = load_scenario(write(tmp_path, BUILTINS["advection-exact"]))
    assert s.T == 5.0 and s.params.epsilon == 0.01


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_builtin_invariant_suites_pass(tmp_path, name):
    out = run_scenario(load_scenario(name), str(tmp_path))
    assert out.passed, out.checks
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["passed"] and set(summary["checks"]) == set(out.checks)


def test_advection_exact_and_nonuniqueness_reports(tmp_path):
    out = run_scenario(load_scenario("advection-exact"), str(tmp_path / "a"))
    assert out.checks["transport_exact"]["value"] == 0.0
    out = run_scenario(load_scenario("nonlocal-nonuniqueness"), str(tmp_path / "b"))
    rep = json.loads((tmp_path / "b" / "experiments.json").read_text())
    assert rep["nonuniqueness"]["restricted_norm"] == 0.0


def test_outputs_reproducible(tmp_path):
    s = load_scenario("psystem-boundary")
    run_scenario(s, str(tmp_path / "one"))
    run_scenario(load_scenario("psystem-boundary"), str(tmp_path / "two"))
    for f in ("snapshots.csv", "events.jsonl", "functionals.csv", "summary.json"):
        assert (tmp_path / "one" / f).read_bytes() == (tmp_path / "two" / f).read_bytes()


def test_convergence_study_needs_three():
    with pytest.raises(ValueError):
        convergence_study(load_scenario("advection-exact"), [0.1, 0.05])


def test_linear_study_has_no_error():
    rows = convergence_study(load_scenario("advection-exact"), [0.1, 0.05, 0.025])
    assert all(r[2] == 0.0 for r in rows)


def test_cli_verbs(tmp_path, capsys):
    assert main(["validate", "--scenario", "advection-exact"]) == 0
    assert "valid" in capsys.readouterr().out
    assert main(["run", "--scenario", "advection-exact", "--out-dir", str(tmp_path / "r"),
                 "--snapshots", "0.5,1.5"]) == 0
    lines = (tmp_path / "r" / "snapshots.csv").read_text().splitlines()
    assert {ln.split(",")[0] for ln in lines[1:]} == {"0.5", "1.5", "5.0"}
    assert main(["run", "--scenario", "psystem-boundary", "--out-dir", str(tmp_path / "b"),
                 "--budget", "3"]) == 2
    assert "EventBudgetExceeded" in capsys.readouterr().err
    assert main(["study", "--scenario", "advection-exact", "--eps", "0.1,0.05,0.025"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert len(rows) == 2
    raw = psys_raw()
    del raw["boundary"]["ell"]
    assert main(["validate", "--scenario", write(tmp_path, raw)]) == 2
    assert "boundary.ell" in capsys.readouterr().err


def test_cli_sweep(tmp_path, capsys):
    a = write(tmp_path, BUILTINS["advection-exact"], "a.yaml")
    b = write(tmp_path, BUILTINS["nonlocal-nonuniqueness"], "b.yaml")
    assert main(["sweep", "--scenario", a, "--scenario", b, "--out-dir", str(tmp_path / "sw"),
                 "--workers", "2"]) == 0
    assert (tmp_path / "sw" / "00-a" / "summary.json").exists()
    assert (tmp_path / "sw" / "01-b" / "summary.json").exists()
