"""Command line entry point: ``frontrack {validate,run,sweep,study}``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import FrontTrackError
from .scenarios import builtin_names, convergence_study, load_scenario, run_scenario, sweep


def _floats(text):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parser():
    p = argparse.ArgumentParser(prog="frontrack", description="Wave-front tracking for boundary value problems.")
    sub = p.add_subparsers(dest="verb", required=True)

    v = sub.add_parser("validate", help="load and validate a scenario")
    v.add_argument("--scenario", required=True, help=f"YAML file or built-in ({', '.join(builtin_names())})")

    r = sub.add_parser("run", help="run one scenario and write its artifact bundle")
    r.add_argument("--scenario", required=True)
    r.add_argument("--out-dir", required=True)
    r.add_argument("--snapshots", type=_floats, default=None, help="comma separated snapshot times")
    r.add_argument("--budget", type=int, default=None, help="maximal number of events")

    w = sub.add_parser("sweep", help="run several scenarios in parallel")
    w.add_argument("--scenario", required=True, action="append")
    w.add_argument("--out-dir", required=True)
    w.add_argument("--budget", type=int, default=None)
    w.add_argument("--workers", type=int, default=None)

    s = sub.add_parser("study", help="convergence study over accuracies")
    s.add_argument("--scenario", required=True)
    s.add_argument("--out-dir", default=None)
    s.add_argument("--eps", type=_floats, required=True, help="comma separated accuracies (at least 3)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.verb == "validate":
            s = load_scenario(args.scenario)
            print(f"{s.name}: valid ({s.system.name}, ell={s.boundary.ell}, epsilon={s.params.epsilon:g})")
            return 0
        if args.verb == "run":
            s = load_scenario(args.scenario)
            out = run_scenario(s, args.out_dir, snapshots=args.snapshots, budget=args.budget)
            for name, c in out.checks.items():
                print(f"{'PASS' if c['passed'] else 'FAIL'} {name} {c['value']!r}")
            return 0 if out.passed else 1
        if args.verb == "sweep":
            results = sweep(args.scenario, args.out_dir, args.budget, args.workers)
            for name, ok, err in results:
                print(f"{'PASS' if ok else 'FAIL'} {name}" + (f" ({err})" if err else ""))
            return 0 if all(ok for _, ok, _ in results) else 1
        if args.verb == "study":
            s = load_scenario(args.scenario)
            rows = convergence_study(s, args.eps, args.out_dir)
            print(json.dumps([dict(epsilon=a, epsilon_next=b, distance=d, ratio=r) for a, b, d, r in rows]))
            return 0
    except (FrontTrackError, ValueError, FileNotFoundError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
