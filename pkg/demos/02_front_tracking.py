"""Front tracking on a bounded domain with boundary data.

Twenty random jumps enter a p-system problem whose boundary at x = 0 holds a
Riemann invariant at a piecewise-constant value.  The interaction functional
never grows, and non-physical fronts stay below the accuracy parameter.
"""

import numpy as np

from frontrack import FunctionalWeights, load_scenario, run

s = load_scenario("psystem-boundary")
weights = FunctionalWeights.from_fit(s.boundary)
res = run(s.system, s.boundary, s.params, s.u0, s.T, weights=weights)

ups = np.array([r.Upsilon for r in res.functionals])
print(f"{len(res.events)} events, {len(res.final.fronts)} fronts at t = {s.T}")
print(f"functional: {ups[0]:.5f} -> {ups[-1]:.5f}, largest increase {np.max(np.diff(ups)):.1e}")

solvers = {}
for e in res.events:
    solvers[e.solver or e.kind] = solvers.get(e.solver or e.kind, 0) + 1
print("events by resolution:", solvers)

u = res.u_final
for x in (0.0, 0.5, 1.0, 2.0, 4.0):
    print(f"u({s.T}, {x}) = {np.round(u(x), 5)}")
