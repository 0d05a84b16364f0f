"""Traces of a front-tracking solution along vertical curves.

The L1 distance between traces on x = 1 and x = 1 + h shrinks linearly in h.
"""

from frontrack import CurveSpec, load_scenario, run, trace_distance

s = load_scenario("psystem-boundary")
res = run(s.system, s.boundary, s.params, s.u0, s.T, record_events=False)
ref = CurveSpec.vertical(1.0, 1)
for h in (0.2, 0.1, 0.05):
    d = trace_distance(res.trajectory, ref, CurveSpec.vertical(1.0 + h, 1), s.T)
    print(f"h = {h:<5} distance {d:.5f}  ratio d/h {d / h:.4f}")
