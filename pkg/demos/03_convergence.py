"""Successive front-tracking solutions form a Cauchy sequence.

The smooth pulse is tracked at decreasing accuracy parameters; each halving
roughly halves the L1 distance between consecutive solutions.
"""

from frontrack import load_scenario, run

s = load_scenario("psystem-smooth")
prev = None
for eps in (0.04, 0.02, 0.01):
    se = s.with_epsilon(eps)
    u = run(se.system, se.boundary, se.params, se.u0, se.T, support=se.support, record_events=False).u_final
    if prev is not None:
        print(f"eps {2 * eps:.3f} -> {eps:.3f}: L1 distance {prev.l1_distance(u):.3e}")
    prev = u
