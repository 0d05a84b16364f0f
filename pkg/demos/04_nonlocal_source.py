"""A non-local source breaks the restriction property.

The mass of the solution on [0, 1] feeds a source acting on [3, 4].  The full
problem develops mass on [3, 4]; the problem restricted to x > 2 with the
(identically zero) trace as boundary datum stays at rest.
"""

from frontrack.traces import nonuniqueness_experiment

mass, restricted, trace = nonuniqueness_experiment(epsilon=0.01, N=20, eps_split=0.05)
print(f"mass on [3, 4] at t = 1: {mass:.5f} (characteristics give {1 / 6:.5f})")
print(f"trace along x = 2: sup |g| = {abs(trace.values).max()}")
print(f"restricted problem: L1 norm {restricted}")
