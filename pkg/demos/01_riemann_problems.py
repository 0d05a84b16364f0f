"""Lax curves and Riemann problems for isothermal gas dynamics.

Run with ``python3 demos/01_riemann_problems.py``.
"""

import numpy as np

from frontrack import get_system, make_boundary, solve_boundary_riemann, solve_riemann
from frontrack.systems import lax_curve

gas = get_system("psystem")
left = np.array([1.0, 0.0])

# Strengths are measured so that the characteristic speed moves by exactly sigma.
for sigma in (-0.1, 0.1):
    right = lax_curve(gas, left, 1, sigma)
    print(f"1-wave of strength {sigma:+.2f}: {left} -> {np.round(right, 6)}")

# A shock tube: dense gas on the left, rarefied on the right.
sol = solve_riemann(gas, [1.2, 0.0], [0.9, 0.0])
print("\nshock tube")
for w in sol.waves:
    kind = "shock" if w.strength < 0 else "rarefaction"
    print(f"  family {w.family}: {kind:11s} strength {w.strength:+.5f}")

# At the boundary x = 0 only the second family enters the domain.
bd = make_boundary(gas, "riemann-invariant", 1, margin_c=0.1)
bsol = solve_boundary_riemann(bd, np.array([1.05, 0.02]), np.array([0.01]))
print("\nboundary Riemann problem")
print("  trace state", np.round(bsol.trace_state, 6))
print("  b(trace) =", bd.b(bsol.trace_state), "(prescribed 0.01)")
