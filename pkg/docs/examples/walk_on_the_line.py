"""
A walk on the integers with diagonal coins
==========================================

Right-jump coin B = diag(1, sqrt(3)/2, 3/5), left-jump coin
C = diag(0, 1/2, 4/5), started from the maximally mixed coin at the
origin.  Because B and C commute, the walk splits into three classical
walks: one that always moves right, and two biased diffusions.
"""

import numpy as np

from oqw import HomogeneousWalkZ, LatticeState, analyze_components, distribution_after, moments

B = np.diag([1.0, np.sqrt(3) / 2, 3 / 5])
C = np.diag([0.0, 1 / 2, 4 / 5])
walk = HomogeneousWalkZ(B, C)
rho0 = np.eye(3) / 3

###############################################################################
# Component analysis
# ------------------
# Each component has a right amplitude b and a left amplitude c.  When
# b * c == 0 it never spreads (a moving spike), otherwise it drifts at
# b^2 - c^2 per step and spreads with variance 4 b^2 c^2 per step.

an = analyze_components(walk, rho0)
for comp in an.components:
    print(f"{comp.kind:9s} b={comp.b:.4f} c={comp.c:.4f} weight={comp.weight:.4f} "
          f"drift={comp.drift:+.3f} diffusion={comp.diffusion:.4f}")

###############################################################################
# Exact distributions
# -------------------

for n in (10, 20, 50):
    d = distribution_after(walk, LatticeState.localized(rho0), n)
    mean, var = moments(d)
    print(f"n={n:2d}  P(+n)={d[n]:.6f}  mean={mean:.3f}  variance={var:.3f}")

# A crude text histogram at n = 50 (even sites only carry mass).
d = distribution_after(walk, LatticeState.localized(rho0), 50)
for x in range(-40, 52, 4):
    p = d.get(x, 0.0)
    print(f"{x:+4d} {'#' * int(round(400 * p))}")
