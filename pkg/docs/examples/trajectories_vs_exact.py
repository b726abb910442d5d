"""
Quantum trajectories
====================

Each trajectory is a pure coin vector sitting on one site.  At every
step the walker jumps right with probability ||B phi||^2, and the coin is
renormalized.  Counting where 10^5 walkers end up reproduces the exact
distribution.
"""

import time

import numpy as np

from oqw import HomogeneousWalkZ, PureWalkerState, exact_distribution, run_ensemble, total_variation

walk = HomogeneousWalkZ(np.diag([1.0, np.sqrt(3) / 2, 0.6]), np.diag([0.0, 0.5, 0.8]))
start = PureWalkerState.normalized([1, 1, 1], node=0)

t0 = time.perf_counter()
est = run_ensemble(walk, start, n_steps=20, n_traj=100_000, seed=7, workers=4)
print(f"100000 trajectories in {time.perf_counter() - t0:.2f}s")

exact = exact_distribution(walk, start, 20)
emp = est.distribution()
print(" site   empirical   exact")
for x in sorted(exact):
    if exact[x] > 1e-3:
        print(f"{x:+5d}   {emp.get(x, 0.0):.5f}     {exact[x]:.5f}")
print("total variation:", round(total_variation(emp, exact), 5))

###############################################################################
# The counts do not depend on the number of worker threads.

same = run_ensemble(walk, start, 20, 100_000, seed=7, workers=1)
print("identical with 1 worker:", same.counts == est.counts)

###############################################################################
# Error against the number of trajectories, averaged over a few seeds.

exact5 = exact_distribution(walk, start, 5)
for n in (100, 1_000, 10_000, 100_000):
    tv = np.mean([total_variation(run_ensemble(walk, start, 5, n, seed=s).distribution(), exact5)
                  for s in range(5)])
    print(f"N={n:6d}  TV={tv:.5f}  TV*sqrt(N)={tv * np.sqrt(n):.3f}")
