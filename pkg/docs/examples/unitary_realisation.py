"""
Recovering one walk step from unitary dynamics
==============================================

The coin and position are joined by an auxiliary copy of the position
register.  A block-diagonal unitary moves the auxiliary register, a
measurement of it removes coherences, the registers are swapped and the
auxiliary one is discarded.  The result equals one step of the walk.
Without the measurement the same construction gives a coherent walk,
provided the two jump operators have orthogonal ranges.
"""

import numpy as np

from oqw import (
    HomogeneousWalkZ,
    LatticeState,
    check_uqw_condition,
    distribution_after,
    hadamard_pair,
    random_state,
    random_walk,
    run_coherent,
    run_realisation,
    step,
)

rng = np.random.default_rng(1)
walk = random_walk(3, 2, rng)
state = random_state(walk.nodes, 2, rng)

exact = step(walk, state)
for method in ("gram_schmidt", "svd"):
    out = run_realisation(walk, state, method=method)
    err = max(np.abs(out.block(k) - exact.block(k)).max() for k in walk.nodes)
    print(f"{method:13s} max entry error {err:.1e}")

###############################################################################
# Hadamard walk: coherent versus open.

B, C = hadamard_pair()
print(check_uqw_condition(B, C))
hw = HomogeneousWalkZ(B, C)
psi = np.array([1, 1j]) / np.sqrt(2)
n = 30
amps = run_coherent(hw, {0: psi}, n)
coherent = {x: float(np.vdot(v, v).real) for x, v in amps.items()}
opened = distribution_after(hw, LatticeState.localized(np.outer(psi, psi.conj())), n)
for name, d in (("coherent", coherent), ("open", opened)):
    x = np.array(list(d))
    p = np.array(list(d.values()))
    print(f"{name:8s} std of position after {n} steps: {np.sqrt(np.dot(p, x**2)):.2f}")
