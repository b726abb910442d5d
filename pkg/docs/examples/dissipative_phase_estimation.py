"""
Phase estimation as a dissipative process
=========================================

A circuit of T gates becomes a walk on a chain of T+1 nodes.  Jumping
forward from node t-1 to t applies gate t with weight omega; jumping back
undoes it with weight 1 - omega.  The steady state holds the circuit's
output at the last node with probability that grows with omega.

Here the circuit is four-ancilla phase estimation of diag(1, e^{2 pi i 5/16}),
21 gates in all.
"""

import numpy as np

from oqw import DQCChain, PhaseEstimationSpec, birth_death_stationary, build_phase_estimation, run_to_steady, success_probability, sweep_omega

spec = PhaseEstimationSpec(n_ancilla=4, phase=5 / 16)
circuit = build_phase_estimation(spec)
print(f"{circuit.T} gates:", ", ".join(circuit.labels))

chain = DQCChain(circuit, omega=0.8)
steady, n = run_to_steady(chain, chain.initial_state(spec.initial_vector()), tol=1e-10)
pT = np.trace(steady.block(chain.T)).real
hit = success_probability(steady, spec.readout_projector("0101"), chain.T)
print(f"omega=0.8: steady after {n} steps, p_T={pT:.6f} "
      f"(birth-death {birth_death_stationary(circuit.T, 0.8)[-1]:.6f}), "
      f"P(read 0101 | at node T)={hit / pT:.9f}")

###############################################################################
# Larger omega: fewer steps and a higher chance of finding the output.

rows = sweep_omega(circuit, [0.55, 0.6, 0.7, 0.8, 0.9, 0.95], spec.initial_vector(),
                   spec.readout_projector("0101"))
print("omega  steps  p_T")
for r in rows:
    print(f"{r['omega']:.2f}  {r['steps_to_steady']:5d}  {r['p_T']:.4f}")
