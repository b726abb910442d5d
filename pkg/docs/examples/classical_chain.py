"""
Classical Markov chains inside open quantum walks
=================================================

Put B(j->i) = sqrt(P[i, j]) U for any unitaries U.  The node marginals then
follow the classical chain P, no matter which unitaries are used.
"""

import numpy as np

from oqw import ClassicalTransitionMatrix, BlockDiagonalState, classical_marginal, embed_classical, evolve, node_distribution

# P[i, j] = probability of jumping from j to i; columns sum to one
P = ClassicalTransitionMatrix(np.array([
    [0.1, 0.5, 0.0],
    [0.9, 0.0, 0.3],
    [0.0, 0.5, 0.7],
]))

rng = np.random.default_rng(3)
unitaries = {}
for (i, j) in zip(*np.nonzero(P.P)):
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    unitaries[(int(j), int(i))] = q
walk = embed_classical(P, unitaries)
rho = BlockDiagonalState.localized(np.diag([0.5, 0.5]), 0)

for n in (1, 2, 5, 20):
    q = node_distribution(evolve(walk, rho, n))
    c = classical_marginal(P, {0: 1.0}, n)
    print(n, [round(q.get(k, 0.0), 6) for k in P.nodes], [round(c[k], 6) for k in P.nodes])
