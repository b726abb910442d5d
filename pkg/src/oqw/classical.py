"""
Classical random walks as open quantum walks.

Convention: ``P[i, j]`` is the probability of a jump from node ``j`` to
node ``i``, so every column of ``P`` sums to one.  The embedded walk uses
``B(j->i) = sqrt(P[i, j]) U(j->i)`` with arbitrary unitaries ``U``; its
node marginals follow the classical chain whatever the unitaries are.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .core import OpenQuantumWalk, as_matrix, is_unitary

__all__ = ["ClassicalTransitionMatrix", "embed_classical", "classical_marginal"]

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True)
class ClassicalTransitionMatrix:
    """Column-stochastic ``P`` with ``P[i, j] = Prob(j -> i)`` over ``nodes``."""

    P: np.ndarray
    nodes: tuple = ()

    def __post_init__(self):
        p = np.array(self.P, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"transition matrix must be square, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("transition matrix contains NaN or Inf")
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("transition probabilities must lie in [0, 1]")
        sums = p.sum(axis=0)
        bad = np.flatnonzero(np.abs(sums - 1) > STOCHASTIC_TOL)
        if bad.size:
            raise ValueError(
                f"outgoing probabilities of source index {int(bad[0])} sum to {sums[bad[0]]!r}"
            )
        nodes = tuple(int(n) for n in self.nodes) or tuple(range(p.shape[0]))
        if len(nodes) != p.shape[0]:
            raise ValueError("number of node labels does not match the matrix size")
        p.setflags(write=False)
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def from_rows(cls, rows, nodes: Iterable[int] = ()) -> "ClassicalTransitionMatrix":
        """Build from the row-stochastic layout ``M[j, i] = Prob(j -> i)``."""
        return cls(np.asarray(rows, dtype=float).T, tuple(nodes))

    def prob(self, source: int, target: int) -> float:
        return float(self.P[self.nodes.index(target), self.nodes.index(source)])


def embed_classical(
    P: ClassicalTransitionMatrix,
    unitaries: Mapping | None = None,
    coin_dim: int | None = None,
    full_coin: bool = False,
) -> OpenQuantumWalk:
    """
    Walk with ``B(j->i) = sqrt(P[i, j]) U(j->i)`` on every edge with ``P > 0``.

    Parameters
    ----------
    P : ClassicalTransitionMatrix
    unitaries : mapping (source, target) -> unitary, optional
        Missing entries default to the identity.
    coin_dim : int, optional
        Coin dimension when no unitaries are supplied.  Defaults to 1, or to
        the number of nodes with ``full_coin=True``.
    """
    unitaries = dict(unitaries or {})
    dims = {as_matrix(u).shape[0] for u in unitaries.values()}
    if len(dims) > 1:
        raise ValueError("supplied unitaries have different dimensions")
    if dims:
        d = dims.pop()
        if coin_dim is not None and coin_dim != d:
            raise ValueError("coin_dim disagrees with the supplied unitaries")
    elif coin_dim is not None:
        d = coin_dim
    else:
        d = len(P.nodes) if full_coin else 1
    eye = np.eye(d)
    trans = {}
    for (j, i), u in unitaries.items():
        if not is_unitary(as_matrix(u), 1e-10):
            raise ValueError(f"operator on edge {j}->{i} is not unitary")
    for jj, j in enumerate(P.nodes):
        for ii, i in enumerate(P.nodes):
            p = P.P[ii, jj]
            if p > 0:
                u = as_matrix(unitaries.get((j, i), eye))
                trans[(j, i)] = np.sqrt(p) * u
    return OpenQuantumWalk(P.nodes, d, trans)


def classical_marginal(P: ClassicalTransitionMatrix, initial_masses: Mapping, n: int) -> dict:
    """Node distribution after ``n`` steps of the classical chain."""
    if n < 0:
        raise ValueError("number of steps must be non-negative")
    p = np.zeros(len(P.nodes))
    for node, m in initial_masses.items():
        p[P.nodes.index(node)] += m
    if abs(p.sum() - 1) > 1e-10:
        raise ValueError(f"initial masses sum to {p.sum()!r}")
    for _ in range(n):
        p = P.P @ p
    return {node: float(x) for node, x in zip(P.nodes, p)}
