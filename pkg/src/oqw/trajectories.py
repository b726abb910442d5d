"""
Quantum-trajectory unravelling of open quantum walks.

A pure walker ``|phi> (x) |i>`` jumps to ``B(i->j)|phi> / sqrt(p_j)`` at node
``j`` with probability ``p_j = ||B(i->j)|phi>||^2``.  Averaging over jumps
reproduces one step of the exact map.  Targets are sampled by inverse CDF
over the outgoing edges sorted by target identifier, using one uniform
draw per step.

Ensembles are split into fixed-size blocks of trajectories.  Block ``b``
draws its uniforms from the ``b``-th child of ``SeedSequence(seed)``, so
results do not depend on how many workers run the blocks or in which
order they finish.
"""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import (
    BlockDiagonalState,
    OpenQuantumWalk,
    dagger,
    evolve,
    node_distribution,
)
from .errors import InvariantViolation, WalkStructureError
from .lattice import HomogeneousWalkZ, LatticeState, distribution_after

__all__ = [
    "PureWalkerState",
    "TrajectoryRecord",
    "EnsembleEstimate",
    "jump_probabilities",
    "jump_outcomes",
    "trajectory_step",
    "simulate_trajectory",
    "run_ensemble",
    "measurement_outcomes",
    "measurement_chain_step",
    "exact_distribution",
    "total_variation",
    "BLOCK_SIZE",
]

Walk = Union[OpenQuantumWalk, HomogeneousWalkZ]

BLOCK_SIZE = 4096
NORM_TOL = 1e-12


@dataclass(frozen=True)
class PureWalkerState:
    amplitude: np.ndarray
    node: int

    def __post_init__(self):
        v = np.array(self.amplitude, dtype=np.complex128).ravel()
        if abs(np.linalg.norm(v) - 1.0) > NORM_TOL:
            raise ValueError(f"coin vector has norm {np.linalg.norm(v):.15f}, expected 1")
        v.setflags(write=False)
        object.__setattr__(self, "amplitude", v)
        object.__setattr__(self, "node", int(self.node))

    @classmethod
    def normalized(cls, vector, node: int = 0) -> "PureWalkerState":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        return cls(v / np.linalg.norm(v), node)

    def density(self) -> BlockDiagonalState:
        return BlockDiagonalState.pure(self.amplitude, self.node)


@dataclass(frozen=True)
class TrajectoryRecord:
    seed: int
    positions: tuple
    final_state: PureWalkerState
    index: int = 0


@dataclass(frozen=True)
class EnsembleEstimate:
    counts: dict
    n_trajectories: int
    seed: int
    paths: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if sum(self.counts.values()) != self.n_trajectories:
            raise InvariantViolation("counts do not add up to the number of trajectories")

    def distribution(self) -> dict:
        return {x: c / self.n_trajectories for x, c in sorted(self.counts.items())}


def _outgoing(walk: Walk, node: int) -> tuple:
    try:
        return walk.outgoing(node)
    except KeyError:
        raise WalkStructureError(f"node {node} is not part of the walk") from None


def jump_outcomes(walk: Walk, state: PureWalkerState) -> list:
    """``(target, probability, unnormalised B|phi>)`` for every outgoing edge."""
    out = []
    for target, b in _outgoing(walk, state.node):
        v = b @ state.amplitude
        out.append((target, float(np.vdot(v, v).real), v))
    return out


def jump_probabilities(walk: Walk, state: PureWalkerState) -> dict:
    """``{target: ||B|phi>||^2}`` for the walker's current node."""
    return {t: p for t, p, _ in jump_outcomes(walk, state)}


def _pick(cumulative: np.ndarray, u):
    """Inverse-CDF index; rounding overshoot falls back to the last live edge."""
    k = np.searchsorted(cumulative, u, side="right")
    return np.minimum(k, cumulative.shape[0] - 1)


def trajectory_step(walk: Walk, state: PureWalkerState, rng: np.random.Generator) -> PureWalkerState:
    """Sample one quantum jump with a single uniform from ``rng``."""
    return _jump(walk, state, rng.random())


def _jump(walk: Walk, state: PureWalkerState, u: float) -> PureWalkerState:
    outcomes = [o for o in jump_outcomes(walk, state) if o[1] > 0.0]
    if not outcomes:
        raise InvariantViolation(f"all jump probabilities vanish at node {state.node}")
    probs = np.array([o[1] for o in outcomes])
    k = int(_pick(np.cumsum(probs) / probs.sum(), u))
    target, p, v = outcomes[k]
    return PureWalkerState(v / np.sqrt(p), target)


def simulate_trajectory(
    walk: Walk, initial: PureWalkerState, n_steps: int, seed: int
) -> TrajectoryRecord:
    """A single trajectory driven by ``np.random.default_rng(seed)``."""
    rng = np.random.default_rng(seed)
    state = initial
    positions = [state.node]
    for _ in range(n_steps):
        state = trajectory_step(walk, state, rng)
        positions.append(state.node)
    return TrajectoryRecord(seed=seed, positions=tuple(positions), final_state=state)


def _run_block(walk: Walk, initial: PureWalkerState, n_steps: int, uniforms: np.ndarray,
               keep_paths: int):
    """Advance a block of trajectories together; ``uniforms`` is (n, n_steps)."""
    n = uniforms.shape[0]
    nodes = np.full(n, initial.node, dtype=np.int64)
    amps = np.tile(initial.amplitude, (n, 1))
    paths = np.empty((keep_paths, n_steps + 1), dtype=np.int64) if keep_paths else None
    if keep_paths:
        paths[:, 0] = nodes[:keep_paths]
    for s in range(n_steps):
        u = uniforms[:, s]
        new_nodes = np.empty_like(nodes)
        new_amps = np.empty_like(amps)
        for node in np.unique(nodes):
            idx = np.flatnonzero(nodes == node)
            edges = _outgoing(walk, int(node))
            if not edges:
                raise InvariantViolation(f"node {node} has no outgoing edges")
            vecs = np.stack([amps[idx] @ b.T for _, b in edges])  # (edges, m, d)
            probs = np.einsum("emd,emd->em", vecs.conj(), vecs).real
            cum = np.cumsum(probs, axis=0)
            total = cum[-1]
            if np.any(total <= 0.0):
                raise InvariantViolation(f"all jump probabilities vanish at node {node}")
            # first edge whose cumulative mass exceeds u * total, skipping empty edges
            k = np.sum(cum <= (u[idx] * total)[None, :], axis=0)
            k = np.minimum(k, len(edges) - 1)
            while True:
                dead = probs[k, np.arange(idx.size)] <= 0.0
                if not dead.any():
                    break
                k[dead] -= 1
            targets = np.array([t for t, _ in edges], dtype=np.int64)
            chosen = vecs[k, np.arange(idx.size)]
            norms = np.sqrt(probs[k, np.arange(idx.size)])
            new_nodes[idx] = targets[k]
            new_amps[idx] = chosen / norms[:, None]
        nodes, amps = new_nodes, new_amps
        if keep_paths:
            paths[:, s + 1] = nodes[:keep_paths]
    return nodes, amps, paths


def run_ensemble(
    walk: Walk,
    initial: PureWalkerState,
    n_steps: int,
    n_traj: int,
    seed: int,
    workers: int = 1,
    record_paths: int = 0,
) -> EnsembleEstimate:
    """
    Simulate ``n_traj`` independent trajectories and count final positions.

    Parameters
    ----------
    walk : OpenQuantumWalk or HomogeneousWalkZ
    initial : PureWalkerState
    n_steps, n_traj : int
    seed : int
        Root seed.  Output depends only on ``(seed, n_traj, n_steps)`` and
        the walk, never on ``workers``.
    workers : int
        Threads used to run blocks of trajectories.
    record_paths : int
        Keep the position sequences of the first ``record_paths``
        trajectories (returned as :class:`TrajectoryRecord` objects).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be at least 1")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    n_blocks = -(-n_traj // BLOCK_SIZE)
    children = np.random.SeedSequence(seed).spawn(n_blocks)

    def task(b):
        size = min(BLOCK_SIZE, n_traj - b * BLOCK_SIZE)
        rng = np.random.Generator(np.random.PCG64(children[b]))
        uniforms = rng.random((size, n_steps))
        keep = max(0, min(record_paths - b * BLOCK_SIZE, size))
        nodes, amps, paths = _run_block(walk, initial, n_steps, uniforms, keep)
        return Counter(nodes.tolist()), amps[:keep], paths

    if workers > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, range(n_blocks)))
    else:
        results = [task(b) for b in range(n_blocks)]

    counts = Counter()
    records = []
    for b, (c, amps, paths) in enumerate(results):
        counts.update(c)
        if paths is not None:
            for r in range(paths.shape[0]):
                records.append(TrajectoryRecord(
                    seed=seed,
                    positions=tuple(int(x) for x in paths[r]),
                    final_state=PureWalkerState(amps[r], int(paths[r, -1])),
                    index=b * BLOCK_SIZE + r,
                ))
    return EnsembleEstimate(dict(sorted(counts.items())), n_traj, seed, tuple(records))


# --------------------------------------------------------------------------
# position-measurement chain on density matrices
# --------------------------------------------------------------------------

def _localized_node(walk: Walk, state: BlockDiagonalState) -> int:
    live = [n for n, m in state.blocks.items() if np.trace(m).real != 0.0]
    if len(live) != 1:
        raise WalkStructureError(
            f"measurement chain needs a state on exactly one node, got support {live}"
        )
    return live[0]


def measurement_outcomes(walk: Walk, state: BlockDiagonalState) -> list:
    """
    Every outcome of a position measurement after one step.

    Returns ``(node, probability, conditional_state)`` triples, the state
    being ``B rho B^dag / p`` localized at ``node``.  Outcomes with zero
    probability are listed with ``conditional_state = None``.
    """
    i = _localized_node(walk, state)
    rho = state.blocks[i]
    out = []
    for j, b in _outgoing(walk, i):
        m = b @ rho @ dagger(b)
        p = float(np.trace(m).real)
        cond = BlockDiagonalState({j: (m + dagger(m)) / (2 * p)}) if p > 0.0 else None
        out.append((j, p, cond))
    return out


def measurement_chain_step(
    walk: Walk, state: BlockDiagonalState, rng: np.random.Generator
) -> BlockDiagonalState:
    """Sample a position outcome and return the normalized conditional state."""
    outcomes = [o for o in measurement_outcomes(walk, state) if o[1] > 0.0]
    if not outcomes:
        raise InvariantViolation("all measurement outcomes have zero probability")
    probs = np.array([o[1] for o in outcomes])
    k = int(_pick(np.cumsum(probs) / probs.sum(), rng.random()))
    return outcomes[k][2]


# --------------------------------------------------------------------------
# comparison helpers
# --------------------------------------------------------------------------

def exact_distribution(walk: Walk, initial: PureWalkerState, n_steps: int) -> dict:
    """Node distribution of the exact map started from ``initial``."""
    rho = np.outer(initial.amplitude, initial.amplitude.conj())
    if isinstance(walk, HomogeneousWalkZ):
        return distribution_after(walk, LatticeState.localized(rho, initial.node), n_steps)
    state = evolve(walk, BlockDiagonalState({initial.node: rho}), n_steps)
    return node_distribution(state)


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
