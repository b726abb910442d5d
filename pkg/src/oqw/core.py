"""
Open quantum walks on finite graphs.

A walk attaches one transition operator ``B`` (acting on the internal coin
space) to every directed edge ``source -> target``.  States that matter for
the dynamics are block diagonal in the node basis,

    rho = sum_i rho_i (x) |i><i|,

and one step of the walk maps the blocks as

    rho_i' = sum_j B(j->i) rho_j B(j->i)^dag.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Node
identifiers are integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, KrausCompletenessError, WalkStructureError

__all__ = [
    "DEFAULT_TOL",
    "DEFAULT_PRUNE",
    "MAX_FULL_DIM",
    "as_matrix",
    "dagger",
    "is_hermitian",
    "is_unitary",
    "is_positive_semidefinite",
    "trace_norm",
    "OpenQuantumWalk",
    "ValidationReport",
    "validate_walk",
    "require_valid",
    "BlockDiagonalState",
    "FullState",
    "step",
    "evolve",
    "node_distribution",
    "full_map",
    "apply_full_map",
    "diagonal_part",
    "random_walk",
    "random_state",
]

DEFAULT_TOL = 1e-10
DEFAULT_PRUNE = 1e-15
MAX_FULL_DIM = 2**12


# --------------------------------------------------------------------------
# matrix helpers
# --------------------------------------------------------------------------

def as_matrix(a, dim: int | None = None) -> np.ndarray:
    """Return ``a`` as a square complex128 array, optionally checking its size."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise WalkStructureError(f"expected a non-empty square matrix, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise WalkStructureError(f"expected a {dim}x{dim} matrix, got {m.shape[0]}x{m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise WalkStructureError("matrix contains NaN or Inf entries")
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    m = np.array(m, dtype=np.complex128, copy=True)
    m.setflags(write=False)
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    return bool(np.max(np.abs(a - dagger(a)), initial=0.0) <= tol)


def is_unitary(a, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.linalg.norm(dagger(a) @ a - np.eye(a.shape[0]), 2) <= tol)


def is_positive_semidefinite(a, tol: float = DEFAULT_TOL) -> bool:
    """Hermitian within ``tol`` and no eigenvalue below ``-tol``."""
    a = np.asarray(a)
    if not is_hermitian(a, tol):
        return False
    h = (a + dagger(a)) / 2
    return bool(np.linalg.eigvalsh(h).min() >= -tol)


def trace_norm(a) -> float:
    """Schatten-1 norm.  Hermitian input takes the fast eigenvalue path."""
    a = np.asarray(a)
    if is_hermitian(a, 1e-14):
        return float(np.abs(np.linalg.eigvalsh((a + dagger(a)) / 2)).sum())
    return float(np.linalg.svd(a, compute_uv=False).sum())


# --------------------------------------------------------------------------
# walks
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OpenQuantumWalk:
    """
    A directed graph with a transition operator on every edge.

    Parameters
    ----------
    nodes : iterable of int
        Node identifiers, kept in the given order.  The first node plays the
        role of the reference node in dilation constructions.
    coin_dim : int
        Dimension of the internal (coin) space.
    transitions : mapping (source, target) -> matrix
        ``transitions[j, i]`` is the operator applied when the walker jumps
        from ``j`` to ``i``.  Missing edges are zero operators.
    """

    nodes: tuple
    coin_dim: int
    transitions: Mapping

    _outgoing: Mapping = field(init=False, repr=False, compare=False)
    _incoming: Mapping = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.nodes)
        if len(nodes) == 0:
            raise WalkStructureError("a walk needs at least one node")
        if len(set(nodes)) != len(nodes):
            raise WalkStructureError("duplicate node identifiers")
        d = int(self.coin_dim)
        if d < 1:
            raise WalkStructureError(f"coin_dim must be positive, got {d}")
        known = set(nodes)
        trans = {}
        for key, mat in dict(self.transitions).items():
            src, dst = (int(k) for k in key)
            if src not in known or dst not in known:
                raise WalkStructureError(f"edge {src}->{dst} references an unknown node")
            m = as_matrix(mat)
            if m.shape[0] != d:
                raise WalkStructureError(
                    f"transition {src}->{dst} is {m.shape[0]}x{m.shape[0]}, coin_dim is {d}"
                )
            trans[(src, dst)] = _frozen(m)
        out = {n: [] for n in nodes}
        inc = {n: [] for n in nodes}
        for (src, dst), m in trans.items():
            out[src].append((dst, m))
            inc[dst].append((src, m))
        out = {n: tuple(sorted(v, key=lambda e: e[0])) for n, v in out.items()}
        inc = {n: tuple(sorted(v, key=lambda e: e[0])) for n, v in inc.items()}
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coin_dim", d)
        object.__setattr__(self, "transitions", MappingProxyType(trans))
        object.__setattr__(self, "_outgoing", MappingProxyType(out))
        object.__setattr__(self, "_incoming", MappingProxyType(inc))

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def outgoing(self, node: int) -> tuple:
        """``(target, B)`` pairs leaving ``node``, sorted by target identifier."""
        return self._outgoing[node]

    def incoming(self, node: int) -> tuple:
        """``(source, B)`` pairs entering ``node``, sorted by source identifier."""
        return self._incoming[node]

    def operator(self, source: int, target: int) -> np.ndarray:
        m = self.transitions.get((source, target))
        if m is None:
            return np.zeros((self.coin_dim, self.coin_dim), dtype=np.complex128)
        return m

    def index(self, node: int) -> int:
        return self.nodes.index(node)


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_walk`; truthy iff the walk passed."""

    passed: bool
    tol: float
    deviations: Mapping

    @property
    def worst_node(self):
        if not self.deviations:
            return None
        return max(self.deviations, key=lambda n: self.deviations[n])

    @property
    def worst_deviation(self) -> float:
        return max(self.deviations.values(), default=0.0)

    def __bool__(self):
        return self.passed


def validate_walk(walk: OpenQuantumWalk, tol: float = DEFAULT_TOL) -> ValidationReport:
    """
    Check the completeness relation at every source node.

    For each node ``j`` the deviation is the operator norm of
    ``sum_i B(j->i)^dag B(j->i) - I``.  A node without outgoing edges has
    deviation 1.
    """
    eye = np.eye(walk.coin_dim)
    devs = {}
    for j in walk.nodes:
        acc = np.zeros((walk.coin_dim, walk.coin_dim), dtype=np.complex128)
        for _, b in walk.outgoing(j):
            acc += dagger(b) @ b
        devs[j] = float(np.linalg.norm(acc - eye, 2))
    passed = all(v <= tol for v in devs.values())
    return ValidationReport(passed=passed, tol=tol, deviations=MappingProxyType(devs))


def require_valid(walk: OpenQuantumWalk, tol: float = DEFAULT_TOL) -> None:
    """Raise :class:`KrausCompletenessError` naming the worst node if validation fails."""
    report = validate_walk(walk, tol)
    if not report:
        node = report.worst_node
        dev = report.deviations[node]
        raise KrausCompletenessError(
            f"completeness fails at node {node}: deviation {dev:.3e} > tol {tol:.1e}",
            node=node,
            deviation=dev,
        )


# --------------------------------------------------------------------------
# states
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockDiagonalState:
    """
    A walker state ``sum_i rho_i (x) |i><i|`` stored as ``{node: rho_i}``.

    ``pruned_mass`` accumulates the trace of blocks dropped by :func:`step`
    because they fell below the prune threshold.
    """

    blocks: Mapping
    pruned_mass: float = 0.0

    def __post_init__(self):
        blocks = {}
        dim = None
        for node, mat in dict(self.blocks).items():
            m = as_matrix(mat)
            if dim is None:
                dim = m.shape[0]
            elif m.shape[0] != dim:
                raise WalkStructureError("state blocks have different dimensions")
            blocks[int(node)] = _frozen(m)
        if not blocks:
            raise WalkStructureError("a state needs at least one block")
        object.__setattr__(self, "blocks", MappingProxyType(dict(sorted(blocks.items()))))
        object.__setattr__(self, "pruned_mass", float(self.pruned_mass))

    @classmethod
    def localized(cls, block, node: int = 0) -> "BlockDiagonalState":
        return cls({node: block})

    @classmethod
    def pure(cls, vector, node: int = 0) -> "BlockDiagonalState":
        v = np.asarray(vector, dtype=np.complex128).ravel()
        return cls({node: np.outer(v, v.conj())})

    @property
    def coin_dim(self) -> int:
        return next(iter(self.blocks.values())).shape[0]

    @property
    def support(self) -> tuple:
        return tuple(self.blocks)

    def block(self, node: int) -> np.ndarray:
        m = self.blocks.get(node)
        if m is None:
            return np.zeros((self.coin_dim, self.coin_dim), dtype=np.complex128)
        return m

    def trace(self) -> float:
        return float(sum(np.trace(m).real for m in self.blocks.values()))

    def is_valid(self, tol: float = DEFAULT_TOL) -> bool:
        """Blocks Hermitian PSD and total trace (plus pruned mass) equal to one."""
        if not all(is_positive_semidefinite(m, tol) for m in self.blocks.values()):
            return False
        return abs(self.trace() + self.pruned_mass - 1.0) <= tol

    def max_difference(self, other: "BlockDiagonalState") -> float:
        """Largest entrywise difference over the union of supports."""
        nodes = set(self.blocks) | set(other.blocks)
        return max(float(np.max(np.abs(self.block(n) - other.block(n)))) for n in nodes)

    def combine(self, other: "BlockDiagonalState", a: complex = 1.0, b: complex = 1.0):
        """Blockwise ``a * self + b * other``."""
        nodes = sorted(set(self.blocks) | set(other.blocks))
        return BlockDiagonalState(
            {n: a * self.block(n) + b * other.block(n) for n in nodes},
            pruned_mass=self.pruned_mass + other.pruned_mass,
        )


@dataclass(frozen=True)
class FullState:
    """
    A density matrix on coin (x) node space, including node coherences.

    ``matrix`` is indexed in Kronecker order: row ``h * N + k`` is coin
    basis state ``h`` at the ``k``-th node of ``nodes``.
    """

    matrix: np.ndarray
    coin_dim: int
    nodes: tuple

    def __post_init__(self):
        nodes = tuple(int(n) for n in self.nodes)
        d = int(self.coin_dim)
        m = as_matrix(self.matrix, d * len(nodes))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coin_dim", d)
        object.__setattr__(self, "matrix", _frozen(m))

    def node_block(self, k: int, m: int) -> np.ndarray:
        """The coin-space block ``rho_{k,m}`` for node identifiers ``k``, ``m``."""
        n = len(self.nodes)
        t = self.matrix.reshape(self.coin_dim, n, self.coin_dim, n)
        return t[:, self.nodes.index(k), :, self.nodes.index(m)]

    def is_valid(self, tol: float = DEFAULT_TOL) -> bool:
        return (
            is_positive_semidefinite(self.matrix, tol)
            and abs(np.trace(self.matrix).real - 1.0) <= tol
        )

    @classmethod
    def from_blocks(cls, state: BlockDiagonalState, nodes: Iterable[int]) -> "FullState":
        nodes = tuple(nodes)
        d, n = state.coin_dim, len(nodes)
        t = np.zeros((d, n, d, n), dtype=np.complex128)
        for node, m in state.blocks.items():
            k = nodes.index(node)
            t[:, k, :, k] = m
        return cls(t.reshape(d * n, d * n), d, nodes)


# --------------------------------------------------------------------------
# dynamics
# --------------------------------------------------------------------------

def _check_dims(walk: OpenQuantumWalk, state: BlockDiagonalState) -> None:
    if state.coin_dim != walk.coin_dim:
        raise WalkStructureError(
            f"state blocks are {state.coin_dim}-dimensional, walk coin_dim is {walk.coin_dim}"
        )
    missing = [n for n in state.blocks if n not in walk._outgoing]
    if missing:
        raise WalkStructureError(f"state has support on unknown nodes {missing}")


def step(
    walk: OpenQuantumWalk,
    state: BlockDiagonalState,
    prune: float = DEFAULT_PRUNE,
    symmetrize: bool = True,
) -> BlockDiagonalState:
    """
    One application of the walk map.

    Parameters
    ----------
    walk : OpenQuantumWalk
    state : BlockDiagonalState
    prune : float
        Blocks whose trace ends up below this value are dropped and their
        trace is added to ``pruned_mass``.  Use 0 to keep everything.
    symmetrize : bool
        Replace each output block by its Hermitian part.
    """
    _check_dims(walk, state)
    new = {}
    for j, rho in state.blocks.items():
        for i, b in walk.outgoing(j):
            term = b @ rho @ dagger(b)
            if i in new:
                new[i] += term
            else:
                new[i] = term
    pruned = state.pruned_mass
    out = {}
    for i, m in new.items():
        if symmetrize:
            m = (m + dagger(m)) / 2
        tr = np.trace(m).real
        if abs(tr) <= prune:
            pruned += tr
            continue
        out[i] = m
    if not out:
        # keep a representable state even if everything vanished
        out = {walk.nodes[0]: np.zeros((walk.coin_dim, walk.coin_dim), dtype=np.complex128)}
    return BlockDiagonalState(out, pruned_mass=pruned)


def evolve(walk: OpenQuantumWalk, state: BlockDiagonalState, n: int, **kwargs) -> BlockDiagonalState:
    """``n`` successive applications of :func:`step`; ``n = 0`` returns ``state``."""
    if n < 0:
        raise ValueError("number of steps must be non-negative")
    for _ in range(n):
        state = step(walk, state, **kwargs)
    return state


def node_distribution(state: BlockDiagonalState) -> dict:
    """Occupation probabilities ``p(i) = Tr rho_i``."""
    return {n: float(np.trace(m).real) for n, m in state.blocks.items()}


def _full_dim_check(walk: OpenQuantumWalk) -> None:
    dim = walk.coin_dim * walk.n_nodes
    if dim > MAX_FULL_DIM:
        raise CapacityError(
            f"dense product space of dimension {dim} exceeds the limit {MAX_FULL_DIM}"
        )


def full_map(walk: OpenQuantumWalk, rho: np.ndarray) -> np.ndarray:
    """
    Apply ``rho -> sum_{i,j} M rho M^dag`` with ``M = B(j->i) (x) |i><j|``.

    This is the literal product-space map, linear in ``rho`` and with no
    assumption about its structure.  Kronecker order matches
    :class:`FullState`.
    """
    _full_dim_check(walk)
    n = walk.n_nodes
    dim = walk.coin_dim * n
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (dim, dim):
        raise WalkStructureError(f"expected a {dim}x{dim} matrix, got {rho.shape}")
    out = np.zeros((dim, dim), dtype=np.complex128)
    for (j, i), b in walk.transitions.items():
        unit = sp.coo_matrix(([1.0], ([walk.index(i)], [walk.index(j)])), shape=(n, n))
        m = sp.kron(sp.csr_matrix(b), unit, format="csr")
        left = m @ rho
        out += np.asarray(m @ np.conj(left).T).conj().T
    return out


def diagonal_part(full: FullState) -> BlockDiagonalState:
    """Keep only the node-diagonal blocks ``rho_{k,k}``."""
    return BlockDiagonalState({k: full.node_block(k, k) for k in full.nodes})


def apply_full_map(walk: OpenQuantumWalk, state: FullState) -> BlockDiagonalState:
    """
    Apply the walk to a state that may carry coherences between nodes.

    The output of the product-space map is exactly block diagonal; it is
    returned as a :class:`BlockDiagonalState` over all walk nodes.
    """
    if state.coin_dim != walk.coin_dim or set(state.nodes) != set(walk.nodes):
        raise WalkStructureError("full state does not live on this walk's space")
    if state.nodes != walk.nodes:
        # reorder into walk order
        perm = [state.nodes.index(k) for k in walk.nodes]
        d, n = walk.coin_dim, walk.n_nodes
        t = state.matrix.reshape(d, n, d, n)[:, perm][:, :, :, perm]
        state = FullState(t.reshape(d * n, d * n), d, walk.nodes)
    out = full_map(walk, state.matrix)
    result = FullState.__new__(FullState)
    object.__setattr__(result, "matrix", out)
    object.__setattr__(result, "coin_dim", walk.coin_dim)
    object.__setattr__(result, "nodes", walk.nodes)
    return diagonal_part(result)


# --------------------------------------------------------------------------
# random instances
# --------------------------------------------------------------------------

def _random_isometry(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_walk(
    n_nodes: int,
    coin_dim: int,
    rng: np.random.Generator,
    edge_prob: float = 1.0,
    nodes: Iterable[int] | None = None,
) -> OpenQuantumWalk:
    """
    A random valid walk.  Each source draws a random isometry whose blocks
    become its outgoing operators; every node keeps at least one edge.
    """
    nodes = tuple(range(n_nodes)) if nodes is None else tuple(nodes)
    trans = {}
    for j in nodes:
        targets = [i for i in nodes if rng.random() < edge_prob]
        if not targets:
            targets = [nodes[int(rng.integers(len(nodes)))]]
        v = _random_isometry(coin_dim * len(targets), coin_dim, rng)
        for k, i in enumerate(targets):
            trans[(j, i)] = v[k * coin_dim:(k + 1) * coin_dim]
    return OpenQuantumWalk(nodes, coin_dim, trans)


def random_state(
    nodes: Iterable[int], coin_dim: int, rng: np.random.Generator, rank: int | None = None
) -> BlockDiagonalState:
    """A random block-diagonal density matrix with unit total trace."""
    nodes = tuple(nodes)
    rank = coin_dim if rank is None else rank
    blocks = {}
    for n in nodes:
        g = rng.normal(size=(coin_dim, rank)) + 1j * rng.normal(size=(coin_dim, rank))
        blocks[n] = g @ dagger(g)
    total = sum(np.trace(m).real for m in blocks.values())
    return BlockDiagonalState({n: m / total for n, m in blocks.items()})
