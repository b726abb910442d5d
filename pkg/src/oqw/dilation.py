"""
Unitary realisation of an open quantum walk step.

The walk's coin (x) position space is doubled with an auxiliary copy of the
position register.  For each node ``k`` a unitary ``U(k)`` on coin (x) node
space is completed from the isometry whose first block column stacks the
outgoing operators ``B(k->i)``.  Conditioning on the position register,

    U_total = sum_k U(k) (x) |k><k|,

and the sequence extend -> conjugate -> dephase -> swap -> partial trace
reproduces one step of the walk.  Dropping the dephasing turns the
nearest-neighbour case into a coherent (unitary) quantum walk when
``C^dag B = 0``.

Dense triple-space matrices are ordered coin (x) auxiliary (x) position in
Kronecker order.  The "first" node is ``walk.nodes[0]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .core import (
    DEFAULT_TOL,
    BlockDiagonalState,
    OpenQuantumWalk,
    as_matrix,
    dagger,
)
from .errors import CapacityError, KrausCompletenessError, WalkStructureError
from .lattice import HomogeneousWalkZ

__all__ = [
    "MAX_TRIPLE_DIM",
    "LocalDilation",
    "GlobalUnitary",
    "complete_isometry",
    "global_unitary",
    "extend",
    "conjugate",
    "dephase",
    "swap_registers",
    "trace_out_auxiliary",
    "run_realisation",
    "UQWCheck",
    "check_uqw_condition",
    "run_coherent",
    "hadamard_pair",
]

MAX_TRIPLE_DIM = 2**14
INDEPENDENCE_TOL = 1e-8


@dataclass(frozen=True)
class LocalDilation:
    """
    Unitary ``U`` on coin (x) node space (Kronecker order, dimension ``d * N``)
    whose block column for the first node is the stack of ``B(k->i)``.
    """

    k: int
    U: np.ndarray
    coin_dim: int

    @property
    def n_nodes(self) -> int:
        return self.U.shape[0] // self.coin_dim

    def block(self, i: int, j: int) -> np.ndarray:
        """Coin-space block mapping node index ``j`` to node index ``i``."""
        d, n = self.coin_dim, self.n_nodes
        return self.U.reshape(d, n, d, n)[:, i, :, j]

    def node_major(self) -> np.ndarray:
        """``U`` reordered as node (x) coin, so blocks are contiguous."""
        d, n = self.coin_dim, self.n_nodes
        return self.U.reshape(d, n, d, n).transpose(1, 0, 3, 2).reshape(n * d, n * d)


def _gram_schmidt_completion(v: np.ndarray) -> np.ndarray:
    rows, cols = v.shape
    basis = [v[:, c] for c in range(cols)]
    q = v.copy()
    extra = []
    for e in range(rows):
        if len(basis) == rows:
            break
        cand = np.zeros(rows, dtype=np.complex128)
        cand[e] = 1.0
        for _ in range(2):  # second pass re-orthogonalises
            for b in basis:
                cand = cand - np.vdot(b, cand) * b
        norm = np.linalg.norm(cand)
        if norm < INDEPENDENCE_TOL:
            continue
        cand = cand / norm
        basis.append(cand)
        extra.append(cand)
    if len(basis) != rows:
        raise KrausCompletenessError("could not complete the isometry to a unitary")
    return np.column_stack([q] + extra) if extra else q


def _svd_completion(v: np.ndarray) -> np.ndarray:
    comp = scipy.linalg.null_space(dagger(v))
    return np.column_stack([v, comp])


_COMPLETIONS = {"gram_schmidt": _gram_schmidt_completion, "svd": _svd_completion}


def complete_isometry(
    columns: Sequence,
    k: int = 0,
    method: str = "gram_schmidt",
    tol: float = DEFAULT_TOL,
) -> LocalDilation:
    """
    Complete a block column ``[B_0; B_1; ...]`` to a unitary.

    Parameters
    ----------
    columns : sequence of (d, d) matrices
        ``columns[i]`` is the operator taking node ``k`` to the ``i``-th node.
    k : int
        Label of the source node, used in error messages.
    method : {"gram_schmidt", "svd"}
        ``"gram_schmidt"`` extends with canonical basis vectors in index
        order, skipping candidates whose residual norm is below 1e-8.
        ``"svd"`` uses an orthonormal basis of the orthogonal complement.
        Both are deterministic; they give different unitaries.
    """
    blocks = [as_matrix(c) for c in columns]
    d, n = blocks[0].shape[0], len(blocks)
    if any(b.shape[0] != d for b in blocks):
        raise WalkStructureError("blocks of the column have different sizes")
    v = np.vstack(blocks)  # node-major
    dev = float(np.linalg.norm(dagger(v) @ v - np.eye(d), 2))
    if dev > tol:
        raise KrausCompletenessError(
            f"column of node {k} is not an isometry: deviation {dev:.3e}", node=k, deviation=dev
        )
    try:
        w = _COMPLETIONS[method](v)
    except KeyError:
        raise ValueError(f"unknown completion method {method!r}") from None
    # node-major -> coin (x) node Kronecker order
    u = w.reshape(n, d, n, d).transpose(1, 0, 3, 2).reshape(d * n, d * n)
    return LocalDilation(k=k, U=u, coin_dim=d)


@dataclass(frozen=True)
class GlobalUnitary:
    """``sum_k U(k) (x) |k><k|`` on coin (x) auxiliary (x) position."""

    blocks: dict
    nodes: tuple
    coin_dim: int

    def matrix(self) -> np.ndarray:
        n, d = len(self.nodes), self.coin_dim
        dim = d * n * n
        out = np.zeros((d, n, n, d, n, n), dtype=np.complex128)
        for kk, k in enumerate(self.nodes):
            u = self.blocks[k].U.reshape(d, n, d, n)
            out[:, :, kk, :, :, kk] = u
        return out.reshape(dim, dim)


def _capacity(walk: OpenQuantumWalk) -> None:
    dim = walk.coin_dim * walk.n_nodes**2
    if dim > MAX_TRIPLE_DIM:
        raise CapacityError(
            f"triple space of dimension {dim} exceeds the limit {MAX_TRIPLE_DIM}"
        )


def global_unitary(walk: OpenQuantumWalk, method: str = "gram_schmidt",
                   tol: float = DEFAULT_TOL) -> GlobalUnitary:
    blocks = {}
    for k in walk.nodes:
        cols = [walk.operator(k, i) for i in walk.nodes]
        blocks[k] = complete_isometry(cols, k=k, method=method, tol=tol)
    return GlobalUnitary(blocks, walk.nodes, walk.coin_dim)


# --------------------------------------------------------------------------
# the five stages, on dense (d, N, N, d, N, N) tensors
# --------------------------------------------------------------------------

def extend(walk: OpenQuantumWalk, state: BlockDiagonalState) -> np.ndarray:
    """``sum_i rho_i (x) |first><first| (x) |i><i|`` as a dense matrix."""
    d, n = walk.coin_dim, walk.n_nodes
    t = np.zeros((d, n, n, d, n, n), dtype=np.complex128)
    for node, rho in state.blocks.items():
        i = walk.index(node)
        t[:, 0, i, :, 0, i] = rho
    return t.reshape(d * n * n, d * n * n)


def conjugate(u: GlobalUnitary, rho: np.ndarray) -> np.ndarray:
    m = u.matrix()
    return m @ rho @ dagger(m)


def _tensor(rho: np.ndarray, d: int, n: int) -> np.ndarray:
    return rho.reshape(d, n, n, d, n, n)


def dephase(rho: np.ndarray, d: int, n: int) -> np.ndarray:
    """Remove coherences of the auxiliary register (full position measurement)."""
    t = _tensor(rho, d, n).copy()
    mask = np.eye(n, dtype=bool)
    t *= mask[None, :, None, None, :, None]
    return t.reshape(rho.shape)


def swap_registers(rho: np.ndarray, d: int, n: int) -> np.ndarray:
    t = _tensor(rho, d, n).transpose(0, 2, 1, 3, 5, 4)
    return t.reshape(rho.shape)


def trace_out_auxiliary(rho: np.ndarray, d: int, n: int) -> np.ndarray:
    """Partial trace over the middle register; result on coin (x) position."""
    t = _tensor(rho, d, n)
    return np.einsum("aibcid->abcd", t).reshape(d * n, d * n)


def run_realisation(
    walk: OpenQuantumWalk,
    state: BlockDiagonalState,
    method: str = "gram_schmidt",
    tol: float = DEFAULT_TOL,
) -> BlockDiagonalState:
    """One walk step obtained from unitary dynamics on the enlarged space."""
    _capacity(walk)
    d, n = walk.coin_dim, walk.n_nodes
    u = global_unitary(walk, method=method, tol=tol)
    rho = extend(walk, state)
    rho = conjugate(u, rho)
    rho = dephase(rho, d, n)
    rho = swap_registers(rho, d, n)
    rho = trace_out_auxiliary(rho, d, n)
    t = rho.reshape(d, n, d, n)
    blocks = {}
    for i, node in enumerate(walk.nodes):
        m = t[:, i, :, i]
        if np.trace(m).real != 0.0 or np.any(m):
            blocks[node] = m
    return BlockDiagonalState(blocks or {walk.nodes[0]: t[:, 0, :, 0]})


# --------------------------------------------------------------------------
# coherent walks on the line
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class UQWCheck:
    ok: bool
    cross_norm: float
    sum_unitarity_deviation: float

    def __bool__(self):
        return self.ok


def check_uqw_condition(B, C, tol: float = 1e-12) -> UQWCheck:
    """
    Whether skipping the dephasing stage yields a unitary walk.

    Requires ``B^dag B + C^dag C = I``.  The walk is coherent iff
    ``||C^dag B|| <= tol``; the deviation of ``B + C`` from unitarity is
    reported alongside.
    """
    b = as_matrix(B)
    c = as_matrix(C, b.shape[0])
    eye = np.eye(b.shape[0])
    dev = float(np.linalg.norm(dagger(b) @ b + dagger(c) @ c - eye, 2))
    if dev > DEFAULT_TOL:
        raise KrausCompletenessError(f"B^dag B + C^dag C deviates from identity by {dev:.3e}",
                                     deviation=dev)
    cross = float(np.linalg.norm(dagger(c) @ b, 2))
    s = b + c
    sdev = float(np.linalg.norm(dagger(s) @ s - eye, 2))
    return UQWCheck(ok=cross <= tol, cross_norm=cross, sum_unitarity_deviation=sdev)


def hadamard_pair(alpha: complex = 2**-0.5, beta: complex = 2**-0.5, sign: int = 1):
    """``B = [[a, b], [0, 0]]`` and ``C = +-[[0, 0], [-b*, a*]]``."""
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1) > 1e-12:
        raise ValueError("|alpha|^2 + |beta|^2 must equal 1")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    b = np.array([[alpha, beta], [0, 0]], dtype=np.complex128)
    c = sign * np.array([[0, 0], [-np.conj(beta), np.conj(alpha)]], dtype=np.complex128)
    return b, c


def run_coherent(walk: HomogeneousWalkZ, initial: dict, n_steps: int = 1,
                 tol: float = 1e-12) -> dict:
    """
    Realisation procedure without the dephasing stage, iterated.

    ``initial`` maps sites to coin vectors.  Per step: each ``psi_x`` is
    attached to a fresh auxiliary register, the local unitary sends it to
    ``B psi_x (x) |x+1> + C psi_x (x) |x-1>`` on the auxiliary register,
    the registers are swapped, and the pair ``(old, new)`` is merged onto
    ``new``.  The merge is norm preserving only when ``C^dag B = 0``.
    """
    check = check_uqw_condition(walk.B, walk.C, tol)
    if not check:
        raise KrausCompletenessError(
            f"coherent iteration needs C^dag B = 0, got norm {check.cross_norm:.3e}",
            deviation=check.cross_norm,
        )
    psi = {int(x): np.asarray(v, dtype=np.complex128).ravel() for x, v in initial.items()}
    for _ in range(n_steps):
        # (auxiliary, position) -> amplitude after stages 1-2
        registers = {}
        for x, v in psi.items():
            for target, op in walk.outgoing(x):
                registers[(target, x)] = op @ v
        # swap: (position, auxiliary); merge onto the new position
        merged: dict = {}
        for (new, old), amp in registers.items():
            merged[new] = merged[new] + amp if new in merged else amp
        psi = dict(sorted(merged.items()))
    return psi
