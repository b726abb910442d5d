"""
Dissipative quantum computing on a chain of time registers.

A circuit ``U_1 ... U_T`` is placed on a chain of nodes ``0..T``.  The
walker moves forward with weight ``omega`` (applying the next gate) and
backward with weight ``lambda = 1 - omega`` (undoing the previous gate).
The ends keep their own weight as a self-loop:

    rho_0' = lambda rho_0 + lambda U_1^dag rho_1 U_1
    rho_j' = omega U_j rho_{j-1} U_j^dag + lambda U_{j+1}^dag rho_{j+1} U_{j+1}
    rho_T' = omega rho_T + omega U_T rho_{T-1} U_T^dag

Node masses follow a classical birth-death chain and do not see the gates.
From a pure start at node 0 the steady state is
``sum_j p_j |psi_j><psi_j|`` with ``|psi_j> = U_j ... U_1 |psi_0>``.

``boundary="literal"`` uses ``U_{T-1}`` in the last line instead of
``U_T``; that variant is kept for comparison and does not have the above
steady state.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .core import (
    BlockDiagonalState,
    OpenQuantumWalk,
    as_matrix,
    dagger,
    is_unitary,
)
from .errors import ConvergenceError, WalkStructureError

__all__ = [
    "GateCircuit",
    "DQCChain",
    "dqc_step",
    "iterate",
    "run_to_steady",
    "success_probability",
    "birth_death_stationary",
    "sweep_omega",
    "PhaseEstimationSpec",
    "build_phase_estimation",
    "inverse_qft_gates",
    "qft_matrix",
    "inverse_qft_gate_count",
]


@dataclass(frozen=True)
class GateCircuit:
    gates: tuple
    labels: tuple = ()

    def __post_init__(self):
        gates = tuple(as_matrix(g) for g in self.gates)
        if not gates:
            raise ValueError("a circuit needs at least one gate")
        dim = gates[0].shape[0]
        for t, g in enumerate(gates, start=1):
            if g.shape[0] != dim:
                raise WalkStructureError(f"gate {t} acts on dimension {g.shape[0]}, expected {dim}")
            if not is_unitary(g, 1e-10):
                raise ValueError(f"gate {t} is not unitary")
            g.setflags(write=False)
        labels = tuple(self.labels) or tuple(f"U{t}" for t in range(1, len(gates) + 1))
        if len(labels) != len(gates):
            raise ValueError("one label per gate expected")
        object.__setattr__(self, "gates", gates)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def dim(self) -> int:
        return self.gates[0].shape[0]

    def product(self, upto: int | None = None) -> np.ndarray:
        """``U_upto ... U_1`` (identity for ``upto = 0``)."""
        upto = self.T if upto is None else upto
        m = np.eye(self.dim, dtype=np.complex128)
        for g in self.gates[:upto]:
            m = g @ m
        return m


@dataclass(frozen=True)
class DQCChain:
    circuit: GateCircuit
    omega: float = 0.5
    boundary: str = "consistent"

    def __post_init__(self):
        if not 0.0 < self.omega < 1.0:
            raise ValueError(f"omega must lie strictly between 0 and 1, got {self.omega}")
        if self.boundary not in ("consistent", "literal"):
            raise ValueError("boundary must be 'consistent' or 'literal'")

    @property
    def lam(self) -> float:
        return 1.0 - self.omega

    @property
    def T(self) -> int:
        return self.circuit.T

    @property
    def nodes(self) -> tuple:
        return tuple(range(self.T + 1))

    def as_walk(self) -> OpenQuantumWalk:
        """The same dynamics as a generic walk (consistent boundary only)."""
        if self.boundary != "consistent":
            raise ValueError("the literal boundary variant is not a walk on this chain")
        T, g = self.T, self.circuit.gates
        eye = np.eye(self.circuit.dim)
        so, sl = np.sqrt(self.omega), np.sqrt(self.lam)
        trans = {(0, 0): sl * eye, (T, T): so * eye}
        for j in range(T):
            trans[(j, j + 1)] = so * g[j]
            trans[(j + 1, j)] = sl * dagger(g[j])
        return OpenQuantumWalk(self.nodes, self.circuit.dim, trans)

    def initial_state(self, psi0) -> BlockDiagonalState:
        v = np.asarray(psi0, dtype=np.complex128).ravel()
        return BlockDiagonalState.pure(v / np.linalg.norm(v), 0)


def _stack(chain: DQCChain, state: BlockDiagonalState) -> np.ndarray:
    d = chain.circuit.dim
    if state.coin_dim != d:
        raise WalkStructureError(f"state blocks are {state.coin_dim}-dimensional, register is {d}")
    s = np.zeros((chain.T + 1, d, d), dtype=np.complex128)
    for node, m in state.blocks.items():
        if not 0 <= node <= chain.T:
            raise WalkStructureError(f"node {node} is outside the chain 0..{chain.T}")
        s[node] = m
    return s


def _unstack(s: np.ndarray) -> BlockDiagonalState:
    return BlockDiagonalState({j: s[j] for j in range(s.shape[0])})


def _gate_stack(chain: DQCChain) -> np.ndarray:
    return np.stack(chain.circuit.gates)


def _step_stack(chain: DQCChain, s: np.ndarray, g: np.ndarray) -> np.ndarray:
    w, l = chain.omega, chain.lam
    gd = dagger(g)
    fwd = g @ s[:-1] @ gd          # U_{j} rho_{j-1} U_j^dag, j = 1..T
    bwd = gd @ s[1:] @ g           # U_{j+1}^dag rho_{j+1} U_{j+1}, j = 0..T-1
    out = np.empty_like(s)
    out[0] = l * s[0] + l * bwd[0]
    out[1:-1] = w * fwd[:-1] + l * bwd[1:]
    if chain.boundary == "consistent":
        out[-1] = w * s[-1] + w * fwd[-1]
    else:
        u = g[-2] if chain.T >= 2 else np.eye(g.shape[1])
        out[-1] = w * s[-1] + w * (u @ s[-2] @ dagger(u))
    return (out + dagger(out)) / 2


def dqc_step(chain: DQCChain, state: BlockDiagonalState) -> BlockDiagonalState:
    """One application of the chain's iteration formulas."""
    return _unstack(_step_stack(chain, _stack(chain, state), _gate_stack(chain)))


def iterate(chain: DQCChain, initial: BlockDiagonalState) -> Iterator[np.ndarray]:
    """Yield the block stacks ``(T+1, d, d)`` after steps 1, 2, ..."""
    s = _stack(chain, initial)
    g = _gate_stack(chain)
    while True:
        s = _step_stack(chain, s, g)
        yield s


def _trace_norm_sum(diff: np.ndarray) -> float:
    return float(np.abs(np.linalg.eigvalsh(diff)).sum())


def run_to_steady(
    chain: DQCChain,
    initial: BlockDiagonalState,
    tol: float = 1e-6,
    max_steps: int = 100_000,
) -> tuple[BlockDiagonalState, int]:
    """
    Iterate until the summed trace-norm change between successive states
    drops below ``tol``.  Returns the state and the number of steps taken.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    prev = _stack(chain, initial)
    residual = np.inf
    for n, s in enumerate(iterate(chain, initial), start=1):
        residual = _trace_norm_sum(s - prev)
        if residual < tol:
            return _unstack(s), n
        if n >= max_steps:
            break
        prev = s
    raise ConvergenceError(
        f"no steady state within {max_steps} steps (last residual {residual:.3e})",
        residual=residual, steps=max_steps,
    )


def success_probability(steady: BlockDiagonalState, target_projector, node: int) -> float:
    """``Tr(Pi rho_node)``: walker at ``node`` and register in the accepted subspace."""
    pi = as_matrix(target_projector, steady.coin_dim)
    if np.max(np.abs(pi @ pi - pi)) > 1e-10 or np.max(np.abs(pi - dagger(pi))) > 1e-10:
        raise ValueError("target projector must be Hermitian and idempotent")
    return float(np.trace(pi @ steady.block(node)).real)


def birth_death_stationary(T: int, omega: float) -> np.ndarray:
    """Stationary masses of the chain: ``p_j`` proportional to ``(omega/lambda)^j``."""
    r = omega / (1.0 - omega)
    logs = np.arange(T + 1) * np.log(r)
    w = np.exp(logs - logs.max())
    return w / w.sum()


def sweep_omega(
    circuit: GateCircuit,
    omegas: Sequence[float],
    psi0,
    projector=None,
    tol: float = 1e-6,
    max_steps: int = 100_000,
    boundary: str = "consistent",
) -> list[dict]:
    """Steps to steady state, ``p_T`` and success probability for each omega."""
    rows = []
    proj = np.eye(circuit.dim) if projector is None else projector
    for w in omegas:
        chain = DQCChain(circuit, float(w), boundary)
        steady, n = run_to_steady(chain, chain.initial_state(psi0), tol, max_steps)
        rows.append({
            "omega": float(w),
            "steps_to_steady": n,
            "p_T": float(np.trace(steady.block(chain.T)).real),
            "success_probability": success_probability(steady, proj, chain.T),
        })
    return rows


# --------------------------------------------------------------------------
# phase estimation
# --------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=np.complex128)


def _on_qubits(op: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Embed ``op`` acting on ``qubits`` (in that order) into ``n`` qubits, qubit 0 first."""
    k = len(qubits)
    rest = [q for q in range(n) if q not in qubits]
    perm = list(qubits) + rest
    full = np.kron(op, np.eye(2 ** (n - k)))
    t = full.reshape([2] * (2 * n))
    inv = np.argsort(perm)
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(2**n, 2**n)


def _cphase(theta: float) -> np.ndarray:
    return np.diag([1, 1, 1, np.exp(1j * theta)]).astype(np.complex128)


def qft_matrix(n: int) -> np.ndarray:
    """Dense QFT on ``n`` qubits, qubit 0 most significant."""
    N = 2**n
    jk = np.outer(np.arange(N), np.arange(N))
    return np.exp(2j * np.pi * jk / N) / np.sqrt(N)


def inverse_qft_gate_count(n: int) -> int:
    return n * n


def _reversal_transpositions(n: int) -> list[tuple[int, int]]:
    """Adjacent swaps reversing the order of ``n`` qubits (bubble network)."""
    seq = []
    for start in range(n - 1):
        for q in range(n - 2, start - 1, -1):
            seq.append((q, q + 1))
    return seq


def inverse_qft_gates(n: int) -> list[tuple[str, np.ndarray]]:
    """
    Inverse QFT on ``n`` qubits as ``n**2`` register gates.

    The bit reversal comes first as ``n(n-1)/2`` adjacent swaps, then the
    Hadamard / controlled-phase ladder runs backwards: ``n`` Hadamards and
    ``n(n-1)/2`` controlled phases ``exp(-2 pi i / 2^m)``.  For ``n = 4``
    this is 16 gates, and with the Hadamard layer and the four controlled
    powers the phase-estimation circuit has 21 gates.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    swaps = [(f"SWAP({a},{b})", _on_qubits(_SWAP, [a, b], n))
             for a, b in _reversal_transpositions(n)]
    ladder = []
    for j in range(n):
        ladder.append((f"H({j})", _on_qubits(_H, [j], n)))
        for k in range(j + 1, n):
            m = k - j + 1
            ladder.append((f"CP({k},{j},{m})", _on_qubits(_cphase(2 * np.pi / 2**m), [k, j], n)))
    return swaps + [(name + "^dag", dagger(g)) for name, g in reversed(ladder)]


@dataclass(frozen=True)
class PhaseEstimationSpec:
    """
    Phase estimation of ``U`` with ``n_ancilla`` readout qubits.

    With only ``phase`` given, the target is the single qubit
    ``diag(1, exp(2 pi i phase))`` prepared in ``|1>``.  A custom
    ``target_unitary`` needs a matching ``eigenvector``.
    """

    n_ancilla: int = 4
    phase: float | Fraction | None = None
    target_unitary: np.ndarray | None = None
    eigenvector: np.ndarray | None = None

    def __post_init__(self):
        if self.n_ancilla < 1:
            raise ValueError("n_ancilla must be at least 1")
        if self.target_unitary is None:
            if self.phase is None:
                raise ValueError("give either a phase or a target unitary")
            u = np.diag([1.0, np.exp(2j * np.pi * float(self.phase))])
            object.__setattr__(self, "target_unitary", u)
            object.__setattr__(self, "eigenvector", np.array([0, 1], dtype=np.complex128))
        else:
            u = as_matrix(self.target_unitary)
            if not is_unitary(u):
                raise ValueError("target unitary is not unitary")
            if u.shape[0] & (u.shape[0] - 1):
                raise ValueError("target register dimension must be a power of two")
            if self.eigenvector is None:
                raise ValueError("a custom target unitary needs an eigenvector")
            object.__setattr__(self, "target_unitary", u)
            object.__setattr__(self, "eigenvector",
                               np.asarray(self.eigenvector, dtype=np.complex128).ravel())

    @property
    def target_qubits(self) -> int:
        return int(np.log2(self.target_unitary.shape[0]))

    @property
    def n_qubits(self) -> int:
        return self.n_ancilla + self.target_qubits

    def initial_vector(self) -> np.ndarray:
        """``|0...0>`` on the ancillas times the eigenvector on the target."""
        anc = np.zeros(2**self.n_ancilla, dtype=np.complex128)
        anc[0] = 1.0
        v = self.eigenvector / np.linalg.norm(self.eigenvector)
        return np.kron(anc, v)

    def readout_projector(self, bits: str | int) -> np.ndarray:
        """Projector onto ancilla value ``bits`` (string like ``"0101"`` or int)."""
        k = int(bits, 2) if isinstance(bits, str) else int(bits)
        e = np.zeros((2**self.n_ancilla, 2**self.n_ancilla))
        e[k, k] = 1.0
        return np.kron(e, np.eye(self.target_unitary.shape[0]))


def _controlled_power(spec: PhaseEstimationSpec, ancilla: int, power: int) -> np.ndarray:
    t = spec.n_ancilla
    m = spec.target_unitary.shape[0]
    up = np.linalg.matrix_power(spec.target_unitary, power)
    p0 = np.diag([1.0, 0.0])
    p1 = np.diag([0.0, 1.0])
    before = np.eye(2**ancilla)
    after = np.eye(2 ** (t - ancilla - 1))
    return (np.kron(np.kron(np.kron(before, p0), after), np.eye(m))
            + np.kron(np.kron(np.kron(before, p1), after), up))


def build_phase_estimation(spec: PhaseEstimationSpec) -> GateCircuit:
    """
    Gate list: one Hadamard layer on all ancillas, ``n_ancilla`` controlled
    powers (ancilla ``k`` from the top controls ``U^(2^(n-1-k))``), then the
    inverse QFT on the ancillas.  Ancillas are the most significant qubits.
    """
    t = spec.n_ancilla
    m = spec.target_unitary.shape[0]
    eye_t = np.eye(m)
    h_layer = _H
    for _ in range(t - 1):
        h_layer = np.kron(h_layer, _H)
    gates = [np.kron(h_layer, eye_t)]
    labels = ["H-layer"]
    for k in range(t):
        gates.append(_controlled_power(spec, k, 2 ** (t - 1 - k)))
        labels.append(f"C{k}-U^{2 ** (t - 1 - k)}")
    for name, g in inverse_qft_gates(t):
        gates.append(np.kron(g, eye_t))
        labels.append(name)
    return GateCircuit(tuple(gates), tuple(labels))
