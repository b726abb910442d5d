"""
Homogeneous nearest-neighbour open quantum walks on the integers.

Every right jump applies ``B`` and every left jump applies ``C``:

    rho_x' = B rho_{x-1} B^dag + C rho_{x+1} C^dag.

States are stored as a contiguous stack of blocks over the touched range
of sites, so ``n`` steps from a single site cost ``O(n)`` memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import (
    DEFAULT_PRUNE,
    DEFAULT_TOL,
    OpenQuantumWalk,
    as_matrix,
    dagger,
)
from .errors import KrausCompletenessError, NotSimultaneouslyDiagonalizableError

__all__ = [
    "HomogeneousWalkZ",
    "LatticeState",
    "Component",
    "ComponentAnalysis",
    "step_z",
    "evolve_z",
    "distribution_after",
    "moments",
    "analyze_components",
    "truncate",
]


@dataclass(frozen=True)
class HomogeneousWalkZ:
    """Right-jump coin ``B`` and left-jump coin ``C`` with ``B^dag B + C^dag C = I``."""

    B: np.ndarray
    C: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        b = as_matrix(self.B)
        c = as_matrix(self.C, b.shape[0])
        dev = float(np.linalg.norm(dagger(b) @ b + dagger(c) @ c - np.eye(b.shape[0]), 2))
        if dev > self.tol:
            raise KrausCompletenessError(
                f"B^dag B + C^dag C deviates from identity by {dev:.3e}", deviation=dev
            )
        b.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)

    @property
    def coin_dim(self) -> int:
        return self.B.shape[0]

    def outgoing(self, node: int) -> tuple:
        """``(target, operator)`` pairs for a walker at ``node``, by ascending target."""
        return ((node - 1, self.C), (node + 1, self.B))


@dataclass(frozen=True)
class LatticeState:
    """
    Blocks on the consecutive sites ``offset, offset + 1, ...``.

    ``stack`` has shape ``(n_sites, d, d)``.  Use :meth:`localized` or
    :meth:`from_blocks` rather than building the stack by hand.
    """

    stack: np.ndarray
    offset: int = 0
    step_count: int = 0
    pruned_mass: float = 0.0

    def __post_init__(self):
        s = np.array(self.stack, dtype=np.complex128)
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise ValueError(f"stack must have shape (n, d, d), got {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "stack", s)

    @classmethod
    def localized(cls, block, node: int = 0) -> "LatticeState":
        return cls(as_matrix(block)[None], offset=node)

    @classmethod
    def from_blocks(cls, blocks: dict, step_count: int = 0) -> "LatticeState":
        lo, hi = min(blocks), max(blocks)
        first = as_matrix(next(iter(blocks.values())))
        s = np.zeros((hi - lo + 1,) + first.shape, dtype=np.complex128)
        for x, m in blocks.items():
            s[x - lo] = as_matrix(m, first.shape[0])
        return cls(s, offset=lo, step_count=step_count)

    @property
    def coin_dim(self) -> int:
        return self.stack.shape[1]

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.stack.shape[0])

    @property
    def blocks(self) -> dict:
        """``{site: block}`` for sites carrying nonzero trace."""
        tr = self.traces()
        return {int(x): self.stack[k] for k, x in enumerate(self.sites) if tr[k] != 0.0}

    def traces(self) -> np.ndarray:
        return np.einsum("kii->k", self.stack).real

    def distribution(self) -> dict:
        return {int(x): float(p) for x, p in zip(self.sites, self.traces()) if p != 0.0}


def step_z(
    walk: HomogeneousWalkZ, state: LatticeState, prune: float = DEFAULT_PRUNE
) -> LatticeState:
    """
    One step on the integers.  The support grows by one site on each side;
    sites at the two ends with trace at most ``prune`` are trimmed.
    """
    if state.coin_dim != walk.coin_dim:
        raise ValueError("state and walk coin dimensions differ")
    s = state.stack
    b, c = walk.B, walk.C
    right = b @ s @ dagger(b)
    left = c @ s @ dagger(c)
    n = s.shape[0]
    out = np.zeros((n + 2,) + s.shape[1:], dtype=np.complex128)
    out[2:] += right
    out[:-2] += left
    out = (out + dagger(out)) / 2
    offset = state.offset - 1
    tr = np.einsum("kii->k", out).real
    keep = np.flatnonzero(np.abs(tr) > prune)
    pruned = state.pruned_mass
    if keep.size == 0:
        keep = np.array([0])
    lo, hi = keep[0], keep[-1] + 1
    pruned += float(tr[:lo].sum() + tr[hi:].sum())
    return LatticeState(out[lo:hi], offset=offset + int(lo),
                        step_count=state.step_count + 1, pruned_mass=pruned)


def evolve_z(walk: HomogeneousWalkZ, state: LatticeState, n: int, **kwargs) -> LatticeState:
    if n < 0:
        raise ValueError("number of steps must be non-negative")
    for _ in range(n):
        state = step_z(walk, state, **kwargs)
    return state


def distribution_after(walk: HomogeneousWalkZ, initial: LatticeState, n: int, **kwargs) -> dict:
    """Exact site distribution ``{x: Tr rho_x}`` after ``n`` steps."""
    return evolve_z(walk, initial, n, **kwargs).distribution()


def moments(distribution: dict) -> tuple[float, float]:
    """Mean and variance of a ``{position: probability}`` mapping."""
    if not distribution:
        raise ValueError("empty distribution")
    x = np.fromiter(distribution.keys(), dtype=float)
    p = np.fromiter(distribution.values(), dtype=float)
    total = p.sum()
    mean = float(np.dot(p, x) / total)
    var = float(np.dot(p, (x - mean) ** 2) / total)
    return mean, max(var, 0.0)


# --------------------------------------------------------------------------
# component analysis for simultaneously diagonalisable coins
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Component:
    b: float
    c: float
    weight: float
    kind: str  # "soliton" or "gaussian"

    @property
    def right_probability(self) -> float:
        return self.b**2

    @property
    def drift(self) -> float:
        return self.b**2 - self.c**2

    @property
    def diffusion(self) -> float:
        return 4 * self.b**2 * self.c**2


@dataclass(frozen=True)
class ComponentAnalysis:
    components: tuple
    basis: np.ndarray

    @property
    def eigenvalue_pairs(self) -> list:
        return [(k.b, k.c, k.weight) for k in self.components]

    @property
    def mean_drift(self) -> float:
        return float(sum(k.weight * k.drift for k in self.components))

    def solitons(self) -> tuple:
        return tuple(k for k in self.components if k.kind == "soliton")

    def gaussians(self) -> tuple:
        return tuple(k for k in self.components if k.kind == "gaussian")


# generic complex mixing coefficient; separates joint eigenvalues of B and C
_MIX = 0.6180339887498949 + 0.3819660112501051j


def analyze_components(
    walk: HomogeneousWalkZ,
    initial_block,
    tol: float = DEFAULT_TOL,
) -> ComponentAnalysis:
    """
    Split the walk into independent classical components.

    Requires ``B`` and ``C`` to be normal and to commute.  A joint
    orthonormal eigenbasis ``{v_k}`` is taken from the Schur form of a
    generic combination of the two.  Each basis vector gives a component
    with right amplitude ``b_k = |<v_k|B|v_k>|``, left amplitude ``c_k``,
    and weight ``<v_k|rho_0|v_k>``.  Components with equal ``(b, c)`` are
    merged.  A component is a soliton when ``b_k c_k`` vanishes.
    """
    b, c = walk.B, walk.C
    for name, m in (("B", b), ("C", c)):
        if np.linalg.norm(m @ dagger(m) - dagger(m) @ m, 2) > tol:
            raise NotSimultaneouslyDiagonalizableError(f"{name} is not normal")
    if np.linalg.norm(b @ c - c @ b, 2) > tol:
        raise NotSimultaneouslyDiagonalizableError("B and C do not commute")
    rho0 = as_matrix(initial_block, walk.coin_dim)

    _, z = scipy.linalg.schur(b + _MIX * c, output="complex")
    bb = np.abs(np.einsum("ik,ij,jk->k", z.conj(), b, z))
    cc = np.abs(np.einsum("ik,ij,jk->k", z.conj(), c, z))
    ww = np.einsum("ik,ij,jk->k", z.conj(), rho0, z).real

    merged: list[list] = []
    for bk, ck, wk in zip(bb, cc, ww):
        for entry in merged:
            if abs(entry[0] - bk) <= 1e-9 and abs(entry[1] - ck) <= 1e-9:
                entry[2] += wk
                break
        else:
            merged.append([bk, ck, wk])
    total = sum(e[2] for e in merged)
    comps = []
    for bk, ck, wk in sorted(merged, key=lambda e: -e[0]):
        kind = "soliton" if bk * ck <= 1e-9 else "gaussian"
        comps.append(Component(float(bk), float(ck), float(wk / total), kind))
    return ComponentAnalysis(tuple(comps), z)


# --------------------------------------------------------------------------
# finite truncation
# --------------------------------------------------------------------------

def truncate(walk: HomogeneousWalkZ, lo: int, hi: int) -> OpenQuantumWalk:
    """
    Restrict the walk to sites ``lo..hi``.  A jump that would leave the
    segment becomes a self-loop with the same operator, which keeps the
    completeness relation intact at the two boundary sites.
    """
    if hi <= lo:
        raise ValueError("segment needs at least two sites")
    trans = {}
    for x in range(lo, hi + 1):
        for target, op in walk.outgoing(x):
            trans[(x, target if lo <= target <= hi else x)] = op
    return OpenQuantumWalk(tuple(range(lo, hi + 1)), walk.coin_dim, trans)
