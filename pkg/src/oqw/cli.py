"""
Command-line interface: ``oqw <subcommand> [options]``.

Every successful run starts its stdout with a reproducibility header::

    # oqw 0.1.0 command=evolve-z seed=12345 config=3f0c9a5e12b4d7a1

Tables go to ``--output`` (or stdout).  Exit codes:

    0 success            5 dimension mismatch
    2 usage error        6 validation failure (completeness, unitarity)
    3 malformed input    7 no convergence
    4 NaN/Inf in input   8 capacity exceeded
                         9 output not writable
"""

from __future__ import annotations

import argparse
import contextlib
import hashlib
import io
import json
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .classical import ClassicalTransitionMatrix, embed_classical
from .core import (
    DEFAULT_TOL,
    BlockDiagonalState,
    evolve,
    node_distribution,
    require_valid,
    validate_walk,
)
from .dilation import global_unitary, run_coherent
from .dqc import (
    DQCChain,
    GateCircuit,
    PhaseEstimationSpec,
    build_phase_estimation,
    iterate,
    success_probability,
    sweep_omega,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    KrausCompletenessError,
    NotSimultaneouslyDiagonalizableError,
    WalkStructureError,
)
from .io import (
    FileFormatError,
    NonFiniteError,
    emit_table,
    format_float,
    load_json,
    load_walk,
    load_state,
    matrix_to_json,
    parse_matrix,
    parse_real,
    parse_vector,
    walk_to_dict,
)
from .lattice import HomogeneousWalkZ, LatticeState, analyze_components, evolve_z, moments
from .trajectories import (
    PureWalkerState,
    exact_distribution,
    run_ensemble,
    total_variation,
)

DEFAULT_SEED = 12345

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NONFINITE = 4
EXIT_DIMENSION = 5
EXIT_VALIDATION = 6
EXIT_CONVERGENCE = 7
EXIT_CAPACITY = 8
EXIT_OUTPUT = 9


class CLIError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    output: str | None = None
    fmt: str = "csv"
    seed: int = DEFAULT_SEED

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(json.dumps({k: v for k, v in asdict(self).items() if k != "output"},
                            sort_keys=True, default=str).encode())
        for name in sorted(self.inputs):
            h.update(Path(self.inputs[name]).read_bytes())
        return h.hexdigest()[:16]

    def header(self) -> str:
        return (f"# oqw {__version__} command={self.command} seed={self.seed} "
                f"config={self.digest()}")


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"root random seed (default {DEFAULT_SEED})")
    g.add_argument("--tol", type=float, default=None,
                   help="tolerance (validation: 1e-10; dqc convergence: 1e-6)")
    g.add_argument("--output", "-o", default=None, help="write the table here instead of stdout")
    g.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="oqw", description="Open quantum walk simulator.")
    parser.add_argument("--version", action="version", version=f"oqw {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("validate", parents=[common], help="check the completeness relation")
    p.add_argument("--walk", required=True, help="walk file")

    p = sub.add_parser("evolve", parents=[common], help="exact evolution on a finite graph")
    p.add_argument("--walk", required=True)
    p.add_argument("--state", required=True, help="initial state file")
    p.add_argument("--steps", type=int, required=True)

    p = sub.add_parser("evolve-z", parents=[common], help="exact evolution on the integers")
    p.add_argument("--config", required=True, help="JSON with B, C, initial, steps")
    p.add_argument("--steps", type=int, default=None, help="override the config's steps")

    p = sub.add_parser("analyze-z", parents=[common], help="component analysis on the integers")
    p.add_argument("--config", required=True)

    p = sub.add_parser("trajectories", parents=[common], help="quantum-trajectory ensemble")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--walk", help="walk file for a finite graph")
    src.add_argument("--z-config", help="JSON with B and C for a walk on the integers")
    p.add_argument("--coin", required=True,
                   help="initial coin vector, comma separated (normalised automatically)")
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--compare-exact", action="store_true")
    p.add_argument("--dump-paths", type=int, default=0, metavar="K")
    p.add_argument("--paths-output", default=None, help="file for --dump-paths (default stdout)")

    p = sub.add_parser("dilate", parents=[common], help="emit the local unitaries U(k)")
    p.add_argument("--walk", required=True)
    p.add_argument("--method", choices=("gram_schmidt", "svd"), default="gram_schmidt")

    p = sub.add_parser("uqw", parents=[common], help="coherent walk on the integers")
    p.add_argument("--config", required=True, help="JSON with B, C and optional steps")
    p.add_argument("--coin", required=True)
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--steps", type=int, default=None)

    p = sub.add_parser("embed-crw", parents=[common], help="classical chain -> walk file")
    p.add_argument("--matrix", required=True, help="JSON with P and optional nodes/convention")
    p.add_argument("--full-coin", action="store_true", help="coin dimension = number of nodes")

    p = sub.add_parser("dqc", parents=[common], help="dissipative quantum computing chain")
    p.add_argument("mode", nargs="?", choices=("circuit", "phase-estimation"), default="circuit")
    p.add_argument("--circuit", help="circuit file (circuit mode)")
    p.add_argument("--ancillas", type=int, default=4)
    p.add_argument("--phase", default="5/16")
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--max-steps", type=int, default=100_000)
    p.add_argument("--sweep", default=None, help="comma-separated omegas")
    p.add_argument("--boundary", choices=("consistent", "literal"), default="consistent")
    return parser


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------

def _tol(args, default):
    return default if args.tol is None else args.tol


def _write(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc.strerror}", EXIT_OUTPUT) from None


def _table(rows, columns, args) -> None:
    text = emit_table(rows, columns, args.fmt)
    _write(text, args.output)


def _dist_rows(dist: dict) -> list:
    return [{"node": k, "probability": dist[k]} for k in sorted(dist)]


def _z_walk(doc: dict, tol: float) -> HomogeneousWalkZ:
    for key in ("B", "C"):
        if key not in doc:
            raise FileFormatError(f"missing field {key!r}")
    b = parse_matrix(doc["B"])
    c = parse_matrix(doc["C"], b.shape[0])
    return HomogeneousWalkZ(b, c, tol=tol)


def _coin(text: str) -> np.ndarray:
    v = parse_vector(text)
    n = np.linalg.norm(v)
    if n == 0:
        raise FileFormatError("coin vector is zero")
    return v / n


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_validate(args, cfg):
    walk = load_walk(args.walk)
    report = validate_walk(walk, _tol(args, DEFAULT_TOL))
    rows = [{"node": n, "deviation": d, "passed": d <= report.tol}
            for n, d in report.deviations.items()]
    _table(rows, ["node", "deviation", "passed"], args)
    if not report:
        n = report.worst_node
        raise CLIError(f"completeness fails at node {n}: deviation {report.deviations[n]:.3e}",
                       EXIT_VALIDATION)


def cmd_evolve(args, cfg):
    walk = load_walk(args.walk)
    require_valid(walk, _tol(args, DEFAULT_TOL))
    state = load_state(args.state)
    out = evolve(walk, state, args.steps)
    _table(_dist_rows(node_distribution(out)), ["node", "probability"], args)


def _z_setup(args):
    doc = load_json(args.config)
    walk = _z_walk(doc, _tol(args, DEFAULT_TOL))
    initial = parse_matrix(doc.get("initial", np.eye(walk.coin_dim).tolist()), walk.coin_dim)
    tr = np.trace(initial).real
    if tr <= 0:
        raise FileFormatError("initial block must have positive trace")
    return doc, walk, initial / tr


def cmd_evolve_z(args, cfg):
    doc, walk, initial = _z_setup(args)
    steps = args.steps if args.steps is not None else int(doc.get("steps", 0))
    state = evolve_z(walk, LatticeState.localized(initial, int(doc.get("node", 0))), steps)
    dist = state.distribution()
    _table(_dist_rows(dist), ["node", "probability"], args)
    mean, var = moments(dist)
    print(f"# steps={steps} mean={format_float(mean)} variance={format_float(var)} "
          f"pruned_mass={format_float(state.pruned_mass)}")


def cmd_analyze_z(args, cfg):
    _, walk, initial = _z_setup(args)
    an = analyze_components(walk, initial)
    doc = {"components": [
        {"b": k.b, "c": k.c, "weight": k.weight, "kind": k.kind,
         "drift": k.drift, "diffusion": k.diffusion}
        for k in an.components
    ], "mean_drift": an.mean_drift}
    _write(json.dumps(doc, indent=1) + "\n", args.output)


def cmd_trajectories(args, cfg):
    if args.walk:
        walk = load_walk(args.walk)
        require_valid(walk, _tol(args, DEFAULT_TOL))
    else:
        walk = _z_walk(load_json(args.z_config), _tol(args, DEFAULT_TOL))
    v = _coin(args.coin)
    if v.size != walk.coin_dim:
        raise WalkStructureError(f"coin vector has {v.size} entries, walk coin_dim is {walk.coin_dim}")
    initial = PureWalkerState(v, args.node)
    est = run_ensemble(walk, initial, args.steps, args.count, args.seed,
                       workers=args.workers, record_paths=args.dump_paths)
    emp = est.distribution()
    rows = [{"node": k, "count": est.counts[k], "empirical_probability": emp[k]}
            for k in sorted(est.counts)]
    _table(rows, ["node", "count", "empirical_probability"], args)
    if args.compare_exact:
        tv = total_variation(emp, exact_distribution(walk, initial, args.steps))
        print(f"# tv_distance={format_float(tv)} n_trajectories={args.count}")
    if args.dump_paths:
        prow = [{"trajectory": r.index, "step": s, "node": x}
                for r in est.paths for s, x in enumerate(r.positions)]
        text = emit_table(prow, ["trajectory", "step", "node"], args.fmt)
        if args.paths_output:
            _write(text, args.paths_output)
        else:
            sys.stdout.write(text)


def cmd_dilate(args, cfg):
    walk = load_walk(args.walk)
    tol = _tol(args, DEFAULT_TOL)
    require_valid(walk, tol)
    u = global_unitary(walk, method=args.method, tol=tol)
    doc = {"coin_dim": walk.coin_dim, "nodes": list(walk.nodes), "method": args.method,
           "ordering": "coin (x) node, Kronecker",
           "unitaries": [{"node": k, "matrix": matrix_to_json(u.blocks[k].U)} for k in walk.nodes]}
    _write(json.dumps(doc) + "\n", args.output)


def cmd_uqw(args, cfg):
    doc = load_json(args.config)
    walk = _z_walk(doc, _tol(args, DEFAULT_TOL))
    steps = args.steps if args.steps is not None else int(doc.get("steps", 1))
    v = _coin(args.coin)
    if v.size != walk.coin_dim:
        raise WalkStructureError(f"coin vector has {v.size} entries, walk coin_dim is {walk.coin_dim}")
    psi = run_coherent(walk, {args.node: v}, steps)
    dist = {x: float(np.vdot(a, a).real) for x, a in psi.items()}
    _table(_dist_rows(dist), ["node", "probability"], args)


def cmd_embed_crw(args, cfg):
    doc = load_json(args.matrix)
    if "P" not in doc:
        raise FileFormatError("missing field 'P'")
    rows = [[parse_real(x) for x in row] for row in doc["P"]]
    nodes = tuple(int(n) for n in doc.get("nodes", ()))
    convention = doc.get("convention", "target_source")
    try:
        if convention == "target_source":
            P = ClassicalTransitionMatrix(np.array(rows), nodes)
        elif convention == "source_target":
            P = ClassicalTransitionMatrix.from_rows(rows, nodes)
        else:
            raise FileFormatError(f"unknown convention {convention!r}")
    except FileFormatError:
        raise
    except ValueError as exc:
        raise CLIError(f"invalid stochastic matrix: {exc}", EXIT_VALIDATION) from None
    walk = embed_classical(P, full_coin=args.full_coin or bool(doc.get("full_coin", False)))
    _write(json.dumps(walk_to_dict(walk), indent=1) + "\n", args.output)


_NAMED = {
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
    "CNOT": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
    "CZ": np.diag([1, 1, 1, -1]),
    "SWAP": np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
}


def _named_gate(g: dict, q: int) -> np.ndarray:
    from .dqc import _on_qubits

    name = str(g["name"]).upper()
    qubits = [int(x) for x in g.get("qubits", [])]
    if name == "CP":
        theta = parse_real(g.get("theta", 0))
        op = np.diag([1, 1, 1, np.exp(1j * theta)])
    elif name in _NAMED:
        op = _NAMED[name]
    else:
        raise FileFormatError(f"unknown gate name {g['name']!r}")
    k = int(round(np.log2(op.shape[0])))
    if len(qubits) != k or any(not 0 <= x < q for x in qubits) or len(set(qubits)) != k:
        raise WalkStructureError(f"gate {name} needs {k} distinct qubits in 0..{q - 1}")
    return _on_qubits(np.asarray(op, dtype=np.complex128), qubits, q)


def _load_circuit(path):
    doc = load_json(path)
    q = int(doc.get("qubits", 0))
    gates, labels = [], []
    for t, g in enumerate(doc.get("gates", []), start=1):
        if "matrix" in g:
            gates.append(parse_matrix(g["matrix"], 2**q if q else None))
            labels.append(g.get("label", f"U{t}"))
        elif "name" in g:
            if not q:
                raise FileFormatError("named gates need the 'qubits' field")
            gates.append(_named_gate(g, q))
            labels.append(g.get("label", f"{g['name']}{g.get('qubits', [])}"))
        else:
            raise FileFormatError(f"gate {t} has neither 'matrix' nor 'name'")
    if not gates:
        raise FileFormatError("circuit has no gates")
    try:
        circuit = GateCircuit(tuple(gates), tuple(labels))
    except ValueError as exc:
        if isinstance(exc, WalkStructureError):
            raise
        raise CLIError(str(exc), EXIT_VALIDATION) from None
    dim = circuit.dim
    if "initial" in doc:
        psi0 = parse_vector(doc["initial"])
    else:
        psi0 = np.zeros(dim, dtype=np.complex128)
        psi0[int(doc.get("initial_basis", 0))] = 1.0
    if psi0.size != dim:
        raise WalkStructureError(f"initial vector has {psi0.size} entries, register is {dim}")
    if "accept" in doc:
        proj = np.zeros((dim, dim))
        for k in doc["accept"]:
            proj[int(k), int(k)] = 1.0
    else:
        proj = np.eye(dim)
    return circuit, psi0, proj


def cmd_dqc(args, cfg):
    tol = _tol(args, 1e-6)
    if args.mode == "phase-estimation":
        phase = Fraction(args.phase) if "/" in args.phase else float(args.phase)
        spec = PhaseEstimationSpec(args.ancillas, phase=phase)
        circuit = build_phase_estimation(spec)
        psi0 = spec.initial_vector()
        bits = round(float(phase) * 2**args.ancillas) % 2**args.ancillas
        proj = spec.readout_projector(bits)
    else:
        if not args.circuit:
            raise CLIError("dqc circuit mode needs --circuit", EXIT_USAGE)
        circuit, psi0, proj = _load_circuit(args.circuit)
    if args.sweep:
        omegas = [parse_real(x) for x in args.sweep.split(",") if x.strip()]
        rows = sweep_omega(circuit, omegas, psi0, proj, tol, args.max_steps, args.boundary)
        _table(rows, ["omega", "steps_to_steady", "p_T", "success_probability"], args)
        return
    chain = DQCChain(circuit, args.omega, args.boundary)
    init = chain.initial_state(psi0)
    prev = np.zeros((chain.T + 1,) + init.block(0).shape, dtype=np.complex128)
    prev[0] = init.block(0)
    rows = []
    for n, s in enumerate(iterate(chain, init), start=1):
        last = BlockDiagonalState({chain.T: s[-1]})
        rows.append({"step": n, "p_T": float(np.trace(s[-1]).real),
                     "success_probability": success_probability(last, proj, chain.T)})
        if float(np.abs(np.linalg.eigvalsh(s - prev)).sum()) < tol:
            break
        if n >= args.max_steps:
            raise ConvergenceError(f"no steady state within {args.max_steps} steps", steps=n)
        prev = s
    _table(rows, ["step", "p_T", "success_probability"], args)


_COMMANDS = {
    "validate": cmd_validate,
    "evolve": cmd_evolve,
    "evolve-z": cmd_evolve_z,
    "analyze-z": cmd_analyze_z,
    "trajectories": cmd_trajectories,
    "dilate": cmd_dilate,
    "uqw": cmd_uqw,
    "embed-crw": cmd_embed_crw,
    "dqc": cmd_dqc,
}

_INPUT_ARGS = ("walk", "state", "config", "z_config", "matrix", "circuit")


def _run_config(args) -> RunConfig:
    inputs = {}
    for name in _INPUT_ARGS:
        path = getattr(args, name, None)
        if path is None:
            continue
        if not Path(path).is_file():
            raise CLIError(f"input file not found: {path}", EXIT_INPUT)
        inputs[name] = path
    skip = set(_INPUT_ARGS) | {"command", "output", "fmt", "seed"}
    params = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return RunConfig(args.command, inputs, params, args.output, args.fmt, args.seed)


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _run_config(args)
        header = cfg.header()
        buf = io.StringIO()
        with contextlib.redirect_stdout(buf):
            _COMMANDS[args.command](args, cfg)
    except CLIError as exc:
        print(f"oqw {args.command}: error: {exc}", file=sys.stderr)
        return exc.code
    except NonFiniteError as exc:
        print(f"oqw {args.command}: non-finite input: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except FileFormatError as exc:
        print(f"oqw {args.command}: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except WalkStructureError as exc:
        print(f"oqw {args.command}: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except (KrausCompletenessError, NotSimultaneouslyDiagonalizableError) as exc:
        print(f"oqw {args.command}: validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ConvergenceError as exc:
        print(f"oqw {args.command}: not converged: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except CapacityError as exc:
        print(f"oqw {args.command}: capacity exceeded: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except (KeyError, TypeError, ValueError) as exc:
        print(f"oqw {args.command}: malformed input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(header)
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def main(argv=None) -> int:
    return parse_and_dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
