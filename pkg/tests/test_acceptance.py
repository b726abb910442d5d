"""
Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines
are repeated at the end of the pytest report.
"""

import time

import numpy as np

from oqw.classical import ClassicalTransitionMatrix, classical_marginal, embed_classical
from oqw.core import (
    BlockDiagonalState,
    FullState,
    apply_full_map,
    evolve,
    node_distribution,
    random_state,
    random_walk,
    step,
    validate_walk,
)
from oqw.dilation import check_uqw_condition, complete_isometry, hadamard_pair, run_coherent, run_realisation
from oqw.dqc import (
    DQCChain,
    PhaseEstimationSpec,
    build_phase_estimation,
    run_to_steady,
    success_probability,
)
from oqw.lattice import HomogeneousWalkZ, LatticeState, distribution_after, truncate
from oqw.trajectories import (
    PureWalkerState,
    exact_distribution,
    jump_outcomes,
    run_ensemble,
    total_variation,
)

from oracles import (
    binomial_mixture,
    birth_death_pT,
    dense_coined_walk,
    dense_phase_estimation,
    dense_walk_map,
    path_enumeration,
)


def _max_dict_diff(p, q):
    keys = set(p) | set(q)
    return max(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def test_1_kraus_validity(diag_walk, report):
    b, c = diag_walk.B, diag_walk.C
    dev_z = float(np.abs(b.conj().T @ b + c.conj().T @ c - np.eye(3)).max())
    # same operators on a finite segment; interior sites use the plain pair
    rep = validate_walk(truncate(diag_walk, -5, 5), tol=1e-12)
    ok = dev_z < 1e-12 and bool(rep) and rep.worst_deviation < 1e-12
    report(1, ok, f"Kraus completeness deviation {max(dev_z, rep.worst_deviation):.2e} (< 1e-12)")
    assert ok


def _unimodal(values):
    k = int(np.argmax(values))
    return all(np.diff(values[: k + 1]) >= 0) and all(np.diff(values[k:]) <= 0)


def test_2_lattice_distribution_structure(diag_walk, report):
    t0 = time.perf_counter()
    init = LatticeState.localized(np.eye(3) / 3, 0)
    comps = [(1 / 3, 1.0), (1 / 3, 0.75), (1 / 3, 9 / 25)]
    tvs = {}
    for n in (10, 20, 50):
        exact = distribution_after(diag_walk, init, n)
        tvs[n] = total_variation(exact, binomial_mixture(n, comps))
    d50 = distribution_after(diag_walk, init, 50)
    # site +50 also receives the binomial tails (1/3) q^50 of the two packets
    spike = d50.get(50, 0.0) - sum(w * q**50 for w, q in comps[1:])
    # remaining mass lives on even sites below +50; split at the valley between the modes
    xs = np.arange(-50, 50, 2)
    ps = np.array([d50.get(int(x), 0.0) for x in xs])
    # the soliton also contributes nothing below +50, so ps holds the two packets only
    between = (xs > -14) & (xs < 25)
    valley = xs[between][np.argmin(ps[between])]
    lo, hi = xs < valley, xs >= valley
    mean_lo = float(np.dot(xs[lo], ps[lo]) / ps[lo].sum())
    mean_hi = float(np.dot(xs[hi], ps[hi]) / ps[hi].sum())
    elapsed = time.perf_counter() - t0
    ok = (
        max(tvs.values()) < 1e-12
        and abs(spike - 1 / 3) < 1e-12
        and abs(mean_hi - 25) <= 1
        and abs(mean_lo + 14) <= 1
        and _unimodal(ps[lo])
        and _unimodal(ps[hi])
        and elapsed < 1.0
    )
    report(2, ok, f"TV to binomial mixture {max(tvs.values()):.1e}; spike {spike:.15f}; "
                  f"packet means {mean_hi:.3f}, {mean_lo:.3f}; {elapsed:.2f}s")
    assert ok


def _small_walks(rng, count):
    for _ in range(count):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, 4))
        yield random_walk(n, d, rng, edge_prob=0.7)


def test_3_trajectory_convergence(diag_walk, report, rng):
    t0 = time.perf_counter()
    initial = PureWalkerState.normalized([1, 1, 1], 0)
    est = run_ensemble(diag_walk, initial, 20, 100_000, seed=7)
    tv = total_variation(est.distribution(), exact_distribution(diag_walk, initial, 20))
    elapsed = time.perf_counter() - t0

    # exhaustive enumeration of the sampler's jump tree on small graphs
    worst = 0.0
    for walk in _small_walks(rng, 40):
        d = walk.coin_dim
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        start = walk.nodes[0]
        phi = PureWalkerState.normalized(v, start)
        n_steps = 4
        tree = {}

        def expand(state, weight, depth):
            if depth == n_steps:
                tree[state.node] = tree.get(state.node, 0.0) + weight
                return
            for target, p, w in jump_outcomes(walk, state):
                if p > 0:
                    expand(PureWalkerState(w / np.sqrt(p), target), weight * p, depth + 1)

        expand(phi, 1.0, 0)
        exact = node_distribution(evolve(walk, phi.density(), n_steps))
        ops = {k: np.asarray(m) for k, m in walk.transitions.items()}
        brute = path_enumeration(ops, walk.nodes, phi.amplitude, start, n_steps)
        worst = max(worst, _max_dict_diff(tree, exact), _max_dict_diff(brute, exact))
    ok = tv <= 0.01 and worst < 1e-12 and elapsed < 30
    report(3, ok, f"TV(1e5 trajectories, 20 steps) = {tv:.4f} (<= 0.01) in {elapsed:.1f}s; "
                  f"enumeration error {worst:.1e}")
    assert ok


def test_4_realisation_procedure(report, rng):
    t0 = time.perf_counter()
    worst_step = worst_methods = 0.0
    for walk in _small_walks(rng, 200):
        state = random_state(walk.nodes, walk.coin_dim, rng)
        ref = step(walk, state)
        a = run_realisation(walk, state, method="gram_schmidt")
        b = run_realisation(walk, state, method="svd")
        for node in walk.nodes:
            worst_step = max(worst_step, np.abs(a.block(node) - ref.block(node)).max())
            worst_methods = max(worst_methods, np.abs(a.block(node) - b.block(node)).max())
    # the two completions are genuinely different unitaries
    walk = random_walk(3, 2, rng)
    cols = [walk.operator(0, i) for i in walk.nodes]
    gap = np.abs(complete_isometry(cols, method="gram_schmidt").U
                 - complete_isometry(cols, method="svd").U).max()
    elapsed = time.perf_counter() - t0
    ok = worst_step < 1e-10 and worst_methods < 1e-10 and gap > 1e-3 and elapsed < 60
    report(4, ok, f"realisation vs step {worst_step:.1e}; completions agree to {worst_methods:.1e} "
                  f"while differing by {gap:.2f} as unitaries; {elapsed:.1f}s")
    assert ok


def test_5_unitary_walk_recovery(report):
    B, C = hadamard_pair()
    chk = check_uqw_condition(B, C, tol=1e-12)
    walk = HomogeneousWalkZ(B, C)
    psi0 = np.array([1, 1j]) / np.sqrt(2)
    errs = []
    for n in (2, 10):
        amps = run_coherent(walk, {0: psi0}, n)
        got = {x: float(np.vdot(v, v).real) for x, v in amps.items()}
        errs.append(_max_dict_diff(got, dense_coined_walk(B, C, psi0, n)))
    ok = bool(chk) and chk.cross_norm <= 1e-12 and chk.sum_unitarity_deviation <= 1e-12 \
        and max(errs) <= 1e-12
    report(5, ok, f"|C^dag B| = {chk.cross_norm:.1e}, B+C unitarity {chk.sum_unitarity_deviation:.1e}; "
                  f"2/10-step error vs dense walk {errs[0]:.1e}/{errs[1]:.1e}")
    assert ok


def _random_unitaries(nodes, P, d, rng):
    out = {}
    for jj, j in enumerate(nodes):
        for ii, i in enumerate(nodes):
            if P[ii, jj] > 0:
                g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
                q, r = np.linalg.qr(g)
                out[(j, i)] = q * (np.diag(r) / np.abs(np.diag(r)))
    return out


def test_6_classical_reduction(report, rng):
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        raw = rng.random((n, n)) * (rng.random((n, n)) < 0.8)
        raw[rng.integers(n, size=n), np.arange(n)] += 0.1   # no empty column
        P = ClassicalTransitionMatrix(raw / raw.sum(axis=0))
        d = int(rng.integers(1, 4))
        fams = [_random_unitaries(P.nodes, P.P, d, rng) for _ in range(2)]
        walks = [embed_classical(P, u) for u in fams]
        start = int(rng.integers(n))
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        rho = BlockDiagonalState.pure(v / np.linalg.norm(v), start)
        states = [rho, rho]
        for k in range(11):
            ref = classical_marginal(P, {start: 1.0}, k)
            dists = [node_distribution(s) for s in states]
            worst = max(worst, _max_dict_diff(dists[0], ref), _max_dict_diff(dists[1], ref),
                        _max_dict_diff(dists[0], dists[1]))
            states = [step(w, s) for w, s in zip(walks, states)]
    ok = worst < 1e-10
    report(6, ok, f"50 chains x 2 unitary families, n <= 10: max deviation {worst:.1e}")
    assert ok


def test_7_dqc_steady_state(report):
    t0 = time.perf_counter()
    spec = PhaseEstimationSpec(4, phase=5 / 16)
    circuit = build_phase_estimation(spec)
    psi0 = spec.initial_vector()
    T = circuit.T
    # p_i to 1e-9 needs a much tighter stopping rule than the step-count runs
    ch = DQCChain(circuit, 0.5)
    steady, _ = run_to_steady(ch, ch.initial_state(psi0), tol=1e-13, max_steps=10**6)
    uniform_err = max(abs(np.trace(steady.block(j)).real - 1 / (T + 1)) for j in ch.nodes)
    pt_err, bounds_ok, steps = 0.0, True, []
    for w in (0.6, 0.8, 0.9):
        ch = DQCChain(circuit, w)
        tight, _ = run_to_steady(ch, ch.initial_state(psi0), tol=1e-13, max_steps=10**6)
        pT = np.trace(tight.block(T)).real
        pt_err = max(pt_err, abs(pT - birth_death_pT(T, w)))
        bounds_ok &= 1 / (T + 1) < pT < 1
        _, n = run_to_steady(ch, ch.initial_state(psi0), tol=1e-6)
        steps.append(n)
    decreasing = all(a > b for a, b in zip(steps, steps[1:]))
    elapsed = time.perf_counter() - t0
    ok = T == 21 and uniform_err < 1e-9 and pt_err < 1e-9 and bounds_ok and decreasing \
        and elapsed < 60
    report(7, ok, f"T={T}; omega=0.5 uniform to {uniform_err:.1e}; p_T vs birth-death "
                  f"{pt_err:.1e}; steps to 1e-6 {steps}; {elapsed:.1f}s")
    assert ok


def test_8_phase_estimation(report):
    t0 = time.perf_counter()
    spec = PhaseEstimationSpec(4, phase=5 / 16)
    circuit = build_phase_estimation(spec)
    ch = DQCChain(circuit, 0.9)
    steady, _ = run_to_steady(ch, ch.initial_state(spec.initial_vector()), tol=1e-13,
                              max_steps=10**6)
    pT = np.trace(steady.block(ch.T)).real
    p0101 = success_probability(steady, spec.readout_projector("0101"), ch.T) / pT
    # the circuit itself against a textbook dense construction
    final = circuit.product() @ spec.initial_vector()
    oracle = dense_phase_estimation(4, 5 / 16)
    overlap = abs(np.vdot(oracle, final))
    elapsed = time.perf_counter() - t0
    ok = len(circuit.gates) == 21 and len(ch.nodes) == 22 and abs(p0101 - 1) < 1e-9 \
        and abs(overlap - 1) < 1e-9 and elapsed < 60
    report(8, ok, f"{len(circuit.gates)} gates / {len(ch.nodes)} nodes; P(0101 | node T) = "
                  f"{p0101:.12f}; overlap with dense circuit {overlap:.12f}")
    assert ok


def test_9_invariant_properties(report, rng):
    n_cases = 120
    fails = {"trace": 0, "positivity": 0, "linearity": 0, "diagonalization": 0, "seed": 0}
    for case in range(n_cases):
        n = int(rng.integers(2, 5))
        d = int(rng.integers(1, 4))
        walk = random_walk(n, d, rng, edge_prob=0.7)
        s1 = random_state(walk.nodes, d, rng)
        s2 = random_state(walk.nodes, d, rng, rank=1)
        out = step(walk, s1)
        if abs(out.trace() - 1) > 1e-12:
            fails["trace"] += 1
        if not out.is_valid(1e-12):
            fails["positivity"] += 1
        a, b = rng.random(2)
        lhs = step(walk, s1.combine(s2, a, b))
        rhs = out.combine(step(walk, s2), a, b)
        if lhs.max_difference(rhs) > 1e-12:
            fails["linearity"] += 1
        # full density matrix with coherences between nodes
        dim = d * n
        g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        full = FullState(rho, d, walk.nodes)
        dense = dense_walk_map({k: np.asarray(m) for k, m in walk.transitions.items()},
                               walk.nodes, d, rho)
        t = dense.reshape(d, n, d, n)
        off = max((np.abs(t[:, i, :, j]).max() for i in range(n) for j in range(n) if i != j),
                  default=0.0)
        diag_in = BlockDiagonalState({k: full.node_block(k, k) for k in walk.nodes})
        mapped = apply_full_map(walk, full)
        if off > 1e-12 or mapped.max_difference(step(walk, diag_in)) > 1e-12:
            fails["diagonalization"] += 1
        phi = PureWalkerState.normalized(rng.normal(size=d) + 1j * rng.normal(size=d), walk.nodes[0])
        e1 = run_ensemble(walk, phi, 3, 50, seed=case)
        e2 = run_ensemble(walk, phi, 3, 50, seed=case, workers=2)
        if e1.counts != e2.counts:
            fails["seed"] += 1
    ok = not any(fails.values())
    report(9, ok, f"{n_cases} randomized cases per property; failures {fails}")
    assert ok
