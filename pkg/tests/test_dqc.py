import numpy as np
import pytest

from oqw.core import BlockDiagonalState, evolve, is_unitary
from oqw.dqc import (
    DQCChain,
    GateCircuit,
    PhaseEstimationSpec,
    birth_death_stationary,
    build_phase_estimation,
    dqc_step,
    inverse_qft_gate_count,
    inverse_qft_gates,
    qft_matrix,
    run_to_steady,
    success_probability,
    sweep_omega,
)
from oqw.errors import ConvergenceError

from oracles import birth_death_pT, dense_phase_estimation

H = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]])


def small_circuit():
    return GateCircuit((H, X, H), ("H", "X", "H"))


def test_step_matches_generic_walk(rng):
    chain = DQCChain(small_circuit(), 0.7)
    s = chain.initial_state([1, 0])
    walk = chain.as_walk()
    a, b = s, s
    for _ in range(5):
        a = dqc_step(chain, a)
    b = evolve(walk, b, 5)
    for k in chain.nodes:
        assert np.allclose(a.block(k), b.block(k), atol=1e-14)


def test_literal_boundary_differs_and_conserves_trace():
    c = GateCircuit((H, X, H @ X), ("a", "b", "c"))
    lit = DQCChain(c, 0.6, boundary="literal")
    con = DQCChain(c, 0.6)
    s_l, s_c = lit.initial_state([1, 0]), con.initial_state([1, 0])
    for _ in range(6):
        s_l, s_c = dqc_step(lit, s_l), dqc_step(con, s_c)
    assert s_l.trace() == pytest.approx(1.0, abs=1e-13)
    assert s_l.max_difference(s_c) > 1e-3
    with pytest.raises(ValueError):
        lit.as_walk()


@pytest.mark.parametrize("omega", [0.3, 0.5, 0.75])
def test_steady_masses_are_birth_death(omega):
    chain = DQCChain(small_circuit(), omega)
    steady, _ = run_to_steady(chain, chain.initial_state([1, 0]), tol=1e-14)
    p = np.array([steady.block(k).trace().real for k in chain.nodes])
    assert np.allclose(p, birth_death_stationary(3, omega), atol=1e-12)
    assert p[-1] == pytest.approx(birth_death_pT(3, omega), abs=1e-12)


def test_steady_blocks_carry_circuit_history():
    c = small_circuit()
    chain = DQCChain(c, 0.8)
    steady, _ = run_to_steady(chain, chain.initial_state([1, 0]), tol=1e-14)
    psi = np.array([1, 0], dtype=complex)
    for k in chain.nodes:
        v = c.product(k) @ psi
        blk = steady.block(k)
        assert np.allclose(blk, blk.trace().real * np.outer(v, v.conj()), atol=1e-12)


def test_no_convergence_raises():
    chain = DQCChain(small_circuit(), 0.5)
    with pytest.raises(ConvergenceError) as exc:
        run_to_steady(chain, chain.initial_state([1, 0]), tol=1e-12, max_steps=5)
    assert exc.value.steps == 5


def test_omega_range():
    with pytest.raises(ValueError):
        DQCChain(small_circuit(), 1.0)


def test_gate_circuit_rejects_non_unitary():
    with pytest.raises(ValueError):
        GateCircuit((np.diag([1.0, 0.5]),), ("bad",))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_inverse_qft_gates(n):
    gates = inverse_qft_gates(n)
    assert len(gates) == inverse_qft_gate_count(n) == n * n
    u = np.eye(2**n)
    for _, g in gates:
        u = g @ u
    assert np.allclose(u, qft_matrix(n).conj().T, atol=1e-13)
    assert is_unitary(qft_matrix(n))


def test_qft_is_dft():
    n = 3
    N = 2**n
    w = np.exp(2j * np.pi / N)
    ref = np.array([[w ** (j * k) for k in range(N)] for j in range(N)]) / np.sqrt(N)
    assert np.allclose(qft_matrix(n), ref)


def test_phase_estimation_structure():
    spec = PhaseEstimationSpec(4, phase=5 / 16)
    c = build_phase_estimation(spec)
    assert c.T == 21
    assert c.labels[0] == "H-layer"
    assert c.labels[1:5] == ("C0-U^8", "C1-U^4", "C2-U^2", "C3-U^1")


@pytest.mark.parametrize("t,phase", [(2, 0.25), (3, 3 / 8), (4, 5 / 16), (4, 0.1)])
def test_phase_estimation_matches_dense_circuit(t, phase):
    spec = PhaseEstimationSpec(t, phase=phase)
    final = build_phase_estimation(spec).product() @ spec.initial_vector()
    ref = dense_phase_estimation(t, phase)
    assert abs(np.vdot(ref, final)) == pytest.approx(1.0, abs=1e-12)


def test_custom_target_unitary():
    u = np.diag([np.exp(2j * np.pi * 0.75), 1.0])
    spec = PhaseEstimationSpec(2, target_unitary=u, eigenvector=[1, 0])
    final = build_phase_estimation(spec).product() @ spec.initial_vector()
    assert np.vdot(final, spec.readout_projector("11") @ final).real == pytest.approx(1.0)
    with pytest.raises(ValueError):
        PhaseEstimationSpec(2, target_unitary=u)


def test_sweep_rows():
    spec = PhaseEstimationSpec(2, phase=0.25)
    rows = sweep_omega(build_phase_estimation(spec), [0.6, 0.9], spec.initial_vector(),
                       spec.readout_projector("01"))
    assert [r["omega"] for r in rows] == [0.6, 0.9]
    assert rows[0]["steps_to_steady"] > rows[1]["steps_to_steady"]
    for r in rows:
        assert r["success_probability"] == pytest.approx(r["p_T"], abs=1e-9)


def test_success_probability_checks_projector():
    s = BlockDiagonalState.pure([1, 0], 0)
    with pytest.raises(ValueError):
        success_probability(s, np.array([[0.5, 0], [0, 0]]), 0)
