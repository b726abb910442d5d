import numpy as np
import pytest

from oqw.core import BlockDiagonalState, OpenQuantumWalk, is_unitary, random_state, random_walk, step
from oqw.dilation import (
    check_uqw_condition,
    complete_isometry,
    conjugate,
    dephase,
    extend,
    global_unitary,
    hadamard_pair,
    run_coherent,
    run_realisation,
    swap_registers,
    trace_out_auxiliary,
)
from oqw.errors import CapacityError, KrausCompletenessError
from oqw.lattice import HomogeneousWalkZ, LatticeState, distribution_after

from oracles import dense_coined_walk


@pytest.mark.parametrize("method", ["gram_schmidt", "svd"])
def test_completion_is_unitary_with_given_column(rng, method):
    walk = random_walk(3, 2, rng, edge_prob=0.6)
    cols = [walk.operator(1, i) for i in walk.nodes]
    loc = complete_isometry(cols, k=1, method=method)
    assert is_unitary(loc.U, 1e-12)
    for a, i in enumerate(walk.nodes):
        assert np.allclose(loc.block(a, 0), cols[a], atol=1e-13)


def test_completion_rejects_non_isometry():
    with pytest.raises(KrausCompletenessError) as exc:
        complete_isometry([np.eye(2), np.eye(2)], k=4)
    assert exc.value.node == 4


def test_completion_handles_rank_deficient_blocks():
    # first basis candidates are already in the span; they must be skipped
    cols = [np.diag([1.0, 0.0]), np.diag([0.0, 1.0]), np.zeros((2, 2))]
    loc = complete_isometry(cols)
    assert is_unitary(loc.U, 1e-12)


def test_global_unitary_is_unitary(rng):
    walk = random_walk(3, 2, rng)
    u = global_unitary(walk).matrix()
    assert u.shape == (18, 18)
    assert is_unitary(u, 1e-12)


def test_stages_keep_trace_and_positivity(rng):
    walk = random_walk(3, 2, rng)
    state = random_state(walk.nodes, 2, rng)
    d, n = 2, 3
    rho = extend(walk, state)
    for f in (lambda r: conjugate(global_unitary(walk), r),
              lambda r: dephase(r, d, n),
              lambda r: swap_registers(r, d, n)):
        rho = f(rho)
        assert np.trace(rho).real == pytest.approx(1.0, abs=1e-13)
        assert np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() > -1e-13
    red = trace_out_auxiliary(rho, d, n)
    assert red.shape == (6, 6)


def test_realisation_equals_step(rng):
    for _ in range(20):
        walk = random_walk(int(rng.integers(2, 5)), int(rng.integers(1, 4)), rng, edge_prob=0.5)
        s = random_state(walk.nodes, walk.coin_dim, rng)
        ref = step(walk, s)
        out = run_realisation(walk, s, method="svd")
        for k in walk.nodes:
            assert np.allclose(out.block(k), ref.block(k), atol=1e-12)


def test_realisation_without_dephasing_keeps_coherence(rng):
    # skipping the dephasing stage on a generic walk leaves node coherences
    walk = random_walk(2, 2, rng)
    s = BlockDiagonalState.pure([1, 0], 0)
    rho = conjugate(global_unitary(walk), extend(walk, s))
    red = trace_out_auxiliary(swap_registers(rho, 2, 2), 2, 2).reshape(2, 2, 2, 2)
    red_deph = trace_out_auxiliary(swap_registers(dephase(rho, 2, 2), 2, 2), 2, 2).reshape(2, 2, 2, 2)
    assert np.abs(red_deph[:, 0, :, 1]).max() < 1e-14
    assert np.allclose(red[:, 0, :, 0], red_deph[:, 0, :, 0])


def test_capacity_limit():
    walk = OpenQuantumWalk(tuple(range(130)), 1,
                           {(k, (k + 1) % 130): np.eye(1) for k in range(130)})
    with pytest.raises(CapacityError):
        run_realisation(walk, BlockDiagonalState.pure([1.0], 0))


@pytest.mark.parametrize("sign", [1, -1])
def test_hadamard_pair_is_coherent(sign):
    b, c = hadamard_pair(sign=sign)
    chk = check_uqw_condition(b, c)
    assert chk.ok
    assert chk.sum_unitarity_deviation < 1e-15


def test_hadamard_sign_does_not_change_distribution():
    psi = np.array([1, 1j]) / np.sqrt(2)
    dists = []
    for sign in (1, -1):
        b, c = hadamard_pair(sign=sign)
        amps = run_coherent(HomogeneousWalkZ(b, c), {0: psi}, 8)
        dists.append({x: np.vdot(v, v).real for x, v in amps.items()})
    for x in set(dists[0]) | set(dists[1]):
        assert dists[0].get(x, 0) == pytest.approx(dists[1].get(x, 0), abs=1e-14)


def test_coherent_walk_differs_from_open_walk():
    b, c = hadamard_pair()
    walk = HomogeneousWalkZ(b, c)
    psi = np.array([1, 1j]) / np.sqrt(2)
    amps = run_coherent(walk, {0: psi}, 10)
    coh = {x: np.vdot(v, v).real for x, v in amps.items()}
    ref = dense_coined_walk(b, c, psi, 10)
    for x in ref:
        assert coh.get(x, 0.0) == pytest.approx(ref[x], abs=1e-13)
    openw = distribution_after(walk, LatticeState.localized(np.outer(psi, psi.conj())), 10)
    assert max(abs(coh.get(x, 0) - openw.get(x, 0)) for x in openw) > 1e-2


def test_coherent_rejects_overlapping_pair(diag_walk):
    with pytest.raises(KrausCompletenessError):
        run_coherent(diag_walk, {0: np.array([0, 1, 0])}, 1)


def test_complex_hadamard_parameters():
    a, b = np.exp(0.3j) * 0.6, np.exp(-1.1j) * 0.8
    B, C = hadamard_pair(a, b)
    assert check_uqw_condition(B, C).ok
    with pytest.raises(ValueError):
        hadamard_pair(0.5, 0.5)
