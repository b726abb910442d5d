import numpy as np
import pytest

from oqw.classical import ClassicalTransitionMatrix, classical_marginal, embed_classical
from oqw.core import BlockDiagonalState, evolve, node_distribution, validate_walk


P3 = np.array([[0.5, 0.2, 0.0],
               [0.5, 0.3, 0.9],
               [0.0, 0.5, 0.1]])


def test_column_convention():
    P = ClassicalTransitionMatrix(P3)
    assert P.prob(source=1, target=2) == 0.5
    assert P.prob(source=2, target=1) == 0.9
    R = ClassicalTransitionMatrix.from_rows(P3.T)
    assert np.array_equal(R.P, P.P)


@pytest.mark.parametrize("bad", [
    [[0.5, 0.5], [0.4, 0.5]],      # column 0 sums to 0.9
    [[1.2, 0.0], [-0.2, 1.0]],
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    [[np.nan, 0.0], [1.0, 1.0]],
])
def test_rejects_invalid_matrices(bad):
    with pytest.raises(ValueError):
        ClassicalTransitionMatrix(np.array(bad, dtype=float))


def test_default_coin_is_one_dimensional():
    walk = embed_classical(ClassicalTransitionMatrix(P3))
    assert walk.coin_dim == 1
    assert validate_walk(walk, tol=1e-14)
    assert embed_classical(ClassicalTransitionMatrix(P3), full_coin=True).coin_dim == 3


def test_marginals_follow_the_chain():
    P = ClassicalTransitionMatrix(P3, nodes=(10, 20, 30))
    walk = embed_classical(P)
    s = BlockDiagonalState.pure([1.0], 20)
    for n in range(8):
        ref = classical_marginal(P, {20: 1.0}, n)
        got = node_distribution(evolve(walk, s, n))
        for k in P.nodes:
            assert got.get(k, 0.0) == pytest.approx(ref[k], abs=1e-14)


def test_unitary_choice_does_not_matter(rng):
    P = ClassicalTransitionMatrix(P3)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    s = np.array([[1, 0], [0, 1j]])
    w1 = embed_classical(P, {(0, 1): h, (1, 2): s}, coin_dim=2)
    w2 = embed_classical(P, coin_dim=2)
    rho = BlockDiagonalState.localized(np.array([[0.6, 0.2j], [-0.2j, 0.4]]), 0)
    d1 = node_distribution(evolve(w1, rho, 6))
    d2 = node_distribution(evolve(w2, rho, 6))
    for k in P.nodes:
        assert d1[k] == pytest.approx(d2[k], abs=1e-14)


def test_embedding_checks_unitaries():
    P = ClassicalTransitionMatrix(P3)
    with pytest.raises(ValueError):
        embed_classical(P, {(0, 1): np.diag([1.0, 0.5])})
    with pytest.raises(ValueError):
        embed_classical(P, {(0, 1): np.eye(2)}, coin_dim=3)


def test_marginal_rejects_bad_masses():
    P = ClassicalTransitionMatrix(P3)
    with pytest.raises(ValueError):
        classical_marginal(P, {0: 0.5}, 2)
