import numpy as np
import pytest
from scipy.stats import ortho_group

from rdpg.align import subspace_alignment, procrustes, two_to_infty, two_to_infty_error
from rdpg.errors import ShapeMismatch
from rdpg.model import sample_rdpg
from rdpg.schemas import InnerProductDistribution
from rdpg.spectral import ase, population_quantities

TWO_ATOMS = InnerProductDistribution(dim=2, atoms=[[0.2, 0.7], [0.65, 0.3]], weights=[0.4, 0.6])


def _orthonormal(n, d, seed):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(n, d)))
    return Q


def test_procrustes_identity_and_rotation():
    rng = np.random.default_rng(0)
    T = rng.normal(size=(20, 2))
    same = procrustes(T, T)
    np.testing.assert_allclose(same.Q, np.eye(2), atol=1e-12)
    assert same.residual == pytest.approx(0.0, abs=1e-12)

    R = ortho_group.rvs(2, random_state=1)
    rotated = procrustes(T @ R, T)
    np.testing.assert_allclose(rotated.Q, R.T, atol=1e-10)
    assert rotated.residual <= 1e-10


def test_procrustes_beats_random_orthogonal_matrices():
    rng = np.random.default_rng(2)
    S, T = rng.normal(size=(20, 2)), rng.normal(size=(20, 2))
    best = procrustes(S, T)
    np.testing.assert_allclose(best.Q.T @ best.Q, np.eye(2), atol=1e-10)
    assert best.residual <= np.linalg.norm(S - T) + 1e-12
    for Q in ortho_group.rvs(2, size=1000, random_state=3):
        assert best.residual <= np.linalg.norm(S @ Q - T) + 1e-12


def test_procrustes_invariant_to_common_rotation():
    rng = np.random.default_rng(4)
    S, T = rng.normal(size=(15, 3)), rng.normal(size=(15, 3))
    R = ortho_group.rvs(3, random_state=5)
    assert procrustes(S @ R, T @ R).residual == pytest.approx(procrustes(S, T).residual, abs=1e-10)


def test_procrustes_errors():
    with pytest.raises(ShapeMismatch):
        procrustes(np.ones((3, 2)), np.ones((4, 2)))
    with pytest.raises(ValueError):
        procrustes(np.zeros((3, 2)), np.ones((3, 2)))


def test_subspace_alignment_recovers_rotation():
    U = _orthonormal(30, 3, seed=6)
    np.testing.assert_allclose(subspace_alignment(U, U).Q, np.eye(3), atol=1e-10)

    R = ortho_group.rvs(3, random_state=7)
    result = subspace_alignment(U, U @ R)
    np.testing.assert_allclose(result.Q, R, atol=1e-10)
    assert result.residual <= 1e-10

    with pytest.raises(ShapeMismatch):
        subspace_alignment(U, U[:, :2])


def test_subspace_alignment_on_rdpg_draw():
    X, A = sample_rdpg(TWO_ATOMS, 500, seed=8)
    U_pop = population_quantities(X).U
    U_hat = ase(A, 2).vectors
    found = subspace_alignment(U_pop, U_hat)
    M = U_pop.T @ U_hat
    for Q in ortho_group.rvs(2, size=100, random_state=9):
        assert found.residual < np.linalg.norm(M - Q)

    # same Q as Procrustes of U_pop onto U_hat
    assert np.linalg.norm(U_pop @ found.Q - U_hat) == pytest.approx(procrustes(U_pop, U_hat).residual, abs=1e-8)


def test_two_to_infty():
    assert two_to_infty(np.eye(3)) == 1.0
    assert two_to_infty([[3.0, 4.0], [0.0, 1.0]]) == 5.0
    M = np.random.default_rng(10).normal(size=(12, 3))
    assert two_to_infty(M) == pytest.approx(max(np.sqrt(sum(v * v for v in row)) for row in M))


def test_two_to_infty_error_rotation_free():
    X = np.random.default_rng(11).uniform(size=(10, 2))
    R = ortho_group.rvs(2, random_state=12)
    assert two_to_infty_error(X @ R, X) == pytest.approx(0.0, abs=1e-12)
