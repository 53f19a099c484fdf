import numpy as np
import pytest
from scipy.sparse.linalg import cg

from diffeoflow.linsolve import (CholeskyFactor, KronFactor, LinearSolverError, NotSPDError,
                                 PcgConfig, ScaledIdentity, block_diag_apply_inverse,
                                 cholesky_spd, pcg)


def spd(rng, n, cond=100.0):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(np.geomspace(1, cond, n)) @ Q.T


def test_pcg_solves_spd(rng):
    A = spd(rng, 30)
    b = rng.normal(size=30)
    out = pcg(lambda v: A @ v, b, PcgConfig(1e-12, 200))
    assert out.converged
    np.testing.assert_allclose(out.solution, np.linalg.solve(A, b), rtol=1e-9)
    assert np.linalg.norm(b - A @ out.solution) <= 1e-12 * np.linalg.norm(b) * 10


def test_pcg_matches_scipy_iterates(rng):
    A = spd(rng, 20, 50)
    b = rng.normal(size=20)
    ours = pcg(lambda v: A @ v, b, PcgConfig(1e-10, 500)).solution
    ref, info = cg(A, b, rtol=1e-12, maxiter=500)
    assert info == 0
    np.testing.assert_allclose(ours, ref, rtol=1e-8)


def test_pcg_exact_preconditioner_one_step(rng):
    A = spd(rng, 15)
    f = cholesky_spd(A)
    out = pcg(lambda v: A @ v, rng.normal(size=15), PcgConfig(1e-10, 50, f.solve))
    assert out.iterations == 1


def test_pcg_zero_rhs():
    out = pcg(lambda v: v, np.zeros(4))
    assert out.iterations == 0 and np.all(out.solution == 0) and out.converged


def test_pcg_max_iter(rng):
    A = spd(rng, 40, 1e6)
    out = pcg(lambda v: A @ v, rng.normal(size=40), PcgConfig(1e-14, 3))
    assert out.reason == "max_iter" and out.iterations == 3


def test_pcg_negative_curvature(rng):
    A = -np.eye(3)
    b = np.array([1.0, 2.0, 3.0])
    out = pcg(lambda v: A @ v, b)
    assert out.reason == "negative_curvature" and out.iterations == 0
    np.testing.assert_array_equal(out.solution, b)
    D = np.diag([1.0, -5.0])
    out = pcg(lambda v: D @ v, np.array([1.0, 0.1]))
    assert out.reason == "negative_curvature" and out.iterations == 1


def test_pcg_breakdown():
    with pytest.raises(LinearSolverError, match="numerical breakdown"):
        pcg(lambda v: v * np.nan, np.ones(3))
    with pytest.raises(LinearSolverError):
        pcg(lambda v: v, np.array([np.inf, 1.0]))


def test_pcg_config_validation():
    with pytest.raises(ValueError):
        PcgConfig(0.0)
    with pytest.raises(ValueError):
        PcgConfig(1e-4, 0)


def test_cholesky(rng):
    A = spd(rng, 12)
    f = cholesky_spd(A)
    assert isinstance(f, CholeskyFactor)
    np.testing.assert_allclose(f.L @ f.L.T, A, atol=1e-12)
    assert np.all(np.triu(f.L, 1) == 0)
    b = rng.normal(size=(12, 3))
    np.testing.assert_allclose(A @ f.solve(b), b, atol=1e-10)


def test_cholesky_failures():
    with pytest.raises(NotSPDError) as e:
        cholesky_spd(np.diag([1.0, 2.0, -1.0, 4.0]))
    assert e.value.pivot == 2
    with pytest.raises(NotSPDError):
        cholesky_spd(np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        cholesky_spd(np.ones((2, 3)))


def test_block_diag_inverse(rng):
    A, B = spd(rng, 4), spd(rng, 2)
    blocks = [cholesky_spd(A), ScaledIdentity(2.0, 3), KronFactor(cholesky_spd(B))]
    dense = np.zeros((13, 13))
    dense[:4, :4] = A
    dense[4:7, 4:7] = 2 * np.eye(3)
    dense[7:, 7:] = np.kron(B, np.eye(3))
    v = rng.normal(size=13)
    np.testing.assert_allclose(block_diag_apply_inverse(blocks, v), np.linalg.solve(dense, v),
                               rtol=1e-10)
    with pytest.raises(ValueError):
        block_diag_apply_inverse(blocks, np.ones(12))
