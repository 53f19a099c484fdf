import math

import numpy as np
import pytest

from diffeoflow.kernels import GaussianKernel
from diffeoflow.trajectory import (TimeGrid, apply_Ga, apply_GaT, apply_Gx, apply_GxT,
                                   constraint_residual, gram_blocks, rhs_q, rollout)


def test_grid():
    g = TimeGrid(5)
    assert g.h == 1 / 6
    np.testing.assert_allclose(g.times, np.arange(6) / 6)
    with pytest.raises(ValueError):
        TimeGrid(0)


def test_zero_control_is_constant(rng):
    x0 = rng.normal(size=(7, 3))
    x = rollout(x0, np.zeros((4, 7, 3)), GaussianKernel(1.0), TimeGrid(4))
    assert np.all(x == x0)


def test_one_step_hand_value():
    x0 = np.array([[0.2, -1.0, 3.0]])
    x = rollout(x0, np.array([[[1.0, 0, 0]]]), GaussianKernel(1.0), TimeGrid(1))
    kappa = (2 * math.pi) ** -1.5
    np.testing.assert_allclose(x[1], x0 + [0.5 * kappa, 0, 0], rtol=1e-15)


def test_shape_check(rng):
    with pytest.raises(ValueError):
        rollout(np.zeros((3, 3)), np.zeros((2, 4, 3)), GaussianKernel(1.0), TimeGrid(2))


@pytest.mark.parametrize("frozen", [True, False])
def test_rollout_satisfies_constraint(rng, frozen):
    m, n = 6, 4
    x0 = rng.normal(size=(m, 3))
    a = rng.normal(size=(n, m, 3))
    k = GaussianKernel(0.8)
    x = rollout(x0, a, k, TimeGrid(n), frozen=frozen)
    gram = k(x0) if frozen else gram_blocks(k, x[:-1])
    r = constraint_residual(x, a, gram, TimeGrid(n).h, x0)
    assert np.max(np.abs(r)) <= 1e-12


def test_zero_control_rows_zero(rng):
    out = apply_Ga(np.eye(3), np.zeros((2, 3, 3)), 0.3)
    assert np.all(out == 0)


def test_Gx_rows(rng):
    x = rng.normal(size=(3, 2, 3))
    out = apply_Gx(x)
    np.testing.assert_array_equal(out[0], x[0])
    np.testing.assert_array_equal(out[2], x[2] - x[1])


def test_rhs():
    q = rhs_q(np.ones((2, 3)), 3)
    assert q.shape == (4, 2, 3) and np.all(q[0] == 1) and np.all(q[1:] == 0)


def test_adjoints(rng):
    m, n, h = 5, 3, 0.25
    x, v = rng.normal(size=(n + 1, m, 3)), rng.normal(size=(n + 1, m, 3))
    lhs, rhs = np.sum(apply_Gx(x) * v), np.sum(x * apply_GxT(v))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    a = rng.normal(size=(n, m, 3))
    for gram in (GaussianKernel(1.0)(rng.normal(size=(m, 3))), rng.normal(size=(n, m, m))):
        lhs, rhs = np.sum(apply_Ga(gram, a, h) * v), np.sum(a * apply_GaT(gram, v, h))
        assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
