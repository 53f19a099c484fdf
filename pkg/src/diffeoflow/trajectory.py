"""
Time grid, forward-Euler rollout and the Euler constraint operators.

Trajectories are plain arrays: a state trajectory has shape ``(n+1, m, 3)``
(block ``j`` is the state at ``t^{j+1} = j h``), a control trajectory has
shape ``(n, m, 3)``. Only ``n`` control blocks exist because the last
control never enters the recursion.

The constraint reads ``G^x x + G^a a = q`` with

* ``(G^x x)_0 = x_0``, ``(G^x x)_{j+1} = x_{j+1} - x_j``,
* ``(G^a a)_0 = 0``,  ``(G^a a)_{j+1} = -h K_j a_j``,
* ``q = (x_0, 0, ..., 0)``,

where ``K_j`` is the velocity Gram matrix at the kernel anchors of block
``j``: the template for frozen mode, the current state ``x_j`` otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Shape
from .kernels import GaussianKernel

__all__ = [
    "TimeGrid",
    "gram_blocks",
    "rollout",
    "apply_Gx",
    "apply_GxT",
    "apply_Ga",
    "apply_GaT",
    "rhs_q",
    "constraint_residual",
    "observe_terminal",
]


@dataclass(frozen=True)
class TimeGrid:
    """``n`` cells of size ``h = 1/(n+1)``; nodes ``t^j = (j-1) h``, ``j = 1..n+1``."""

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one time cell, got n={self.n}")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h


def _points(x0) -> np.ndarray:
    return x0.points if isinstance(x0, Shape) else np.asarray(x0, dtype=float).reshape(-1, 3)


def gram_blocks(kernel: GaussianKernel, states) -> np.ndarray:
    """Gram matrices ``K[x_j]`` for each block of ``states`` (shape ``(b, m, m)``)."""
    states = np.asarray(states, dtype=float)
    return np.stack([kernel(s) for s in states])


def _block_gram(gram, j: int) -> np.ndarray:
    gram = np.asarray(gram)
    return gram if gram.ndim == 2 else gram[j]


def rollout(x0, a, kernel: GaussianKernel, grid: TimeGrid, frozen: bool = False) -> np.ndarray:
    """Forward-Euler integration of the point trajectories.

    ``x_{j+1} = x_j + h K a_j`` with ``K = K[x_j]`` (faithful mode) or
    ``K = K[x_0]`` (``frozen=True``).
    """
    x0 = _points(x0)
    a = np.asarray(a, dtype=float)
    m = x0.shape[0]
    if a.shape != (grid.n, m, 3):
        raise ValueError(f"control has shape {a.shape}, expected {(grid.n, m, 3)}")
    x = np.empty((grid.n + 1, m, 3))
    x[0] = x0
    K0 = kernel(x0) if frozen else None
    for j in range(grid.n):
        K = K0 if frozen else kernel(x[j])
        x[j + 1] = x[j] + grid.h * (K @ a[j])
    return x


def apply_Gx(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    out[0] = x[0]
    out[1:] = x[1:] - x[:-1]
    return out


def apply_GxT(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[:-1] = v[:-1] - v[1:]
    out[-1] = v[-1]
    return out


def apply_Ga(gram, a, h: float) -> np.ndarray:
    """``G^a a``; ``gram`` is one ``(m, m)`` matrix or ``(n, m, m)`` blocks."""
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    out = np.zeros((n + 1,) + a.shape[1:])
    for j in range(n):
        out[j + 1] = -h * (_block_gram(gram, j) @ a[j])
    return out


def apply_GaT(gram, v, h: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = v.shape[0] - 1
    out = np.empty((n,) + v.shape[1:])
    for j in range(n):
        out[j] = -h * (_block_gram(gram, j).T @ v[j + 1])
    return out


def rhs_q(x0, n: int) -> np.ndarray:
    x0 = _points(x0)
    q = np.zeros((n + 1,) + x0.shape)
    q[0] = x0
    return q


def constraint_residual(x, a, gram, h: float, x0) -> np.ndarray:
    """``G^x x + G^a a - q``."""
    x = np.asarray(x, dtype=float)
    return apply_Gx(x) + apply_Ga(gram, a, h) - rhs_q(x0, x.shape[0] - 1)


def observe_terminal(x) -> np.ndarray:
    return np.asarray(x)[-1]
