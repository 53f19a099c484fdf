"""
Gaussian kernels, Gram operators and bandwidth policies.

The velocity kernel is the normalized Gaussian

    ker(u, v) = (2 pi)^(-3/2) sigma^(-3) exp(-|u - v|^2 / (2 sigma^2)),

the distance kernel drops the prefactor (``normalized=False``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .geometry import Shape, hausdorff, mean_edge_length
from .linsolve import CholeskyFactor, cholesky_spd

__all__ = [
    "GaussianKernel",
    "GramOperator",
    "kernel_eval",
    "gram_matvec",
    "sq_distances",
    "sigma_v_policy",
    "sigma_s_policy",
    "MAX_DENSE_POINTS",
]

MAX_DENSE_POINTS = 20_000


@dataclass(frozen=True)
class GaussianKernel:
    sigma: float
    normalized: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"kernel bandwidth must be positive, got {self.sigma}")

    @property
    def prefactor(self) -> float:
        if self.normalized:
            return (math.sqrt(2.0 * math.pi) * self.sigma) ** -3
        return 1.0

    def __call__(self, x, y=None) -> np.ndarray:
        """Kernel matrix between the rows of ``x`` and ``y`` (``y = x`` if omitted)."""
        x = np.asarray(x, dtype=float).reshape(-1, 3)
        y = x if y is None else np.asarray(y, dtype=float).reshape(-1, 3)
        return self.prefactor * np.exp(-sq_distances(x, y) / (2.0 * self.sigma ** 2))


def sq_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise squared distances, computed from explicit differences.

    The expanded ``|x|^2 - 2 x.y + |y|^2`` form is avoided on purpose: it
    breaks exact symmetry and loses accuracy for nearby points.
    """
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_eval(kernel: GaussianKernel, u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d = u - v
    return kernel.prefactor * math.exp(-float(d @ d) / (2.0 * kernel.sigma ** 2))


@dataclass(eq=False)
class GramOperator:
    """Gram matrix of a kernel at fixed anchor points, with cached factors.

    Applies ``I_3 (x) K`` to coefficient arrays of shape ``(m, 3)``.
    """

    points: np.ndarray
    kernel: GaussianKernel
    _K: np.ndarray | None = field(default=None, repr=False)
    _factors: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if self.points.shape[0] > MAX_DENSE_POINTS:
            raise MemoryError(
                f"dense Gram matrices are limited to {MAX_DENSE_POINTS} points "
                f"(got {self.points.shape[0]})")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        if self._K is None:
            K = self.kernel(self.points)
            K.setflags(write=False)
            self._K = K
        return self._K

    def matvec(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return self.matrix @ coeffs.reshape(self.m, -1).reshape(coeffs.shape)

    def shifted_factor(self, c: float, rho: float) -> CholeskyFactor:
        """Cholesky factor of ``c K + rho I`` (cached per ``(c, rho)``)."""
        key = (float(c), float(rho))
        if key not in self._factors:
            A = c * self.matrix + rho * np.eye(self.m)
            self._factors[key] = cholesky_spd(A)
        return self._factors[key]


def gram_matvec(op: GramOperator, coeffs) -> np.ndarray:
    return op.matvec(coeffs)


def sigma_v_policy(template: Shape, tau_v: float) -> float:
    """Velocity bandwidth ``tau_v / sqrt(2) * mean_edge_length(template)``."""
    if not tau_v > 0:
        raise ValueError(f"tau_v must be positive, got {tau_v}")
    return tau_v * 2.0 ** -0.5 * mean_edge_length(template)


def sigma_s_policy(template: Shape, target: Shape, tau_s: float) -> float:
    """Distance bandwidth ``max(h1, tau_s * dist_H(template, target) / 2)``.

    ``h1`` is the target mean edge length and ``dist_H`` the uncensored
    Hausdorff distance.
    """
    if not tau_s > 0:
        raise ValueError(f"tau_s must be positive, got {tau_s}")
    if not 0.75 <= tau_s <= 6.0:
        warnings.warn(f"tau_s = {tau_s} lies outside the tested range [3/4, 6]", stacklevel=2)
    h1 = mean_edge_length(target)
    return max(h1, tau_s * hausdorff(template, target, 1.0).value / 2.0)
