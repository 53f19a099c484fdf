"""
Linear algebra kernels: PCG with a negative-curvature guard, small dense
Cholesky factorizations, and block-diagonal inverse application.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import lapack, solve_triangular

__all__ = [
    "LinearSolverError",
    "NotSPDError",
    "PcgConfig",
    "PcgOutcome",
    "pcg",
    "CholeskyFactor",
    "ScaledIdentity",
    "KronFactor",
    "cholesky_spd",
    "solve_with_factor",
    "block_diag_apply_inverse",
]


class LinearSolverError(RuntimeError):
    """Numerical breakdown inside an iterative solver."""


class NotSPDError(LinearSolverError):
    def __init__(self, pivot: int, message: str | None = None):
        self.pivot = pivot
        super().__init__(message or f"matrix is not SPD: non-positive pivot at index {pivot}")


@dataclass(frozen=True)
class PcgConfig:
    rel_tolerance: float = 1e-4
    max_iterations: int = 100
    preconditioner: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if not self.rel_tolerance > 0:
            raise ValueError("rel_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class PcgOutcome:
    solution: np.ndarray
    iterations: int
    rel_residual: float
    reason: str  # "converged" | "max_iter" | "negative_curvature"

    @property
    def converged(self) -> bool:
        return self.reason == "converged"


def pcg(apply_A: Callable[[np.ndarray], np.ndarray], b, cfg: PcgConfig = PcgConfig()) -> PcgOutcome:
    """Preconditioned conjugate gradients from a zero initial guess.

    If a search direction with ``p^T A p <= 0`` is met, the current iterate is
    returned when at least one step was taken; otherwise the preconditioned
    steepest-descent direction ``M^{-1} b`` is returned. The residual is
    measured relative to ``||b||_2``.
    """
    b = np.asarray(b, dtype=float)
    precond = cfg.preconditioner or (lambda r: r)
    x = np.zeros_like(b)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return PcgOutcome(x, 0, 0.0, "converged")
    if not np.isfinite(bnorm):
        raise LinearSolverError("numerical breakdown: right-hand side is not finite")

    r = b.copy()
    z = precond(r)
    p = z.copy()
    rz = float(r @ z)
    rel = 1.0
    for k in range(cfg.max_iterations):
        Ap = apply_A(p)
        curv = float(p @ Ap)
        if not np.isfinite(curv):
            raise LinearSolverError(
                f"numerical breakdown at PCG iteration {k}: p^T A p = {curv}, rel. residual {rel:.3e}")
        if curv <= 0.0:
            if k == 0:
                return PcgOutcome(z.copy(), 0, rel, "negative_curvature")
            return PcgOutcome(x, k, rel, "negative_curvature")
        alpha = rz / curv
        x = x + alpha * p
        r = r - alpha * Ap
        rel = float(np.linalg.norm(r)) / bnorm
        if not np.isfinite(rel):
            raise LinearSolverError(f"numerical breakdown at PCG iteration {k}: residual not finite")
        if rel <= cfg.rel_tolerance:
            return PcgOutcome(x, k + 1, rel, "converged")
        z = precond(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    return PcgOutcome(x, cfg.max_iterations, rel, "max_iter")


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular ``L`` with ``L L^T = A``."""

    L: np.ndarray

    @property
    def size(self) -> int:
        return self.L.shape[0]

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        y = solve_triangular(self.L, rhs, lower=True, check_finite=False)
        return solve_triangular(self.L, y, lower=True, trans="T", check_finite=False)


def cholesky_spd(A, sym_tol: float = 1e-10) -> CholeskyFactor:
    """Cholesky factorization of a small dense SPD matrix.

    Raises
    ------
    NotSPDError
        On asymmetry beyond ``sym_tol`` (relative) or a non-positive pivot;
        ``pivot`` carries the zero-based index of the failing pivot.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(float(np.max(np.abs(A))), 1.0) if A.size else 1.0
    if A.size and float(np.max(np.abs(A - A.T))) > sym_tol * scale:
        raise NotSPDError(-1, "matrix is not symmetric")
    c, info = lapack.dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info > 0:
        raise NotSPDError(info - 1)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    return CholeskyFactor(np.tril(c))


def solve_with_factor(factor: CholeskyFactor, rhs) -> np.ndarray:
    return factor.solve(rhs)


@dataclass(frozen=True)
class ScaledIdentity:
    """The block ``value * I`` of the given size."""

    value: float
    size: int

    def solve(self, rhs) -> np.ndarray:
        return np.asarray(rhs, dtype=float) / self.value


@dataclass(frozen=True)
class KronFactor:
    """Block ``I_dim (x) A`` acting on point-major segments ``(m, dim)``.

    Used for the ``I_3 (x) K`` kernel blocks, whose coordinates are stored
    interleaved per point.
    """

    factor: CholeskyFactor
    dim: int = 3

    @property
    def size(self) -> int:
        return self.factor.size * self.dim

    def solve(self, rhs) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        return self.factor.solve(rhs.reshape(self.factor.size, self.dim)).reshape(rhs.shape)


def block_diag_apply_inverse(blocks: Sequence, v) -> np.ndarray:
    """Apply the inverse of ``diag(blocks)`` to the stacked vector ``v``.

    Each block is a :class:`CholeskyFactor`, :class:`KronFactor` or
    :class:`ScaledIdentity`; segments of ``v`` are solved block by block.
    """
    v = np.asarray(v, dtype=float).ravel()
    total = sum(b.size for b in blocks)
    if total != v.shape[0]:
        raise ValueError(f"block sizes sum to {total}, vector has length {v.shape[0]}")
    out = np.empty_like(v)
    start = 0
    for blk in blocks:
        stop = start + blk.size
        out[start:stop] = blk.solve(v[start:stop])
        start = stop
    return out
