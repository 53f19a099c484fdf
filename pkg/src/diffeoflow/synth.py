"""
Synthetic meshed point clouds: Fibonacci spheres, ellipsoids and a bent
"valve-like" sheet.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.spatial import ConvexHull

from .geometry import Shape

__all__ = ["fibonacci_sphere", "sphere", "ellipsoid", "sheet", "make_shape"]


def fibonacci_sphere(m: int) -> np.ndarray:
    """``m`` nearly uniform unit vectors on the golden-angle spiral."""
    i = np.arange(m) + 0.5
    z = 1.0 - 2.0 * i / m
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = math.pi * (3.0 - math.sqrt(5.0)) * np.arange(m)
    p = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def _hull_triangles(unit: np.ndarray) -> np.ndarray:
    hull = ConvexHull(unit)
    tri = hull.simplices.copy()
    # orient outward
    a, b, c = unit[tri[:, 0]], unit[tri[:, 1]], unit[tri[:, 2]]
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def _jitter(unit, jitter, seed):
    if not jitter:
        return unit
    rng = np.random.default_rng(seed)
    p = unit + jitter * rng.standard_normal(unit.shape)
    return p / np.linalg.norm(p, axis=1, keepdims=True)


def ellipsoid(m: int = 200, axes=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0),
              jitter: float = 0.0, seed: int = 0) -> Shape:
    """Fibonacci-sampled ellipsoid with convex-hull triangulation.

    The mesh is built on the unit sphere and mapped by the axis scaling, so
    spheres and ellipsoids with the same ``m`` share connectivity.
    """
    if m < 4:
        raise ValueError("need at least 4 points")
    axes = np.asarray(axes, dtype=float)
    if axes.shape != (3,) or np.any(axes <= 0):
        raise ValueError("axes must be three positive numbers")
    unit = _jitter(fibonacci_sphere(m), jitter, seed)
    tri = _hull_triangles(unit)
    return Shape(unit * axes + np.asarray(center, dtype=float), tri)


def sphere(m: int = 200, radius: float = 1.0, center=(0.0, 0.0, 0.0),
           jitter: float = 0.0, seed: int = 0) -> Shape:
    if not radius > 0:
        raise ValueError("radius must be positive")
    return ellipsoid(m, (radius, radius, radius), center, jitter, seed)


def sheet(m: int = 200, width: float = 2.0, bend: float = 0.5, jitter: float = 0.0,
          seed: int = 0) -> Shape:
    """Regular grid on ``[-w/2, w/2]^2`` bent into ``z = bend * x^2``.

    The grid has ``floor(sqrt(m))`` points per side; each quad is split into
    two triangles by a fan from its lower-left corner. Boundary points are
    flagged.
    """
    if m < 4:
        raise ValueError("need at least 4 points")
    k = int(math.isqrt(m))
    s = np.linspace(-0.5 * width, 0.5 * width, k)
    X, Y = np.meshgrid(s, s, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel(), bend * X.ravel() ** 2])
    if jitter:
        rng = np.random.default_rng(seed)
        pts[:, :2] += jitter * (width / k) * rng.standard_normal((pts.shape[0], 2))
    idx = np.arange(k * k).reshape(k, k)
    v00, v10 = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel()
    v01, v11 = idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()
    tri = np.concatenate([np.column_stack([v00, v10, v11]), np.column_stack([v00, v11, v01])])
    boundary = np.zeros((k, k), dtype=bool)
    boundary[[0, -1], :] = True
    boundary[:, [0, -1]] = True
    return Shape(pts, tri, boundary=boundary.ravel())


def make_shape(kind: str, m: int, params: dict | None = None, seed: int = 0) -> Shape:
    params = dict(params or {})
    if kind == "sphere":
        return sphere(m, seed=seed, **params)
    if kind == "ellipsoid":
        if "axes" in params:
            params["axes"] = tuple(params["axes"])
        return ellipsoid(m, seed=seed, **params)
    if kind == "sheet":
        return sheet(m, seed=seed, **params)
    raise ValueError(f"unknown shape kind {kind!r}")
