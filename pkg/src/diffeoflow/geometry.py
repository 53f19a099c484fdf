"""
Shape containers, edge statistics and censored Hausdorff distances.

A :class:`Shape` is a point cloud in R^3 with an optional triangle mesh,
optional boundary flags and per-point measure weights (uniform by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

__all__ = [
    "GeometryError",
    "Shape",
    "HausdorffReport",
    "unique_edges",
    "knn_edge_graph",
    "mean_edge_length",
    "nearest_distances",
    "hausdorff",
    "censored_hausdorff",
]

DEFAULT_PERCENTILE = 0.95
FALLBACK_K = 6


class GeometryError(ValueError):
    """Raised for invalid shapes or missing connectivity."""


@dataclass(frozen=True, eq=False)
class Shape:
    """Discretized surface.

    Parameters
    ----------
    points : (m, 3) array_like
        Point coordinates.
    triangles : (t, 3) array_like of int, optional
        Zero-based vertex indices of mesh triangles.
    boundary : (m,) array_like of bool, optional
        Boundary flags.
    weights : (m,) array_like, optional
        Nonnegative measure weights summing to one. Uniform if omitted.
    leaflet : (m,) array_like of int, optional
        Free-form integer label per point (carried through file I/O only).
    """

    points: np.ndarray
    triangles: np.ndarray | None = None
    boundary: np.ndarray | None = None
    weights: np.ndarray = field(default=None)
    leaflet: np.ndarray | None = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
            raise GeometryError(f"points must have shape (m, 3) with m >= 1, got {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise GeometryError("points contain non-finite coordinates")
        m = pts.shape[0]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

        if self.triangles is not None:
            tri = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
            if tri.size and (tri.min() < 0 or tri.max() >= m):
                raise GeometryError("triangle index out of range")
            tri.setflags(write=False)
            object.__setattr__(self, "triangles", tri)

        if self.boundary is not None:
            bnd = np.array(self.boundary, dtype=bool).reshape(-1)
            if bnd.shape[0] != m:
                raise GeometryError("boundary flags must have one entry per point")
            bnd.setflags(write=False)
            object.__setattr__(self, "boundary", bnd)

        if self.leaflet is not None:
            lf = np.array(self.leaflet, dtype=np.int64).reshape(-1)
            if lf.shape[0] != m:
                raise GeometryError("leaflet labels must have one entry per point")
            lf.setflags(write=False)
            object.__setattr__(self, "leaflet", lf)

        if self.weights is None:
            w = np.full(m, 1.0 / m)
        else:
            w = np.array(self.weights, dtype=float).reshape(-1)
            if w.shape[0] != m:
                raise GeometryError("weights must have one entry per point")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise GeometryError("weights must be finite and nonnegative")
            if abs(w.sum() - 1.0) > 1e-12:
                raise GeometryError(f"weights must sum to 1 (sum = {w.sum()!r})")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def has_mesh(self) -> bool:
        return self.triangles is not None and self.triangles.shape[0] > 0

    def with_points(self, points) -> "Shape":
        """Same connectivity and annotations, new coordinates."""
        return Shape(points, self.triangles, self.boundary, self.weights, self.leaflet)

    def __eq__(self, other):
        if not isinstance(other, Shape):
            return NotImplemented

        def same(a, b):
            if a is None or b is None:
                return a is None and b is None
            return a.shape == b.shape and np.array_equal(a, b)

        return (same(self.points, other.points) and same(self.triangles, other.triangles)
                and same(self.boundary, other.boundary) and same(self.weights, other.weights)
                and same(self.leaflet, other.leaflet))

    __hash__ = None


@dataclass(frozen=True)
class HausdorffReport:
    value: float
    percentile: float
    directed_ab: float
    directed_ba: float


def _as_points(x) -> np.ndarray:
    if isinstance(x, Shape):
        return x.points
    pts = np.asarray(x, dtype=float)
    return pts.reshape(-1, 3)


def unique_edges(triangles) -> np.ndarray:
    """Unique undirected edges ``(i, j)`` with ``i < j`` of a triangle list."""
    tri = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e = np.sort(e, axis=1)
    e = e[e[:, 0] != e[:, 1]]
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    return np.unique(e, axis=0)


def knn_edge_graph(shape, k: int) -> np.ndarray:
    """Symmetric k-nearest-neighbour edge set.

    An edge ``(i, j)``, ``i < j``, is present if either endpoint lists the
    other among its ``k`` nearest neighbours. Ties in distance are broken by
    the lower index. Brute force, O(m^2) memory.

    Returns
    -------
    (e, 2) ndarray of int, sorted lexicographically.
    """
    pts = _as_points(shape)
    m = pts.shape[0]
    if not 1 <= k < m:
        raise GeometryError(f"knn_edge_graph requires m > k >= 1 (m={m}, k={k})")
    d2 = np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    # stable sort keeps index order among equal distances
    nbrs = np.argsort(d2, axis=1, kind="stable")[:, :k]
    rows = np.repeat(np.arange(m), k)
    e = np.sort(np.stack([rows, nbrs.ravel()], axis=1), axis=1)
    return np.unique(e, axis=0)


def mean_edge_length(shape: Shape, allow_fallback: bool = True, k: int = FALLBACK_K) -> float:
    """Mean Euclidean length of the unique mesh edges.

    Without a triangle mesh the symmetric ``k``-NN graph is used instead
    (``k`` is clipped to ``m - 1``), unless ``allow_fallback`` is false.

    Raises
    ------
    GeometryError
        If no edges are available ("no connectivity").
    """
    pts = shape.points
    if shape.has_mesh:
        edges = unique_edges(shape.triangles)
    elif allow_fallback and shape.m > 1:
        edges = knn_edge_graph(pts, min(k, shape.m - 1))
    else:
        edges = np.empty((0, 2), dtype=np.int64)
    if edges.shape[0] == 0:
        raise GeometryError("no connectivity: shape has no edges to measure")
    return float(np.mean(np.linalg.norm(pts[edges[:, 0]] - pts[edges[:, 1]], axis=1)))


def nearest_distances(a, b) -> np.ndarray:
    """For each point of ``a`` the Euclidean distance to the closest point of ``b``."""
    pa, pb = _as_points(a), _as_points(b)
    d, _ = cKDTree(pb).query(pa, k=1)
    return np.asarray(d, dtype=float)


def _nearest_rank(values: np.ndarray, percentile: float) -> float:
    s = np.sort(values)
    # guard against 0.95 * 100 = 95.00000000000001 style round-up
    idx = max(1, math.ceil(percentile * s.shape[0] - 1e-9))
    return float(s[min(idx, s.shape[0]) - 1])


def hausdorff(a, b, percentile: float = 1.0) -> HausdorffReport:
    """(Censored) Hausdorff distance between two point sets.

    Each directed term is the nearest-rank ``percentile`` quantile of the
    nearest-neighbour distances; ``percentile=1`` gives the classical
    Hausdorff distance.
    """
    if not 0.0 < percentile <= 1.0:
        raise ValueError(f"percentile must lie in (0, 1], got {percentile}")
    pa, pb = _as_points(a), _as_points(b)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        raise GeometryError("hausdorff requires non-empty point sets")
    dab = _nearest_rank(nearest_distances(pa, pb), percentile)
    dba = _nearest_rank(nearest_distances(pb, pa), percentile)
    return HausdorffReport(max(dab, dba), percentile, dab, dba)


def censored_hausdorff(a, b, percentile: float = DEFAULT_PERCENTILE) -> float:
    return hausdorff(a, b, percentile).value
