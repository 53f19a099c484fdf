"""
Isotropic strain intensity of a deformation from triangle-area ratios.

For a template triangle ``T`` and its deformed image ``T'``,
``q_iso(T) = sqrt(area(T') / area(T))``; the strain intensity is
``|q_iso - 1|``. Vertex values average the incident triangles, weighted by
their template areas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, Shape

__all__ = ["StrainField", "triangle_areas", "strain_field"]

DEGENERATE_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class StrainField:
    """Per-triangle ``q_iso`` and per-vertex ``p_iso`` values.

    Attributes
    ----------
    per_triangle_q : (t,) ndarray
        Square root of the area ratio for every template triangle.
    per_vertex_p : (m,) ndarray
        Area-weighted mean of ``|q_iso - 1|`` over incident triangles; 0 for
        vertices without incident triangles.
    degenerate : (t,) ndarray of bool
        Template triangles too small to define a ratio (their ``q`` is 1).
    """

    per_triangle_q: np.ndarray
    per_vertex_p: np.ndarray
    degenerate: np.ndarray

    @property
    def per_triangle_p(self) -> np.ndarray:
        return np.abs(self.per_triangle_q - 1.0)


def triangle_areas(points, triangles) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    t = np.asarray(triangles, dtype=np.intp)
    a, b, c = p[t[:, 0]], p[t[:, 1]], p[t[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def strain_field(template: Shape, deformed_points) -> StrainField:
    """Strain of the map ``template.points -> deformed_points`` on the template mesh."""
    if not template.has_mesh:
        raise GeometryError("strain needs a triangulated template")
    z = np.asarray(deformed_points, dtype=float)
    if z.shape != template.points.shape:
        raise GeometryError(f"deformed points have shape {z.shape}, expected {template.points.shape}")
    tri = template.triangles
    a0 = triangle_areas(template.points, tri)
    a1 = triangle_areas(z, tri)

    extent = np.ptp(template.points, axis=0).max() if template.m > 1 else 0.0
    scale2 = max(extent, 1.0) ** 2
    degenerate = a0 < DEGENERATE_AREA * scale2
    q = np.ones_like(a0)
    ok = ~degenerate
    q[ok] = np.sqrt(a1[ok] / a0[ok])

    # area-weighted vertex average; degenerate triangles carry no weight
    pt = np.abs(q - 1.0)
    wt = np.where(ok, a0, 0.0)
    num = np.zeros(template.m)
    den = np.zeros(template.m)
    for c in range(3):
        np.add.at(num, tri[:, c], wt * pt)
        np.add.at(den, tri[:, c], wt)
    p = np.zeros(template.m)
    np.divide(num, den, out=p, where=den > 0)
    return StrainField(q, p, degenerate)
