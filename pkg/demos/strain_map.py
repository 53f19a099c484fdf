"""Isotropic strain of a registration: where did the template stretch or shrink?

Run: python demos/strain_map.py
"""

import numpy as np

from diffeoflow import SolverConfig, register, strain_field
from diffeoflow.synth import ellipsoid, sphere

template = sphere(200)
result = register(template, ellipsoid(200, (1.3, 1.0, 0.8)), SolverConfig())
field = strain_field(template, result.x[-1])
p = field.per_vertex_p

print(f"p_iso: mean {p.mean():.4f}, max {p.max():.4f}")
# at the pole of one axis the surface area scales by the product of the other two:
# about 0.8 at the x pole, 1.04 at the y pole, 1.3 at the z pole
for axis, name in enumerate("xyz"):
    tip = np.argmax(np.abs(template.points[:, axis]))
    q = field.per_triangle_q[np.any(template.triangles == tip, axis=1)].mean()
    print(f"near the {name} pole: mean area ratio sqrt {q:.3f}")
