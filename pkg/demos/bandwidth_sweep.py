"""Final distance after a fixed number of iterations over a small (tau_v, tau_s) grid.

Smaller distance bandwidths resolve finer mismatch, larger velocity bandwidths
give smoother but stiffer flows. Takes a few minutes at 100 iterations; pass a
smaller count as first argument for a quick look.

Run: python demos/bandwidth_sweep.py [iterations]
"""

import sys
import time
from dataclasses import replace

from diffeoflow import SolverConfig, register
from diffeoflow.synth import ellipsoid, sphere

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 100
template, target = sphere(200), ellipsoid(200, (1.3, 1.0, 0.8))
base = SolverConfig(n_iter=iters, stopping=("C5",))

print(f"{'tau_v':>6} {'tau_s':>6} {'distance':>10} {'% of initial':>13} {'seconds':>8}")
for tau_v in (4.0, 6.0):
    for tau_s in (1.0, 2.0, 6.0):
        t0 = time.perf_counter()
        r = register(template, target, replace(base, tau_v=tau_v, tau_s=tau_s))
        pct = 100 * r.final_hausdorff / r.initial_hausdorff
        print(f"{tau_v:6g} {tau_s:6g} {r.final_hausdorff:10.5f} {pct:13.1f} "
              f"{time.perf_counter() - t0:8.1f}")
