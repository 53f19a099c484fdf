"""
Command-line interface.

Exit codes: 0 for convergence (C1-C4), 2 when only the iteration cap (C5)
stopped the run, 1 for any error including bad flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .admm import SolverConfig, register, register_multiframe
from .io import _fmt, load_config, read_shape, write_result, write_shape, _write_rows
from .strain import strain_field
from .synth import make_shape

log = logging.getLogger("diffeoflow")

EXIT_OK, EXIT_ERROR, EXIT_CAP = 0, 1, 2
SWEEP_COLUMNS = ("tau_v", "tau_s", "final_distance", "final_distance_pct", "primal_abs",
                 "primal_rel", "dual_abs", "dual_rel", "runtime_s", "status")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for the iteration cap here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _add_overrides(p):
    g = p.add_argument_group("parameter overrides")
    g.add_argument("--n", type=int, help="number of time cells")
    g.add_argument("--alpha", type=float, help="distance weight")
    g.add_argument("--rho", type=float, help="splitting parameter")
    g.add_argument("--tau-v", type=float, help="velocity bandwidth scale")
    g.add_argument("--tau-s", type=float, help="distance bandwidth scale")
    g.add_argument("--max-iter", type=int, help="iteration cap (C5)")
    g.add_argument("--seed", type=int, help="seed echoed into the configuration")


def _config(args) -> SolverConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SolverConfig()
    updates = {k: v for k, v in {
        "n": args.n, "alpha": args.alpha, "rho": args.rho, "tau_v": args.tau_v,
        "tau_s": args.tau_s, "n_iter": args.max_iter, "seed": args.seed,
    }.items() if v is not None}
    return replace(cfg, **updates) if updates else cfg


def _exit_for(result) -> int:
    if result.termination == "error":
        print(f"error: {result.message}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_CAP if result.termination == "C5" else EXIT_OK


def _report(result, out):
    print(f"{result.termination} after {result.iterations} iterations; censored Hausdorff "
          f"{result.initial_hausdorff:.6g} -> {result.final_hausdorff:.6g}; results in {out}")


def cmd_register(args) -> int:
    cfg = _config(args)
    x0, x1 = read_shape(args.template, fan=args.fan), read_shape(args.target, fan=args.fan)
    result = register(x0, x1, cfg)
    write_result(result, args.out)
    _report(result, args.out)
    return _exit_for(result)


def cmd_multiframe(args) -> int:
    if len(args.frames) == 1 and Path(args.frames[0]).is_dir():
        d = Path(args.frames[0])
        paths = sorted(p for p in d.iterdir() if p.suffix.lower() in (".csv", ".obj"))
    else:
        paths = [Path(p) for p in args.frames]
    if len(paths) < 2:
        raise CliError("multi-frame registration needs at least two frames")
    frames = [read_shape(p, fan=args.fan) for p in paths]
    cfg = _config(args)
    result = register_multiframe(frames, cfg, n=args.n)
    write_result(result, args.out)
    _report(result, args.out)
    return _exit_for(result)


def cmd_sweep(args) -> int:
    base = replace(_config(args), stopping=("C5",), n_iter=args.iters_fixed)
    x0, x1 = read_shape(args.template, fan=args.fan), read_shape(args.target, fan=args.fan)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for tv in args.tau_v_list:
        for ts in args.tau_s_list:
            t0 = time.perf_counter()
            try:
                r = register(x0, x1, replace(base, tau_v=tv, tau_s=ts))
                status = r.termination if r.termination != "error" else f"error: {r.message}"
                last = r.log[-1] if r.log else {}
                pct = 100.0 * r.final_hausdorff / r.initial_hausdorff if r.initial_hausdorff else float("nan")
                vals = [r.final_hausdorff, pct, last.get("primal_norm", float("nan")),
                        last.get("primal_rel", float("nan")), last.get("dual_norm", float("nan")),
                        last.get("dual_rel", float("nan"))]
                if args.cells:
                    write_result(r, out / f"tau_v={tv:g}_tau_s={ts:g}")
            except Exception as exc:  # record and continue with the next cell
                status = f"error: {type(exc).__name__}: {exc}"
                vals = [float("nan")] * 6
            runtime = time.perf_counter() - t0
            rows.append([_fmt(tv), _fmt(ts)] + [_fmt(v) for v in vals] + [_fmt(runtime), status])
            print(f"tau_v={tv:g} tau_s={ts:g}: {status} final distance {_fmt(vals[0])}", flush=True)
    _write_rows(out / "sweep.csv", SWEEP_COLUMNS, rows)
    return EXIT_ERROR if any(r[-1].startswith("error") for r in rows) else EXIT_OK


def cmd_synth(args) -> int:
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise CliError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise CliError("--params must be a JSON object")
    try:
        shape = make_shape(args.shape, args.m, params, seed=args.seed)
    except TypeError as exc:
        raise CliError(f"invalid parameters for {args.shape}: {exc}") from None
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_shape(shape, args.out)
    print(f"wrote {shape.m} points, {0 if shape.triangles is None else len(shape.triangles)} "
          f"triangles to {args.out}")
    return EXIT_OK


def cmd_strain(args) -> int:
    template = read_shape(args.template, fan=args.fan)
    deformed = read_shape(args.deformed, fan=args.fan)
    field = strain_field(template, deformed.points)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "strain.csv", ["vertex_index", "p_iso"],
                ([k, _fmt(v)] for k, v in enumerate(field.per_vertex_p)))
    _write_rows(out / "strain_triangles.csv", ["triangle_index", "q_iso", "degenerate"],
                ([t, _fmt(q), int(d)] for t, (q, d) in
                 enumerate(zip(field.per_triangle_q, field.degenerate))))
    print(f"max p_iso {field.per_vertex_p.max():.6g}; results in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="diffeoflow", description="Diffeomorphic matching of 3D point-cloud surfaces.")
    p.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def shapes_in(q, *names):
        for name in names:
            q.add_argument(f"--{name}", required=True, help=f"{name} shape file (.csv or .obj)")
        q.add_argument("--fan", action="store_true", help="fan-triangulate polygonal obj faces")

    r = sub.add_parser("register", help="register a template onto a target")
    shapes_in(r, "template", "target")
    r.add_argument("--config", help="JSON configuration (flat or a summary.json)")
    r.add_argument("--out", required=True, help="output directory")
    _add_overrides(r)
    r.set_defaults(func=cmd_register)

    m = sub.add_parser("multiframe", help="register through a time series of shapes")
    m.add_argument("--frames", nargs="+", required=True,
                   help="frame files in order, or one directory (files sorted by name)")
    m.add_argument("--fan", action="store_true", help="fan-triangulate polygonal obj faces")
    m.add_argument("--config", help="JSON configuration (flat or a summary.json)")
    m.add_argument("--out", required=True, help="output directory")
    _add_overrides(m)
    m.set_defaults(func=cmd_multiframe)

    s = sub.add_parser("sweep", help="bandwidth sweep with a fixed iteration count")
    shapes_in(s, "template", "target")
    s.add_argument("--tau-v-list", type=_float_list, required=True, help='e.g. "3,4,6,8"')
    s.add_argument("--tau-s-list", type=_float_list, required=True, help='e.g. "0.75,1,2,4,6"')
    s.add_argument("--iters-fixed", type=int, default=100, help="iterations per cell (default 100)")
    s.add_argument("--config", help="JSON configuration (flat or a summary.json)")
    s.add_argument("--out", required=True, help="output directory for sweep.csv")
    s.add_argument("--cells", action="store_true", help="also write full results per cell")
    _add_overrides(s)
    s.set_defaults(func=cmd_sweep)

    y = sub.add_parser("synth", help="generate a synthetic meshed point cloud")
    y.add_argument("--shape", required=True, choices=("sphere", "ellipsoid", "sheet"))
    y.add_argument("--m", type=int, default=200, help="number of points (default 200)")
    y.add_argument("--params", help='JSON object, e.g. \'{"axes": [1.3, 1.0, 0.8]}\'')
    y.add_argument("--seed", type=int, default=0, help="jitter seed (default 0)")
    y.add_argument("--out", required=True, help="output file (.csv or .obj)")
    y.set_defaults(func=cmd_synth)

    t = sub.add_parser("strain", help="isotropic strain of a deformed template")
    t.add_argument("--template", required=True, help="meshed template shape file")
    t.add_argument("--deformed", required=True, help="deformed points (same order)")
    t.add_argument("--fan", action="store_true", help="fan-triangulate polygonal obj faces")
    t.add_argument("--out", required=True, help="output directory")
    t.set_defaults(func=cmd_strain)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, CliError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
