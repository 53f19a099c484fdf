"""
Text file formats for shapes, configurations and registration results.

Shapes
    ``csv``: header ``x,y,z`` optionally followed by ``leaflet``, ``boundary``
    and ``weight`` columns (in that order). A mesh, if present, follows after
    one empty line as a second table with header ``i,j,k`` (zero-based).
    ``obj``: ``v x y z`` and ``f i j k ...`` records (one-based indices,
    ``i/t/n`` forms accepted, negative indices count from the end); ``#``
    comments and blank lines are skipped.

Results (one directory per run)
    ``trajectory.csv``, ``control.csv``: ``time_index,point_index,x,y,z``.
    ``convergence.csv``: one row per iteration, see :data:`LOG_COLUMNS`.
    ``strain.csv``: ``vertex_index,p_iso``.
    ``timings.csv``: measured subproblem wall times per iteration.
    ``summary.json``: configuration echo, resolved parameters, outcome.

Floats are written with 17 significant digits, so every value reads back
bit-identically. All files are UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .admm import LOG_COLUMNS, RegistrationResult, SolverConfig
from .geometry import GeometryError, Shape
from .strain import strain_field

__all__ = [
    "ShapeFormatError",
    "read_shape",
    "write_shape",
    "shape_to_string",
    "shape_from_string",
    "write_result",
    "read_table",
    "load_config",
    "summary_dict",
]

SHAPE_FORMATS = ("csv", "obj")


class ShapeFormatError(ValueError):
    """Malformed shape file; the message carries the line number."""


def _fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def _format_of(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
    elif isinstance(path, (str, os.PathLike)):
        fmt = Path(path).suffix.lower().lstrip(".")
    if fmt not in SHAPE_FORMATS:
        raise ValueError(f"unknown shape format {fmt!r}; expected one of {SHAPE_FORMATS}")
    return fmt


# --------------------------------------------------------------------- csv

_CSV_OPTIONAL = ("leaflet", "boundary", "weight")


def _parse_csv(lines) -> Shape:
    it = iter(enumerate(lines, start=1))
    try:
        lineno, header = next(it)
    except StopIteration:
        raise ShapeFormatError("line 1: empty file") from None
    cols = [c.strip() for c in header.strip().split(",")]
    if cols[:3] != ["x", "y", "z"]:
        raise ShapeFormatError(f"line {lineno}: header must start with x,y,z, got {header.strip()!r}")
    extra = cols[3:]
    if extra != [c for c in _CSV_OPTIONAL if c in extra] or len(set(extra)) != len(extra):
        raise ShapeFormatError(f"line {lineno}: unexpected columns {extra}")

    pts, leaflet, boundary, weight = [], [], [], []
    tris = None
    for lineno, line in it:
        s = line.strip()
        if not s:
            tris = []
            break
        parts = s.split(",")
        if len(parts) != len(cols):
            raise ShapeFormatError(f"line {lineno}: expected {len(cols)} fields, got {len(parts)}")
        try:
            pts.append([float(p) for p in parts[:3]])
            rec = dict(zip(extra, parts[3:]))
            if "leaflet" in rec:
                leaflet.append(int(rec["leaflet"]))
            if "boundary" in rec:
                b = int(rec["boundary"])
                if b not in (0, 1):
                    raise ValueError("boundary flag must be 0 or 1")
                boundary.append(bool(b))
            if "weight" in rec:
                weight.append(float(rec["weight"]))
        except ValueError as exc:
            raise ShapeFormatError(f"line {lineno}: {exc}") from None

    if tris is not None:
        try:
            lineno, header = next(it)
        except StopIteration:
            raise ShapeFormatError(f"line {lineno}: expected face header i,j,k after blank line") from None
        if [c.strip() for c in header.strip().split(",")] != ["i", "j", "k"]:
            raise ShapeFormatError(f"line {lineno}: face header must be i,j,k")
        for lineno, line in it:
            s = line.strip()
            if not s:
                continue
            parts = s.split(",")
            if len(parts) != 3:
                raise ShapeFormatError(f"line {lineno}: a face needs 3 indices")
            try:
                tris.append([int(p) for p in parts])
            except ValueError as exc:
                raise ShapeFormatError(f"line {lineno}: {exc}") from None

    if not pts:
        raise ShapeFormatError("no points")
    try:
        return Shape(
            np.array(pts),
            np.array(tris, dtype=np.int64).reshape(-1, 3) if tris else None,
            boundary=np.array(boundary) if "boundary" in extra else None,
            weights=np.array(weight) if "weight" in extra else None,
            leaflet=np.array(leaflet) if "leaflet" in extra else None,
        )
    except GeometryError as exc:
        raise ShapeFormatError(str(exc)) from None


def _uniform(w) -> bool:
    return bool(np.all(w == 1.0 / w.shape[0]))


def _dump_csv(shape: Shape) -> str:
    cols = ["x", "y", "z"]
    if shape.leaflet is not None:
        cols.append("leaflet")
    if shape.boundary is not None:
        cols.append("boundary")
    write_w = not _uniform(shape.weights)
    if write_w:
        cols.append("weight")
    out = [",".join(cols)]
    for k in range(shape.m):
        row = [_fmt(c) for c in shape.points[k]]
        if shape.leaflet is not None:
            row.append(str(int(shape.leaflet[k])))
        if shape.boundary is not None:
            row.append("1" if shape.boundary[k] else "0")
        if write_w:
            row.append(_fmt(shape.weights[k]))
        out.append(",".join(row))
    if shape.triangles is not None and shape.triangles.shape[0]:
        out.append("")
        out.append("i,j,k")
        out.extend(",".join(str(int(i)) for i in t) for t in shape.triangles)
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------- obj

def _obj_index(tok: str, m: int, lineno: int) -> int:
    head = tok.split("/")[0]
    try:
        i = int(head)
    except ValueError:
        raise ShapeFormatError(f"line {lineno}: bad face index {tok!r}") from None
    if i == 0:
        raise ShapeFormatError(f"line {lineno}: face indices are 1-based")
    return i - 1 if i > 0 else m + i


def _parse_obj(lines, fan: bool = False) -> Shape:
    pts, faces = [], []
    for lineno, line in enumerate(lines, start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        parts = s.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) != 4:
                raise ShapeFormatError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                pts.append([float(p) for p in parts[1:]])
            except ValueError as exc:
                raise ShapeFormatError(f"line {lineno}: {exc}") from None
        elif tag == "f":
            idx = [_obj_index(t, len(pts), lineno) for t in parts[1:]]
            if len(idx) < 3:
                raise ShapeFormatError(f"line {lineno}: a face needs at least 3 vertices")
            if len(idx) > 3 and not fan:
                raise ShapeFormatError(
                    f"line {lineno}: {len(idx)}-gon face; enable fan triangulation to accept it")
            faces.extend([idx[0], idx[i], idx[i + 1]] for i in range(1, len(idx) - 1))
        else:
            raise ShapeFormatError(f"line {lineno}: unsupported record {tag!r}")
    if not pts:
        raise ShapeFormatError("no vertices")
    tri = np.array(faces, dtype=np.int64).reshape(-1, 3) if faces else None
    if tri is not None and (tri.min() < 0 or tri.max() >= len(pts)):
        raise ShapeFormatError("face index out of range")
    return Shape(np.array(pts), tri)


def _dump_obj(shape: Shape) -> str:
    out = [f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}" for p in shape.points]
    if shape.triangles is not None:
        out.extend(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}" for t in shape.triangles)
    return "\n".join(out) + "\n"


# ------------------------------------------------------------- shape API

def shape_from_string(text: str, fmt: str, fan: bool = False) -> Shape:
    lines = text.splitlines()
    return _parse_csv(lines) if fmt == "csv" else _parse_obj(lines, fan=fan)


def shape_to_string(shape: Shape, fmt: str) -> str:
    if fmt == "obj" and (shape.boundary is not None or shape.leaflet is not None
                         or not _uniform(shape.weights)):
        raise ValueError("obj files cannot carry boundary flags, labels or weights; use csv")
    return _dump_csv(shape) if fmt == "csv" else _dump_obj(shape)


def read_shape(source, fmt: str | None = None, fan: bool = False) -> Shape:
    """Read a shape from a path or text stream.

    ``fmt`` defaults to the file suffix. ``fan=True`` accepts polygonal obj
    faces and splits them into triangle fans.
    """
    fmt = _format_of(source, fmt)
    if hasattr(source, "read"):
        return shape_from_string(source.read(), fmt, fan)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return shape_from_string(text, fmt, fan)
    except ShapeFormatError as exc:
        raise ShapeFormatError(f"{path}: {exc}") from None


def write_shape(shape: Shape, target, fmt: str | None = None) -> None:
    fmt = _format_of(target, fmt)
    text = shape_to_string(shape, fmt)
    if hasattr(target, "write"):
        target.write(text)
        return
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------- results

def _write_rows(path: Path, header, rows) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return _fmt(v)


def _trajectory_rows(arr):
    for j, block in enumerate(arr):
        for k, p in enumerate(block):
            yield [j, k, _fmt(p[0]), _fmt(p[1]), _fmt(p[2])]


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if not math.isfinite(v) else v
    if isinstance(v, np.integer):
        return int(v)
    return v


def log_columns(result: RegistrationResult) -> list:
    extra = [k for k in (result.log[0] if result.log else {}) if k not in LOG_COLUMNS]
    return list(LOG_COLUMNS) + extra


def summary_dict(result: RegistrationResult) -> dict:
    r = result.resolved
    return _jsonable({
        "config": result.config.to_dict(),
        "resolved": {
            "sigma_v": r["sigma_v"],
            "sigma_s": r["sigma_s"],
            "sigma_s_frames": r["sigma_s_frames"],
            "alpha_effective": r.get("alpha_effective"),
            "eps_haus": r["eps_haus"],
            "h": r["h"],
            "kinetic_scale": r["kinetic_scale"],
            "mean_edge_template": r["mean_edge_template"],
            "mean_edge_target": r["mean_edge_target"],
            "data_blocks": result.data_blocks,
        },
        "termination": result.termination,
        "fired": list(result.fired),
        "iterations": result.iterations,
        "message": result.message,
        "metrics": {
            "initial_hausdorff": result.initial_hausdorff,
            "final_hausdorff": result.final_hausdorff,
            "final_hausdorff_pct": 100.0 * result.final_hausdorff / result.initial_hausdorff
            if result.initial_hausdorff > 0 else None,
            "final_hausdorff_rollout": result.final_hausdorff_rollout,
            "kinetic_energy": result.kinetic_energy,
            "primal_norm": result.log[-1]["primal_norm"] if result.log else None,
            "primal_rel": result.log[-1]["primal_rel"] if result.log else None,
            "dual_norm": result.log[-1]["dual_norm"] if result.log else None,
            "dual_rel": result.log[-1]["dual_rel"] if result.log else None,
            "frozen_vs_faithful_max_abs": r.get("frozen_vs_faithful_max_abs"),
        },
        "runtime_s": result.runtime_s,
    })


def write_result(result: RegistrationResult, out_dir) -> dict:
    """Write all result files into ``out_dir`` (created if needed).

    Returns a mapping from file role to path.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: {exc.strerror or exc}") from exc
    paths = {name: out / f"{name}.csv" for name in
             ("trajectory", "control", "convergence", "strain", "timings")}
    paths["summary"] = out / "summary.json"

    header = ["time_index", "point_index", "x", "y", "z"]
    _write_rows(paths["trajectory"], header, _trajectory_rows(result.x))
    # pad to n+1 blocks: the last control never acts
    a = np.concatenate([result.a, np.zeros((1,) + result.a.shape[1:])])
    _write_rows(paths["control"], header, _trajectory_rows(a))

    cols = log_columns(result)
    _write_rows(paths["convergence"], cols,
                ([_cell(row[c]) for c in cols] for row in result.log))
    _write_rows(paths["timings"], ["iter", "t_kinetic_s", "t_distance_s"],
                ([d["iter"], _fmt(d["t_kinetic_s"]), _fmt(d["t_distance_s"])]
                 for d in result.diagnostics))

    if result.template.has_mesh:
        p = strain_field(result.template, result.x[-1]).per_vertex_p
        _write_rows(paths["strain"], ["vertex_index", "p_iso"],
                    ([k, _fmt(v)] for k, v in enumerate(p)))
    else:
        del paths["strain"]

    text = json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n"
    try:
        paths["summary"].write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"{paths['summary']}: {exc.strerror or exc}") from exc
    return paths


def read_table(path) -> dict:
    """Read a result CSV into a dict of numpy columns (ints where integral)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for i, name in enumerate(header):
        vals = [r[i] for r in body]
        try:
            cols[name] = np.array([int(v) for v in vals], dtype=np.int64)
        except ValueError:
            try:
                cols[name] = np.array([float(v) for v in vals])
            except ValueError:
                cols[name] = np.array(vals, dtype=object)
    return cols


def load_config(source) -> SolverConfig:
    """Solver configuration from JSON: a flat field mapping or a ``summary.json``."""
    if isinstance(source, dict):
        d = source
    else:
        with open(source, encoding="utf-8") as fh:
            d = json.load(fh)
    if "config" in d and isinstance(d["config"], dict):
        d = d["config"]
    return SolverConfig.from_dict(d)
