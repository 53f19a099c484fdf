import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from diffeoflow.admm import LOG_COLUMNS, SolverConfig, register
from diffeoflow.geometry import Shape
from diffeoflow.io import (ShapeFormatError, load_config, read_shape, read_table,
                           shape_from_string, shape_to_string, summary_dict, write_result,
                           write_shape)
from diffeoflow.synth import ellipsoid, sheet, sphere

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)

OBJ = """# unit square split in two
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0

f 1/1/1 2/2/2 3/3/3
f -4 -2 -1
"""


@given(arrays(float, st.tuples(st.integers(1, 20), st.just(3)), elements=finite))
def test_csv_round_trip_exact(points):
    s = Shape(points)
    assert shape_from_string(shape_to_string(s, "csv"), "csv") == s


@given(arrays(float, st.tuples(st.integers(3, 20), st.just(3)), elements=finite))
def test_obj_round_trip_exact(points):
    s = Shape(points, [[0, 1, 2]])
    assert shape_from_string(shape_to_string(s, "obj"), "obj") == s


def test_csv_with_annotations_and_mesh(tmp_path):
    w = np.array([0.1, 0.2, 0.3, 0.4])
    s = Shape(np.arange(12.0).reshape(4, 3), [[0, 1, 2], [1, 3, 2]],
              boundary=[1, 0, 0, 1], weights=w, leaflet=[0, 0, 1, 1])
    path = tmp_path / "s.csv"
    write_shape(s, path)
    text = path.read_text()
    assert text.splitlines()[0] == "x,y,z,leaflet,boundary,weight"
    assert "\n\ni,j,k\n" in text and "\r" not in text
    assert read_shape(path) == s
    with pytest.raises(ValueError, match="csv"):
        shape_to_string(s, "obj")


def test_sheet_round_trip(tmp_path):
    s = sheet(36)
    write_shape(s, tmp_path / "sheet.csv")
    assert read_shape(tmp_path / "sheet.csv") == s


def test_obj_parse():
    s = shape_from_string(OBJ, "obj")
    assert s.m == 4
    np.testing.assert_array_equal(s.triangles, [[0, 1, 2], [0, 2, 3]])


def test_obj_polygon_needs_fan():
    text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
    with pytest.raises(ShapeFormatError, match="line 5"):
        shape_from_string(text, "obj")
    s = shape_from_string(text, "obj", fan=True)
    np.testing.assert_array_equal(s.triangles, [[0, 1, 2], [0, 2, 3]])


@pytest.mark.parametrize("text,fmt,where", [
    ("x,y,z\n1,2,3\n1,2\n", "csv", "line 3"),
    ("x,y,z\n1,2,abc\n", "csv", "line 2"),
    ("a,b,c\n1,2,3\n", "csv", "line 1"),
    ("x,y,z,boundary\n1,2,3,7\n", "csv", "line 2"),
    ("x,y,z\n0,0,0\n\ni,j,k\n0,1\n", "csv", "line 5"),
    ("v 0 0 0\nv 1 0\n", "obj", "line 2"),
    ("v 0 0 0\nf 0 1 1\n", "obj", "line 2"),
    ("v 0 0 0\nvn 0 0 1\n", "obj", "line 2"),
    ("", "csv", "line 1"),
])
def test_errors_carry_line_numbers(text, fmt, where):
    with pytest.raises(ShapeFormatError, match=where):
        shape_from_string(text, fmt)


def test_read_errors_name_the_file(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 1 2\n")
    with pytest.raises(ShapeFormatError, match="bad.obj: line 1"):
        read_shape(p)
    with pytest.raises(OSError, match="missing.csv"):
        read_shape(tmp_path / "missing.csv")
    with pytest.raises(ValueError, match="format"):
        read_shape(tmp_path / "shape.ply")


def test_stream_io():
    buf = io.StringIO()
    write_shape(sphere(10), buf, fmt="obj")
    buf.seek(0)
    assert read_shape(buf, fmt="obj") == sphere(10)


@pytest.fixture(scope="module")
def small_result():
    return register(sphere(40), ellipsoid(40, (1.2, 1.0, 0.9)),
                    SolverConfig(n=2, n_iter=3, stopping=("C5",)))


def test_write_result_consistency(tmp_path, small_result):
    r = small_result
    paths = write_result(r, tmp_path / "out")
    assert set(paths) == {"trajectory", "control", "convergence", "strain", "timings", "summary"}
    traj = read_table(paths["trajectory"])
    assert len(traj["x"]) == 3 * 40
    xyz = np.column_stack([traj["x"], traj["y"], traj["z"]]).reshape(3, 40, 3)
    np.testing.assert_array_equal(xyz, r.x)
    ctl = read_table(paths["control"])
    a = np.column_stack([ctl["x"], ctl["y"], ctl["z"]]).reshape(3, 40, 3)
    np.testing.assert_array_equal(a[:2], r.a)
    assert np.all(a[2] == 0)
    conv = read_table(paths["convergence"])
    assert list(conv) == list(LOG_COLUMNS)
    np.testing.assert_array_equal(conv["iter"], [1, 2, 3])
    np.testing.assert_array_equal(conv["hausdorff_censored"],
                                  [row["hausdorff_censored"] for row in r.log])
    assert np.all(conv["t_kinetic_s"] == 0.0)  # reproducible mode
    summary = json.loads(paths["summary"].read_text())
    assert summary["termination"] == "C5" and summary["iterations"] == 3
    assert summary["metrics"]["final_hausdorff"] == r.final_hausdorff
    assert summary["config"]["n"] == 2
    strain = read_table(paths["strain"])
    assert len(strain["p_iso"]) == 40


def test_summary_is_strict_json(small_result):
    text = json.dumps(summary_dict(small_result), allow_nan=False)
    assert "NaN" not in text


def test_replay_from_summary(tmp_path, small_result):
    paths = write_result(small_result, tmp_path / "a")
    cfg = load_config(paths["summary"])
    assert cfg == small_result.config
    again = register(sphere(40), ellipsoid(40, (1.2, 1.0, 0.9)), cfg)
    paths2 = write_result(again, tmp_path / "b")
    assert paths["convergence"].read_bytes() == paths2["convergence"].read_bytes()
    assert paths["trajectory"].read_bytes() == paths2["trajectory"].read_bytes()


def test_load_config_flat(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"n": 4, "tau_s": 2.0}))
    assert load_config(p) == SolverConfig(n=4, tau_s=2.0)
    assert load_config({"rho": 3.0}).rho == 3.0
    with pytest.raises(ValueError):
        load_config({"bogus": 1})


def test_no_strain_without_mesh(tmp_path):
    s = Shape(sphere(30).points)
    r = register(s, s)
    paths = write_result(r, tmp_path)
    assert "strain" not in paths and not (tmp_path / "strain.csv").exists()
