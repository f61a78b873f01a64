import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegoutm import cli
from szegoutm.cli import ConfigError, RunConfig, parse_args, parse_complex, parse_vertices

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_parse_complex_forms():
    assert parse_complex("0,2") == 2j
    assert parse_complex("-1.5,0.5") == -1.5 + 0.5j
    assert parse_complex("3") == 3
    assert parse_complex([1, -1]) == 1 - 1j
    with pytest.raises(ConfigError):
        parse_complex("a,b")


def test_parse_vertices():
    assert parse_vertices("4,-1;0,3;-4,-1;0,0") == [4 - 1j, 3j, -4 - 1j, 0j]


@settings(max_examples=50)
@given(st.sampled_from(["ellipse-bvp", "vortex", "vortex-punctured", "verify"]), finite, finite,
       st.integers(1, 64), st.one_of(st.none(), st.integers(1, 500)), st.floats(0.01, 0.99))
def test_config_round_trip(problem, x, y, N, Nk, r):
    cfg = RunConfig(problem, z0=complex(x, y), N=N, N_k=Nk, r=r).validate()
    back = RunConfig.from_json(cfg.to_json())
    assert back == cfg
    assert back.to_json() == cfg.to_json()


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"problem": "verify", "colour": 1})


def test_flags_override_file(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"problem": "ellipse-bvp", "a": 3.0, "N": 8}))
    cfg = parse_args(["ellipse-bvp", "--config", str(path), "--N", "12"])
    assert cfg.a == 3.0 and cfg.N == 12


def test_file_for_other_problem(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"problem": "vortex"}))
    with pytest.raises(ConfigError):
        parse_args(["ellipse-bvp", "--config", str(path)])


def test_exit_config_error(capsys):
    assert cli.main(["ellipse-bvp", "--a", "1", "--b", "2"]) == 2
    assert json.loads(capsys.readouterr().err)["kind"] == "config_error"
    assert cli.main(["nonsense"]) == 2


def test_exit_numerical_failure(tmp_path, capsys):
    code = cli.main(["ellipse-bvp", "--N", "8", "--N_k", "5", "--out", str(tmp_path)])
    assert code == 3
    assert json.loads(capsys.readouterr().err)["kind"] == "domain"


def test_verify_suite(capsys):
    assert cli.main(["verify", "--suite", "disc-kernels"]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["pass"] and set(rep["checks"]) >= {"kernel_identity", "reproduction"}


@pytest.fixture(scope="module")
def ellipse_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ell")
    assert cli.main(["ellipse-bvp", "--a", "2", "--b", "1", "--m", "2", "--N", "16", "--out", str(out)]) == 0
    return out


def test_ellipse_outputs(ellipse_run):
    text = (ellipse_run / "ellipse_trace.csv").read_text()
    first, rest = text.split("\n", 1)
    assert first.startswith("# config ")
    cfg = json.loads(first[len("# config "):])
    assert cfg["N"] == 16 and "out" not in cfg
    rows = list(csv.reader(io.StringIO(rest)))
    assert rows[0] == ["segment", "t", "theta_or_s", "x", "y", "re_f", "im_f"]
    assert {r[0] for r in rows[1:]} == {"C1", "C2"}
    rep = json.loads((ellipse_run / "ellipse_coefficients.json").read_text())
    for key in ("problem", "geometry", "numerics", "coefficients", "residual_norm", "diagnostics", "config"):
        assert key in rep
    assert set(rep["coefficients"]) == {"C1", "C2"}
    assert {"max_global_relation_residual", "boundary_condition_residual"} <= set(rep["diagnostics"])
    assert rep["numerics"]["N"] == 16 and rep["numerics"]["r"] == 0.5


def test_ellipse_deterministic(ellipse_run, tmp_path):
    assert cli.main(["ellipse-bvp", "--a", "2", "--b", "1", "--m", "2", "--N", "16", "--out", str(tmp_path)]) == 0
    for name in ("ellipse_trace.csv", "ellipse_coefficients.json"):
        assert (tmp_path / name).read_bytes() == (ellipse_run / name).read_bytes()


def test_formats_subset(tmp_path):
    assert cli.main(["ellipse-bvp", "--N", "8", "--formats", "json", "--out", str(tmp_path)]) == 0
    assert [p.name for p in tmp_path.iterdir()] == ["ellipse_coefficients.json"]


def test_svg_and_field_writers(disc):
    import numpy as np
    import xml.etree.ElementTree as ET

    from szegoutm.apps import sample_field

    cfg = RunConfig("vortex")
    grid = sample_field(lambda z: z, disc.contour, nx=5, ny=5, map_=disc)
    rows = list(csv.reader(io.StringIO(cli.field_csv(cfg, grid).split("\n", 1)[1])))
    assert rows[0] == ["x", "y", "mask", "re_f", "im_f", "psi", "u", "v"]
    corner = rows[1]
    assert corner[2] == "0" and corner[3:] == [""] * 5
    bbox = tuple(np.float64(v) for v in (-1, 1, -1, 1))
    svg = cli.streamline_svg(cfg, disc.contour, [np.array([[0, 0], [0.5, 0.5]])], 0.2j, bbox)
    root = ET.fromstring(svg)
    ns = "{http://www.w3.org/2000/svg}"
    assert [float(v) for v in root.get("viewBox").split()] == pytest.approx([-1.1, -1.1, 2.2, 2.2])
    assert len(root.findall(ns + "polyline")) == 1 and root.find(ns + "circle") is not None
    assert json.loads(root.find(ns + "desc").text)["problem"] == "vortex"
