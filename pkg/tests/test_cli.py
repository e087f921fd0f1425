import json
import math

import numpy as np
import pytest

from convex_trig import cli
from convex_trig.io import read_csv


@pytest.fixture
def files(tmp_path):
    def write(name, data):
        p = tmp_path / name
        p.write_text(data if isinstance(data, str) else json.dumps(data))
        return str(p)
    return {
        "dir": tmp_path,
        "square": write("square.json", {"type": "polygon", "vertices": [[1, -1], [1, 1], [-1, 1], [-1, -1]]}),
        "circle": write("circle.json", {"type": "ellipse", "a": 1, "b": 1}),
        "ellipse": write("ellipse.json", {"type": "ellipse", "a": 1, "b": 2}),
        "bad": write("bad.json", "{not json"),
        "collinear": write("col.json", {"type": "polygon", "vertices": [[0, 0], [1, 1], [2, 2]]}),
        "triangle": write("tri.json", {"type": "polygon", "vertices": [[1, 1], [-1, 0], [1, -1]]}),
    }


def run(*argv):
    return cli.main([str(a) for a in argv])


def _num(x):
    try:
        return float(x)
    except ValueError:
        return x


def rows(path):
    header, data = read_csv(path)
    return header, [[_num(x) for x in r] for r in data]


def test_parse_values():
    assert np.array_equal(cli.parse_values("0:8:1"), np.arange(8.0))
    assert np.array_equal(cli.parse_values("1,2.5"), [1.0, 2.5])
    assert len(cli.parse_values("0:1:0.1")) == 10


def test_trig_square(files):
    out = files["dir"] / "t.csv"
    assert run("trig", files["square"], "--theta", "0:8:1", "--out", out) == 0
    header, data = rows(out)
    assert header == ["theta", "cos", "sin", "theta_polar_lo", "theta_polar_hi", "dcos_right", "dsin_right"]
    assert len(data) == 8
    assert data[1][:3] == [1.0, 1.0, 1.0]
    assert (files["dir"] / "t.csv.manifest.json").exists()


def test_trig_circle_and_ellipse(files):
    out = files["dir"] / "c.csv"
    run("trig", files["circle"], "--theta", "0", "--out", out)
    assert rows(out)[1][0] == [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]
    run("trig", files["ellipse"], "--theta", repr(math.pi), "--out", out)
    r = rows(out)[1][0]
    assert r[1] == pytest.approx(0.0, abs=1e-15) and r[2] == 2.0


def test_error_exit_codes(files, capsys):
    out = files["dir"] / "x.csv"
    assert run("trig", files["bad"], "--theta", "0", "--out", out) == 2
    assert run("trig", files["dir"] / "missing.json", "--theta", "0", "--out", out) == 2
    assert run("polygon-tables", files["collinear"], "--out", out) == 3
    assert "orientation" in capsys.readouterr().err
    assert run("polygon-tables", files["circle"], "--out", out) == 4
    assert run("pendulum", files["square"], "--theta-polar", 2, "--omega", 2, "--T", 10, "--out", out) == 5
    assert "dwell policy" in capsys.readouterr().err
    assert run("extremal", "heisenberg", files["square"], "--H", -1, "--q", 1, "--T", 1, "--out", out) == 6
    assert run("extremal", "cartan", files["square"], "--H", -1, "--q", 1, "--T", 1, "--out", out) == 6


def test_polygon_tables(files, capsys):
    out = files["dir"] / "p.csv"
    assert run("polygon-tables", files["square"], "--out", out) == 0
    text = capsys.readouterr().out
    assert "period 8" in text and "polar_period 4" in text
    run("polygon-tables", files["triangle"], "--out", out)
    header, data = rows(out)
    P = np.array([[r[1], r[2]] for r in data])
    Q = np.array([[r[5], r[6]] for r in data])
    assert np.allclose(np.sum(P * Q, axis=1), 1.0, atol=1e-14)


def test_area_and_polar(files, capsys):
    run("area", files["square"])
    assert "area 4\nperiod 8\npolar_area 2\npolar_period 4" in capsys.readouterr().out
    out = files["dir"] / "pol.json"
    run("polar", files["square"], "--out", out)
    spec = json.loads(out.read_text())
    assert spec["type"] == "polygon" and len(spec["vertices"]) == 4


def test_pendulum_outputs(files):
    out = files["dir"] / "pen.csv"
    svg = files["dir"] / "pen.svg"
    assert run("pendulum", files["circle"], "--theta-polar", repr(math.pi), "--omega", 0, "--T", 3,
               "--samples", 4, "--out", out) == 0
    _, data = rows(out)
    assert all(r[1] == math.pi and r[2] == 0.0 for r in data)
    assert run("pendulum", files["square"], "--theta-polar", 0, "--omega", 1, "--T", 6,
               "--out", out, "--portrait", svg) == 0
    assert svg.read_text().startswith("<svg")
    _, data = rows(out)
    assert any(r[6] == "switch" for r in data)
    assert run("pendulum", files["square"], "--theta-polar", 2, "--omega", 2, "--T", 10,
               "--policy", "dwell:1", "--out", out) == 0
    _, data = rows(out)
    assert any(r[6] == "separatrix_arrival" for r in data)


def test_portrait(files, capsys):
    out = files["dir"] / "por.svg"
    csv = files["dir"] / "por.csv"
    assert run("portrait", files["square"], "--levels=-0.5,0,1,2", "--out", out, "--csv", csv) == 0
    text = capsys.readouterr().out
    assert "H 1 separatrix" in text and "H 2 rotation" in text
    assert 'stroke="#c00"' in out.read_text()


def test_extremal_and_verify(files, capsys):
    out = files["dir"] / "h.csv"
    assert run("extremal", "heisenberg", files["square"], "--H", 1, "--q", 1, "--T", 4, "--n", 5,
               "--out", out) == 0
    assert "conjugate_time 4" in capsys.readouterr().out
    header, data = rows(out)
    assert header[:4] == ["t", "x1", "x2", "z"]
    assert [r[3] for r in data] == [0, 0, 1, 2, 2]
    run("extremal", "heisenberg", files["circle"], "--H", 1, "--q", 1, "--T", repr(2 * math.pi),
        "--n", 50, "--steps", 20000, "--out", out, "--verify")
    err = float(capsys.readouterr().out.split("oracle_sup_error")[1])
    assert err <= 1e-6


def test_extremal_spec_file(files):
    spec = files["dir"] / "spec.json"
    spec.write_text(json.dumps({"H": 1, "q": 0.5, "omega0": 0.3, "x0": [0, 0, 0, 0, 0]}))
    out = files["dir"] / "c.csv"
    assert run("extremal", "cartan", files["square"], "--spec", spec, "--T", 2, "--n", 11,
               "--out", out) == 0
    header, data = rows(out)
    assert header[-1] == "C" and len(data) == 11
    bad = files["dir"] / "badspec.json"
    bad.write_text("[1, 2]")
    assert run("extremal", "cartan", files["square"], "--spec", bad, "--T", 2, "--out", out) == 2


def test_singular_report(files, capsys):
    out = files["dir"] / "s.csv"
    assert run("extremal", "cartan", files["square"], "--H", 0, "--q", 1, "--T", 1, "--out", out) == 0
    assert "singular configuration" in capsys.readouterr().out
    rep = json.loads((files["dir"] / "s.csv.singular.json").read_text())
    assert rep["system"] == "cartan" and rep["controls"] == [[-1.0, 0.0], [1.0, 0.0]]
    assert not out.exists()


def test_verify_subcommands(files, capsys):
    assert run("verify", "sector", files["square"], "--theta", "0:8:0.5", "--samples", 100000) == 0
    assert float(capsys.readouterr().out.split()[-1]) < 1e-7
    assert run("verify", "ode", "engel", files["square"], "--H", 1, "--q", 1, "--omega0", 0.3,
               "--T", 3, "--steps", 20000) == 0
    assert float(capsys.readouterr().out.split()[-1]) < 1e-6


def test_manifest_and_replay(files):
    out = files["dir"] / "t.csv"
    mdir = files["dir"] / "manifests"
    run("--manifest-dir", mdir, "--seed", 7, "trig", files["square"], "--theta", "0:4:0.5", "--out", out)
    man = json.loads((mdir / "t.csv.manifest.json").read_text())
    for key in ("command", "argv", "body", "parameters", "tolerances", "outputs", "version",
                "duration_seconds"):
        assert key in man
    assert man["parameters"]["seed"] == 7
    first = out.read_bytes()
    out.unlink()
    assert run("replay", mdir / "t.csv.manifest.json") == 0
    assert out.read_bytes() == first
