"""CLI contract: exit codes, file formats, determinism, round-trips."""

import cmath
import json
import math
import os

import numpy as np
import pytest

from qcflow import arc_from_points, linear, p_variation
from qcflow.cli import RunConfig, main
from qcflow.io import read_curve_csv


def run(argv):
    return main(argv)


def test_eval_json(tmp_path, capsys):
    assert run(["eval", "--field", "linear:1,2", "--x0", "1,0"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == {"re": 1.0, "im": 2.0}


def test_trace_spiral_closed_form(tmp_path):
    path = str(tmp_path / "spiral.csv")
    code = run([
        "trace",
        "--field", '{"kind":"linear","params":{"lambda":1,"omega":2}}',
        "--x0", "1,0",
        "--t", "0,2",
        "--out", path,
    ])
    assert code == 0
    ts, zs, _ = read_curve_csv(path)
    want = cmath.exp(2.0 * (1 + 2j))
    assert ts[-1] == pytest.approx(2.0)
    assert abs(zs[-1] - want) < 1e-6


def test_trace_degenerate_closed_orbit(tmp_path):
    path = str(tmp_path / "orbit.csv")
    assert run(["trace", "--field", "degenerate:1", "--x0", "1,0",
                "--t", "0,6.2832", "--out", path]) == 0
    _, zs, _ = read_curve_csv(path)
    assert abs(zs[-1] - zs[0]) < 1e-4


def test_trace_malformed_json_exit2_no_file(tmp_path):
    path = str(tmp_path / "never.csv")
    code = run(["trace", "--field", '{"kind":"linear","params"', "--x0", "1,0",
                "--t", "0,1", "--out", path])
    assert code == 2
    assert not os.path.exists(path)


def test_trace_solver_error_exit3(tmp_path):
    path = str(tmp_path / "never.csv")
    code = run(["trace", "--field", "linear:1,0", "--x0", "3,0",
                "--window", "0.5,2", "--out", path])
    assert code == 3
    assert not os.path.exists(path)


def test_trace_window_mode_and_svg(tmp_path):
    csv_path = str(tmp_path / "ext.csv")
    assert run(["trace", "--field", "linear:1,0", "--x0", "1,0",
                "--window", "0.5,2", "--out", csv_path]) == 0
    text = open(csv_path).read()
    assert text.startswith("t,re,im\n")
    assert "# event,hit_inner," in text and "# event,hit_outer," in text

    svg_path = str(tmp_path / "ext.svg")
    assert run(["trace", "--field", "linear:1,2", "--x0", "1,0",
                "--window", "0.5,2", "--format", "svg", "--out", svg_path]) == 0
    svg = open(svg_path).read()
    assert svg.startswith("<svg") and "polyline" in svg


def test_csv_roundtrip_p1_variation(tmp_path):
    path = str(tmp_path / "traj.csv")
    assert run(["trace", "--field", "linear:1,2", "--x0", "1,0",
                "--t", "0,1", "--out", path]) == 0
    _, zs, _ = read_curve_csv(path)
    from qcflow import integrate

    traj = integrate(linear(1.0, 2.0), 1.0, (0.0, 1.0))
    assert np.array_equal(zs, traj.points)  # 17 digits round-trip exactly
    fd = linear(1.0, 0.0)
    v_mem = p_variation(fd, arc_from_points(traj.points), 1.0).value
    v_csv = p_variation(fd, arc_from_points(zs), 1.0).value
    assert abs(v_mem - v_csv) <= 1e-12


def test_variation_command_report(tmp_path):
    traj_path = str(tmp_path / "arc.csv")
    run(["trace", "--field", "linear:1,0", "--x0", "1,0", "--t", "0,0.5",
         "--out", traj_path])
    out_path = str(tmp_path / "report.json")
    assert run(["variation", "--field", "linear:1,0", "--arc", traj_path,
                "--p", "2", "--window", "0.5,2", "--out", out_path]) == 0
    rep = json.loads(open(out_path).read())
    assert rep["p_variation"]["p"] == 2.0
    assert rep["p_variation"]["value"] > 0
    assert rep["quadratic_bound"]["ratio"] == pytest.approx(1.0, abs=1e-6)


def test_quasipolar_grid_identity_theta_matches_atan2(tmp_path):
    path = str(tmp_path / "grid.csv")
    assert run(["quasipolar", "--field", "linear:1,0", "--window", "0.5,2",
                "--grid", "6", "--out", path]) == 0
    rows = [line.split(",") for line in open(path).read().strip().splitlines()[1:]]
    for re_s, im_s, rho_s, th_s, lam_s in rows:
        z = complex(float(re_s), float(im_s))
        assert float(th_s) == pytest.approx(math.atan2(z.imag, z.real), abs=1e-6)
        assert float(rho_s) == pytest.approx(abs(z), abs=1e-12)
        assert float(lam_s) == pytest.approx(abs(z) ** 2, rel=1e-3)


def test_quasipolar_grid_deterministic_bytes(tmp_path):
    a = str(tmp_path / "a.csv")
    b = str(tmp_path / "b.csv")
    args = ["quasipolar", "--field", "example2", "--window", "0.5,2",
            "--grid", "5", "--seed", "3"]
    # example2 itself is not normalized; the CLI should surface that cleanly.
    assert run(args + ["--out", a]) == 3
    norm = '{"kind":"rescaled","params":{"inner":{"kind":"example2","params":{}},"time_scale":0.5}}'
    args = ["quasipolar", "--field", norm, "--window", "0.5,2", "--grid", "5", "--seed", "3"]
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b]) == 0
    assert open(a, "rb").read() == open(b, "rb").read()
    for line in open(a).read().strip().splitlines()[1:]:
        assert all(math.isfinite(float(v)) for v in line.split(","))


def test_quasipolar_grid_touching_origin_exit3(tmp_path):
    path = str(tmp_path / "bad.csv")
    code = run(["quasipolar", "--field", "linear:1,0", "--window", "0.0000001,2",
                "--grid", "4", "--out", path])
    assert code == 3
    assert not os.path.exists(path)


def test_quasipolar_svg(tmp_path):
    path = str(tmp_path / "rect.svg")
    assert run(["quasipolar", "--field", "linear:1,2", "--window", "0.5,2",
                "--grid", "6", "--format", "svg", "--out", path]) == 0
    svg = open(path).read()
    assert svg.count("polyline") >= 12  # curves left, rays right
    assert "circle" in svg


def test_verify_degenerate_excluded_exit0(tmp_path, capsys):
    code = run(["verify", "--field", "degenerate:1"])
    rep = json.loads(capsys.readouterr().out)
    assert code == 0
    memberships = [e for e in rep["entries"] if e["name"].endswith("family_membership")]
    assert memberships[0]["status"] == "excluded"
    assert rep["passed"]


def test_verify_reversed_field_exit1(tmp_path, capsys):
    code = run(["verify", "--field", '{"kind":"linear","params":{"lambda":-1,"omega":0}}'])
    rep = json.loads(capsys.readouterr().out)
    assert code == 1
    assert any("NotNormalizable" in e["metric"] or "degenerate or reversed" in e["metric"]
               for e in rep["entries"] if e["status"] == "fail")


def test_verify_all_builtin_exit0(tmp_path):
    out = str(tmp_path / "verify.json")
    code = run(["verify", "--field", "all-builtin", "--out", out])
    first = open(out, "rb").read()
    rep = json.loads(first)
    assert code == 0
    assert len(rep["entries"]) >= 14
    assert all(e["status"] != "fail" for e in rep["entries"])
    # Determinism of the report bytes under an identical config.
    assert run(["verify", "--field", "all-builtin", "--out", out]) == 0
    assert open(out, "rb").read() == first


def test_qcflow_tol_env_override(tmp_path, monkeypatch):
    path = str(tmp_path / "loose.csv")
    monkeypatch.setenv("QCFLOW_TOL", "1e-4")
    assert run(["trace", "--field", "linear:1,0", "--x0", "1,0", "--t", "0,1",
                "--out", path]) == 0
    ts_loose, _, _ = read_curve_csv(path)
    monkeypatch.delenv("QCFLOW_TOL")
    assert run(["trace", "--field", "linear:1,0", "--x0", "1,0", "--t", "0,1",
                "--out", path]) == 0
    ts_tight, _, _ = read_curve_csv(path)
    assert len(ts_loose) < len(ts_tight)


def test_runconfig_json_roundtrip():
    cfg = RunConfig(
        field={"kind": "linear", "params": {"lambda": 1.0, "omega": 2.0}},
        command="trace",
        params={"x0": [1.0, 0.0], "t": [0.0, 2.0]},
        seed=42,
        output_path="out.csv",
    )
    assert RunConfig.from_json(cfg.to_json()) == cfg
