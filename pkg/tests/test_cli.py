import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shortline import cli
from shortline import surface as sf
from shortline import tracer as tr

SURFACES = {
    "sphere": {"kind": "implicit", "F": "x^2 + y^2 + z^2 - 1", "name": "sphere"},
    "twist": {"kind": "normal-field", "p": "y", "q": "-x", "r": "1"},
    "cylinder": {"kind": "implicit", "F": "x^2 + y^2 - 1"},
    "plane": {"kind": "graph", "zeta": "0*x"},
    "paraboloid": {"kind": "revolution", "z_of_v": "v^2"},
    "cone": {"kind": "cone", "A": "tan(w)", "B": "1/cos(w)", "name": "cone"},
    "skew": {"kind": "developable", "A": "w", "B": "w^2", "C": "w^2", "D": "(2/3)*w^3"},
}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, d in SURFACES.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(d))
        out[name] = str(p)
    out["dir"] = tmp_path
    return out


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


# -- check -------------------------------------------------------------------------

def test_check_sphere_integrable(files, capsys):
    code, d, _ = run(capsys, "check", "--surface", files["sphere"])
    assert code == 0
    assert d["verdict"] == "integrable" and d["max_abs_residual"] < 1e-12


def test_check_twisted_field(files, capsys):
    code, d, _ = run(capsys, "check", "--surface", files["twist"])
    assert code == 2
    assert d["max_abs_residual"] == 2.0
    assert set(d["residuals"]) == {2.0}


def test_check_developable_family(files, capsys):
    code, d, _ = run(capsys, "check", "--surface", files["skew"])
    assert code == 2 and d["verdict"] == "not integrable"
    code, d, _ = run(capsys, "check", "--surface", files["cone"])
    assert code == 0


def test_malformed_json(files, capsys):
    bad = files["dir"] / "bad.json"
    bad.write_text('{"kind": "implicit", "F": ')
    code, d, err = run(capsys, "check", "--surface", bad)
    assert code == 64 and d is None
    assert "malformed JSON" in err


def test_expression_error_reports_position(files, capsys):
    bad = files["dir"] / "bad.json"
    bad.write_text(json.dumps({"kind": "implicit", "F": "x^2 + * y"}))
    code, _, err = run(capsys, "check", "--surface", bad)
    assert code == 64
    assert "byte offset 6" in err


@pytest.mark.parametrize("argv", [
    ["trace", "--surface", "s.json", "--start", "1,0,0", "--length", "1"],
    ["trace", "--surface", "s.json", "--start", "1,0", "--dir", "0,1,0", "--length", "1"],
    ["connect", "--surface", "missing.json", "--a", "1,0,0", "--b", "0,1,0"],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "s.json").write_text(json.dumps(SURFACES["sphere"]))
    assert cli.main(argv) == 64


# -- trace -------------------------------------------------------------------------

def test_trace_sphere_closes(files, capsys):
    out = files["dir"] / "t.csv"
    code, d, _ = run(capsys, "trace", "--surface", files["sphere"], "--start", "1,0,0",
                     "--dir", "0,1,0", "--length", "2*pi", "--out", out)
    assert code == 0
    assert d["closure"] < 1e-6
    assert d["conserved"]["quantity"] == "plane-constant"
    assert d["conserved"]["drift"] < 1e-7
    t = tr.Trajectory.from_csv(out)
    assert t.s[-1] == pytest.approx(2 * math.pi, abs=1e-12)
    assert out.read_text().splitlines()[0] == "s,x,y,z,vx,vy,vz,lambda,level_residual"


def test_trace_cylinder_helix(files, capsys):
    code, d, _ = run(capsys, "trace", "--surface", files["cylinder"], "--start", "1,0,0",
                     "--dir", "0,0.6,0.8", "--length", "20")
    assert code == 0
    c = d["conserved"]
    assert c["quantity"] == "cylinder-ratio"
    assert c["max_dev"] < 1e-8 and c["proportionality_residual"] < 1e-8
    assert c["mean"] == pytest.approx(0.8, abs=1e-8)


def test_trace_revolution_reports_clairaut(files, capsys):
    code, d, _ = run(capsys, "trace", "--surface", files["paraboloid"], "--start", "0.5,0,0.25",
                     "--dir", "0,1,0.3", "--length", "3")
    assert code == 0
    assert d["conserved"]["quantity"] == "clairaut"
    assert d["conserved"]["drift"] < 1e-7


def test_sphere_through_pole_falls_back_to_clairaut(files, capsys):
    code, d, err = run(capsys, "trace", "--surface", files["sphere"], "--start", "1,0,0",
                       "--dir", "0,0,1", "--length", "1", "--step", "1e-2")
    assert code == 0
    assert d["conserved"]["quantity"] == "clairaut"
    assert "plane constant unavailable" in err


def test_trace_off_surface(files, capsys):
    code, d, err = run(capsys, "trace", "--surface", files["sphere"], "--start", "1,0,0.01",
                       "--dir", "0,1,0", "--length", "1")
    assert code == 2 and d is None
    assert "off the surface" in err


def test_trace_auto_projects_nearby_start(files, capsys):
    code, d, err = run(capsys, "trace", "--surface", files["sphere"], "--start", "1.0000001,0,0",
                       "--dir", "0,1,0", "--length", "1", "--step", "1e-2")
    assert code == 0
    assert "projected" in err
    assert d["max_level_residual"] < 1e-12


def test_outputs_are_deterministic(files, capsys):
    texts = []
    for k in range(2):
        out = files["dir"] / f"run{k}.csv"
        code, d, _ = run(capsys, "trace", "--surface", files["paraboloid"], "--start", "0.5,0,0.25",
                         "--dir", "0,1,0.3", "--length", "2", "--step", "1e-2", "--out", out)
        d.pop("csv_path")
        texts.append((out.read_bytes(), json.dumps(d, sort_keys=True)))
    assert texts[0] == texts[1]


def test_json_output_format(files, capsys):
    out = files["dir"] / "t.json"
    code, _, _ = run(capsys, "trace", "--surface", files["sphere"], "--start", "1,0,0",
                     "--dir", "0,1,0", "--length", "1", "--step", "0.25", "--out", out,
                     "--format", "json")
    assert code == 0
    cols = json.loads(out.read_text())
    assert cols["s"] == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert len(cols["x"]) == 5


# -- connect -----------------------------------------------------------------------

def test_connect_plane(files, capsys):
    code, d, _ = run(capsys, "connect", "--surface", files["plane"], "--a", "0,0,0", "--b", "3,4,0")
    assert code == 0
    assert d["length"] == pytest.approx(5.0, abs=1e-9)
    assert not d["multiplicity"]


def test_connect_sphere(files, capsys):
    out = files["dir"] / "c.csv"
    code, d, _ = run(capsys, "connect", "--surface", files["sphere"], "--a", "1,0,0",
                     "--b", "0,1,0", "--out", out)
    assert code == 0
    assert d["length"] == pytest.approx(math.pi / 2, abs=1e-5)
    assert d["csv_path"] == str(out) and out.exists()


def test_connect_cylinder_multiplicity(files, capsys):
    code, d, _ = run(capsys, "connect", "--surface", files["cylinder"], "--a", "1,0,0",
                     "--b", "1,0,2*pi", "--max-length", "10")
    assert code == 0
    assert d["length"] == pytest.approx(2 * math.pi, abs=1e-6)
    assert d["multiplicity"]


def test_connect_unreachable(files, capsys):
    code, _, err = run(capsys, "connect", "--surface", files["sphere"], "--a", "1,0,0",
                       "--b", "0,1,0", "--max-length", "1")
    assert code == 2 and err


# -- quadrature --------------------------------------------------------------------

def test_quadrature_quarter_turn(files, capsys):
    code, d, _ = run(capsys, "quadrature", "--surface", files["sphere"], "--A", "0.5",
                     "--bounds", "0.5,1")
    assert code == 0
    assert d["value"] == pytest.approx(math.pi / 2, abs=1e-6)


def test_quadrature_zero_constant(files, capsys):
    code, d, _ = run(capsys, "quadrature", "--surface", files["sphere"], "--A", "0",
                     "--bounds", "0.5,1")
    assert code == 0 and d["value"] == 0.0


def test_quadrature_constant_t(capsys):
    code, d, _ = run(capsys, "quadrature", "--t-of-u", "1", "--bounds", "0,1", "--w0", "0")
    assert code == 0
    assert d["arctan_w1"] == pytest.approx(math.pi / 4 / math.sqrt(2), abs=1e-12)


def test_quadrature_needs_one_mode(files, capsys):
    assert cli.main(["quadrature", "--bounds", "0,1"]) == 64
    assert cli.main(["quadrature", "--surface", files["plane"], "--A", "0.5", "--bounds", "0.5,1"]) == 64


# -- develop -----------------------------------------------------------------------

def _trace_to(path, surface, p0, direction, length, step):
    t = tr.trace(surface, (p0, tr.tangent_direction(surface, p0, direction)), length, step)
    t.to_csv(path)
    return t


def test_develop_cone_geodesic(files, capsys):
    S = sf.circular_cone(1.0)
    traj = files["dir"] / "k.csv"
    _trace_to(traj, S, S.point(0.2, 1.0), (0.3, 1.0, 0.0), 1.5, 1e-3)
    out = files["dir"] / "kd.csv"
    code, d, _ = run(capsys, "develop", "--surface", files["cone"], "--trajectory", traj, "--out", out)
    assert code == 0
    assert d["straightness_residual"] < 1e-5
    assert out.read_text().splitlines()[0] == "s,xi,eta,omega,rho"


def test_develop_single_ruling(files, capsys):
    S = sf.circular_cone(1.0)
    traj = files["dir"] / "r.csv"
    w = 0.2
    _trace_to(traj, S, S.point(w, 1.0), (1.0, math.tan(w), 1 / math.cos(w)), 1.0, 1e-2)
    code, d, _ = run(capsys, "develop", "--surface", files["cone"], "--trajectory", traj)
    assert code == 0
    assert d["straightness_residual"] < 1e-15


def test_develop_rejects_non_developable(files, capsys):
    traj = files["dir"] / "p.csv"
    np.savetxt(traj, [[0.0, 0.5, 0.25, 0.25, 0, 0, 0, 0, 0]] * 3, delimiter=",",
               header="s,x,y,z,vx,vy,vz,lambda,level_residual", comments="")
    code, _, err = run(capsys, "develop", "--surface", files["skew"], "--trajectory", traj)
    assert code == 2
    assert "not developable" in err


def test_develop_needs_ruled_surface(files, capsys):
    traj = files["dir"] / "p.csv"
    traj.write_text("s,x,y,z,vx,vy,vz,lambda,level_residual\n")
    assert cli.main(["develop", "--surface", files["sphere"], "--trajectory", str(traj)]) == 64


# -- configuration -----------------------------------------------------------------

def test_print_config_round_trip(capsys):
    argv = ["--print-config", "trace", "--surface", "s.json", "--start", "1,0,0", "--dir", "0,1,0",
            "--length", "2*pi", "--format", "json"]
    assert cli.main(argv) == 0
    text = capsys.readouterr().out.strip()
    cfg = cli.RunConfig.from_json(text)
    assert cfg == cli.parse_config(argv[1:])
    assert cfg.to_json() == text
    assert cfg.params["length"] == "2*pi" and cfg.format == "json"


values = st.one_of(st.text(max_size=12), st.integers(-10**6, 10**6),
                   st.floats(allow_nan=False, allow_infinity=False), st.booleans())


@settings(max_examples=50)
@given(st.sampled_from(sorted(cli.COMMANDS)), st.one_of(st.none(), st.text(max_size=20)),
       st.dictionaries(st.text(min_size=1, max_size=8), values, max_size=6),
       st.sampled_from(["csv", "json"]))
def test_run_config_round_trip(command, surface, params, fmt):
    cfg = cli.RunConfig(command, surface, params, fmt)
    again = cli.RunConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()
