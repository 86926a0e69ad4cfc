"""Command-line front end: ``shortline check|trace|connect|quadrature|develop``.

Exit codes: 0 success, 2 a mathematical check failed, 64 usage or parse error.
All JSON goes to stdout with sorted keys and round-trip float formatting, so
identical arguments give byte-identical output.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import bvp
from . import develop as dv
from . import expr as ex
from . import reduction as rd
from . import surface as sf
from . import tracer as tr

EXIT_OK = 0
EXIT_CHECK = 2
EXIT_USAGE = 64

AUTO_PROJECT_TOL = 1e-6
SILENT_PROJECT_TOL = 1e-12
FAMILY_PROBES = 8
FAMILY_TOL = 1e-10


class UsageError(Exception):
    pass


class CheckFailure(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    surface: Optional[str] = None
    params: dict = field(default_factory=dict)
    format: str = "csv"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(d["command"], d.get("surface"), dict(d.get("params", {})), d.get("format", "csv"))

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def number(text: str) -> float:
    """A real number, written as a constant expression such as ``2*pi``."""
    try:
        e = ex.parse(text)
        if ex.variables(e):
            raise UsageError(f"{text!r} is not a constant")
        v = float(ex.evaluate(e))
    except ex.ExprError as err:
        raise UsageError(f"bad number {text!r}: {err}") from None
    if not math.isfinite(v):
        raise UsageError(f"{text!r} is not finite")
    return v


def vector(text: str, size: int = 3) -> list:
    parts = text.split(",")
    if len(parts) != size:
        raise UsageError(f"expected {size} comma-separated values, got {text!r}")
    return [number(p) for p in parts]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shortline", description="Geodesics on surfaces given by formulas.")
    p.add_argument("--print-config", action="store_true",
                   help="print the parsed configuration as JSON and exit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", help="integrability of the normal field")
    c.add_argument("--surface", required=True)
    c.add_argument("--grid", type=int, default=4, help="sample points per axis")
    c.add_argument("--box", default="1", help="half-width of the sampled cube")
    c.add_argument("--tol", default="1e-9")

    t = sub.add_parser("trace", help="trace a geodesic from a point and direction")
    t.add_argument("--surface", required=True)
    t.add_argument("--start", required=True)
    t.add_argument("--dir", required=True)
    t.add_argument("--length", required=True)
    t.add_argument("--step", default="1e-3")
    t.add_argument("--out")
    t.add_argument("--format", choices=("csv", "json"), default="csv")

    k = sub.add_parser("connect", help="shortest geodesic between two points")
    k.add_argument("--surface", required=True)
    k.add_argument("--a", required=True)
    k.add_argument("--b", required=True)
    k.add_argument("--max-length")
    k.add_argument("--step", default="1e-2")
    k.add_argument("--seeds", type=int, default=16)
    k.add_argument("--tol", default="1e-6")
    k.add_argument("--out")
    k.add_argument("--format", choices=("csv", "json"), default="csv")

    q = sub.add_parser("quadrature", help="angle integral on a surface of revolution, or w(u)")
    q.add_argument("--surface")
    q.add_argument("--t-of-u")
    q.add_argument("--bounds", required=True)
    q.add_argument("--A")
    q.add_argument("--w0", default="0")
    q.add_argument("--nodes", type=int, default=128)

    d = sub.add_parser("develop", help="unroll a traced path on a developable surface")
    d.add_argument("--surface", required=True)
    d.add_argument("--trajectory", required=True)
    d.add_argument("--omega-ref")
    d.add_argument("--out")
    d.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def parse_args(argv) -> tuple:
    """(RunConfig, print_config flag)."""
    ns = vars(build_parser().parse_args(argv))
    echo = ns.pop("print_config")
    return _config(ns), echo


def parse_config(argv) -> RunConfig:
    return parse_args(argv)[0]


def _config(ns: dict) -> RunConfig:
    command = ns.pop("command")
    surface = ns.pop("surface", None)
    fmt = ns.pop("format", "csv")
    params = {k: v for k, v in ns.items() if v is not None}
    return RunConfig(command, surface, params, fmt)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def load_surface(path: str) -> sf.Surface:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise UsageError(f"{path}: malformed JSON at line {err.lineno} column {err.colno}: {err.msg}") from None
    try:
        return sf.from_dict(data)
    except (ex.ExprError, sf.SurfaceError) as err:
        raise UsageError(f"{path}: {err}") from None


def emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def warn(msg: str) -> None:
    sys.stderr.write(f"warning: {msg}\n")


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def write_rows(path: str, fmt: str, obj) -> None:
    """Write ``obj`` (anything with to_csv) as CSV, or its columns as JSON."""
    if fmt == "csv":
        obj.to_csv(path)
        return
    import io
    buf = io.StringIO()
    obj.to_csv(buf)
    lines = buf.getvalue().splitlines()
    header = lines[0].split(",")
    cols = {h: [] for h in header}
    for line in lines[1:]:
        for h, v in zip(header, line.split(",")):
            cols[h].append(float(v))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(cols, sort_keys=True) + "\n")


def _off_surface(s: sf.Surface, p) -> float:
    return bvp._off_surface(s, p)


def _normals_match(s: sf.Surface, P, ref, parallel: bool) -> bool:
    """Whether the normal at each probe is parallel (or orthogonal) to ``ref``."""
    n = np.array([sf.normal_at(s, p) for p in P])
    scale = np.linalg.norm(n, axis=1) * np.linalg.norm(ref, axis=1)
    c = np.linalg.norm(np.cross(n, ref), axis=1) if parallel else np.abs(np.sum(n * ref, axis=1))
    return bool(np.all(c / scale < FAMILY_TOL))


def surface_family(s: sf.Surface) -> str:
    """'sphere', 'cylinder', 'revolution' or 'other', for choosing the conserved quantity."""
    if isinstance(s, sf.Revolution):
        return "revolution"
    if not isinstance(s, (sf.ImplicitGradient, sf.NormalField, sf.Graph)):
        return "other"
    rng = np.random.default_rng(0)
    try:
        with np.errstate(all="ignore"):
            P = rng.uniform(-1, 1, size=(FAMILY_PROBES, 3))
            if _normals_match(s, P, P, parallel=True):
                return "sphere"
            if _normals_match(s, P, P * (1, 1, 0), parallel=True):
                return "cylinder"
            if _normals_match(s, P, np.c_[-P[:, 1], P[:, 0], 0 * P[:, 0]], parallel=False):
                return "revolution"
    except (sf.SurfaceError, ex.ExprError, ArithmeticError):
        pass
    return "other"


def conservation_report(s: sf.Surface, t: tr.Trajectory) -> Optional[dict]:
    family = surface_family(s)
    if family == "other":
        return None
    reports = []
    if family == "sphere":
        try:
            reports.append(rd.plane_constant(t))
        except rd.ReductionError as err:
            warn(f"plane constant unavailable ({err}); reporting the axial constant instead")
            family = "revolution"
    if family == "cylinder":
        reports.append(rd.cylinder_ratio(t))
    if family == "revolution":
        reports.append(rd.clairaut_constant(t))
    r = reports[0]
    out = {"quantity": r.quantity, "mean": r.mean, "drift": r.drift, "max_dev": r.max_dev,
           "samples_skipped": r.samples_skipped, "family": family}
    out.update({k: _plain(v) for k, v in r.extras.items()})
    return out


def as_revolution(s: sf.Surface) -> sf.Revolution:
    """A revolution surface as is; a sphere about the origin as r(v) = sqrt(R^2 - v^2)."""
    if isinstance(s, sf.Revolution):
        return s
    if surface_family(s) == "sphere":
        R = float(np.linalg.norm(sf.project_to_surface(s, (1.0, 0.0, 0.0))))
        return sf.Revolution(r_of_v=ex.parse(f"sqrt({R!r}^2 - v^2)"), name=s.id)
    raise UsageError("quadrature over a surface needs a revolution surface or a sphere")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check(cfg: RunConfig) -> int:
    s = load_surface(cfg.surface)
    p = cfg.params
    tol = number(p.get("tol", "1e-9"))
    if isinstance(s, sf.RuledFamily):
        lo, hi = s.omega_domain
        report = sf.validate_developable(s, np.linspace(lo, hi, max(2, p.get("grid", 4) ** 3)), tol)
    else:
        n, half = p.get("grid", 4), number(p.get("box", "1"))
        if n < 1 or half <= 0:
            raise UsageError("--grid and --box must be positive")
        # cell centres keep the samples off the coordinate planes and axes
        c = -half + (np.arange(n) + 0.5) * (2 * half / n)
        X, Y, Z = np.meshgrid(c, c, c, indexing="ij")
        try:
            with np.errstate(all="ignore"):
                report = sf.check_integrability(s, np.c_[X.ravel(), Y.ravel(), Z.ravel()], tol)
        except (sf.SurfaceError, ex.ExprError, ArithmeticError) as err:
            raise CheckFailure(f"cannot evaluate the normal field: {err}") from None
    d = report.to_dict()
    if not math.isfinite(report.max_abs):
        d["verdict"] = "not integrable"
    emit(d)
    return EXIT_OK if d["verdict"] == "integrable" else EXIT_CHECK


def _start_on_surface(s: sf.Surface, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    off = _off_surface(s, p)
    if not off <= AUTO_PROJECT_TOL:
        raise CheckFailure(f"start point is off the surface (residual {off:.3g} > {AUTO_PROJECT_TOL:g})")
    if off > 0:
        q = sf.project_to_surface(s, p)
        if off > SILENT_PROJECT_TOL:
            warn(f"start point projected onto the surface (moved {np.linalg.norm(q - p):.3g})")
        return q
    return p


def cmd_trace(cfg: RunConfig) -> int:
    s = load_surface(cfg.surface)
    p = cfg.params
    start = _start_on_surface(s, vector(p["start"]))
    length, step = number(p["length"]), number(p["step"])
    v0 = tr.tangent_direction(s, start, vector(p["dir"]))
    t = tr.trace(s, (start, v0), length, step)
    out = {"surface": s.id, "samples": len(t), "length": float(t.s[-1]), "step": step,
           "end": t.position[-1].tolist(),
           "closure": float(np.linalg.norm(t.position[-1] - t.position[0])),
           "max_level_residual": float(np.max(np.abs(t.level_residual))),
           "conserved": conservation_report(s, t), "csv_path": p.get("out")}
    if p.get("out"):
        write_rows(p["out"], cfg.format, t)
    emit(out)
    return EXIT_OK


def cmd_connect(cfg: RunConfig) -> int:
    s = load_surface(cfg.surface)
    p = cfg.params
    req = bvp.ConnectRequest(s, tuple(vector(p["a"])), tuple(vector(p["b"])),
                             max_length=number(p["max_length"]) if "max_length" in p else None,
                             step=number(p["step"]), seeds=p["seeds"], tolerance=number(p["tol"]))
    r = bvp.connect(req)
    if p.get("out"):
        write_rows(p["out"], cfg.format, r.trajectory)
    emit(r.to_dict(p.get("out")))
    return EXIT_OK


def cmd_quadrature(cfg: RunConfig) -> int:
    p = cfg.params
    lo, hi = vector(p["bounds"], 2)
    if (cfg.surface is None) == ("t_of_u" not in p):
        raise UsageError("give exactly one of --surface (with --A) or --t-of-u (with --w0)")
    if cfg.surface is not None:
        s = as_revolution(load_surface(cfg.surface))
        if "A" not in p:
            raise UsageError("--A is required with --surface")
        q = rd.revolution_quadrature(s, number(p["A"]), lo, hi, p["nodes"])
        emit({"value": q.value, "bounds": list(q.bounds), "nodes": q.nodes,
              "error_estimate": q.error_estimate})
        return EXIT_OK
    try:
        t_of_u = ex.parse(p["t_of_u"])
    except ex.ExprError as err:
        raise UsageError(f"--t-of-u: {err}") from None
    w0 = number(p["w0"])
    w1 = rd.reduced_wu_quadrature(t_of_u, lo, hi, w0, p["nodes"])
    emit({"w0": w0, "w1": w1, "arctan_w1": math.atan(w1), "bounds": [lo, hi], "nodes": p["nodes"]})
    return EXIT_OK


def cmd_develop(cfg: RunConfig) -> int:
    s = load_surface(cfg.surface)
    p = cfg.params
    if not isinstance(s, sf.RuledFamily):
        raise UsageError("develop needs a cone or developable surface")
    try:
        t = tr.Trajectory.from_csv(p["trajectory"], surface_id=s.id)
    except (OSError, ValueError, IndexError) as err:
        raise UsageError(f"cannot read trajectory {p['trajectory']}: {err}") from None
    ref = number(p["omega_ref"]) if "omega_ref" in p else None
    if s.is_cone:
        dm = dv.develop_cone(s, t.position, ref, s=t.s)
    else:
        dm = dv.develop_ruled(s, t, ref)
    out = dm.to_dict()
    out["csv_path"] = p.get("out")
    if p.get("out"):
        write_rows(p["out"], cfg.format, dm)
    emit(out)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "trace": cmd_trace, "connect": cmd_connect,
            "quadrature": cmd_quadrature, "develop": cmd_develop}

CHECK_ERRORS = (CheckFailure, tr.TraceError, bvp.ConnectError, rd.ReductionError,
                dv.DevelopmentError, sf.SurfaceError, ex.DomainError)


def run(cfg: RunConfig) -> int:
    return COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg, echo = parse_args(argv)
        if echo:
            sys.stdout.write(cfg.to_json() + "\n")
            return EXIT_OK
        return run(cfg)
    except UsageError as err:
        sys.stderr.write(f"shortline: {err}\n")
        return EXIT_USAGE
    except CHECK_ERRORS as err:
        sys.stderr.write(f"shortline: {err}\n")
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
