"""Geodesic initial-value problems and finite-difference residual checks.

The tracer integrates  X' = V,  V' = lam * n(X)  with
lam = -(V^T J V) / (n . n), where J is the Jacobian of the normal field.
Differentiating the tangency condition n(X) . V = 0 gives exactly this
multiplier, so the acceleration stays normal and unit speed is preserved.
Classical RK4 with a constant step is used; after every step the velocity
is renormalised, the position is projected back onto the surface (when a
level function exists) and the velocity is made tangent again.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import expr as ex
from .surface import Graph, Surface, SurfaceError, normal_at

SPEED_TOL = 1e-9


class TraceError(ValueError):
    pass


class GraphabilityError(TraceError):
    pass


@dataclass(frozen=True)
class GeodesicState:
    position: tuple
    velocity: tuple
    s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(c) for c in self.position))
        object.__setattr__(self, "velocity", tuple(float(c) for c in self.velocity))


@dataclass
class Trajectory:
    """Samples of one traced geodesic, stored column-wise."""

    s: np.ndarray
    position: np.ndarray      # (N, 3)
    velocity: np.ndarray      # (N, 3)
    lam: np.ndarray           # normal-acceleration multiplier at each sample
    level_residual: np.ndarray
    step: float
    surface_id: str = ""

    def __len__(self):
        return len(self.s)

    @property
    def samples(self) -> list:
        return [GeodesicState(p, v, float(t)) for p, v, t in zip(self.position, self.velocity, self.s)]

    @property
    def lambda_series(self) -> np.ndarray:
        return self.lam

    @property
    def end(self) -> GeodesicState:
        return GeodesicState(self.position[-1], self.velocity[-1], float(self.s[-1]))

    def uniform_count(self) -> int:
        """Number of leading samples on the uniform grid (drops a final partial step)."""
        n = len(self.s)
        if n >= 2 and abs((self.s[-1] - self.s[-2]) - self.step) > 1e-12 * max(1.0, self.s[-1]):
            return n - 1
        return n

    def to_csv(self, path_or_file):
        header = ["s", "x", "y", "z", "vx", "vy", "vz", "lambda", "level_residual"]
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k in range(len(self.s)):
                row = [self.s[k], *self.position[k], *self.velocity[k], self.lam[k],
                       self.level_residual[k]]
                w.writerow([repr(float(v)) for v in row])
        finally:
            if own:
                fh.close()

    @classmethod
    def from_csv(cls, path, step: Optional[float] = None, surface_id: str = "") -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        s = data[:, 0]
        if step is None:
            step = float(s[1] - s[0]) if len(s) > 1 else 0.0
        return cls(s, data[:, 1:4], data[:, 4:7], data[:, 7], data[:, 8], step, surface_id)


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------


def _accel(surface, X, V, cache):
    lam, a = surface._accel(X[0], X[1], X[2], V[0], V[1], V[2], cache)
    return lam, np.array(a)


def _unit_normal(surface, X, cache):
    n, _ = surface._field(X[0], X[1], X[2], False, cache)
    n2 = surface._normal_check(n)
    inv = 1.0 / np.sqrt(n2)
    return np.array(n) * inv


def _settle(surface, X, V, cache):
    """Renormalise V, project X, and remove the normal part of V."""
    V = V / np.sqrt(np.einsum("ij,ij->j", V, V))
    if surface.has_level or hasattr(surface, "omega_at"):
        X, nhat, res, _ = surface._project(X, cache)
        nhat = np.array(nhat)
    else:
        nhat = _unit_normal(surface, X, cache)
        res = np.zeros(X.shape[1])
    V = V - np.einsum("ij,ij->j", V, nhat) * nhat
    V = V / np.sqrt(np.einsum("ij,ij->j", V, V))
    return X, V, res


def _check_finite(X, V, surface, s):
    if not math.isfinite(float(np.sum(X) + np.sum(V))):
        raise ex.DomainError(f"non-finite state at s = {s:.6g} on {surface.id}", None)


def trace_many(surface: Surface, positions, velocities, length: float, step: float) -> list:
    """Trace several geodesics of equal length together (one batch of arrays)."""
    if not step > 0:
        raise TraceError("step must be positive")
    if not length > 0:
        raise TraceError("length must be positive")
    X = np.array(positions, dtype=float).reshape(-1, 3).T.copy()
    V = np.array(velocities, dtype=float).reshape(-1, 3).T.copy()
    if X.shape != V.shape:
        raise TraceError("positions and velocities must pair up")
    speed = np.sqrt(np.einsum("ij,ij->j", V, V))
    if np.any(np.abs(speed - 1.0) > 1e-6):
        raise TraceError("start velocity must have unit length")
    n_full = int(math.floor(length / step * (1 + 1e-12)))
    tail = length - n_full * step
    if tail <= 1e-12 * max(1.0, length):
        tail = 0.0
    steps = [step] * n_full + ([tail] if tail > 0 else [])
    B = X.shape[1]
    N = len(steps) + 1
    P = np.empty((N, 3, B))
    W = np.empty((N, 3, B))
    lam = np.empty((N, B))
    res = np.empty((N, B))
    cache = surface.field_cache()
    if cache is None:
        cache = {}
    with np.errstate(all="ignore"):
        X, V, r0 = _settle(surface, X, V, cache)
        overlap = np.einsum("ij,ij->j", V, np.array(velocities, float).reshape(-1, 3).T)
        if not np.all(np.abs(overlap - 1.0) <= 1e-6):
            raise TraceError("start velocity is not tangent to the surface")
        P[0], W[0], res[0] = X, V, r0
        for k, h in enumerate(steps):
            l1, a1 = _accel(surface, X, V, cache)
            lam[k] = l1
            h2 = 0.5 * h
            V2 = V + h2 * a1
            _, a2 = _accel(surface, X + h2 * V, V2, cache)
            V3 = V + h2 * a2
            _, a3 = _accel(surface, X + h2 * V2, V3, cache)
            V4 = V + h * a3
            _, a4 = _accel(surface, X + h * V3, V4, cache)
            h6 = h / 6.0
            X = X + h6 * (V + 2.0 * (V2 + V3) + V4)
            V = V + h6 * (a1 + 2.0 * (a2 + a3) + a4)
            _check_finite(X, V, surface, (k + 1) * step)
            X, V, r = _settle(surface, X, V, cache)
            P[k + 1], W[k + 1], res[k + 1] = X, V, r
        lam[N - 1] = _accel(surface, X, V, cache)[0]
    s = np.arange(N, dtype=float) * step
    if tail > 0:
        s[-1] = length
    return [Trajectory(s.copy(), P[:, :, b].copy(), W[:, :, b].copy(), lam[:, b].copy(),
                       res[:, b].copy(), step, surface.id) for b in range(B)]


def trace(surface: Surface, start, length: float, step: float) -> Trajectory:
    """Trace one geodesic from ``start`` (a GeodesicState or (position, velocity))."""
    if isinstance(start, GeodesicState):
        pos, vel = start.position, start.velocity
    else:
        pos, vel = start
    return trace_many(surface, [pos], [vel], length, step)[0]


def tangent_direction(surface: Surface, position, direction) -> np.ndarray:
    """Unit tangent obtained by removing the normal part of ``direction``."""
    n = normal_at(surface, position)
    d = np.asarray(direction, dtype=float)
    d = d - (d @ n) / (n @ n) * n
    norm = np.linalg.norm(d)
    if norm < 1e-12:
        raise TraceError("direction is parallel to the surface normal")
    return d / norm


# ---------------------------------------------------------------------------
# Graph form in x
# ---------------------------------------------------------------------------


@dataclass
class GraphTrajectory:
    """Planar samples (x, y, p = dy/dx) of a geodesic over a graph, with arc length."""

    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    s: np.ndarray
    graph: Graph

    def lift(self) -> np.ndarray:
        z = self.graph.height(self.x, self.y)
        return np.column_stack([self.x, self.y, z])

    def at_x(self, xq):
        """Cubic Hermite interpolation of y and s at abscissae ``xq``."""
        xq = np.asarray(xq, dtype=float)
        k = np.clip(np.searchsorted(self.x, xq) - 1, 0, len(self.x) - 2)
        x0, x1 = self.x[k], self.x[k + 1]
        h = x1 - x0
        t = (xq - x0) / h
        h00 = 2 * t**3 - 3 * t**2 + 1
        h10 = t**3 - 2 * t**2 + t
        h01 = -2 * t**3 + 3 * t**2
        h11 = t**3 - t**2
        y = h00 * self.y[k] + h10 * h * self.p[k] + h01 * self.y[k + 1] + h11 * h * self.p[k + 1]
        ds0 = self._ds(self.x[k], self.y[k], self.p[k])
        ds1 = self._ds(self.x[k + 1], self.y[k + 1], self.p[k + 1])
        s = h00 * self.s[k] + h10 * h * ds0 + h01 * self.s[k + 1] + h11 * h * ds1
        return y, s

    def _ds(self, x, y, p):
        j = self.graph.slopes(x, y, 1)
        f, g = ex._dense(j.g[0], x), ex._dense(j.g[1], x)
        return np.sqrt(1.0 + p * p + (f + g * p) ** 2)


def graph_start(g: Graph, x0: float, y0: float, p0: float):
    """3D position and unit velocity matching the planar initial data (x0, y0, dy/dx = p0)."""
    j = g.slopes(x0, y0, 1)
    f, gg = ex._dense(j.g[0], 0.0), ex._dense(j.g[1], 0.0)
    d = np.array([1.0, p0, f + gg * p0])
    return np.array([x0, y0, float(j.v)]), d / np.linalg.norm(d)


def graph_trace_deviation(gt: GraphTrajectory, t: Trajectory) -> float:
    """Largest pointwise gap between a 3D trace and the lifted graph solution.

    Each 3D sample is compared with the graph solution at the same x, in
    position and in accumulated arc length.
    """
    xs = t.position[:, 0]
    inside = (xs >= gt.x[0]) & (xs <= gt.x[-1])
    if not np.all(inside):
        raise TraceError("3D trace leaves the x-range of the graph solution")
    y, s = gt.at_x(xs)
    z = gt.graph.height(xs, y)
    gap = np.column_stack([xs, y, z]) - t.position
    return float(max(np.max(np.abs(gap)), np.max(np.abs(s - t.s))))


def _graph_rhs(g: Graph, x, y, p):
    j = g.slopes(x, y, 2)
    f, gg = ex._dense(j.g[0], 0.0), ex._dense(j.g[1], 0.0)
    al, be, ga = (ex._dense(j.h[k], 0.0) for k in (0, 1, 3))
    dp = -(gg - f * p) * ((al + be * p) + p * (be + ga * p)) / (1.0 + f * f + gg * gg)
    ds = math.sqrt(1.0 + p * p + (f + gg * p) ** 2)
    return p, dp, ds


def trace_graph_ode(g: Graph, x0: float, y0: float, p0: float, x1: float,
                    step: float) -> GraphTrajectory:
    """RK4 on dy/dx = p, dp/dx = -(g - f p)((alpha + beta p) + p(beta + gamma p))/(1 + f^2 + g^2).

    f, g are the first slopes of zeta and alpha, beta, gamma its second
    slopes along the curve.  Arc length is carried as a third component.
    """
    if not x1 > x0:
        raise TraceError("x1 must exceed x0")
    if not step > 0:
        raise TraceError("step must be positive")
    n = int(math.ceil((x1 - x0) / step - 1e-9))
    xs = x0 + step * np.arange(n + 1)
    xs[-1] = x1
    ys, ps, ss = np.empty(n + 1), np.empty(n + 1), np.empty(n + 1)
    y, p, s = float(y0), float(p0), 0.0
    ys[0], ps[0], ss[0] = y, p, s
    with np.errstate(all="ignore"):
        for k in range(n):
            x, h = xs[k], xs[k + 1] - xs[k]
            k1 = _graph_rhs(g, x, y, p)
            k2 = _graph_rhs(g, x + h / 2, y + h / 2 * k1[0], p + h / 2 * k1[1])
            k3 = _graph_rhs(g, x + h / 2, y + h / 2 * k2[0], p + h / 2 * k2[1])
            k4 = _graph_rhs(g, x + h, y + h * k3[0], p + h * k3[1])
            y += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
            p += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
            s += h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
            if not (math.isfinite(p) and abs(p) <= 1e6):
                raise GraphabilityError(
                    f"|dy/dx| exceeded 1e6 near x = {xs[k + 1]:.6g}; the path is no longer a graph over x")
            ys[k + 1], ps[k + 1], ss[k + 1] = y, p, s
    return GraphTrajectory(xs, ys, ps, ss, g)


# ---------------------------------------------------------------------------
# Residuals of the differential forms
# ---------------------------------------------------------------------------

FORMS = ("symmetric", "x-param", "phi-param", "graph")


@dataclass
class ResidualReport:
    form: str
    s: np.ndarray
    residual: np.ndarray
    max_abs: float = field(init=False)
    order: Optional[float] = None
    checks: dict = field(default_factory=dict)

    def __post_init__(self):
        self.max_abs = float(np.max(np.abs(self.residual))) if len(self.residual) else 0.0

    def to_dict(self):
        return {"form": self.form, "max_abs_residual": self.max_abs, "order": self.order,
                "samples": int(len(self.residual)),
                "checks": {k: float(v) for k, v in self.checks.items()}}


def _differences(t: Trajectory):
    n = t.uniform_count()
    if n < 3:
        raise TraceError("residuals need at least three uniformly spaced samples")
    X = t.position[:n]
    h = t.step
    d1 = (X[2:] - X[:-2]) / (2 * h)
    d2 = (X[2:] - 2 * X[1:-1] + X[:-2]) / (h * h)
    return X[1:-1], d1, d2, t.s[1:n - 1]


def euler_equation_residual(t: Trajectory, surface: Surface) -> ResidualReport:
    """ddx(q dz - r dy) + ddy(r dx - p dz) + ddz(p dy - q dx) along the samples.

    Also reports the letters f, g, h = X' x X'' through the identities
    f p + g q + h r (equal to the residual) and f dx + g dy + h dz (zero).
    """
    X, d1, d2, s = _differences(t)
    n = normal_at(surface, X)
    p, q, r = n[:, 0], n[:, 1], n[:, 2]
    dx, dy, dz = d1.T
    ddx, ddy, ddz = d2.T
    res = ddx * (q * dz - r * dy) + ddy * (r * dx - p * dz) + ddz * (p * dy - q * dx)
    f = dy * ddz - dz * ddy
    g = dz * ddx - dx * ddz
    h = dx * ddy - dy * ddx
    companion = f * p + g * q + h * r
    checks = {
        "max_letters_normal": float(np.max(np.abs(companion))),
        "max_letters_tangent": float(np.max(np.abs(f * dx + g * dy + h * dz))),
        "max_letters_mismatch": float(np.max(np.abs(companion - res))),
    }
    return ResidualReport("symmetric", s, res, checks=checks)


def param_form_residual(t: Trajectory, surface: Surface, form: str = "phi-param",
                        min_dx: float = 1e-2) -> ResidualReport:
    """Residual of the x-parametrised, phi-parametrised (phi = s) or graph form."""
    if form == "symmetric":
        return euler_equation_residual(t, surface)
    X, d1, d2, s = _differences(t)
    if form == "phi-param":
        n = normal_at(surface, X)
        p, q, r = n.T
        tt, uu, vv = d1.T
        dt, du, dv = d2.T
        res = p * (uu * dv - vv * du) + q * (vv * dt - tt * dv) + r * (tt * du - uu * dt)
        return ResidualReport(form, s, res)
    xd, yd, zd = d1.T
    xdd, ydd, zdd = d2.T
    if np.min(np.abs(xd)) < min_dx:
        raise TraceError(f"dx/ds falls below {min_dx} on the trajectory; x-parametrisation degenerate")
    # slopes in x and their x-derivatives from the arc-length derivatives
    t_x = yd / xd
    u_x = zd / xd
    dt_x = (ydd * xd - yd * xdd) / xd**3
    du_x = (zdd * xd - zd * xdd) / xd**3
    if form == "x-param":
        n = normal_at(surface, X)
        p, q, r = n.T
        res = dt_x * (r - p * u_x) + du_x * (p * t_x - q)
        identity = p + q * t_x + r * u_x
        return ResidualReport(form, s, res, checks={"max_surface_identity": float(np.max(np.abs(identity)))})
    if form == "graph":
        if not isinstance(surface, Graph):
            raise SurfaceError("graph form applies to graph surfaces only")
        j = surface.slopes(X[:, 0], X[:, 1], 2)
        ref = X[:, 0]
        f, g = ex._dense(j.g[0], ref), ex._dense(j.g[1], ref)
        al, be, ga = (ex._dense(j.h[k], ref) for k in (0, 1, 3))
        res = dt_x * (1 + f * f + g * g) + (g - f * t_x) * ((al + be * t_x) + t_x * (be + ga * t_x))
        return ResidualReport(form, s, res)
    raise ValueError(f"unknown form {form!r}; expected one of {FORMS}")


def residual_order(surface: Surface, start, length: float, step: float,
                   form: str = "symmetric") -> tuple:
    """Trace at ``step`` and ``step/2``; return (factor, order, coarse report, fine report).

    The factor is max|res(step)| / max|res(step/2)|; the order is its log2.
    """
    coarse = param_form_residual(trace(surface, start, length, step), surface, form)
    fine = param_form_residual(trace(surface, start, length, step / 2), surface, form)
    factor = coarse.max_abs / fine.max_abs
    order = math.log2(factor)
    coarse.order = fine.order = order
    return factor, order, coarse, fine
