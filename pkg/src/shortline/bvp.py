"""Two-point geodesics by shooting over the initial direction.

Directions at the start point are parametrised by an angle in the tangent
plane.  A ring of seed directions is traced, every seed whose closest approach
to the target is a local minimum around the ring is refined by golden-section
search, and the arc length is then cut at the closest-approach point.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .surface import RuledFamily, Surface, level_value, normal_at
from .tracer import Trajectory, trace, trace_many

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ON_SURFACE_TOL = 1e-9
DISTINCT_LENGTH = 1e-3
DISTINCT_ANGLE = 1e-3


class ConnectError(ValueError):
    pass


@dataclass
class ConnectRequest:
    surface: Surface
    a: tuple
    b: tuple
    max_length: Optional[float] = None    # default: three times the chord
    step: float = 1e-2
    seeds: int = 16
    tolerance: float = 1e-6               # on the terminal miss distance
    angle_tol: float = 1e-11

    @property
    def surface_id(self) -> str:
        return self.surface.id


@dataclass
class ConnectResult:
    trajectory: Trajectory
    length: float
    miss: float
    iterations: int
    multiplicity: bool
    angle: float
    solutions: list = field(default_factory=list)   # (length, angle) of every converged seed

    def to_dict(self, csv_path: Optional[str] = None) -> dict:
        return {"length": self.length, "miss": self.miss, "iterations": self.iterations,
                "multiplicity": self.multiplicity, "csv_path": csv_path,
                "solutions": [[float(L), float(a)] for L, a in self.solutions]}

    def to_json(self, csv_path: Optional[str] = None) -> str:
        return json.dumps(self.to_dict(csv_path), sort_keys=True)


def _off_surface(s: Surface, p) -> float:
    if isinstance(s, RuledFamily):
        return float(s.level_residual(tuple(np.asarray(p, dtype=float))))
    if not s.has_level:
        return 0.0
    return abs(float(level_value(s, p)))


def tangent_frame(s: Surface, a, toward=None):
    """Orthonormal tangent vectors (e1, e2) at a; e1 points toward ``toward`` if given."""
    n = normal_at(s, a)
    n = n / np.linalg.norm(n)
    guess = None if toward is None else np.asarray(toward, dtype=float) - np.asarray(a, dtype=float)
    if guess is not None:
        guess = guess - (guess @ n) * n
    if guess is None or np.linalg.norm(guess) < 1e-12:
        guess = np.eye(3)[int(np.argmin(np.abs(n)))]
        guess = guess - (guess @ n) * n
    e1 = guess / np.linalg.norm(guess)
    e2 = np.cross(n, e1)
    return e1, e2


def _hermite(X0, X1, V0, V1, h, tau):
    t2, t3 = tau * tau, tau * tau * tau
    h00, h10, h01, h11 = 2 * t3 - 3 * t2 + 1, t3 - 2 * t2 + tau, -2 * t3 + 3 * t2, t3 - t2
    d00, d10, d01, d11 = 6 * t2 - 6 * tau, 3 * t2 - 4 * tau + 1, -6 * t2 + 6 * tau, 3 * t2 - 2 * tau
    e00, e10, e01, e11 = 12 * tau - 6, 6 * tau - 4, -12 * tau + 6, 6 * tau - 2
    H = h00 * X0 + h10 * h * V0 + h01 * X1 + h11 * h * V1
    dH = (d00 * X0 + d10 * h * V0 + d01 * X1 + d11 * h * V1) / h
    ddH = (e00 * X0 + e10 * h * V0 + e01 * X1 + e11 * h * V1) / (h * h)
    return H, dH, ddH


def closest_approach(t: Trajectory, b) -> tuple:
    """(s, distance) of the point of ``t`` nearest to ``b``, refined between samples."""
    b = np.asarray(b, dtype=float)
    d = np.linalg.norm(t.position - b, axis=1)
    k = int(np.argmin(d))
    best_s, best_d = float(t.s[k]), float(d[k])
    for lo in (k - 1, k):
        if lo < 0 or lo + 1 >= len(t):
            continue
        h = float(t.s[lo + 1] - t.s[lo])
        if h <= 0:
            continue
        X0, X1, V0, V1 = t.position[lo], t.position[lo + 1], t.velocity[lo], t.velocity[lo + 1]
        tau = 1.0 if lo == k - 1 else 0.0
        for _ in range(30):
            H, dH, ddH = _hermite(X0, X1, V0, V1, h, tau)
            g = (H - b) @ dH
            dg = dH @ dH + (H - b) @ ddH
            if dg <= 0:
                break
            step = g / dg / h
            tau = min(1.0, max(0.0, tau - step))
            if abs(step) < 1e-15:
                break
        H, _, _ = _hermite(X0, X1, V0, V1, h, tau)
        dist = float(np.linalg.norm(H - b))
        if dist < best_d:
            best_s, best_d = float(t.s[lo] + tau * h), dist
    return best_s, best_d


class _Shooter:
    def __init__(self, req: ConnectRequest):
        self.req = req
        self.s = req.surface
        self.a = np.asarray(req.a, dtype=float)
        self.b = np.asarray(req.b, dtype=float)
        self.e1, self.e2 = tangent_frame(self.s, self.a, self.b)
        chord = float(np.linalg.norm(self.b - self.a))
        self.length = req.max_length if req.max_length is not None else max(3.0 * chord, 10 * req.step)
        self.traces = 0

    def direction(self, angle):
        return math.cos(angle) * self.e1 + math.sin(angle) * self.e2

    def evaluate(self, angles, length=None) -> list:
        """(distance, s, signed cross-track miss) of the closest approach for each angle."""
        if len(angles) == 0:
            return []
        length = self.length if length is None else min(length, self.length)
        dirs = [self.direction(a) for a in angles]
        ts = trace_many(self.s, [self.a] * len(dirs), dirs, length, self.req.step)
        self.traces += 1
        out = []
        for t in ts:
            sv, d = closest_approach(t, self.b)
            k = min(int(np.searchsorted(t.s, sv)), len(t) - 1)
            T = t.velocity[k]
            N = normal_at(self.s, t.position[k])
            side = np.cross(N, T)
            side = side / np.linalg.norm(side)
            # position at the closest approach, to first order from the nearest sample
            P = t.position[k] + (sv - t.s[k]) * T
            out.append((d, sv, float((self.b - P) @ side)))
        return out


def _refine(shooter: _Shooter, brackets: list, lengths: list, tol: float, angle_tol: float):
    """Golden-section search in each bracket, finished by secant steps on the signed miss.

    All candidates advance together so each round costs one batched trace.
    """
    target = 1e-2 * tol
    horizon = lambda sts: max(1.2 * max(st["s"]) + 10 * shooter.req.step for st in sts)
    state = []
    init = []
    for (lo, hi), L in zip(brackets, lengths):
        init.extend([hi - GOLDEN * (hi - lo), lo + GOLDEN * (hi - lo)])
        state.append({"lo": lo, "hi": hi, "s": [L]})
    vals = shooter.evaluate(init, horizon(state))
    for k, st in enumerate(state):
        st["c"], st["d"] = init[2 * k], init[2 * k + 1]
        st["fc"], st["fd"] = vals[2 * k], vals[2 * k + 1]
        st["s"] = [st["fc"][1], st["fd"][1]]
    rounds = 0
    # golden phase: shrink each bracket until the minimum is well localised
    coarse = max(angle_tol, 1e-2)
    while rounds < 200:
        active = [st for st in state if st["hi"] - st["lo"] > coarse
                  and min(st["fc"][0], st["fd"][0]) > target]
        if not active:
            break
        probes = []
        for st in active:
            if st["fc"][0] < st["fd"][0] or (st["fc"][0] == st["fd"][0] and st["c"] < st["d"]):
                st["hi"], st["d"], st["fd"] = st["d"], st["c"], st["fc"]
                st["c"] = st["hi"] - GOLDEN * (st["hi"] - st["lo"])
                probes.append((st, "c"))
            else:
                st["lo"], st["c"], st["fc"] = st["c"], st["d"], st["fd"]
                st["d"] = st["lo"] + GOLDEN * (st["hi"] - st["lo"])
                probes.append((st, "d"))
        vals = shooter.evaluate([st[slot] for st, slot in probes], horizon(active))
        for (st, slot), v in zip(probes, vals):
            st["f" + slot] = v
            st["s"].append(v[1])
        rounds += 1
    # secant phase on the signed cross-track miss
    for st in state:
        st["pts"] = sorted([(st["c"], st["fc"]), (st["d"], st["fd"])], key=lambda p: p[1][0])
    for _ in range(30):
        probes = []
        for st in state:
            (a1, f1), (a0, f0) = st["pts"][0], st["pts"][1]
            if f1[0] <= target or f1[2] == f0[2]:
                continue
            a2 = a1 - f1[2] * (a1 - a0) / (f1[2] - f0[2])
            if not (st["lo"] - 1e-3 <= a2 <= st["hi"] + 1e-3) or abs(a2 - a1) < angle_tol:
                continue
            probes.append((st, a2))
        if not probes:
            break
        vals = shooter.evaluate([a for _, a in probes], horizon([st for st, _ in probes]))
        for (st, a2), v in zip(probes, vals):
            st["pts"] = [(a2, v), st["pts"][0]]
            st["s"].append(v[1])
        rounds += 1
    results = []
    for st in state:
        angle, (miss, sv, _) = min(st["pts"] + [(st["c"], st["fc"]), (st["d"], st["fd"])],
                                   key=lambda p: p[1][0])
        results.append((angle, miss, sv))
    return results, rounds


def connect(req: ConnectRequest) -> ConnectResult:
    """Shortest geodesic from req.a to req.b found by shooting."""
    s = req.surface
    for label, p in (("a", req.a), ("b", req.b)):
        off = _off_surface(s, p)
        if not off < ON_SURFACE_TOL:
            raise ConnectError(f"endpoint {label} is off the surface (residual {off:.3g})")
    if req.seeds < 3:
        raise ConnectError("need at least three seed directions")
    a = np.asarray(req.a, dtype=float)
    b = np.asarray(req.b, dtype=float)
    if np.array_equal(a, b):
        t = Trajectory(np.zeros(1), a[None, :], np.zeros((1, 3)), np.zeros(1), np.zeros(1), req.step, s.id)
        return ConnectResult(t, 0.0, 0.0, 0, False, 0.0, [(0.0, 0.0)])

    shooter = _Shooter(req)
    n = req.seeds
    width = 2 * math.pi / n
    angles = [k * width for k in range(n)]
    seeds = shooter.evaluate(angles)
    f = [v[0] for v in seeds]
    candidates = [k for k in range(n) if f[k] <= f[k - 1] and f[k] <= f[(k + 1) % n]]
    brackets = [(angles[k] - width, angles[k] + width) for k in candidates]
    refined, iterations = _refine(shooter, brackets, [seeds[k][1] for k in candidates],
                                  req.tolerance, req.angle_tol)

    converged = sorted(((sv, ang) for ang, miss, sv in refined if miss < req.tolerance),
                       key=lambda x: (x[0], _angle_gap(x[1], 0.0)))
    if not converged:
        best = min(m for _, m, _ in refined)
        raise ConnectError(f"no seed converged: closest approach {best:.3g} > tolerance {req.tolerance:g}")
    distinct = []
    for L, ang in converged:
        if all(abs(L - L2) > DISTINCT_LENGTH or _angle_gap(ang, a2) > DISTINCT_ANGLE
               for L2, a2 in distinct):
            distinct.append((L, ang))
    length, angle = converged[0]
    t = trace(s, (a, shooter.direction(angle)), length, req.step)
    miss = float(np.linalg.norm(t.position[-1] - b))
    return ConnectResult(t, float(t.s[-1]), miss, iterations, len(distinct) >= 2,
                         float(math.remainder(angle, 2 * math.pi)),
                         [(float(L), float(math.remainder(g, 2 * math.pi))) for L, g in distinct])


def _angle_gap(a: float, b: float) -> float:
    return abs(math.remainder(a - b, 2 * math.pi))
