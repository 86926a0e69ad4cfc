"""Surfaces presented as a normal field n = (p, q, r) with its Jacobian.

Five families are supported:

* ``NormalField``      -- p, q, r given directly as expressions in x, y, z
* ``ImplicitGradient`` -- n is the gradient of a level function F(x, y, z)
* ``Graph``            -- z = zeta(x, y), stored with n = (zeta_x, zeta_y, -1)
* ``Revolution``       -- profile z(v), v = sqrt(x^2 + y^2), n = (x, y, r(v)) with
  r(v) = -v / z'(v); alternatively r(v) may be given directly
* ``RuledFamily``      -- y = A(w) x + C(w), z = B(w) x + D(w); cones have C = D = 0

Geodesic formulas are homogeneous in n, so the overall sign and scale of the
field are immaterial.  The graph family uses r = -1 throughout.

Internally every family works on batches: coordinates are arrays of equal
shape (or floats) and the field comes back as component tuples.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import expr as ex
from .expr import Expression

NORMAL_EPS = 1e-12
LEVEL_TOL = 1e-12
MAX_PROJECTION_ITERS = 20
DEVELOPABLE_TOL = 1e-9


class SurfaceError(ValueError):
    pass


class ZeroNormalError(SurfaceError):
    pass


class ProjectionError(SurfaceError):
    pass


class RulingDegeneracyError(SurfaceError):
    pass


class AxisSingularityError(SurfaceError):
    pass


def _nz(t):
    return 0.0 if t is None else t


def _as_points(point):
    arr = np.asarray(point, dtype=float)
    if arr.shape[-1] != 3:
        raise ValueError(f"expected 3 coordinates, got shape {arr.shape}")
    return arr


class Surface:
    """Common behaviour; subclasses implement ``_field`` and optionally ``_level``."""

    kind = "surface"
    has_level = False
    name: str = ""

    @property
    def id(self) -> str:
        return self.name or self.kind

    def field_cache(self):
        """Mutable warm-start state for one batched computation (or None)."""
        return None

    def _field(self, x, y, z, jacobian=True, cache=None):
        """Return (n, J): n a 3-tuple, J a 3x3 nested tuple (None = zero).

        Passing a ``cache`` marks a batched hot loop: expression output is
        then not scanned for non-finite values, and the caller checks its
        own state instead.
        """
        raise NotImplementedError

    def _level(self, x, y, z, cache=None):
        """Return (L, grad L) for families with a scalar level function."""
        raise SurfaceError(f"{self.kind} surface has no level function")

    # -- batched helpers used by the tracer ------------------------------------------

    def _normal_check(self, n):
        n2 = n[0] * n[0] + n[1] * n[1] + n[2] * n[2]
        low = n2.min() if isinstance(n2, np.ndarray) else n2
        if not low >= NORMAL_EPS * NORMAL_EPS:
            raise ZeroNormalError(f"normal field vanishes (|n| < {NORMAL_EPS}) on {self.id}")
        return n2

    def _accel(self, x, y, z, vx, vy, vz, cache=None):
        """Normal multiplier and acceleration a = lam * n that keeps n.v = 0."""
        n, J = self._field(x, y, z, True, cache)
        n2 = self._normal_check(n)
        vel = (vx, vy, vz)
        quad = 0.0
        for i in range(3):
            row = J[i]
            acc = None
            for j in range(3):
                if row[j] is not None:
                    t = row[j] * vel[j]
                    acc = t if acc is None else acc + t
            if acc is not None:
                quad = quad + vel[i] * acc
        lam = -quad / n2
        return lam, (lam * n[0], lam * n[1], lam * n[2])

    def _project(self, X, cache=None):
        """Newton along the level gradient; returns (X, unit normal, |L|, iterations)."""
        x, y, z = X[0], X[1], X[2]
        for it in range(MAX_PROJECTION_ITERS + 1):
            L, g = self._level(x, y, z, cache)
            g2 = g[0] * g[0] + g[1] * g[1] + g[2] * g[2]
            if not bool(np.all(g2 >= NORMAL_EPS * NORMAL_EPS)):
                raise ZeroNormalError(f"level gradient vanishes on {self.id}")
            if bool(np.all(np.abs(L) < LEVEL_TOL)):
                inv = 1.0 / np.sqrt(g2)
                return (np.array([x, y, z], dtype=float), (g[0] * inv, g[1] * inv, g[2] * inv),
                        np.abs(L), it)
            if it == MAX_PROJECTION_ITERS:
                break
            # Converged samples keep their coordinates exactly.
            step = np.where(np.abs(L) < LEVEL_TOL, 0.0, L / g2)
            x = x - step * g[0]
            y = y - step * g[1]
            z = z - step * g[2]
        raise ProjectionError(
            f"projection onto {self.id} did not converge in {MAX_PROJECTION_ITERS} iterations "
            f"(max |level| = {float(np.max(np.abs(L))):.3e})")

    def level_residual(self, X, cache=None):
        L, _ = self._level(X[0], X[1], X[2], cache)
        return np.abs(L)

    def to_dict(self) -> dict:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# Families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalField(Surface):
    p: Expression
    q: Expression
    r: Expression
    name: str = ""
    kind = "normal-field"

    def __post_init__(self):
        for label in ("p", "q", "r"):
            ex.check_variables(getattr(self, label), "xyz", label)

    def _field(self, x, y, z, jacobian=True, cache=None):
        env = {"x": x, "y": y, "z": z}
        order = 1 if jacobian else 0
        jets = [ex.jet(e, env, order, check=cache is None) for e in (self.p, self.q, self.r)]
        n = tuple(j.v for j in jets)
        return n, (tuple(j.g for j in jets) if jacobian else None)

    def to_dict(self):
        return _with_name({"kind": self.kind, "p": ex.to_text(self.p), "q": ex.to_text(self.q),
                           "r": ex.to_text(self.r)}, self.name)


@dataclass(frozen=True)
class ImplicitGradient(Surface):
    F: Expression
    name: str = ""
    kind = "implicit"
    has_level = True

    def __post_init__(self):
        ex.check_variables(self.F, "xyz", "F")

    def _field(self, x, y, z, jacobian=True, cache=None):
        j = ex.jet(self.F, {"x": x, "y": y, "z": z}, 2 if jacobian else 1, check=cache is None)
        n = tuple(_nz(t) for t in j.g)
        if not jacobian:
            return n, None
        h = j.h
        J = ((h[0], h[1], h[2]), (h[1], h[3], h[4]), (h[2], h[4], h[5]))
        return n, J

    def _level(self, x, y, z, cache=None):
        j = ex.jet(self.F, {"x": x, "y": y, "z": z}, 1, check=cache is None)
        return j.v, tuple(_nz(t) for t in j.g)

    def to_dict(self):
        return _with_name({"kind": self.kind, "F": ex.to_text(self.F)}, self.name)


@dataclass(frozen=True)
class Graph(Surface):
    zeta: Expression
    name: str = ""
    kind = "graph"
    has_level = True

    def __post_init__(self):
        ex.check_variables(self.zeta, "xy", "zeta")

    def slopes(self, x, y, order=2, check=True):
        """Jet of zeta over (x, y): value, (f, g), and (alpha, beta, gamma)."""
        return ex.jet(self.zeta, {"x": x, "y": y}, order, names=("x", "y"), check=check)

    def _field(self, x, y, z, jacobian=True, cache=None):
        j = self.slopes(x, y, 2 if jacobian else 1, cache is None)
        n = (_nz(j.g[0]), _nz(j.g[1]), -1.0 + 0.0 * x)
        if not jacobian:
            return n, None
        h = j.h
        J = ((h[0], h[1], None), (h[1], h[3], None), (None, None, None))
        return n, J

    def _level(self, x, y, z, cache=None):
        j = self.slopes(x, y, 1, cache is None)
        return j.v - z, (_nz(j.g[0]), _nz(j.g[1]), -1.0 + 0.0 * x)

    def height(self, x, y):
        return ex.evaluate(self.zeta, x=x, y=y)

    def to_dict(self):
        return _with_name({"kind": self.kind, "zeta": ex.to_text(self.zeta)}, self.name)


@dataclass(frozen=True)
class Revolution(Surface):
    """Surface of revolution about the z axis.

    Give the profile ``z_of_v``; the coefficient r(v) = -v / z'(v) is then
    derived.  ``r_of_v`` may be supplied instead, in which case no level
    function (and no projection) is available.
    """

    z_of_v: Optional[Expression] = None
    r_of_v: Optional[Expression] = None
    name: str = ""
    axis_eps: float = 1e-9
    kind = "revolution"

    def __post_init__(self):
        if (self.z_of_v is None) == (self.r_of_v is None):
            raise SurfaceError("revolution surface needs exactly one of z_of_v, r_of_v")
        for label in ("z_of_v", "r_of_v"):
            e = getattr(self, label)
            if e is not None:
                ex.check_variables(e, "v", label)

    @property
    def has_level(self):
        return self.z_of_v is not None

    def radius(self, x, y):
        v = np.sqrt(x * x + y * y)
        if not bool(np.all(v >= self.axis_eps)):
            raise AxisSingularityError(f"point within {self.axis_eps} of the axis of {self.id}")
        return v

    def coefficient(self, v):
        """(r, dr/dv) of the profile coefficient at radius v."""
        if self.r_of_v is not None:
            r, r1, _ = ex.eval_jet1d(self.r_of_v, "v", v)
            return r, r1
        _, z1, z2 = ex.eval_jet1d(self.z_of_v, "v", v)
        if not bool(np.all(z1 != 0)):
            raise ZeroNormalError(f"profile slope vanishes on {self.id}; r = -v/z' is unbounded")
        r = -v / z1
        r1 = -1.0 / z1 + v * z2 / (z1 * z1)
        return r, r1

    def _field(self, x, y, z, jacobian=True, cache=None):
        v = self.radius(x, y)
        r, r1 = self.coefficient(v)
        n = (x, y, r)
        if not jacobian:
            return n, None
        a = r1 / v
        J = ((1.0, None, None), (None, 1.0, None), (a * x, a * y, None))
        return n, J

    def _level(self, x, y, z, cache=None):
        if self.z_of_v is None:
            return super()._level(x, y, z, cache)
        v = self.radius(x, y)
        Z, z1, _ = ex.eval_jet1d(self.z_of_v, "v", v)
        a = z1 / v
        return Z - z, (a * x, a * y, -1.0 + 0.0 * x)

    def profile(self, v):
        return ex.evaluate(self.z_of_v, v=v)

    def to_dict(self):
        d = {"kind": self.kind}
        if self.z_of_v is not None:
            d["z_of_v"] = ex.to_text(self.z_of_v)
        else:
            d["r_of_v"] = ex.to_text(self.r_of_v)
        return _with_name(d, self.name)


_ZERO = ex.Const(0.0)


@dataclass(frozen=True)
class RuledFamily(Surface):
    """Rulings y = A(w) x + C(w), z = B(w) x + D(w) over a parameter w.

    Points are assigned a ruling parameter by least squares in the x-slice:
    w minimises (y - A x - C)^2 + (z - B x - D)^2.  The normal is the cross
    product of the two coordinate tangents, which for developable families is
    proportional to (p, q, -1) with p, q from ``slopes_from_family``.
    """

    A: Expression
    B: Expression
    C: Optional[Expression] = None
    D: Optional[Expression] = None
    omega_domain: tuple = (-1.5, 1.5)
    name: str = ""
    has_level = True

    def __post_init__(self):
        for label in ("A", "B", "C", "D"):
            e = getattr(self, label)
            if e is not None:
                ex.check_variables(e, "w", label)
        if (self.C is None) != (self.D is None):
            raise SurfaceError("ruled family needs both C and D, or neither (cone)")
        lo, hi = self.omega_domain
        if not lo < hi:
            raise SurfaceError("omega_domain must be an increasing pair")

    @property
    def kind(self):
        return "cone" if self.is_cone else "developable"

    @property
    def is_cone(self) -> bool:
        return self.C is None

    def coefficients(self, w, strict=True):
        """Jets (value, first, second derivative) of A, B, C, D at w."""
        out = []
        for e in (self.A, self.B, self.C or _ZERO, self.D or _ZERO):
            if strict:
                out.append(ex.eval_jet1d(e, "w", w))
            else:
                j = ex.jet(e, {"w": w}, 2, strict=False, names=("w",))
                ref = w if isinstance(w, np.ndarray) else 0.0
                out.append((ex._dense(j.v, ref), ex._dense(j.g[0], ref), ex._dense(j.h[0], ref)))
        return out

    def field_cache(self):
        return {}

    def _seed_omega(self, x, y, z, samples=2001):
        lo, hi = self.omega_domain
        grid = np.linspace(lo, hi, samples)
        (A, _, _), (B, _, _), (C, _, _), (D, _, _) = self.coefficients(grid, strict=False)
        xs = np.atleast_1d(x)[:, None]
        ry = np.atleast_1d(y)[:, None] - A[None, :] * xs - C[None, :]
        rz = np.atleast_1d(z)[:, None] - B[None, :] * xs - D[None, :]
        d2 = ry * ry + rz * rz
        d2 = np.where(np.isfinite(d2), d2, np.inf)
        best = grid[np.argmin(d2, axis=1)]
        return best.reshape(np.shape(x)) if isinstance(x, np.ndarray) else float(best[0])

    def omega_at(self, x, y, z, cache=None, tol=1e-14, max_iter=50):
        """Least-squares ruling parameter of the point(s), by Newton in w."""
        w = None
        if cache is not None:
            w = cache.get("omega")
            if w is not None and np.shape(w) != np.shape(x):
                w = None
        if w is None:
            w = self._seed_omega(x, y, z)
        for _ in range(max_iter):
            (A, A1, A2), (B, B1, B2), (C, C1, C2), (D, D1, D2) = self.coefficients(w)
            ry = y - A * x - C
            rz = z - B * x - D
            g1 = A1 * x + C1
            g2 = B1 * x + D1
            phi = -(ry * g1 + rz * g2)
            dphi = g1 * g1 + g2 * g2 - ry * (A2 * x + C2) - rz * (B2 * x + D2)
            if not bool(np.all(dphi > 0)):
                raise RulingDegeneracyError(f"ruling assignment degenerate on {self.id}")
            dw = phi / dphi
            w = w - dw
            if bool(np.all(np.abs(dw) <= tol * (1.0 + np.abs(w)))):
                break
        else:
            raise ProjectionError(f"ruling parameter did not converge on {self.id}")
        lo, hi = self.omega_domain
        if cache is not None:
            cache["omega"] = w
        return w

    def _field(self, x, y, z, jacobian=True, cache=None):
        w = self.omega_at(x, y, z, cache)
        (A, A1, A2), (B, B1, B2), (C, C1, C2), (D, D1, D2) = self.coefficients(w)
        g1 = A1 * x + C1
        g2 = B1 * x + D1
        n = (B * g1 - A * g2, g2, -g1)
        if not jacobian:
            return n, None
        ry = y - A * x - C
        rz = z - B * x - D
        g1w = A2 * x + C2
        g2w = B2 * x + D2
        dphi = g1 * g1 + g2 * g2 - ry * g1w - rz * g2w
        grad_w = (-(A * g1 + B * g2 - ry * A1 - rz * B1) / dphi, g1 / dphi, g2 / dphi)
        n_w = (B1 * g1 + B * g1w - A1 * g2 - A * g2w, g2w, -g1w)
        n_x = (B * A1 - A * B1, B1, -A1)
        J = tuple(
            tuple((n_x[i] if j == 0 else 0.0) + n_w[i] * grad_w[j] for j in range(3))
            for i in range(3)
        )
        return n, J

    def _level(self, x, y, z, cache=None):
        raise SurfaceError("ruled families project by ruling assignment, not by a level function")

    def _project(self, X, cache=None):
        x = X[0]
        w = self.omega_at(X[0], X[1], X[2], cache)
        (A, _, _), (B, _, _), (C, _, _), (D, _, _) = self.coefficients(w)
        Y = np.array([x, A * x + C, B * x + D], dtype=float)
        n, _ = self._field(Y[0], Y[1], Y[2], False, cache)
        n2 = self._normal_check(n)
        inv = 1.0 / np.sqrt(n2)
        res = np.hypot(X[1] - Y[1], X[2] - Y[2])
        return Y, (n[0] * inv, n[1] * inv, n[2] * inv), res * 0.0, 1

    def level_residual(self, X, cache=None):
        w = self.omega_at(X[0], X[1], X[2], cache)
        (A, _, _), (B, _, _), (C, _, _), (D, _, _) = self.coefficients(w)
        return np.hypot(X[1] - A * X[0] - C, X[2] - B * X[0] - D)

    def point(self, w, x):
        """Surface point on ruling w at abscissa x."""
        A, B = ex.evaluate(self.A, w=w), ex.evaluate(self.B, w=w)
        C = ex.evaluate(self.C, w=w) if self.C is not None else 0.0
        D = ex.evaluate(self.D, w=w) if self.D is not None else 0.0
        return np.array([x, A * x + C, B * x + D], dtype=float)

    def to_dict(self):
        d = {"kind": self.kind, "A": ex.to_text(self.A), "B": ex.to_text(self.B)}
        if not self.is_cone:
            d["C"] = ex.to_text(self.C)
            d["D"] = ex.to_text(self.D)
        d["domain"] = {"omega": list(self.omega_domain)}
        return _with_name(d, self.name)


def _with_name(d, name):
    if name:
        d["name"] = name
    return d


# ---------------------------------------------------------------------------
# Public per-point operations
# ---------------------------------------------------------------------------


def _fields_at(s: Surface, point, jacobian):
    P = _as_points(point)
    with np.errstate(all="ignore"):
        n, J = s._field(P[..., 0], P[..., 1], P[..., 2], jacobian, s.field_cache())
    s._normal_check(n)
    return P, n, J


def normal_at(s: Surface, point) -> np.ndarray:
    """The field (p, q, r) at ``point`` (shape (3,) or (..., 3))."""
    P, n, _ = _fields_at(s, point, False)
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), P.shape[:-1]) for c in n], axis=-1)


def normal_jacobian_at(s: Surface, point) -> np.ndarray:
    """Matrix of partials d n_i / d x_j at ``point``."""
    P, _, J = _fields_at(s, point, True)
    shape = P.shape[:-1]
    out = np.zeros(shape + (3, 3))
    for i in range(3):
        for j in range(3):
            if J[i][j] is not None:
                out[..., i, j] = J[i][j]
    return out


def integrability_residual(s: Surface, point):
    """p(q_z - r_y) + q(r_x - p_z) + r(p_y - q_x); zero where the field is integrable."""
    n = normal_at(s, point)
    J = normal_jacobian_at(s, point)
    p, q, r = n[..., 0], n[..., 1], n[..., 2]
    res = (p * (J[..., 1, 2] - J[..., 2, 1]) + q * (J[..., 2, 0] - J[..., 0, 2])
           + r * (J[..., 0, 1] - J[..., 1, 0]))
    return float(res) if np.ndim(res) == 0 else res


@dataclass
class IntegrabilityReport:
    points: list
    residuals: list
    max_abs: float
    tolerance: float
    verdict: str = field(init=False)

    def __post_init__(self):
        self.verdict = "integrable" if self.max_abs < self.tolerance else "not integrable"

    @property
    def integrable(self) -> bool:
        return self.verdict == "integrable"

    def to_dict(self):
        return {"verdict": self.verdict, "max_abs_residual": self.max_abs,
                "tolerance": self.tolerance, "samples": len(self.residuals),
                "points": [list(map(float, np.atleast_1d(p))) for p in self.points],
                "residuals": [float(r) for r in self.residuals]}


def check_integrability(s: Surface, points, tol: float = 1e-9) -> IntegrabilityReport:
    pts = np.atleast_2d(_as_points(points))
    res = np.atleast_1d(integrability_residual(s, pts))
    return IntegrabilityReport([p for p in pts], list(res), float(np.max(np.abs(res))), tol)


def validate_developable(s: RuledFamily, omega_samples: Sequence[float],
                         tol: float = DEVELOPABLE_TOL) -> IntegrabilityReport:
    """Check A'D' - B'C' = 0 at each sample, relative to max(1, |A'D'|)."""
    w = np.asarray(list(omega_samples), dtype=float)
    if w.size == 0:
        raise ValueError("validate_developable needs at least one sample")
    (_, A1, _), (_, B1, _), (_, C1, _), (_, D1, _) = s.coefficients(w)
    res = A1 * D1 - B1 * C1
    rel = np.abs(res) / np.maximum(1.0, np.abs(A1 * D1))
    report = IntegrabilityReport(list(w), list(res), float(np.max(rel)), tol)
    report.max_abs = float(np.max(np.abs(res)))
    report.verdict = "integrable" if float(np.max(rel)) < tol else "not integrable"
    return report


def slopes_from_family(s: RuledFamily, omega: float):
    """Graph slopes (p, q) of the ruled surface along ruling ``omega``.

    q = B'/A' and p = B - A q, i.e. p = (B A' - A B') / A'.
    """
    (A, A1, _), (B, B1, _), _, _ = s.coefficients(omega)
    if abs(A1) < 1e-12:
        raise RulingDegeneracyError(f"A'(w) = {A1!r} vanishes at w = {omega!r}")
    q = B1 / A1
    p = B - A * q
    return float(p), float(q)


def project_to_surface(s: Surface, point, mode: str = "normal") -> np.ndarray:
    """Move ``point`` onto the surface by Newton iteration along the level gradient.

    ``mode="vertical"`` is available for graphs and returns (x, y, zeta(x, y)).
    """
    P = _as_points(point).astype(float)
    if mode == "vertical":
        if not isinstance(s, Graph):
            raise SurfaceError("vertical projection is defined for graph surfaces only")
        return np.stack([P[..., 0], P[..., 1], s.height(P[..., 0], P[..., 1]) + 0.0 * P[..., 0]],
                        axis=-1)
    if not (s.has_level or isinstance(s, RuledFamily)):
        raise SurfaceError(f"{s.kind} surface has no level function to project onto")
    X = np.moveaxis(np.atleast_2d(P), -1, 0)
    with np.errstate(all="ignore"):
        Y, _, _, _ = s._project(X, s.field_cache())
    out = np.moveaxis(Y, 0, -1)
    return out.reshape(P.shape)


def projection_iterations(s: Surface, point) -> int:
    X = np.atleast_2d(_as_points(point)).T
    with np.errstate(all="ignore"):
        return s._project(X, s.field_cache())[3]


def level_value(s: Surface, point):
    P = _as_points(point)
    with np.errstate(all="ignore"):
        L, _ = s._level(P[..., 0], P[..., 1], P[..., 2], s.field_cache())
    return L


# ---------------------------------------------------------------------------
# JSON definitions
# ---------------------------------------------------------------------------

KINDS = ("normal-field", "implicit", "graph", "revolution", "cone", "developable")


def from_dict(d: dict) -> Surface:
    if not isinstance(d, dict) or "kind" not in d:
        raise SurfaceError('surface definition must be an object with a "kind" field')
    kind = d["kind"]
    name = d.get("name", "")

    def e(key, required=True):
        if key not in d:
            if required:
                raise SurfaceError(f'{kind} surface requires "{key}"')
            return None
        return ex.parse(str(d[key]))

    if kind == "normal-field":
        return NormalField(e("p"), e("q"), e("r"), name=name)
    if kind == "implicit":
        return ImplicitGradient(e("F"), name=name)
    if kind == "graph":
        return Graph(e("zeta"), name=name)
    if kind == "revolution":
        axis_eps = float(d.get("domain", {}).get("axis_eps", 1e-9))
        return Revolution(e("z_of_v", False), e("r_of_v", False), name=name, axis_eps=axis_eps)
    if kind in ("cone", "developable"):
        dom = tuple(float(t) for t in d.get("domain", {}).get("omega", (-1.5, 1.5)))
        if kind == "cone":
            return RuledFamily(e("A"), e("B"), omega_domain=dom, name=name)
        return RuledFamily(e("A"), e("B"), e("C"), e("D"), omega_domain=dom, name=name)
    raise SurfaceError(f"unknown surface kind {kind!r}; expected one of {', '.join(KINDS)}")


def load(path) -> Surface:
    with open(path, encoding="utf-8") as fh:
        return from_dict(json.load(fh))


def dumps(s: Surface) -> str:
    return json.dumps(s.to_dict(), sort_keys=True)


# Convenience constructors used in tests, examples and the CLI.

def sphere(radius: float = 1.0) -> ImplicitGradient:
    return ImplicitGradient(ex.parse(f"x^2 + y^2 + z^2 - {radius!r}^2"), name="sphere")


def ellipsoid(a: float, b: float, c: float) -> ImplicitGradient:
    return ImplicitGradient(ex.parse(f"x^2/{a!r}^2 + y^2/{b!r}^2 + z^2/{c!r}^2 - 1"),
                            name="ellipsoid")


def cylinder(radius: float = 1.0) -> ImplicitGradient:
    return ImplicitGradient(ex.parse(f"x^2 + y^2 - {radius!r}^2"), name="cylinder")


def graph(text: str, name: str = "") -> Graph:
    return Graph(ex.parse(text), name=name)


def circular_cone(m: float) -> RuledFamily:
    """z = m sqrt(x^2 + y^2) for x > 0 as the ruled family A = tan w, B = m / cos w."""
    return RuledFamily(ex.parse("tan(w)"), ex.parse(f"{m!r} / cos(w)"),
                       omega_domain=(-1.5, 1.5), name="cone")
