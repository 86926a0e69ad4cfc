"""First integrals, conserved quantities and quadratures for special surfaces.

Conserved quantities are computed per sample from traced trajectories:

* plane constant  (z vx - x vz) / (y vx - x vy)  on spheres about the origin
* cylinder ratio  dz/ds                          on cylinders parallel to z
* Clairaut constant  x vy - y vx                 on surfaces of revolution

The quadratures integrate the angle swept by a geodesic on a surface of
revolution, and the separated first-order equation for graph surfaces whose
slope magnitude t = sqrt(p^2 + q^2) depends only on the slope ratio u = q/p.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expr as ex
from .surface import Revolution
from .tracer import Trajectory

PLANE_DENOM_EPS = 1e-10
PLANE_MIN_USABLE = 0.9


class ReductionError(ValueError):
    pass


class BranchCrossingError(ReductionError):
    pass


@dataclass
class ConservationReport:
    quantity: str
    s: np.ndarray
    values: np.ndarray
    samples_skipped: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) == 0:
            raise ReductionError(f"no usable samples for {self.quantity}")

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def max_dev(self) -> float:
        return float(np.max(np.abs(self.values - self.mean)))

    @property
    def drift(self) -> float:
        """Largest change from the first sample."""
        return float(np.max(np.abs(self.values - self.values[0])))

    @property
    def drift_per_unit_s(self) -> float:
        if len(self.values) < 2 or self.s[-1] == self.s[0]:
            return 0.0
        return float(np.polyfit(self.s, self.values, 1)[0])

    @property
    def samples_used(self) -> int:
        return int(len(self.values))

    def to_dict(self) -> dict:
        d = {"quantity": self.quantity, "mean": self.mean, "max_dev": self.max_dev,
             "drift_per_unit_s": self.drift_per_unit_s, "samples_used": self.samples_used,
             "samples_skipped": int(self.samples_skipped)}
        d.update({k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray)) else float(v))
                  for k, v in self.extras.items()})
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _check(t: Trajectory):
    if len(t) == 0:
        raise ReductionError("empty trajectory")


def fit_plane(points) -> tuple:
    """Least-squares plane a x + b y + c z = 0 through the origin.

    Returns the unit coefficient vector (sign fixed so its largest component
    is positive) and the largest distance of a point from the plane.
    """
    P = np.asarray(points, dtype=float)
    _, _, vt = np.linalg.svd(P, full_matrices=False)
    n = vt[-1]
    if n[np.argmax(np.abs(n))] < 0:
        n = -n
    return n, float(np.max(np.abs(P @ n)))


def plane_constant(t: Trajectory) -> ConservationReport:
    """The ratio (z dx - x dz)/(y dx - x dy) along a geodesic of a sphere about the origin."""
    _check(t)
    x, y, z = t.position.T
    vx, vy, vz = t.velocity.T
    den = y * vx - x * vy
    ok = np.abs(den) >= PLANE_DENOM_EPS
    used = int(np.count_nonzero(ok))
    if used < PLANE_MIN_USABLE * len(t):
        raise ReductionError(
            f"only {used} of {len(t)} samples have |y dx - x dy| >= {PLANE_DENOM_EPS}; "
            "the plane of this path contains the z axis")
    values = (z * vx - x * vz)[ok] / den[ok]
    normal, resid = fit_plane(t.position)
    return ConservationReport("plane-constant", t.s[ok], values, len(t) - used,
                              {"plane": normal, "plane_fit_residual": resid})


def cylinder_ratio(t: Trajectory) -> ConservationReport:
    """dz/ds per sample, with the check z(s) - z(0) = (dz/ds)(0) s."""
    _check(t)
    vz = t.velocity[:, 2]
    lin = np.max(np.abs(t.position[:, 2] - t.position[0, 2] - vz[0] * (t.s - t.s[0])))
    base = np.sum(np.hypot(np.diff(t.position[:, 0]), np.diff(t.position[:, 1])))
    return ConservationReport("cylinder-ratio", t.s, vz.copy(), 0,
                              {"proportionality_residual": lin, "base_arc_length": base})


def clairaut_constant(t: Trajectory) -> ConservationReport:
    """x vy - y vx per sample; at unit speed this is the constant A of the path."""
    _check(t)
    x, y, _ = t.position.T
    vx, vy, _ = t.velocity.T
    return ConservationReport("clairaut", t.s, x * vy - y * vx)


# ---------------------------------------------------------------------------
# Quadratures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    bounds: tuple
    nodes: int
    error_estimate: float


def _gauss_legendre(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _revolution_sum(s: Revolution, A: float, v0: float, v1: float, n: int) -> float:
    # In xi = sqrt(v^2 - A^2) the factor 1/sqrt(v^2 - A^2) disappears, so the
    # integrand stays smooth however close v0 is to A.  The cosine map
    # xi = c - d cos(theta) then absorbs an inverse square root where r = 0.
    xi0 = math.sqrt((v0 - A) * (v0 + A))
    xi1 = math.sqrt((v1 - A) * (v1 + A))
    theta, wts = _gauss_legendre(n, 0.0, math.pi)
    c, d = 0.5 * (xi0 + xi1), 0.5 * (xi1 - xi0)
    xi = c - d * np.cos(theta)
    dxi = d * np.sin(theta)
    v = np.sqrt(A * A + xi * xi)
    r, _ = s.coefficient(v)
    if not np.all(np.isfinite(r)) or np.any(r == 0) or np.ptp(np.sign(r)) != 0:
        raise ReductionError("profile coefficient r(v) vanishes or is unbounded inside the interval")
    f = A * np.sqrt(r * r + v * v) / (np.abs(r) * v * v)
    return float(np.sum(wts * f * dxi))


def revolution_quadrature(s: Revolution, A: float, v0: float, v1: float,
                          nodes: int = 128) -> QuadratureResult:
    """Angle swept about the axis while the radius runs monotonically from v0 to v1.

    Integrates  A / (r v) * sqrt((r^2 + v^2) / (v^2 - A^2)) dv  with the
    profile coefficient r(v) = -v / z'(v).  The endpoint singularity at
    v = A is removed by integrating in sqrt(v^2 - A^2), and one where r = 0
    by a further cosine substitution.  The magnitude
    is returned; the caller applies the orientation.
    """
    if not isinstance(s, Revolution):
        raise ReductionError("revolution_quadrature needs a surface of revolution")
    if A < 0:
        raise ReductionError("the constant A must be non-negative")
    if not v1 > v0:
        raise ReductionError("need v0 < v1")
    if v0 < A:
        raise ReductionError(f"interval [{v0}, {v1}] reaches below the turning radius v = A = {A}")
    if v0 < s.axis_eps:
        raise ReductionError("interval touches the axis v = 0")
    if nodes < 2:
        raise ReductionError("need at least two nodes")
    if A == 0:
        return QuadratureResult(0.0, (v0, v1), nodes, 0.0)
    with np.errstate(all="ignore"):
        q = _revolution_sum(s, A, v0, v1, nodes)
        q_half = _revolution_sum(s, A, v0, v1, max(nodes // 2, 1))
    err = abs(q - q_half) + 1e-14 * (1.0 + abs(q))
    return QuadratureResult(q, (v0, v1), nodes, err)


def cone_angle_closed_form(m: float, A: float, v1: float) -> float:
    """Angle swept on z = m v from the turning radius A out to v1."""
    return math.sqrt(1.0 + m * m) * math.acos(A / v1)


def reduced_wu_quadrature(t_of_u, u0: float, u1: float, w0: float, nodes: int = 128,
                          variable: Optional[str] = None) -> float:
    """Solve dw/(1 + w^2) = du / ((1 + u^2) sqrt(1 + t(u)^2)) from (u0, w0) to u1.

    The integral is taken in theta = arctan u, where the integrand becomes
    1/sqrt(1 + t^2); the result is returned as w1 = tan(arctan w0 + integral).
    """
    e = ex.as_expression(t_of_u)
    names = ex.variables(e)
    if variable is None:
        if len(names) > 1:
            raise ReductionError(f"t(u) must depend on one variable, got {sorted(names)}")
        variable = next(iter(names)) if names else "u"
    elif not names <= {variable}:
        raise ReductionError(f"t(u) uses {sorted(names - {variable})} besides {variable}")
    if u0 == u1:
        return float(w0)
    th0, th1 = math.atan(u0), math.atan(u1)
    theta, wts = _gauss_legendre(nodes, th0, th1)
    t = ex.evaluate(e, **{variable: np.tan(theta)}) + 0.0 * theta
    integral = float(np.sum(wts / np.sqrt(1.0 + t * t)))
    angle = math.atan(w0) + integral
    if not -math.pi / 2 < angle < math.pi / 2:
        raise BranchCrossingError(
            f"arctan w leaves (-pi/2, pi/2) (reaches {angle:.6g}); w passes through infinity")
    return math.tan(angle)


@dataclass(frozen=True)
class ReducedState:
    """Slope variables of a graph geodesic: u = q/p, t = |(p, q)|, v and w = v / sqrt(1 + t^2).

    ``pi`` is the direction dy/dx of the projected path.
    """

    u: float
    t: float
    w: float
    v: float

    def direction(self, p: float, q: float) -> float:
        """Recover dy/dx from v: (q - v p)/(p + v q)."""
        den = p + self.v * q
        if abs(den) < 1e-300:
            raise ReductionError("p + v q vanishes")
        return (q - self.v * p) / den


def reduced_state_from_slopes(p: float, q: float, pi: float) -> ReducedState:
    p, q, pi = float(p), float(q), float(pi)
    den = p + pi * q
    if den == 0:
        raise ReductionError("p + pi q vanishes")
    if p == 0:
        raise ReductionError("p = 0: the ratio u = q/p is undefined")
    v = (q - pi * p) / den
    t = math.hypot(p, q)
    return ReducedState(u=q / p, t=t, w=v / math.sqrt(1.0 + t * t), v=v)


def direction_from_w(p: float, q: float, w: float) -> float:
    """dy/dx of the projected path given slopes (p, q) and the reduced variable w."""
    t = math.hypot(p, q)
    v = w * math.sqrt(1.0 + t * t)
    den = p + v * q
    if den == 0:
        raise ReductionError("p + v q vanishes")
    return (q - v * p) / den
