"""Unrolling of cones and developable ruled surfaces into the plane.

A cone with rulings through the origin is laid out in polar form: a point at
distance rho from the apex on ruling w goes to angle theta(w), the arc length
of the unit ruling direction e(w) = (1, A, B)/|(1, A, B)| on the unit sphere.

A general developable family X(w, x) = c(w) + x g(w), with c = (0, C, D) and
g = (1, A, B), is laid out as a continuous strip.  Because the tangent plane is
constant along each ruling, e' and c' lie in that plane and can be written in
the frame (e, n x e).  The planar images of e and c then obey

    theta' = e' . (n x e)
    c~'    = (c' . e) e~ + (c' . (n x e)) J e~

with e~ = (cos theta, sin theta) and J the quarter turn.  This is integrated
in w by RK4, so the layout is isometric up to the integration error.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import expr as ex
from .surface import RuledFamily, validate_developable
from .tracer import Trajectory

APEX_EXCLUSION = 1e-6
ON_CONE_TOL = 1e-8
ON_SURFACE_TOL = 1e-6
LAYOUT_STEP = 1e-3


class DevelopmentError(ValueError):
    pass


@dataclass
class DevelopmentMap:
    family_id: str
    image: np.ndarray        # (N, 2)
    omega: np.ndarray
    theta: np.ndarray        # angle of the ruling image at each point
    rho: np.ndarray          # signed distance along the ruling from its base point
    s: Optional[np.ndarray] = None
    residual: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.omega)

    def length(self) -> float:
        return float(np.sum(np.hypot(*np.diff(self.image, axis=0).T)))

    def to_dict(self) -> dict:
        d = {"family": self.family_id, "points": len(self), "straightness_residual": self.residual,
             "developed_length": self.length() if len(self) > 1 else 0.0}
        d.update({k: float(v) for k, v in self.extras.items()})
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_csv(self, path_or_file):
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
        s = self.s if self.s is not None else np.full(len(self), float("nan"))
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["s", "xi", "eta", "omega", "rho"])
            for k in range(len(self)):
                row = (s[k], self.image[k, 0], self.image[k, 1], self.omega[k], self.rho[k])
                w.writerow([repr(float(v)) for v in row])
        finally:
            if own:
                fh.close()


# ---------------------------------------------------------------------------
# Planar utilities
# ---------------------------------------------------------------------------


def straightness_residual(points2d) -> float:
    """Largest distance from the total-least-squares line, divided by the path length."""
    P = np.asarray(points2d, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2 or len(P) < 3:
        raise DevelopmentError("straightness needs at least three planar points")
    length = float(np.sum(np.hypot(*np.diff(P, axis=0).T)))
    if length == 0:
        raise DevelopmentError("points do not move; path length is zero")
    Q = P - P.mean(axis=0)
    _, _, vt = np.linalg.svd(Q, full_matrices=False)
    return float(np.max(np.abs(Q @ vt[-1]))) / length


@dataclass(frozen=True)
class Alignment:
    rotation: np.ndarray     # 2x2, determinant +1
    translation: np.ndarray
    max_error: float
    rms_error: float

    def apply(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation


def procrustes(source, target) -> Alignment:
    """Rotation and translation (no scaling, no reflection) taking source onto target."""
    S = np.asarray(source, dtype=float)
    T = np.asarray(target, dtype=float)
    if S.shape != T.shape or S.ndim != 2:
        raise DevelopmentError("procrustes needs two point sets of equal shape")
    cs, ct = S.mean(axis=0), T.mean(axis=0)
    H = (S - cs).T @ (T - ct)
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    D = np.eye(S.shape[1])
    D[-1, -1] = d
    R = Vt.T @ D @ U.T
    t = ct - cs @ R.T
    err = np.linalg.norm(S @ R.T + t - T, axis=1)
    return Alignment(R, t, float(np.max(err)), float(np.sqrt(np.mean(err * err))))


# ---------------------------------------------------------------------------
# Cones
# ---------------------------------------------------------------------------


def _ruling_speed(cone: RuledFamily, w):
    """|de/dw| for the unit ruling direction e = g/|g|, g = (1, A, B)."""
    (A, A1, _), (B, B1, _), _, _ = cone.coefficients(w)
    g2 = 1.0 + A * A + B * B
    gp2 = A1 * A1 + B1 * B1
    dot = A * A1 + B * B1
    return np.sqrt(np.maximum(gp2 - dot * dot / g2, 0.0) / g2)


def _default_ref(family: RuledFamily) -> float:
    lo, hi = family.omega_domain
    return min(max(0.0, lo), hi)


def cone_angle(cone: RuledFamily, omega, omega_ref: Optional[float] = None, nodes: int = 64):
    """Cumulative angle between the rulings at omega_ref and omega."""
    ref = _default_ref(cone) if omega_ref is None else float(omega_ref)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    x, wts = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (w - ref)
    nodes_w = ref + half[:, None] * (x[None, :] + 1.0)
    speed = _ruling_speed(cone, nodes_w)
    theta = np.sum(wts[None, :] * speed, axis=1) * half
    return theta if np.ndim(omega) else float(theta[0])


def _require_cone(cone):
    if not isinstance(cone, RuledFamily) or not cone.is_cone:
        raise DevelopmentError("develop_cone needs a ruled family with C = D = 0")


def develop_cone(cone: RuledFamily, points, omega_ref: Optional[float] = None,
                 s=None) -> DevelopmentMap:
    """Map points of a cone to (rho cos theta, rho sin theta)."""
    _require_cone(cone)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    rho_abs = np.linalg.norm(P, axis=1)
    if np.any(rho_abs < APEX_EXCLUSION):
        k = int(np.argmin(rho_abs))
        raise DevelopmentError(f"point {k} is at the apex (rho = {rho_abs[k]:.3g}); its ruling is ambiguous")
    w = np.asarray(cone.omega_at(P[:, 0], P[:, 1], P[:, 2]), dtype=float)
    (A, _, _), (B, _, _), _, _ = cone.coefficients(w)
    g = np.stack([np.ones_like(A), A, B], axis=1)
    e = g / np.linalg.norm(g, axis=1)[:, None]
    along = np.sum(P * e, axis=1)
    off = np.linalg.norm(P - along[:, None] * e, axis=1)
    if np.any(off > ON_CONE_TOL * np.maximum(1.0, rho_abs)):
        k = int(np.argmax(off))
        raise DevelopmentError(f"point {k} is {off[k]:.3g} off the cone")
    theta = np.atleast_1d(cone_angle(cone, w, omega_ref))
    image = np.stack([along * np.cos(theta), along * np.sin(theta)], axis=1)
    dm = DevelopmentMap(cone.id, image, w, theta, along, None if s is None else np.asarray(s))
    if len(P) >= 3:
        dm.residual = straightness_residual(image)
    return dm


def develop_cone_trajectory(cone: RuledFamily, t: Trajectory,
                            omega_ref: Optional[float] = None) -> DevelopmentMap:
    return develop_cone(cone, t.position, omega_ref, s=t.s)


def cone_pullback(cone: RuledFamily, points2d, omega_ref: Optional[float] = None) -> np.ndarray:
    """Inverse of develop_cone: planar points back onto the cone (rho > 0 side)."""
    _require_cone(cone)
    Q = np.atleast_2d(np.asarray(points2d, dtype=float))
    rho = np.hypot(Q[:, 0], Q[:, 1])
    theta = np.arctan2(Q[:, 1], Q[:, 0])
    ref = _default_ref(cone) if omega_ref is None else float(omega_ref)
    # Newton on theta(w) = target, started from a dense table
    lo, hi = cone.omega_domain
    grid = np.linspace(lo, hi, 401)
    table = np.atleast_1d(cone_angle(cone, grid, ref))
    if np.any(np.diff(table) <= 0):
        raise DevelopmentError("ruling angle is not monotone over the domain")
    w = np.interp(theta, table, grid)
    for _ in range(50):
        dw = (np.atleast_1d(cone_angle(cone, w, ref)) - theta) / _ruling_speed(cone, w)
        w = w - dw
        if np.all(np.abs(dw) < 1e-15 * (1 + np.abs(w))):
            break
    (A, _, _), (B, _, _), _, _ = cone.coefficients(w)
    g = np.stack([np.ones_like(A), A, B], axis=1)
    return rho[:, None] * g / np.linalg.norm(g, axis=1)[:, None]


# ---------------------------------------------------------------------------
# General developable families
# ---------------------------------------------------------------------------


def _frame(family: RuledFamily, w, x_ref: float):
    """Layout rates at w: (kappa, a, b, |g|) with theta' = kappa, c~' = a e~ + b J e~."""
    (A, A1, _), (B, B1, _), (C, C1, _), (D, D1, _) = family.coefficients(w)
    g = np.array([1.0, A, B])
    gp = np.array([0.0, A1, B1])
    cp = np.array([0.0, C1, D1])
    gn = math.sqrt(g @ g)
    e = g / gn
    ep = (gp - e * (e @ gp)) / gn
    n = np.cross(cp + x_ref * gp, g)
    nn = math.sqrt(n @ n)
    if nn == 0:
        raise DevelopmentError(f"ruling at w = {w:.6g} is singular for the layout")
    m = np.cross(n / nn, e)
    return float(ep @ m), float(cp @ e), float(cp @ m), gn


def _layout_rhs(family, x_ref, sign):
    def rhs(w, y):
        kappa, a, b, _ = _frame(family, w, x_ref)
        kappa, b = sign * kappa, sign * b
        c, s = math.cos(y[0]), math.sin(y[0])
        return np.array([kappa, a * c - b * s, a * s + b * c])
    return rhs


def _rk4_to(rhs, w0, y0, w1, h):
    n = max(1, int(math.ceil(abs(w1 - w0) / h)))
    dw = (w1 - w0) / n
    w, y = w0, y0
    for _ in range(n):
        k1 = rhs(w, y)
        k2 = rhs(w + dw / 2, y + dw / 2 * k1)
        k3 = rhs(w + dw / 2, y + dw / 2 * k2)
        k4 = rhs(w + dw, y + dw * k3)
        y = y + dw / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        w += dw
    return y


def develop_points(family: RuledFamily, omega, x, omega_ref: Optional[float] = None,
                   origin=(0.0, 0.0), angle: float = 0.0, step: float = LAYOUT_STEP,
                   x_ref: Optional[float] = None):
    """Planar images of surface points given by (ruling w, abscissa x).

    The ruling at omega_ref is placed through ``origin`` with direction
    ``angle``.  Returns (image, theta, rho) where rho = x |g(w)| is the signed
    distance from the base point c(w) along the ruling.
    """
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    xs = np.broadcast_to(np.asarray(x, dtype=float), w.shape)
    ref = float(w[0]) if omega_ref is None else float(omega_ref)
    if x_ref is None:
        nz = xs[np.abs(xs) > 1e-9]
        x_ref = float(np.median(nz)) if nz.size else 1.0
    kappa0, *_ = _frame(family, ref, x_ref)
    sign = -1.0 if kappa0 < 0 else 1.0
    rhs = _layout_rhs(family, x_ref, sign)
    theta = np.empty(len(w))
    base = np.empty((len(w), 2))
    y_ref = np.array([angle, origin[0], origin[1]], dtype=float)
    # march outwards from the reference in both directions through sorted samples
    order = np.argsort(w)
    upper = [k for k in order if w[k] >= ref]
    lower = [k for k in order[::-1] if w[k] < ref]
    for chain in (upper, lower):
        wc, yc = ref, y_ref
        for k in chain:
            if w[k] != wc:
                yc = _rk4_to(rhs, wc, yc, float(w[k]), step)
                wc = float(w[k])
            theta[k], base[k] = yc[0], yc[1:]
    (A, _, _), (B, _, _), _, _ = family.coefficients(w)
    rho = xs * np.sqrt(1.0 + A * A + B * B)
    image = base + rho[:, None] * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    return image, theta, rho


def develop_ruled(family: RuledFamily, t: Trajectory, omega_ref: Optional[float] = None,
                  origin=(0.0, 0.0), angle: float = 0.0, step: float = LAYOUT_STEP,
                  validate: bool = True) -> DevelopmentMap:
    """Lay out the rulings of a developable family and map the trajectory into the strip."""
    if not isinstance(family, RuledFamily):
        raise DevelopmentError("develop_ruled needs a ruled family")
    X = np.asarray(t.position, dtype=float)
    w = np.asarray(family.omega_at(X[:, 0], X[:, 1], X[:, 2]), dtype=float)
    lo, hi = family.omega_domain
    if np.any(w < lo) or np.any(w > hi):
        raise DevelopmentError(
            f"ruling parameter runs over [{w.min():.6g}, {w.max():.6g}], outside the domain [{lo}, {hi}]")
    if validate:
        lo, hi = float(np.min(w)), float(np.max(w))
        samples = np.linspace(lo, hi, 33) if hi > lo else [lo]
        report = validate_developable(family, samples)
        if not report.integrable:
            raise DevelopmentError(
                f"family is not developable: A'D' - B'C' reaches {report.max_abs:.3g}")
    off = family.level_residual((X[:, 0], X[:, 1], X[:, 2]))
    if np.any(off > ON_SURFACE_TOL):
        raise DevelopmentError(f"trajectory leaves the surface by {float(np.max(off)):.3g}")
    image, theta, rho = develop_points(family, w, X[:, 0], omega_ref, origin, angle, step)
    dm = DevelopmentMap(family.id, image, w, theta, rho, np.asarray(t.s))
    if len(X) >= 3:
        dm.residual = straightness_residual(image)
    return dm
