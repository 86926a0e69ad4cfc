"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a ``PASS``/``FAIL`` line that is printed in the pytest
terminal summary (and immediately with ``-s``).
"""
import math
import time

import numpy as np
import pytest

import oracles
from shortline import bvp
from shortline import develop as dv
from shortline import expr as ex
from shortline import oracle as orc
from shortline import reduction as rd
from shortline import surface as sf
from shortline import tracer as tr


@pytest.fixture
def verdict(record_property):
    def report(n, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {title} ({detail})"
        record_property("criterion", line)
        print(line)
        assert ok, line
    return report


def test_01_great_circles(verdict):
    S = sf.sphere()
    rng = np.random.default_rng(1)
    P = rng.normal(size=(20, 3))
    P /= np.linalg.norm(P, axis=1)[:, None]
    V = [tr.tangent_direction(S, p, rng.normal(size=3)) for p in P]
    t0 = time.perf_counter()
    traces = tr.trace_many(S, list(P), V, 2 * math.pi, 1e-3)
    elapsed = time.perf_counter() - t0
    plane = drift = closure = 0.0
    for p, v, t in zip(P, V, traces):
        n = np.cross(p, v)
        n /= np.linalg.norm(n)
        plane = max(plane, float(np.max(np.abs(t.position @ n))))
        drift = max(drift, rd.plane_constant(t).drift)
        closure = max(closure, float(np.linalg.norm(t.position[-1] - p)))
    ok = plane < 1e-6 and drift < 1e-7 and closure < 1e-6 and elapsed < 2.0
    verdict(1, "great circles", ok,
            f"plane {plane:.2e}, drift {drift:.2e}, closure {closure:.2e}, {elapsed:.2f} s")


def test_02_cylinder_proportionality(verdict):
    S = sf.cylinder()
    c = 0.6
    t = tr.trace(S, ((1, 0, 0), (0, math.sqrt(1 - c * c), c)), 20.0, 1e-3)
    dev = float(np.max(np.abs(t.position[:, 2] - t.velocity[0, 2] * t.s)))
    verdict(2, "cylinder proportionality", dev < 1e-8, f"max |z - z'(0) s| {dev:.2e}")


def _clairaut_drift(S, p0, d0, step):
    v0 = tr.tangent_direction(S, p0, d0)
    return rd.clairaut_constant(tr.trace(S, (p0, v0), 10.0, step)).drift


def test_03_clairaut_conservation(verdict):
    paraboloid = sf.Revolution(ex.parse("2*v^2"))
    E = sf.ellipsoid(1.0, 1.0, 0.5)
    cases = [("paraboloid", paraboloid, np.array([0.5, 0.0, 0.5]), (-math.cos(0.1), math.sin(0.1), 0.0)),
             ("ellipsoid", E, sf.project_to_surface(E, (0.6, 0.2, 0.3)), (0.1, 0.5, 1.0))]
    ok, parts = True, []
    for name, S, p0, d0 in cases:
        coarse = _clairaut_drift(S, p0, d0, 1e-2)
        fine = _clairaut_drift(S, p0, d0, 1e-3)
        exponent = math.log10(coarse / fine)
        ok = ok and fine < 1e-7 and exponent >= 3.5
        parts.append(f"{name} drift {fine:.2e} exponent {exponent:.2f}")
    verdict(3, "Clairaut conservation", ok, "; ".join(parts))


def test_04_quarter_turn(verdict):
    S = sf.Revolution(r_of_v=ex.parse("sqrt(1 - v^2)"))
    worst = 0.0
    for A in np.arange(1, 10) / 10:
        q = rd.revolution_quadrature(S, float(A), float(A), 1.0)
        worst = max(worst, abs(q.value - math.pi / 2))
    verdict(4, "quarter-turn identity", worst < 1e-6, f"max error {worst:.2e}")


def test_05_reduced_equation(verdict):
    closed = 0.0
    for t0, u0, u1, w0 in [(0.0, -0.4, 1.7, -0.3), (0.5, 0.0, 1.0, 0.0), (2.0, -3.0, 2.0, 0.4)]:
        w1 = rd.reduced_wu_quadrature(repr(t0), u0, u1, w0)
        expected = math.tan(math.atan(w0) + (math.atan(u1) - math.atan(u0)) / math.sqrt(1 + t0 * t0))
        closed = max(closed, abs(w1 - expected))
    m = 0.8
    S = sf.circular_cone(m)
    p0 = S.point(0.2, 1.0)
    t = tr.trace(S, (p0, tr.tangent_direction(S, p0, (0.3, 1.0, 0.0))), 1.5, 1e-3)

    def slopes(i):
        x, y, _ = t.position[i]
        r = math.hypot(x, y)
        return m * x / r, m * y / r

    start = rd.reduced_state_from_slopes(*slopes(0), t.velocity[0, 1] / t.velocity[0, 0])
    field = 0.0
    for i in range(0, len(t), 25):
        p, q = slopes(i)
        w = rd.reduced_wu_quadrature(repr(m), start.u, q / p, start.w)
        field = max(field, abs(rd.direction_from_w(p, q, w) - t.velocity[i, 1] / t.velocity[i, 0]))
    verdict(5, "reduced equation", closed < 1e-10 and field < 1e-5,
            f"closed form {closed:.2e}, cone direction field {field:.2e}")


def test_06_integrability(verdict):
    fields = [sf.sphere(), sf.ellipsoid(1.0, 2.0, 0.5), sf.cylinder(),
              sf.ImplicitGradient(ex.parse("sin(x*y) + z^3 - exp(x)*z")),
              sf.graph("x^3 - 3*x*y^2"), sf.graph("atan(x) * cos(y)")]
    P = np.random.default_rng(6).uniform(-2, 2, size=(1000, 3))
    worst = 0.0
    with np.errstate(all="ignore"):
        for s in fields:
            res = np.asarray(sf.integrability_residual(s, P))
            res = res[np.isfinite(res)]  # zero normals (e.g. the cylinder axis) carry no plane
            worst = max(worst, float(np.max(np.abs(res))))
    twist = sf.NormalField(ex.parse("y"), ex.parse("-x"), ex.parse("1"))
    tw = np.asarray(sf.integrability_residual(twist, P))
    ok = worst < 1e-12 and bool(np.all(tw == 2.0))
    verdict(6, "integrability checker", ok,
            f"gradient fields max {worst:.2e}, (y,-x,1) residual in [{tw.min()}, {tw.max()}]")


def test_07_formulation_equivalence(verdict):
    worst, parts = 0.0, []
    for name, zeta, (x0, y0, p0) in [("sphere cap", "sqrt(1 - x^2 - y^2)", (0.1, 0.2, 0.3)),
                                     ("saddle", "x^2 - y^2", (-0.3, 0.1, 0.4))]:
        g = sf.graph(zeta)
        P0, V0 = tr.graph_start(g, x0, y0, p0)
        t = tr.trace(g, (P0, V0), 1.0, 1e-3)
        gt = tr.trace_graph_ode(g, x0, y0, p0, t.position[-1, 0] + 0.01, 1e-3)
        d = tr.graph_trace_deviation(gt, t)
        worst = max(worst, d)
        parts.append(f"{name} {d:.2e}")
    verdict(7, "formulation equivalence", worst < 1e-6, ", ".join(parts))


def test_08_residual_order(verdict):
    E = sf.ellipsoid(1.0, 1.5, 0.7)
    p0 = sf.project_to_surface(E, (0.3, 0.4, 0.0))
    v0 = tr.tangent_direction(E, p0, (0.2, 0.3, 1.0))
    ok, parts = True, []
    for form in ("symmetric", "phi-param", "x-param"):
        factor, _, _, _ = tr.residual_order(E, (p0, v0), 1.0, 2e-3, form)
        ok = ok and 3 <= factor <= 5
        parts.append(f"{form} {factor:.3f}")
    verdict(8, "residual order", ok, ", ".join(parts))


def test_09_development_straightness(verdict):
    cone = sf.circular_cone(1.0)
    p0 = cone.point(0.2, 1.0)
    tc = tr.trace(cone, (p0, tr.tangent_direction(cone, p0, (0.3, 1.0, 0.0))), 1.5, 1e-3)
    tangent = sf.RuledFamily(ex.parse("2*w"), ex.parse("3*w^2"), ex.parse("-w^2"), ex.parse("-2*w^3"),
                             omega_domain=(0.2, 1.5))
    q0 = tangent.point(0.6, 1.5)
    tt = tr.trace(tangent, (q0, tr.tangent_direction(tangent, q0, (0.0, 1.0, -1.0))), 0.8, 1e-3)
    ok, parts = True, []
    for name, dm, t in [("cone", dv.develop_cone(cone, tc.position), tc),
                        ("tangent developable", dv.develop_ruled(tangent, tt), tt)]:
        rel = abs(dm.length() - t.s[-1]) / t.s[-1]
        ok = ok and dm.residual < 1e-4 and rel < 1e-6
        parts.append(f"{name} residual {dm.residual:.2e}, length {rel:.2e}")
    verdict(9, "development straightness", ok, "; ".join(parts))


def test_10_bvp_against_mesh_oracle(verdict):
    cases = [("sphere", sf.sphere(), None, lambda P: np.abs(P[:, 2]) < 0.8),
             ("ellipsoid", sf.ellipsoid(1.0, 1.0, 0.5), None, lambda P: np.abs(P[:, 2]) < 0.4),
             ("paraboloid", sf.graph("x^2 + y^2"), ((-2, 2), (-2, 2)),
              lambda P: (np.abs(P[:, 0]) < 1) & (np.abs(P[:, 1]) < 1)),
             ("cone", sf.Revolution(ex.parse("v"), name="cone"), (0.0, 2.5),
              lambda P: (np.hypot(P[:, 0], P[:, 1]) > 0.7) & (np.hypot(P[:, 0], P[:, 1]) < 1.5))]
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    ok, lo, hi, pairs = True, math.inf, 0.0, 0
    for name, S, bounds, usable in cases:
        m = orc.mesh_surface(S, 200, bounds)
        idx = np.flatnonzero(usable(m.vertices))
        k = 0
        while k < 5:
            i, j = rng.choice(idx, 2, replace=False)
            a, b = m.vertices[i], m.vertices[j]
            if np.linalg.norm(a - b) < 0.3:
                continue
            if name == "cone":
                # keep the pair on one side of the apex so the shortest path is a smooth geodesic
                gap = math.remainder(math.atan2(a[1], a[0]) - math.atan2(b[1], b[0]), 2 * math.pi)
                if abs(gap) > 2.0:
                    continue
            d = orc.dijkstra_distance(m, a, b)
            r = bvp.connect(bvp.ConnectRequest(S, a, b))
            ratio = d / r.length
            lo, hi = min(lo, ratio), max(hi, ratio)
            ok = ok and r.length <= d + orc.snap_slack(m, a, b) and 1 - 1e-6 <= ratio <= 1.03
            pairs += 1
            k += 1
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60
    verdict(10, "BVP vs mesh oracle", ok, f"{pairs} pairs, ratio in [{lo:.5f}, {hi:.5f}], {elapsed:.1f} s")


def test_11_ad_correctness(verdict):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        e = ex.parse(oracles.random_expression(rng, 4))
        p = rng.uniform(-1, 1, 3)
        j = ex.eval_jet2(e, p)
        _, g, H = oracles.fd_gradient_hessian(e, p)
        worst = max(worst, oracles.rel_err(j.gradient, g), oracles.rel_err(j.hessian_matrix, H))
    verdict(11, "AD correctness", worst < 1e-5, f"max relative error {worst:.2e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
