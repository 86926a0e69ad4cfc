"""Graph shortest paths on a sampled surface, used as an independent upper bound.

The surface is sampled on a structured parameter grid.  Each vertex is joined
to every grid offset whose local metric length is within ``stencil`` steps of
the longer cell side, so edge directions stay dense even where cells are
stretched.  Edge lengths are measured along the parameter segment on the
surface (two half chords, Richardson-extrapolated), so every graph path is
close to a curve on the surface and its length bounds the geodesic distance
from above up to the small extrapolation error.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from . import expr as ex
from .surface import (Graph, ImplicitGradient, Revolution, RuledFamily, Surface, SurfaceError,
                      level_value)

MAX_FAILED_FRACTION = 1e-3
ON_SURFACE_TOL = 1e-9
STENCIL = 3
MAX_OFFSET = 12
SNAP_FACTOR = 1.001


class OracleError(ValueError):
    pass


@dataclass
class SurfaceMesh:
    vertices: np.ndarray     # (N, 3)
    edges: np.ndarray        # (E, 2)
    lengths: np.ndarray      # (E,)
    resolution: int
    surface_id: str = ""
    extras: dict = field(default_factory=dict)

    @cached_property
    def matrix(self):
        n = len(self.vertices)
        return coo_matrix((self.lengths, (self.edges[:, 0], self.edges[:, 1])), shape=(n, n)).tocsr()

    @cached_property
    def tree(self):
        return cKDTree(self.vertices)

    @property
    def max_edge_length(self) -> float:
        return float(np.max(self.lengths))

    def components(self) -> int:
        return int(connected_components(self.matrix, directed=False)[0])

    def is_connected(self) -> bool:
        return self.components() == 1

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kind", "i", "j_or_x", "y", "z_or_length"])
            for k, (x, y, z) in enumerate(self.vertices):
                w.writerow(["v", k, repr(float(x)), repr(float(y)), repr(float(z))])
            for (a, b), L in zip(self.edges, self.lengths):
                w.writerow(["e", int(a), int(b), "", repr(float(L))])


# ---------------------------------------------------------------------------
# Parametrisations
# ---------------------------------------------------------------------------


@dataclass
class _Grid:
    param: Callable      # (u, v) arrays of grid coordinates (fractional indices) -> (..., 3)
    rows: int
    cols: int
    periodic: bool


def _ray_solver(s: ImplicitGradient):
    """Points of a star-shaped level set F = 0 by Newton along rays from the origin."""
    def solve(d):
        t = np.ones(d.shape[:-1])
        for _ in range(60):
            P = d * t[..., None]
            j = ex.jet(s.F, {"x": P[..., 0], "y": P[..., 1], "z": P[..., 2]}, 1, check=False)
            F = ex._dense(j.v, t)
            dF = sum(ex._dense(j.g[k], t) * d[..., k] for k in range(3))
            with np.errstate(all="ignore"):
                step = F / dF
            step = np.where(np.isfinite(step), step, 0.0)
            t = np.clip(t - step, 0.05 * t, 20.0 * t)
            if np.all(np.abs(step) <= 1e-15 * t):
                break
        return d * t[..., None]
    return solve


def _lat_long(s: ImplicitGradient, n: int) -> _Grid:
    solve = _ray_solver(s)
    dth, dph = math.pi / n, math.pi / n

    def param(u, v):
        th, ph = u * dth, v * dph
        d = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)
        return solve(d)

    return _Grid(param, n + 1, 2 * n, True)


def _graph_grid(s: Graph, n: int, bounds) -> _Grid:
    (x0, x1), (y0, y1) = bounds
    hx, hy = (x1 - x0) / n, (y1 - y0) / n

    def param(u, v):
        x, y = x0 + u * hx, y0 + v * hy
        return np.stack([x, y, s.height(x, y) + 0.0 * x], axis=-1)

    return _Grid(param, n + 1, n + 1, False)


def _revolution_grid(s: Revolution, n: int, bounds) -> _Grid:
    if s.z_of_v is None:
        raise OracleError("meshing a surface of revolution needs its profile z(v)")
    v0, v1 = bounds
    hv, dph = (v1 - v0) / n, math.pi / n

    def param(u, v):
        r, ph = v0 + u * hv, v * dph
        return np.stack([r * np.cos(ph), r * np.sin(ph), s.profile(r) + 0.0 * r], axis=-1)

    return _Grid(param, n + 1, 2 * n, True)


def _ruled_grid(s: RuledFamily, n: int, bounds) -> _Grid:
    w0, w1 = s.omega_domain
    x0, x1 = bounds
    hw, hx = (w1 - w0) / n, (x1 - x0) / n
    zero = ex.Const(0.0)

    def param(u, v):
        w, x = w0 + u * hw, x0 + v * hx
        A, B = (ex.evaluate(e, w=w) + 0.0 * w for e in (s.A, s.B))
        C, D = (ex.evaluate(e or zero, w=w) + 0.0 * w for e in (s.C, s.D))
        return np.stack([x + 0.0 * w, A * x + C, B * x + D], axis=-1)

    return _Grid(param, n + 1, n + 1, False)


def _grid_for(s: Surface, n: int, bounds) -> _Grid:
    if isinstance(s, Graph):
        return _graph_grid(s, n, bounds or ((-1.0, 1.0), (-1.0, 1.0)))
    if isinstance(s, Revolution):
        if bounds is None:
            raise OracleError("revolution meshes need radial bounds (v0, v1)")
        return _revolution_grid(s, n, bounds)
    if isinstance(s, RuledFamily):
        if bounds is None:
            raise OracleError("ruled meshes need abscissa bounds (x0, x1)")
        return _ruled_grid(s, n, bounds)
    if isinstance(s, ImplicitGradient):
        return _lat_long(s, n)
    raise OracleError(f"no parametrisation available for {s.kind} surfaces")


# ---------------------------------------------------------------------------
# Mesh construction
# ---------------------------------------------------------------------------


def _half_plane_offsets(kmax: int):
    out = []
    for di in range(0, kmax + 1):
        for dj in range(-kmax, kmax + 1):
            if (di == 0 and dj <= 0) or math.gcd(di, abs(dj)) != 1:
                continue
            out.append((di, dj))
    return out


def _metric(P, periodic):
    """Per-vertex first fundamental form per unit index step."""
    Pu = np.gradient(P, axis=0)
    if periodic:
        Pv = 0.5 * (np.roll(P, -1, axis=1) - np.roll(P, 1, axis=1))
    else:
        Pv = np.gradient(P, axis=1)
    return (np.sum(Pu * Pu, -1), np.sum(Pu * Pv, -1), np.sum(Pv * Pv, -1))


def _merge_degenerate_rows(P):
    """Index map that collapses rows whose vertices all coincide (poles, apexes)."""
    rows, cols = P.shape[:2]
    ids = np.arange(rows * cols).reshape(rows, cols)
    for i in range(rows):
        if np.max(np.linalg.norm(P[i] - P[i, 0], axis=-1)) < 1e-14:
            ids[i, :] = ids[i, 0]
    return ids


def _edge_lengths(grid: _Grid, seg, a, b):
    """Length of the surface curve over each parameter segment, Romberg-extrapolated.

    Chord sums over 1, 2 and 4 pieces converge like h^2; two extrapolation
    levels leave an error of order h^6, far below the stencil's direction error.
    """
    I, J, di, dj = seg.T.astype(float)
    with np.errstate(all="ignore"):
        q1 = grid.param(I + 0.25 * di, J + 0.25 * dj)
        q2 = grid.param(I + 0.5 * di, J + 0.5 * dj)
        q3 = grid.param(I + 0.75 * di, J + 0.75 * dj)
    d = lambda u, v: np.linalg.norm(v - u, axis=1)
    s1 = d(a, b)
    s2 = d(a, q2) + d(q2, b)
    s4 = d(a, q1) + d(q1, q2) + d(q2, q3) + d(q3, b)
    r1, r2 = (4 * s2 - s1) / 3, (4 * s4 - s2) / 3
    r = (16 * r2 - r1) / 15
    return np.where(np.isfinite(r), np.maximum(r, s4), s1)


def mesh_surface(s: Surface, resolution: int, bounds=None, stencil: int = STENCIL) -> SurfaceMesh:
    """Sample ``s`` on a structured grid and join vertices by metric-adapted edges.

    Closed star-shaped level sets use a latitude-longitude grid of
    ``resolution`` rows by ``2 resolution`` columns; graphs use a square grid
    over ``bounds`` (default [-1, 1]^2); revolutions use radius bounds (v0, v1)
    and ruled families abscissa bounds (x0, x1).
    """
    n = int(resolution)
    if n < 2:
        raise OracleError("resolution must be at least 2")
    grid = _grid_for(s, n, bounds)
    u, v = np.meshgrid(np.arange(grid.rows, dtype=float), np.arange(grid.cols, dtype=float),
                       indexing="ij")
    with np.errstate(all="ignore"):
        P = grid.param(u, v)
    finite = np.all(np.isfinite(P), axis=-1)
    if isinstance(s, ImplicitGradient):
        with np.errstate(all="ignore"):
            res = np.abs(level_value(s, np.where(finite[..., None], P, 1.0)))
        ok = finite & (res < ON_SURFACE_TOL * np.maximum(1.0, np.linalg.norm(P, axis=-1)))
    else:
        ok = finite
    failed = int(np.count_nonzero(~ok))
    if failed > MAX_FAILED_FRACTION * ok.size:
        raise OracleError(f"{failed} of {ok.size} grid points could not be placed on the surface")

    ids = _merge_degenerate_rows(P)
    Gi, Gij, Gj = _metric(P, grid.periodic)
    # radius sqrt(K^2 + 1) admits the (K, 1) offsets, which closes the widest direction gap
    reach = math.sqrt(stencil * stencil + 1) * np.sqrt(np.maximum(Gi, Gj)) * (1 + 1e-9)
    kmax = min(MAX_OFFSET, grid.cols // 2 if grid.periodic else grid.cols - 1)
    src, dst, mids = [], [], []
    rows, cols = grid.rows, grid.cols
    for di, dj in _half_plane_offsets(kmax):
        metric_len = np.sqrt(np.maximum(Gi * di * di + 2 * Gij * di * dj + Gj * dj * dj, 0.0))
        keep = metric_len <= reach
        if max(abs(di), abs(dj)) == 1 and (di == 0 or dj == 0):
            keep = np.ones_like(keep)
        i0 = np.arange(rows - di)
        if grid.periodic:
            j0 = np.arange(cols)
        else:
            j0 = np.arange(max(0, -dj), min(cols, cols - dj))
        if len(i0) == 0 or len(j0) == 0:
            continue
        I, J = np.meshgrid(i0, j0, indexing="ij")
        sel = keep[I, J] & ok[I, J]
        I, J = I[sel], J[sel]
        I2, J2 = I + di, (J + dj) % cols if grid.periodic else J + dj
        good = ok[I2, J2]
        I, J, I2, J2 = I[good], J[good], I2[good], J2[good]
        src.append(ids[I, J])
        dst.append(ids[I2, J2])
        mids.append(np.stack([I, J, np.full(len(I), di), np.full(len(I), dj)], axis=-1))
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    mids = np.concatenate(mids)
    flat = P.reshape(-1, 3)
    length = _edge_lengths(grid, mids, flat[src], flat[dst])

    keep = (src != dst) & (length > 0)
    src, dst, length = src[keep], dst[keep], length[keep]
    # renumber the used vertices compactly, keep the shortest of duplicate edges
    used = np.unique(np.concatenate([src, dst, ids[ok].ravel()]))
    remap = np.full(flat.shape[0], -1)
    remap[used] = np.arange(len(used))
    a_, b_ = remap[src], remap[dst]
    lo, hi = np.minimum(a_, b_), np.maximum(a_, b_)
    order = np.lexsort((length, hi, lo))
    lo, hi, length = lo[order], hi[order], length[order]
    first = np.ones(len(lo), dtype=bool)
    first[1:] = (lo[1:] != lo[:-1]) | (hi[1:] != hi[:-1])
    edges = np.stack([lo[first], hi[first]], axis=1)
    mesh = SurfaceMesh(flat[used], edges, length[first], n, s.id,
                       {"failed_vertices": failed, "grid": (rows, cols)})
    return mesh


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------


def snap(m: SurfaceMesh, point) -> tuple:
    """Nearest mesh vertex to ``point`` and the straight-line distance to it."""
    d, k = m.tree.query(np.asarray(point, dtype=float))
    return int(k), float(d)


def snap_slack(m: SurfaceMesh, a, b) -> float:
    """Allowance for moving both endpoints to their nearest vertices.

    The factor covers the difference between a short surface path and its chord.
    """
    return SNAP_FACTOR * (snap(m, a)[1] + snap(m, b)[1])


@dataclass(frozen=True)
class MeshPath:
    length: float
    slack: float
    vertices: np.ndarray     # (K, 3) along the path

    def __float__(self):
        return self.length


def shortest_path(m: SurfaceMesh, a, b) -> MeshPath:
    ia, da = snap(m, a)
    ib, db = snap(m, b)
    slack = SNAP_FACTOR * (da + db)
    if ia == ib:
        return MeshPath(0.0, slack, m.vertices[[ia]])
    dist, pred = dijkstra(m.matrix, directed=False, indices=ia, return_predecessors=True)
    if not np.isfinite(dist[ib]):
        raise OracleError("endpoints lie in disconnected parts of the mesh")
    path = [ib]
    while path[-1] != ia:
        path.append(int(pred[path[-1]]))
    return MeshPath(float(dist[ib]), slack, m.vertices[path[::-1]])


def dijkstra_distance(m: SurfaceMesh, a, b) -> float:
    """Shortest edge-graph length between the vertices nearest ``a`` and ``b``."""
    ia, _ = snap(m, a)
    ib, _ = snap(m, b)
    if ia == ib:
        return 0.0
    d = dijkstra(m.matrix, directed=False, indices=ia)[ib]
    if not np.isfinite(d):
        raise OracleError("endpoints lie in disconnected parts of the mesh")
    return float(d)
