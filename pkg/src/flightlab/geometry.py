"""Boundary representations, exact nearest-segment distance and side labels.

Every simulation in the package asks two questions of a boundary: how far is
this point from it, and on which side of it does the point lie.  Polyline and
lattice boundaries answer both through a uniform spatial hash of segments that
only accelerates the search; the distance returned is always the exact
Euclidean minimum over segments, with ties broken by the lowest segment id.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from numba import njit
from scipy.spatial import ConvexHull
from scipy.spatial import QhullError

from .errors import ConfigError, RangeError, UnsupportedOperationError

LINE2D = "analytic-line2d"
PLANE3D = "analytic-plane3d"
POLYLINE2D = "polyline2d"
LATTICE2D = "lattice-path2d"
KINDS = (LINE2D, PLANE3D, POLYLINE2D, LATTICE2D)
ANALYTIC = (LINE2D, PLANE3D)

# Query points are accepted up to this many curve diameters outside the bbox.
RANGE_PAD_DIAMETERS = 8.0
# rings searched per grid level before moving to the next coarser one
RING_LIMIT = 4
GRID_COARSENING = 4


class Side(IntEnum):
    RIGHT = -1
    AMBIGUOUS = 0
    LEFT = 1

    @property
    def label(self) -> str:
        return self.name.lower()


SIDE_NAMES = {int(s): s.label for s in Side}


@dataclass(frozen=True, eq=False)
class Boundary:
    kind: str
    vertices: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown boundary kind {self.kind!r}")
        if self.kind in ANALYTIC:
            object.__setattr__(self, "vertices", None)
            return
        if self.vertices is None or len(self.vertices) == 0:
            raise ConfigError("boundary has no vertices")
        if self.kind == LATTICE2D:
            v = np.asarray(self.vertices, dtype=np.int64)
        else:
            v = np.asarray(self.vertices, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ConfigError("vertices must be an (n, 2) array")
        if len(v) < 2:
            raise ConfigError("a curve needs at least 2 vertices")
        steps = np.diff(v, axis=0)
        if self.kind == POLYLINE2D:
            if np.any(np.all(steps == 0, axis=1)):
                raise ConfigError("consecutive polyline vertices must differ")
        else:
            if np.any(np.abs(steps).sum(axis=1) != 1):
                raise ConfigError("lattice path steps must be unit moves")
            keys = v[:, 0] * (1 << 32) + v[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ConfigError("lattice path is not self-avoiding")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return 3 if self.kind == PLANE3D else 2

    @property
    def n_segments(self) -> int:
        return 0 if self.vertices is None else len(self.vertices) - 1

    @property
    def closed(self) -> bool:
        return (self.vertices is not None and len(self.vertices) > 2
                and bool(np.all(self.vertices[0] == self.vertices[-1])))

    def segments(self) -> np.ndarray:
        """(n_segments, 4) float array of ax, ay, bx, by."""
        v = np.asarray(self.vertices, dtype=np.float64)
        return np.ascontiguousarray(np.hstack([v[:-1], v[1:]]))

    def to_dict(self) -> dict:
        verts = None if self.vertices is None else self.vertices.tolist()
        return {"kind": self.kind, "vertices": verts, "meta": self.meta}

    @classmethod
    def from_dict(cls, obj: dict) -> "Boundary":
        try:
            kind = obj["kind"]
        except KeyError as exc:
            raise ConfigError("boundary JSON lacks 'kind'") from exc
        verts = obj.get("vertices")
        if kind in ANALYTIC:
            verts = None
        return cls(kind, None if verts is None else np.asarray(verts),
                   dict(obj.get("meta") or {}))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path) -> "Boundary":
        return cls.from_dict(json.loads(Path(path).read_text()))


def curve_diameter(vertices) -> float:
    pts = np.unique(np.asarray(vertices, dtype=np.float64), axis=0)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear: extremes along the principal direction
            u = pts[-1] - pts[0]
            proj = pts @ (u / np.linalg.norm(u))
            pts = pts[[np.argmin(proj), np.argmax(proj)]]
    best = 0.0
    for i in range(len(pts) - 1):
        d = np.sqrt(((pts[i + 1:] - pts[i]) ** 2).sum(axis=1)).max()
        best = max(best, float(d))
    return best


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def seg_point_dist(px, py, ax, ay, bx, by):
    """Distance from p to segment ab and the unclamped projection parameter."""
    dx = bx - ax
    dy = by - ay
    t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    tc = min(max(t, 0.0), 1.0)
    qx = ax + tc * dx - px
    qy = ay + tc * dy - py
    return math.sqrt(qx * qx + qy * qy), t


@njit(cache=True)
def traverse_segment(ax, ay, bx, by, x0, y0, h, nx, ny, out):
    """Write the flat ids of grid cells met by segment ab into ``out``.

    A point belongs to the cell ``floor((p - origin) / h)`` clamped to the
    grid, so cells are half-open except along the far grid edges.  Returns the
    number of ids written (duplicates possible).
    """
    fx0 = (ax - x0) / h
    fx1 = (bx - x0) / h
    fy0 = (ay - y0) / h
    fy1 = (by - y0) / h
    nt = 0
    ts = np.empty(2 + int(abs(math.floor(fx1) - math.floor(fx0)))
                  + int(abs(math.floor(fy1) - math.floor(fy0))) + 2)
    kind = np.zeros(ts.shape[0], dtype=np.int64)
    idx = np.zeros(ts.shape[0], dtype=np.int64)
    ts[0] = 0.0
    ts[1] = 1.0
    nt = 2
    if fx1 != fx0:
        lo = math.floor(min(fx0, fx1)) + 1
        hi = math.ceil(max(fx0, fx1)) - 1
        for k in range(lo, hi + 1):
            ts[nt] = (k - fx0) / (fx1 - fx0)
            kind[nt] = 1
            idx[nt] = k
            nt += 1
    if fy1 != fy0:
        lo = math.floor(min(fy0, fy1)) + 1
        hi = math.ceil(max(fy0, fy1)) - 1
        for k in range(lo, hi + 1):
            ts[nt] = (k - fy0) / (fy1 - fy0)
            kind[nt] = 2
            idx[nt] = k
            nt += 1
    order = np.argsort(ts[:nt], kind="mergesort")
    n = 0
    prev = 0.0
    for m in range(nt):
        o = order[m]
        t = ts[o]
        if m > 0:
            tm = 0.5 * (prev + t)
            i = int(math.floor(fx0 + tm * (fx1 - fx0)))
            j = int(math.floor(fy0 + tm * (fy1 - fy0)))
            i = min(max(i, 0), nx - 1)
            j = min(max(j, 0), ny - 1)
            out[n] = i * ny + j
            n += 1
        if kind[o] == 1:
            i = idx[o]
        elif o == 1:
            i = int(math.floor(fx1))
        elif o == 0:
            i = int(math.floor(fx0))
        else:
            i = int(math.floor(fx0 + t * (fx1 - fx0)))
        if kind[o] == 2:
            j = idx[o]
        elif o == 1:
            j = int(math.floor(fy1))
        elif o == 0:
            j = int(math.floor(fy0))
        else:
            j = int(math.floor(fy0 + t * (fy1 - fy0)))
        i = min(max(i, 0), nx - 1)
        j = min(max(j, 0), ny - 1)
        out[n] = i * ny + j
        n += 1
        prev = t
    return n


@njit(cache=True)
def max_cells_for(ax, ay, bx, by, x0, y0, h):
    return (int(abs(math.floor((bx - x0) / h) - math.floor((ax - x0) / h)))
            + int(abs(math.floor((by - y0) / h) - math.floor((ay - y0) / h)))) * 2 + 8


@njit(cache=True)
def _update(s, seg, px, py, state):
    # state: best distance, its segment (lowest id on ties), that segment's t
    d, t = seg_point_dist(px, py, seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3])
    if d < state[0] or (d == state[0] and s < state[1]):
        state[0] = d
        state[1] = s
        state[2] = t


@njit(cache=True)
def _ring_search(px, py, seg, x0, y0, h, nx, ny, cell_start, cell_items, off,
                 ring_limit, state):
    """Ring-by-ring scan of one grid level; True once the nearest segment is
    certain (every unexamined segment is at least k h away)."""
    ci = int(math.floor((px - x0) / h))
    cj = int(math.floor((py - y0) / h))
    ci = min(max(ci, 0), nx - 1)
    cj = min(max(cj, 0), ny - 1)
    maxring = max(max(ci, nx - 1 - ci), max(cj, ny - 1 - cj))
    k = 0
    while k <= maxring:
        if ring_limit >= 0 and k > ring_limit:
            return False
        i_lo = max(ci - k, 0)
        i_hi = min(ci + k, nx - 1)
        for i in range(i_lo, i_hi + 1):
            if i == ci - k or i == ci + k:
                j_lo = max(cj - k, 0)
                j_hi = min(cj + k, ny - 1)
                jstep = 1
            else:
                j_lo = cj - k
                j_hi = cj + k
                jstep = 2 * k
            j = j_lo
            while j <= j_hi:
                if 0 <= j < ny:
                    c = off + i * ny + j
                    for m in range(cell_start[c], cell_start[c + 1]):
                        _update(cell_items[m], seg, px, py, state)
                j += jstep
        if state[0] < k * h:
            return True
        k += 1
    return True


@njit(cache=True)
def nearest_query(px, py, seg, x0, y0, lh, lnx, lny, cell_start, cell_items, loff,
                  closed, state):
    """Exact nearest segment of p; fills ``state`` (see ``_update``).

    The grids get 4x coarser level by level; each level is searched for at
    most RING_LIMIT rings, the coarsest one exhaustively.
    """
    state[0] = np.inf
    state[1] = -1.0
    state[2] = 0.0
    top = lh.shape[0] - 1
    for lev in range(top + 1):
        limit = -1 if lev == top else RING_LIMIT
        if _ring_search(px, py, seg, x0, y0, lh[lev], lnx[lev], lny[lev], cell_start,
                        cell_items, loff[lev], limit, state):
            return


@njit(cache=True)
def _vertex_side(seg, i, j, vx, vy, px, py):
    """Side of p at the vertex shared by segments i (incoming) and j
    (outgoing): sign of (p - v) against the sum of their left unit normals."""
    ux = seg[i, 2] - seg[i, 0]
    uy = seg[i, 3] - seg[i, 1]
    wx = seg[j, 2] - seg[j, 0]
    wy = seg[j, 3] - seg[j, 1]
    lu = math.sqrt(ux * ux + uy * uy)
    lw = math.sqrt(wx * wx + wy * wy)
    dot = (px - vx) * (-uy / lu - wy / lw) + (py - vy) * (ux / lu + wx / lw)
    if dot > 0.0:
        return 1
    if dot < 0.0:
        return -1
    return 0


@njit(cache=True)
def side_code(state, seg, px, py, closed):
    """Left (+1), right (-1) or ambiguous (0) from a filled query state.

    Off the segment ends this is the sign of the cross product with the
    nearest segment.  When the nearest point is a vertex joining two segments
    the two cross products can disagree, so the vertex normal decides; at the
    free ends of an open curve the answer is ambiguous.
    """
    if state[0] == 0.0:
        return 0
    s = int(state[1])
    t = state[2]
    last = seg.shape[0] - 1
    if t <= 0.0:
        if s == 0 and not closed:
            return 0
        return _vertex_side(seg, s - 1 if s > 0 else last, s, seg[s, 0], seg[s, 1], px, py)
    if t >= 1.0:
        if s == last and not closed:
            return 0
        return _vertex_side(seg, s, s + 1 if s < last else 0, seg[s, 2], seg[s, 3], px, py)
    cross = ((seg[s, 2] - seg[s, 0]) * (py - seg[s, 1])
             - (seg[s, 3] - seg[s, 1]) * (px - seg[s, 0]))
    if cross > 0.0:
        return 1
    if cross < 0.0:
        return -1
    return 0


@njit(cache=True)
def _batch_query(pts, seg, x0, y0, lh, lnx, lny, cell_start, cell_items,
                 loff, closed, dist, ids, sides):
    state = np.empty(3)
    for q in range(pts.shape[0]):
        nearest_query(pts[q, 0], pts[q, 1], seg, x0, y0, lh, lnx, lny,
                      cell_start, cell_items, loff, closed, state)
        dist[q] = state[0]
        ids[q] = int(state[1])
        sides[q] = side_code(state, seg, pts[q, 0], pts[q, 1], closed)


@njit(cache=True)
def _cell_pairs(seg, x0, y0, h, nx, ny):
    total = 0
    for s in range(seg.shape[0]):
        total += max_cells_for(seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3], x0, y0, h)
    cells = np.empty(total, dtype=np.int64)
    owners = np.empty(total, dtype=np.int64)
    n = 0
    for s in range(seg.shape[0]):
        m = traverse_segment(seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3],
                             x0, y0, h, nx, ny, cells[n:])
        owners[n:n + m] = s
        n += m
    return cells[:n], owners[:n]


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DistanceIndex:
    """Immutable nearest-segment index over a boundary.

    Segments are bucketed on a pyramid of uniform grids sharing one origin;
    level L has cell side ``level_cell[L]`` and ``level_shape[L]`` cells, and
    its bucket boundaries start at ``cell_start[level_offset[L]]``.  For
    analytic boundaries the arrays are empty and distance is |y| (line) or
    |z| (plane).
    """

    kind: str
    dim: int
    segments: np.ndarray
    origin: tuple
    level_cell: np.ndarray
    level_shape: np.ndarray
    level_offset: np.ndarray
    cell_start: np.ndarray
    cell_items: np.ndarray
    bbox_lo: np.ndarray
    bbox_hi: np.ndarray
    diameter: float
    closed: bool

    @property
    def cell(self) -> float:
        return float(self.level_cell[0])

    @property
    def analytic(self) -> bool:
        return self.kind in ANALYTIC

    @property
    def n_segments(self) -> int:
        return self.segments.shape[0]

    def kernel_args(self):
        return (self.segments, self.origin[0], self.origin[1], self.level_cell,
                self.level_shape[:, 0], self.level_shape[:, 1], self.cell_start,
                self.cell_items, self.level_offset, self.closed)

    def in_range(self, p) -> bool:
        if self.analytic:
            return True
        pad = RANGE_PAD_DIAMETERS * max(self.diameter, 1e-300)
        p = np.asarray(p, dtype=np.float64)
        return bool(np.all(p >= self.bbox_lo - pad) and np.all(p <= self.bbox_hi + pad))


def _bucket(seg, x0, y0, h, nx, ny):
    """CSR bucket lists (starts, items) of the segments meeting each cell."""
    cells, owners = _cell_pairs(seg, x0, y0, h, nx, ny)
    key = np.unique(cells * seg.shape[0] + owners)
    starts = np.zeros(nx * ny + 1, dtype=np.int64)
    np.add.at(starts, key // seg.shape[0] + 1, 1)
    return np.cumsum(starts), key % seg.shape[0]


def build_index(boundary: Boundary) -> DistanceIndex:
    """Build the segment hash.  Finest cell size is max(median segment
    length, diameter / 1024); each segment is listed in every cell it passes
    through, on every level of the pyramid.
    """
    if boundary.kind in ANALYTIC:
        dim = boundary.dim
        empty = np.zeros(0, dtype=np.int64)
        return DistanceIndex(boundary.kind, dim, np.zeros((0, 4)), (0.0, 0.0), np.ones(1),
                             np.ones((1, 2), dtype=np.int64), empty, empty, empty,
                             np.full(dim, -np.inf), np.full(dim, np.inf), math.inf, False)
    if boundary.vertices is None or len(boundary.vertices) == 0:
        raise ConfigError("cannot index an empty vertex list")
    seg = boundary.segments()
    v = np.asarray(boundary.vertices, dtype=np.float64)
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    diameter = curve_diameter(v)
    lengths = np.hypot(seg[:, 2] - seg[:, 0], seg[:, 3] - seg[:, 1])
    h = max(float(np.median(lengths)), diameter / 1024.0)
    cells, shapes, offsets, starts, items = [], [], [], [], []
    base = 0
    while True:
        nx = int(math.floor((hi[0] - lo[0]) / h)) + 1
        ny = int(math.floor((hi[1] - lo[1]) / h)) + 1
        st, it = _bucket(seg, lo[0], lo[1], h, nx, ny)
        cells.append(h)
        shapes.append((nx, ny))
        offsets.append(sum(len(a) for a in starts))
        starts.append(st + base)
        items.append(it)
        base += len(it)
        if max(nx, ny) <= 2 * RING_LIMIT + 1:
            break
        h *= GRID_COARSENING
    arrays = (seg, np.array(cells), np.array(shapes, dtype=np.int64),
              np.array(offsets, dtype=np.int64), np.concatenate(starts),
              np.concatenate(items), lo, hi)
    for a in arrays:
        a.setflags(write=False)
    seg, lc, ls, lo_, cs, ci, lo, hi = arrays
    return DistanceIndex(boundary.kind, 2, seg, (float(lo[0]), float(lo[1])), lc, ls, lo_,
                         cs, ci, lo, hi, diameter, boundary.closed)


def _check_point(index: DistanceIndex, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (index.dim,):
        raise RangeError(f"expected a {index.dim}-d point, got shape {p.shape}")
    if not index.in_range(p):
        raise RangeError(f"point {p.tolist()} is outside the indexed range")
    return p


def query_many(index: DistanceIndex, pts):
    """Vectorized (distance, segment_id, side_code) for an (m, d) array."""
    pts = np.ascontiguousarray(np.asarray(pts, dtype=np.float64).reshape(-1, index.dim))
    m = pts.shape[0]
    if index.kind == LINE2D:
        sides = np.sign(pts[:, 1]).astype(np.int8)
        return np.abs(pts[:, 1]), np.zeros(m, dtype=np.int64), sides
    if index.kind == PLANE3D:
        sides = np.sign(pts[:, 2]).astype(np.int8)
        return np.abs(pts[:, 2]), np.zeros(m, dtype=np.int64), sides
    dist = np.empty(m)
    ids = np.empty(m, dtype=np.int64)
    sides = np.empty(m, dtype=np.int8)
    _batch_query(pts, *index.kernel_args(), dist, ids, sides)
    return dist, ids, sides


def distance(index: DistanceIndex, p) -> tuple[float, int]:
    p = _check_point(index, p)
    d, ids, _ = query_many(index, p[None, :])
    return float(d[0]), int(ids[0])


def side_of(index: DistanceIndex, p) -> Side:
    if index.dim != 2:
        raise UnsupportedOperationError("side_of is 2-d only; use the sign of z for planes")
    p = _check_point(index, p)
    _, _, s = query_many(index, p[None, :])
    return Side(int(s[0]))


def nearest_point(index: DistanceIndex, p) -> np.ndarray:
    """Closest boundary point to p."""
    p = _check_point(index, p)
    if index.kind == LINE2D:
        return np.array([p[0], 0.0])
    if index.kind == PLANE3D:
        return np.array([p[0], p[1], 0.0])
    _, sid = distance(index, p)
    ax, ay, bx, by = index.segments[sid]
    d = np.array([bx - ax, by - ay])
    t = np.clip(((p[0] - ax) * d[0] + (p[1] - ay) * d[1]) / (d @ d), 0.0, 1.0)
    return np.array([ax, ay]) + t * d
