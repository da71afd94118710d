"""Dyadic Whitney decomposition of the complement of a boundary, level-set
cube collections, and the corkscrew / fatness diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, RangeError, SizeError
from .geometry import LINE2D, DistanceIndex, Side, query_many

MAX_WHITNEY_DEPTH = 24


@dataclass(frozen=True)
class WhitneyParams:
    c1: float = 1.0
    c2: float = 4.0
    max_depth: int = 12

    def __post_init__(self):
        for c in (self.c1, self.c2):
            if c <= 0 or not math.log2(c).is_integer():
                raise ConfigError("Whitney constants must be positive powers of 2")
        if self.c1 > self.c2:
            raise ConfigError("need c1 <= c2")
        if self.max_depth < 0:
            raise ConfigError("max_depth must be >= 0")


@dataclass(frozen=True)
class Box:
    """Axis-aligned cube: lower corner and side."""

    lo: tuple
    side: float

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains_box(self, lo, hi) -> bool:
        a = np.asarray(self.lo)
        return bool(np.all(a <= lo) and np.all(a + self.side >= hi))


@dataclass(frozen=True, eq=False)
class WhitneyDecomposition:
    """Emitted cubes as parallel arrays.

    ``dist`` is the exact boundary distance of the cube centre; the sandwich
    c1|Q| <= dist - halfdiag <= c2|Q| holds for every cube.
    """

    box: Box
    params: WhitneyParams
    depth: np.ndarray
    corners: np.ndarray
    side: np.ndarray
    dist: np.ndarray
    diameter: float
    discarded: int = 0
    _order: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.box.dim

    def __len__(self) -> int:
        return len(self.side)

    @property
    def level(self) -> np.ndarray:
        """Absolute dyadic level j with |Q| = 2**-j (box side a power of 2)."""
        return np.rint(-np.log2(self.side)).astype(np.int64)

    @property
    def centers(self) -> np.ndarray:
        return np.asarray(self.box.lo) + (self.corners + 0.5) * self.side[:, None]

    @property
    def halfdiag(self) -> np.ndarray:
        return self.side * math.sqrt(self.dim) / 2.0

    @property
    def min_side(self) -> float:
        return self.box.side * 2.0 ** -self.params.max_depth


@dataclass(frozen=True, eq=False)
class WhitneyLevel:
    t: float
    depth: np.ndarray
    corners: np.ndarray
    side: np.ndarray
    dist: np.ndarray
    centers: np.ndarray

    @property
    def count(self) -> int:
        return len(self.side)


def default_box(index: DistanceIndex) -> Box:
    """Power-of-two cube containing the 4x-inflated bounding box."""
    if index.analytic:
        # unit window straddling the reference line / plane
        if index.kind == LINE2D:
            return Box((0.0, -0.5), 1.0)
        return Box((0.0, 0.0, -0.5), 1.0)
    lo, hi = index.bbox_lo, index.bbox_hi
    center = (lo + hi) / 2.0
    extent = 4.0 * float(np.max(hi - lo))
    side = 2.0 ** math.ceil(math.log2(max(extent, 1e-300)))
    return Box(tuple(center - side / 2.0), side)


def whitney_decompose(index: DistanceIndex, box: Box | None = None,
                      params: WhitneyParams | None = None) -> WhitneyDecomposition:
    """Top-down dyadic subdivision.

    A cell of side s with centre distance D is judged by D - halfdiag, a lower
    bound on its true distance to the boundary: it is emitted when that bound
    lies in [c1 s, c2 s], subdivided when it is below c1 s, and dropped when it
    is above c2 s (every descendant would be even further out of range).
    Cells still too close at ``max_depth`` are discarded.
    """
    params = params or WhitneyParams()
    if params.max_depth > MAX_WHITNEY_DEPTH:
        raise SizeError(f"max_depth {params.max_depth} > {MAX_WHITNEY_DEPTH}")
    box = box or default_box(index)
    if box.dim != index.dim:
        raise ConfigError("box dimension does not match the boundary")
    if not index.analytic:
        inflated_lo = index.bbox_lo - 1.5 * (index.bbox_hi - index.bbox_lo)
        inflated_hi = index.bbox_hi + 1.5 * (index.bbox_hi - index.bbox_lo)
        if not box.contains_box(inflated_lo, inflated_hi):
            raise ConfigError("box must contain the 4x-inflated bounding box")
    dim = box.dim
    root_lo = np.asarray(box.lo, dtype=np.float64)
    corners = np.zeros((1, dim), dtype=np.int64)
    out_depth, out_corners, out_side, out_dist = [], [], [], []
    children = np.array(list(np.ndindex(*([2] * dim))), dtype=np.int64)
    discarded = 0
    for depth in range(params.max_depth + 1):
        if len(corners) == 0:
            break
        s = box.side * 2.0 ** -depth
        centers = root_lo + (corners + 0.5) * s
        dc, _, _ = query_many(index, centers)
        lower = dc - s * math.sqrt(dim) / 2.0
        emit = (lower >= params.c1 * s) & (lower <= params.c2 * s)
        split = lower < params.c1 * s
        if emit.any():
            out_depth.append(np.full(int(emit.sum()), depth, dtype=np.int64))
            out_corners.append(corners[emit])
            out_side.append(np.full(int(emit.sum()), s))
            out_dist.append(dc[emit])
        if depth == params.max_depth:
            discarded = int(split.sum())
            break
        parents = corners[split]
        corners = (2 * parents[:, None, :] + children[None, :, :]).reshape(-1, dim)
    if out_depth:
        depth_a = np.concatenate(out_depth)
        corners_a = np.concatenate(out_corners)
        side_a = np.concatenate(out_side)
        dist_a = np.concatenate(out_dist)
    else:
        depth_a = np.zeros(0, dtype=np.int64)
        corners_a = np.zeros((0, dim), dtype=np.int64)
        side_a = np.zeros(0)
        dist_a = np.zeros(0)
    order = np.lexsort(tuple(corners_a[:, i] for i in range(dim - 1, -1, -1)) + (depth_a,))
    diameter = index.diameter if not index.analytic else box.side
    return WhitneyDecomposition(box, params, depth_a[order], corners_a[order],
                                side_a[order], dist_a[order], diameter, discarded)


def level_cubes(dec: WhitneyDecomposition, t: float) -> WhitneyLevel:
    """Cubes whose distance band [dist - halfdiag, dist + halfdiag] holds t."""
    if not (dec.min_side <= t <= dec.diameter):
        raise RangeError(f"level t={t} outside [{dec.min_side}, {dec.diameter}]")
    mask = np.abs(dec.dist - t) <= dec.halfdiag
    return WhitneyLevel(float(t), dec.depth[mask], dec.corners[mask], dec.side[mask],
                        dec.dist[mask], dec.centers[mask])


def level_counts(dec: WhitneyDecomposition, ts) -> np.ndarray:
    return np.array([level_cubes(dec, t).count for t in ts], dtype=np.int64)


def corkscrew_check(index: DistanceIndex, x, r: float, c: float,
                    side: Side | None = None) -> bool:
    """Grid search (spacing c r / 4) of B(x, r) for y with c r < |x - y| < r
    and dist(y) > c r.  ``side`` restricts witnesses to one side of a curve.
    """
    if c >= 1.0 or c <= 0.0 or r <= 0.0:
        return False
    x = np.asarray(x, dtype=np.float64)
    h = c * r / 4.0
    m = int(math.ceil(r / h))
    axis = np.arange(-m, m + 1) * h
    grids = np.meshgrid(*([axis] * len(x)), indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    rho = np.sqrt((offs ** 2).sum(axis=1))
    offs = offs[(rho > c * r) & (rho < r)]
    d, _, sides = query_many(index, x + offs)
    ok = d > c * r
    if side is not None:
        ok &= sides == int(side)
    return bool(ok.any())


def fatness_probe(index: DistanceIndex, x, n_walks: int = 10_000, seed: int = 0,
                  delta_frac: float = 1e-3) -> float:
    """Monte Carlo probability that Brownian motion from x reaches the
    boundary before leaving B(x, 2 d_x); walk-on-spheres with absorption
    width ``delta_frac * d_x`` on both targets."""
    from .flights import ball_hit_fraction

    x = np.asarray(x, dtype=np.float64)
    d_x = float(query_many(index, x[None, :])[0][0])
    if d_x <= 0.0:
        return 1.0
    return ball_hit_fraction(index, x, 2.0 * d_x, n_walks, seed, delta_frac * d_x)
