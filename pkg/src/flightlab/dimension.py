"""Box-counting (Minkowski) dimension estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import InsufficientDataError, SizeError, UnsupportedOperationError
from .geometry import LINE2D, PLANE3D, Boundary, curve_diameter, max_cells_for, traverse_segment
from .stats import ols

MIN_FIT_POINTS = 4
MAX_LADDER_DEPTH = 24


@dataclass(frozen=True)
class BoxCountSeries:
    eps: np.ndarray
    counts: np.ndarray
    diameter: float = math.nan

    def __post_init__(self):
        if np.any(np.diff(self.eps) >= 0):
            raise ValueError("box sizes must be strictly decreasing")

    def rows(self):
        return list(zip(self.eps.tolist(), self.counts.tolist()))


@dataclass(frozen=True)
class DimensionEstimate:
    d: float
    stderr: float
    window: tuple
    method: str = "box"
    n_points: int = 0

    def to_dict(self) -> dict:
        return {"d": self.d, "stderr": self.stderr, "window": list(self.window),
                "method": self.method, "n_points": self.n_points}


def dyadic_ladder(scale: float, j_min: int, j_max: int) -> np.ndarray:
    """scale * 2**-j for j = j_min .. j_max (coarse to fine)."""
    return scale * np.exp2(-np.arange(j_min, j_max + 1, dtype=np.float64))


@njit(cache=True)
def _count_cells(seg, x0, y0, h, nx, ny):
    total = 0
    for s in range(seg.shape[0]):
        total += max_cells_for(seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3], x0, y0, h)
    cells = np.empty(total, dtype=np.int64)
    n = 0
    for s in range(seg.shape[0]):
        n += traverse_segment(seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3],
                              x0, y0, h, nx, ny, cells[n:])
    return np.unique(cells[:n]).shape[0]


def _segments_for_counting(boundary: Boundary) -> np.ndarray:
    if boundary.kind == LINE2D:
        # unit window of the x axis
        w = float(boundary.meta.get("window", 1.0))
        return np.array([[0.0, 0.0, w, 0.0]])
    if boundary.kind == PLANE3D:
        raise UnsupportedOperationError("box counting is implemented for curves in the plane")
    return boundary.segments()


def box_count(boundary: Boundary, ladder) -> BoxCountSeries:
    """Number of grid cells of side eps met by the curve, for each eps.

    The grid origin is the lower-left bounding-box corner; cells are
    half-open, except that points on the far bbox edges fall in the last cell.
    """
    seg = _segments_for_counting(boundary)
    pts = np.vstack([seg[:, :2], seg[:, 2:]])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    diameter = curve_diameter(pts)
    eps = np.asarray(ladder, dtype=np.float64)
    if np.any(eps < diameter * 2.0 ** -MAX_LADDER_DEPTH):
        raise SizeError("box size finer than diameter * 2**-24")
    counts = np.empty(len(eps), dtype=np.int64)
    for i, e in enumerate(eps):
        nx = max(1, math.ceil((hi[0] - lo[0]) / e))
        ny = max(1, math.ceil((hi[1] - lo[1]) / e))
        counts[i] = _count_cells(seg, lo[0], lo[1], e, nx, ny)
    return BoxCountSeries(eps, counts, diameter)


def fit_dimension(series, window=None, method: str = "box") -> DimensionEstimate:
    """OLS slope of log N against -log eps.

    ``series`` is a BoxCountSeries or any (eps, counts) pair, e.g. Whitney
    level counts.  ``window`` = (eps_min, eps_max) inclusive; by default the
    two coarsest and two finest ladder points are dropped.
    """
    if isinstance(series, BoxCountSeries):
        eps, counts = series.eps, series.counts
    else:
        eps, counts = (np.asarray(a, dtype=np.float64) for a in series)
    eps = np.asarray(eps, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    order = np.argsort(-eps)
    eps, counts = eps[order], counts[order]
    if window is None:
        keep = np.zeros(len(eps), dtype=bool)
        keep[2:len(eps) - 2] = True
    else:
        lo, hi = window
        keep = (eps >= lo * (1 - 1e-12)) & (eps <= hi * (1 + 1e-12))
    keep &= counts > 0
    if keep.sum() < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"need {MIN_FIT_POINTS} ladder points in the fit window, have {int(keep.sum())}")
    e, n = eps[keep], counts[keep]
    slope, _, stderr = ols(-np.log(e), np.log(n))
    return DimensionEstimate(slope, stderr, (float(e.min()), float(e.max())), method,
                             int(keep.sum()))


def ensemble_box_count(boundaries, ladder) -> BoxCountSeries:
    """Geometric mean of the box counts of several curves on one ladder."""
    logs = [np.log(box_count(b, ladder).counts) for b in boundaries]
    if not logs:
        raise InsufficientDataError("empty ensemble")
    eps = np.asarray(ladder, dtype=np.float64)
    diam = max(curve_diameter(b.vertices) for b in boundaries)
    return BoxCountSeries(eps, np.exp(np.mean(logs, axis=0)), diam)
