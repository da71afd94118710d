import math

import numpy as np
import pytest

from flightlab.dimension import box_count
from flightlab.errors import ConfigError, RangeError, SizeError
from flightlab.fractalgen import line_reference
from flightlab.geometry import Side, build_index, query_many
from flightlab.stats import ols
from flightlab.whitney import (Box, WhitneyParams, corkscrew_check, default_box, fatness_probe,
                               level_counts, level_cubes, whitney_decompose)

LOG4_LOG3 = math.log(4) / math.log(3)
LINE = build_index(line_reference(2))


@pytest.fixture(scope="module")
def line_dec():
    return whitney_decompose(LINE, params=WhitneyParams(max_depth=14))


@pytest.fixture(scope="module")
def koch_dec(koch6):
    return whitney_decompose(build_index(koch6), params=WhitneyParams(max_depth=14))


def line_row_oracle(t, c1=1.0, c2=4.0, max_depth=14):
    """Whitney cubes of the unit window over the x axis, scanned row by row.

    Cells of side s = 2^-j have centre heights y = -1/2 + (k + 1/2) s and
    distance |y|; a cell exists iff every ancestor was split, and it is
    emitted iff its own sandwich holds.  Returns the number of emitted cells
    whose distance band contains t."""
    total = 0
    split_rows = {0.0}                      # centre heights of split cells
    for j in range(max_depth + 1):
        s = 2.0 ** -j
        rows = {0.0} if j == 0 else {y + sign * s / 2 for y in split_rows for sign in (-1, 1)}
        hd = s * math.sqrt(2) / 2
        split_rows = set()
        for y in rows:
            lower = abs(y) - hd
            if c1 * s <= lower <= c2 * s:
                if abs(abs(y) - t) <= hd:
                    total += 2 ** j          # a full row of the window
            elif lower < c1 * s:
                split_rows.add(y)
    return total


@pytest.mark.parametrize("j", range(4, 11))
def test_line_level_counts_match_row_oracle(line_dec, j):
    t = 2.0 ** -j
    assert level_cubes(line_dec, t).count == line_row_oracle(t)


def test_line_count_times_t_constant(line_dec):
    ts = 2.0 ** -np.arange(4, 11)
    prod = level_counts(line_dec, ts) * ts
    assert prod.max() / prod.min() <= 2.0


def test_line_level_six(line_dec):
    # two rows per side of the line (sides t/2 and t/4), both sides of it
    t = 2.0 ** -6
    assert level_cubes(line_dec, t).count == 2 * (2 ** 7 + 2 ** 8)


def _check_sandwich(dec):
    lower = dec.dist - dec.halfdiag
    p = dec.params
    assert np.all(lower >= p.c1 * dec.side)
    assert np.all(lower <= p.c2 * dec.side)


def test_sandwich_every_cube(line_dec, koch_dec):
    _check_sandwich(line_dec)
    _check_sandwich(koch_dec)


def test_stored_distance_is_exact(koch_dec, koch6):
    idx = build_index(koch6)
    d, _, _ = query_many(idx, koch_dec.centers[::50])
    assert np.array_equal(d, koch_dec.dist[::50])


def test_disjoint_exhaustive(koch6):
    dec = whitney_decompose(build_index(koch6), params=WhitneyParams(max_depth=7))
    lo = np.asarray(dec.box.lo) + dec.corners * dec.side[:, None]
    hi = lo + dec.side[:, None]
    overlap = np.all((lo[:, None, :] < hi[None, :, :]) & (lo[None, :, :] < hi[:, None, :]), axis=2)
    np.fill_diagonal(overlap, False)
    assert not overlap.any()


def test_covers_points_not_too_close(koch_dec, koch6):
    idx = build_index(koch6)
    box = koch_dec.box
    rng = np.random.default_rng(0)
    pts = np.asarray(box.lo) + rng.uniform(0, box.side, size=(1000, 2))
    d, _, _ = query_many(idx, pts)
    pts = pts[d >= 2.5 * koch_dec.min_side]
    lo = np.asarray(box.lo) + koch_dec.corners * koch_dec.side[:, None]
    hi = lo + koch_dec.side[:, None]
    inside = np.all((pts[:, None, :] >= lo[None]) & (pts[:, None, :] < hi[None]), axis=2)
    assert np.all(inside.sum(axis=1) == 1)


def test_ordering_by_level_then_corner(koch_dec):
    keys = np.column_stack([koch_dec.depth, koch_dec.corners])
    order = np.lexsort(keys.T[::-1])
    assert np.array_equal(order, np.arange(len(keys)))


def test_koch_level_counts_scale_like_box_dimension(koch_dec):
    j = np.arange(5, 10)
    q = level_counts(koch_dec, 2.0 ** -j)
    slope = ols(j * math.log(2), np.log(q))[0]
    assert abs(slope - LOG4_LOG3) <= 0.05


def test_koch_comparable_to_box_counts(koch_dec, koch6):
    ts = 2.0 ** -np.arange(4, 10)
    ratio = level_counts(koch_dec, ts) / box_count(koch6, ts).counts
    assert ratio.max() / ratio.min() <= 16


def test_level_at_diameter_is_small(koch_dec):
    n = level_cubes(koch_dec, 1.0).count
    assert 1 <= n <= 64


def test_level_range_and_params():
    dec = whitney_decompose(LINE, params=WhitneyParams(max_depth=6))
    with pytest.raises(RangeError):
        level_cubes(dec, 2.0 ** -8)
    with pytest.raises(RangeError):
        level_cubes(dec, 2.0)
    with pytest.raises(SizeError):
        whitney_decompose(LINE, params=WhitneyParams(max_depth=25))
    with pytest.raises(ConfigError):
        WhitneyParams(c1=3.0)
    with pytest.raises(ConfigError):
        WhitneyParams(c1=8.0, c2=4.0)


def test_box_must_hold_inflated_bbox(koch6):
    idx = build_index(koch6)
    with pytest.raises(ConfigError):
        whitney_decompose(idx, Box((0.0, 0.0), 1.0))
    b = default_box(idx)
    assert math.log2(b.side).is_integer()


def test_corkscrew_line():
    rng = np.random.default_rng(1)
    for x in rng.uniform(0, 1, 5):
        for r in (0.5, 0.1, 0.01):
            assert corkscrew_check(LINE, (x, 0.0), r, 0.25)


def test_corkscrew_degenerate_constant():
    assert not corkscrew_check(LINE, (0.5, 0.0), 0.1, 1.0)
    assert not corkscrew_check(LINE, (0.5, 0.0), 0.1, 2.0)


def test_corkscrew_koch_both_sides(koch6):
    idx = build_index(koch6)
    rng = np.random.default_rng(2)
    verts = koch6.vertices[rng.choice(np.arange(200, len(koch6.vertices) - 200), 3)]
    for x in verts:
        for r in (2.0 ** -3, 2.0 ** -5):
            assert corkscrew_check(idx, x, r, 0.01, Side.LEFT)
            assert corkscrew_check(idx, x, r, 0.01, Side.RIGHT)


def test_corkscrew_agrees_with_finer_grid(koch6):
    idx = build_index(koch6)
    x = koch6.vertices[1000]
    for c in (0.05, 0.2, 0.4):
        coarse = corkscrew_check(idx, x, 2.0 ** -4, c)
        fine = corkscrew_check(idx, x, 2.0 ** -4, c * 0.999)
        assert coarse == fine


def test_fatness_line_half_plane():
    # conformal map of the half-disc cut by the line: exactly 1/2
    p = fatness_probe(LINE, (0.3, 0.01), n_walks=10_000, seed=3)
    assert p == pytest.approx(0.5, abs=0.02)


def test_fatness_is_a_probability(koch6):
    p = fatness_probe(build_index(koch6), (0.5, 1.0), n_walks=2000, seed=4)
    assert 0.0 <= p <= 1.0


def test_fatness_near_koch_bounded_below(koch6):
    idx = build_index(koch6)
    rng = np.random.default_rng(5)
    base = koch6.vertices[rng.integers(0, len(koch6.vertices), 100)]
    pts = base + rng.normal(scale=0.01, size=base.shape)
    est = np.array([fatness_probe(idx, p, n_walks=2000, seed=i) for i, p in enumerate(pts)])
    assert est.min() >= 0.2
