import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flightlab.dimension import (BoxCountSeries, box_count, dyadic_ladder, ensemble_box_count,
                                 fit_dimension)
from flightlab.errors import InsufficientDataError, SizeError
from flightlab.fractalgen import KochConfig, koch_generate, line_reference
from flightlab.geometry import LATTICE2D, POLYLINE2D, Boundary

LOG4_LOG3 = math.log(4) / math.log(3)


def sampled_cell_count(boundary, eps, samples_per_segment=20_000):
    """Oracle: cells hit by densely sampled points of every segment, with the
    same half-open cells and bbox-corner origin."""
    seg = boundary.segments()
    pts = np.vstack([seg[:, :2], seg[:, 2:]])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    nx = max(1, math.ceil((hi[0] - lo[0]) / eps))
    ny = max(1, math.ceil((hi[1] - lo[1]) / eps))
    s = np.linspace(0.0, 1.0, samples_per_segment + 1)
    cells = set()
    for a in seg:
        x = a[0] + s * (a[2] - a[0])
        y = a[1] + s * (a[3] - a[1])
        i = np.clip(np.floor((x - lo[0]) / eps).astype(np.int64), 0, nx - 1)
        j = np.clip(np.floor((y - lo[1]) / eps).astype(np.int64), 0, ny - 1)
        cells.update((i * ny + j).tolist())
    return len(cells)


def test_unit_segment():
    b = Boundary(POLYLINE2D, np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert box_count(b, [1 / 8]).counts.tolist() == [8]


def test_analytic_line_counts_its_unit_window():
    s = box_count(line_reference(2), dyadic_ladder(1.0, 1, 10))
    assert s.counts.tolist() == [2 ** j for j in range(1, 11)]
    est = fit_dimension(s)
    assert est.d == pytest.approx(1.0, abs=0.02)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_koch_triadic_boxes_within_factor_four(k):
    b = koch_generate(KochConfig(k))
    n = box_count(b, [3.0 ** -k]).counts[0]
    assert 4 ** k / 4 <= n <= 4 ** k * 4


@pytest.mark.parametrize("eps", [2.0 ** -j for j in range(1, 9)] + [3.0 ** -j for j in (1, 2, 3)])
def test_exact_traversal_matches_sampling_oracle(eps):
    b = koch_generate(KochConfig(3))
    assert box_count(b, [eps]).counts[0] == sampled_cell_count(b, eps)


def test_lattice_path_matches_sampling_oracle(saw_1e4):
    small = Boundary(LATTICE2D, saw_1e4.vertices[:400])
    for eps in (2.0, 4.0, 8.0, 16.0):
        assert box_count(small, [eps]).counts[0] == sampled_cell_count(small, eps, 2000)


def test_counts_monotone_and_bounded(koch6):
    s = box_count(koch6, dyadic_ladder(1.0, 0, 12))
    assert np.all(np.diff(s.counts) >= 0)
    assert np.all(s.counts <= (s.diameter / s.eps + 2) ** 2)


def test_scale_covariance(koch6):
    big = Boundary(POLYLINE2D, 2.0 * koch6.vertices)
    ladder = dyadic_ladder(1.0, 1, 11)
    assert np.array_equal(box_count(koch6, ladder).counts, box_count(big, 2 * ladder).counts)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.2, 1.9), st.integers(5, 14))
def test_exact_power_law_recovered(d, m):
    eps = dyadic_ladder(1.0, 0, m)
    est = fit_dimension((eps, eps ** -d), window=(eps[-1], eps[0]))
    assert est.d == pytest.approx(d, abs=1e-12)
    assert est.stderr == pytest.approx(0.0, abs=1e-12)


def test_synthetic_three_halves():
    eps = dyadic_ladder(1.0, 0, 10)
    est = fit_dimension(BoxCountSeries(eps, eps ** -1.5))
    assert est.d == pytest.approx(1.5, abs=1e-13) and est.stderr < 1e-12
    # default window drops two points at each end
    assert est.n_points == 7


def test_koch8_triadic_window():
    b = koch_generate(KochConfig(8))
    s = box_count(b, dyadic_ladder(1.0, 1, 13))
    est = fit_dimension(s, window=(3.0 ** -7, 3.0 ** -2))
    assert abs(est.d - LOG4_LOG3) <= 0.03, est


def test_koch7_default_window():
    b = koch_generate(KochConfig(7))
    est = fit_dimension(box_count(b, dyadic_ladder(1.0, 1, 13)))
    assert abs(est.d - LOG4_LOG3) <= 0.03, est


def test_ensemble_of_identical_curves_is_the_curve(koch6):
    ladder = dyadic_ladder(1.0, 1, 8)
    one = box_count(koch6, ladder)
    ens = ensemble_box_count([koch6, koch6, koch6], ladder)
    assert np.allclose(ens.counts, one.counts, rtol=1e-12)


def test_errors(koch6):
    with pytest.raises(SizeError):
        box_count(koch6, [2.0 ** -25])
    eps = dyadic_ladder(1.0, 0, 5)
    with pytest.raises(InsufficientDataError):
        fit_dimension((eps, eps ** -1.0))
    with pytest.raises(ValueError):
        BoxCountSeries(np.array([0.1, 0.2]), np.array([1, 2]))
