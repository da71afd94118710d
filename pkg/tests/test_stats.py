import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flightlab.errors import DomainError, InsufficientDataError, UsageError
from flightlab.flights import HEIGHT, EngineConfig, FlightRecord, Scene, StartSpec, run_campaign
from flightlab.fractalgen import line_reference
from flightlab.geometry import Side
from flightlab.stats import (CCDF_OLS, DENSITY_OLS, PSI_N, SURVIVAL, THETA_R, FlightFilter,
                             TailFit, TailHistogram, accumulate, bootstrap_fit, compare,
                             default_window, fit_tail, ols, predict)


def _record(n, r, start=Side.LEFT, end=Side.LEFT, censored=False):
    return FlightRecord((0, 0), (r, 0), n, 1, r, start, end, censored)


def _hist(kind, values, bpo=8):
    h = TailHistogram(kind, bpo)
    h.add(values)
    return h


def _exact_survival_hist(kind, exponent, k_lo, k_hi, bpo=8, total=10 ** 12):
    """Counts whose ccdf at edges 2**(k/bpo) is exactly edge**exponent
    (up to integer rounding of a huge total)."""
    e = np.exp2(np.arange(k_lo, k_hi + 1) / bpo)
    s = e ** exponent / e[0] ** exponent
    counts = np.rint(total * (s[:-1] - s[1:])).astype(np.int64)
    counts[-1] += int(round(total * s[-1]))
    return TailHistogram(kind, bpo, k_lo, counts)


def test_single_record_fills_one_bin_each():
    hs = accumulate([_record(5, 3.0)])
    for kind in (PSI_N, THETA_R, SURVIVAL):
        assert np.count_nonzero(hs[kind].counts) == 1
    assert hs.used == 1


def test_survival_starts_at_one_and_never_increases():
    rng = np.random.default_rng(0)
    h = _hist(SURVIVAL, rng.pareto(1.0, 10_000) + 1.0)
    s = h.ccdf()
    assert s[0] == 1.0 and s[-1] == 0.0
    assert np.all(np.diff(s) <= 0)


def test_pareto_survival_inside_dkw_band():
    n = 200_000
    a = 4.0 / 3.0
    rng = np.random.default_rng(1)
    r = (1.0 - rng.random(n)) ** (-1.0 / a)
    recs = [_record(1, x) for x in r[:1000]]
    h = accumulate(recs).survival.merge(_hist(SURVIVAL, r[1000:]))
    e = h.edges
    band = math.sqrt(math.log(2 / 0.01) / (2 * n))
    true = np.minimum(1.0, e ** -a)
    # ccdf is P(X >= e); the Pareto law is continuous so P(X > e) is the same
    assert np.max(np.abs(h.ccdf() - true)) <= band


def test_exact_power_law_gives_exact_theta():
    h = _exact_survival_hist(THETA_R, -1.0, 0, 80)
    fit = fit_tail(h, (2.0, 512.0))
    assert fit.exponent == pytest.approx(-2.0, abs=1e-6)
    assert fit.stderr < 1e-6
    surv = _exact_survival_hist(SURVIVAL, -1.0, 0, 80)
    assert fit_tail(surv, (2.0, 512.0)).exponent == pytest.approx(-1.0, abs=1e-6)


def test_too_few_bins():
    h = _hist(THETA_R, np.geomspace(1, 100, 1000))
    with pytest.raises(InsufficientDataError):
        fit_tail(h, (1.0, 1.5))
    with pytest.raises(UsageError):
        fit_tail(h, (1.0, 100.0), estimator="mle")


def test_zero_records_after_filters():
    with pytest.raises(InsufficientDataError):
        accumulate([_record(3, 2.0, censored=True)])
    with pytest.raises(InsufficientDataError):
        accumulate([_record(3, 2.0, Side.LEFT, Side.RIGHT)])
    hs = accumulate([_record(3, 2.0, Side.LEFT, Side.RIGHT)], FlightFilter(same_side=False))
    assert hs.used == 1


def test_filters_count_what_they_drop():
    recs = [_record(3, 2.0), _record(4, 2.0, censored=True), _record(5, 2.0, end=Side.RIGHT)]
    hs = accumulate(recs)
    assert (hs.seen, hs.censored, hs.side_rejected, hs.used) == (3, 1, 1, 1)
    assert hs.censored_fraction == pytest.approx(1 / 3)


def test_merge_equals_joint_accumulation():
    rng = np.random.default_rng(2)
    a, b = rng.pareto(1.0, 5000) + 1, rng.pareto(0.5, 5000) + 0.01
    m = _hist(THETA_R, a).merge(_hist(THETA_R, b))
    j = _hist(THETA_R, np.concatenate([a, b]))
    assert m.k0 == j.k0 and np.array_equal(m.counts, j.counts)
    with pytest.raises(UsageError):
        _hist(THETA_R, a).merge(_hist(PSI_N, a))


def test_rescaling_by_aligned_factor_keeps_slope():
    rng = np.random.default_rng(3)
    r = rng.pareto(1.0, 100_000) + 1.0
    f1 = fit_tail(_hist(THETA_R, r), (4.0, 256.0))
    f2 = fit_tail(_hist(THETA_R, 2.0 * r), (8.0, 512.0))
    assert f1.n_points == f2.n_points
    assert f1.exponent == pytest.approx(f2.exponent, abs=1e-12)
    f3 = fit_tail(_hist(THETA_R, 2.0 * r), (8.0, 512.0), DENSITY_OLS)
    f4 = fit_tail(_hist(THETA_R, r), (4.0, 256.0), DENSITY_OLS)
    assert f3.exponent == pytest.approx(f4.exponent, abs=1e-12)


def test_table_and_csv(tmp_path):
    h = _hist(THETA_R, [1.0, 1.5, 3.0])
    t = h.table()
    assert t.shape == (len(h.counts), 5)
    assert t[:, 2].sum() == 3
    assert np.sum(t[:, 3] * (t[:, 1] - t[:, 0])) == pytest.approx(1.0)
    h.write_csv(tmp_path / "h.csv", {"kind": THETA_R})
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0].startswith("# ") and lines[1] == "bin_lo,bin_hi,count,density,ccdf"


def test_ols_helper():
    x = np.arange(10.0)
    slope, icpt, se = ols(x, 3 * x - 2)
    assert (slope, icpt) == pytest.approx((3.0, -2.0)) and se < 1e-12


@pytest.fixture(scope="module")
def line_campaign():
    recs = run_campaign(Scene(line_reference(2)), StartSpec(HEIGHT, 1.0),
                        EngineConfig(delta=0.01, seed=31, n_flights=200_000))
    return accumulate(recs)


def test_line_campaign_theta_and_verdict(line_campaign):
    fit = fit_tail(line_campaign.theta, (10.0, 1000.0))
    assert fit.exponent == pytest.approx(-2.0, abs=0.1)
    v = compare(fit, predict(1.0, 2), 0.1, quantity="beta")
    assert v.passed and v.predicted == -2.0


def test_density_and_ccdf_estimators_agree(line_campaign):
    w = (10.0, 1000.0)
    a = fit_tail(line_campaign.theta, w, CCDF_OLS)
    b = fit_tail(line_campaign.theta, w, DENSITY_OLS)
    assert abs(a.exponent - b.exponent) <= 2 * math.hypot(a.stderr, b.stderr)


def test_bootstrap_interval_brackets_fit(line_campaign):
    w = (10.0, 1000.0)
    fit = fit_tail(line_campaign.theta, w)
    lo, hi, sd = bootstrap_fit(line_campaign.theta, w, n_boot=100)
    assert lo <= fit.exponent <= hi
    assert 0 < sd < 0.1


def _fake_fit(kind, exponent, stderr):
    return TailFit(kind, exponent, stderr, (1.0, 10.0), CCDF_OLS, 100, exponent, 8)


def test_compare_examples():
    pred = predict(4 / 3, 2)
    assert compare(_fake_fit(THETA_R, -2.33, 0.04), pred, 0.1, quantity="beta").passed
    assert not compare(_fake_fit(THETA_R, -2.0, 0.0), pred, 0.1, quantity="beta").passed
    with pytest.raises(UsageError):
        compare(_fake_fit(THETA_R, -2.33, 0.04), pred, 0.1, quantity="alpha")
    with pytest.raises(UsageError):
        compare(_fake_fit(THETA_R, -2.33, 0.04), pred, 0.1, quantity="gamma")


def test_compare_verdict_record():
    v = compare(_fake_fit(PSI_N, -1.7, 0.01), predict(4 / 3, 2), 0.1, name="saw alpha")
    d = v.to_dict()
    assert d["passed"] and d["name"] == "saw alpha"
    assert d["deviation"] == pytest.approx(abs(-1.7 + 10 / 6))
    assert v.line().startswith("[PASS] saw alpha")


def test_predict_examples():
    p = predict(4 / 3, 2)
    assert p.alpha == pytest.approx(10 / 6) and p.beta == pytest.approx(7 / 3)
    q = predict(1.0, 2)
    assert q.survival_exponent == -1.0 and q.beta == 2.0
    assert predict(2.0, 3).survival_exponent == -1.0


@pytest.mark.parametrize("d,d_e", [(-0.1, 2), (2.5, 2), (3.01, 3)])
def test_predict_domain(d, d_e):
    with pytest.raises(DomainError):
        predict(d, d_e)


@given(st.integers(1, 4).flatmap(lambda de: st.tuples(st.floats(0, de), st.just(de))))
@settings(max_examples=200)
def test_predict_identities(args):
    d, d_e = args
    p = predict(d, d_e)
    assert p.beta == pytest.approx(-(d_e - d - 2) + 1, abs=1e-12)
    assert p.alpha == pytest.approx((p.beta + 1) / 2, abs=1e-12)


def test_default_window():
    assert default_window(THETA_R, 0.01, 1000.0) == (0.1, 100.0)
    assert default_window(PSI_N, 1.0, 1000.0) == (100.0, 1e5)


def test_unknown_kind():
    with pytest.raises(UsageError):
        TailHistogram("phi")
