"""Log-binned flight histograms, tail-exponent fits and predicted exponents.

Bins sit on a fixed geometric grid, edges 2**(k / bins_per_octave) for
integer k, so histograms from different workers merge by adding counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError, UsageError

PSI_N = "psi_n"
THETA_R = "theta_r"
SURVIVAL = "survival"
HIST_KINDS = (PSI_N, THETA_R, SURVIVAL)
CCDF_OLS = "ccdf-ols"
DENSITY_OLS = "density-ols"
MIN_FIT_BINS = 6


@dataclass
class TailHistogram:
    kind: str
    bins_per_octave: int = 8
    k0: int = 0
    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    # values <= 0 (lattice flights returning to their start site)
    zero_count: int = 0

    def __post_init__(self):
        if self.kind not in HIST_KINDS:
            raise UsageError(f"unknown histogram kind {self.kind!r}")

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.zero_count

    @property
    def edges(self) -> np.ndarray:
        k = self.k0 + np.arange(len(self.counts) + 1)
        return np.exp2(k / self.bins_per_octave)

    def bin_index(self, x) -> np.ndarray:
        return np.floor(self.bins_per_octave * np.log2(x)).astype(np.int64)

    def add(self, values) -> None:
        x = np.asarray(values, dtype=np.float64)
        pos = x[x > 0]
        self.zero_count += int(x.size - pos.size)
        if pos.size == 0:
            return
        k = self.bin_index(pos)
        lo, hi = int(k.min()), int(k.max())
        if len(self.counts) == 0:
            self.k0 = lo
            self.counts = np.zeros(hi - lo + 1, dtype=np.int64)
        else:
            self._extend(lo, hi)
        self.counts += np.bincount(k - self.k0, minlength=len(self.counts))

    def _extend(self, lo: int, hi: int) -> None:
        new_lo = min(lo, self.k0)
        new_hi = max(hi, self.k0 + len(self.counts) - 1)
        if new_lo == self.k0 and new_hi == self.k0 + len(self.counts) - 1:
            return
        c = np.zeros(new_hi - new_lo + 1, dtype=self.counts.dtype)
        c[self.k0 - new_lo:self.k0 - new_lo + len(self.counts)] = self.counts
        self.k0, self.counts = new_lo, c

    def merge(self, other: "TailHistogram") -> "TailHistogram":
        if other.kind != self.kind or other.bins_per_octave != self.bins_per_octave:
            raise UsageError("histograms are not on the same grid")
        out = TailHistogram(self.kind, self.bins_per_octave, self.k0, self.counts.copy(),
                            self.zero_count + other.zero_count)
        if len(other.counts):
            if len(out.counts) == 0:
                out.k0, out.counts = other.k0, other.counts.copy()
            else:
                out._extend(other.k0, other.k0 + len(other.counts) - 1)
                i = other.k0 - out.k0
                out.counts[i:i + len(other.counts)] += other.counts
        return out

    def ccdf(self) -> np.ndarray:
        """P(X >= edge) at every edge."""
        tail = np.concatenate([np.cumsum(self.counts[::-1])[::-1], [0]])
        return tail / max(self.total, 1)

    def density(self) -> np.ndarray:
        w = np.diff(self.edges)
        return self.counts / (max(self.total, 1) * w)

    def table(self) -> np.ndarray:
        """Rows of (bin_lo, bin_hi, count, density, ccdf at bin_lo)."""
        e = self.edges
        return np.column_stack([e[:-1], e[1:], self.counts, self.density(), self.ccdf()[:-1]])

    def write_csv(self, path, header: dict | None = None) -> None:
        import json
        with open(path, "w") as fh:
            if header is not None:
                fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write("bin_lo,bin_hi,count,density,ccdf\n")
            for lo, hi, c, d, s in self.table():
                fh.write(f"{lo!r},{hi!r},{int(c)},{d!r},{s!r}\n")


@dataclass(frozen=True)
class FlightFilter:
    same_side: bool = True
    exclude_censored: bool = True


@dataclass
class HistogramSet:
    psi: TailHistogram
    theta: TailHistogram
    survival: TailHistogram
    seen: int = 0
    censored: int = 0
    errors: int = 0
    side_rejected: int = 0

    @classmethod
    def empty(cls, bins_per_octave: int = 8) -> "HistogramSet":
        return cls(TailHistogram(PSI_N, bins_per_octave), TailHistogram(THETA_R, bins_per_octave),
                   TailHistogram(SURVIVAL, bins_per_octave))

    @property
    def used(self) -> int:
        return self.theta.total

    @property
    def censored_fraction(self) -> float:
        return self.censored / max(self.seen - self.errors, 1)

    def merge(self, other: "HistogramSet") -> "HistogramSet":
        return HistogramSet(self.psi.merge(other.psi), self.theta.merge(other.theta),
                            self.survival.merge(other.survival), self.seen + other.seen,
                            self.censored + other.censored, self.errors + other.errors,
                            self.side_rejected + other.side_rejected)

    def __getitem__(self, kind: str) -> TailHistogram:
        return {PSI_N: self.psi, THETA_R: self.theta, SURVIVAL: self.survival}[kind]


def _blocks(records):
    from .flights import FlightRecord, FlightRecords

    if isinstance(records, FlightRecords):
        yield records
        return
    pending = []
    for item in records:
        if isinstance(item, FlightRecords):
            yield item
        elif isinstance(item, FlightRecord):
            pending.append(item)
        else:
            raise UsageError(f"cannot accumulate {type(item).__name__}")
    if pending:
        m = len(pending)
        yield FlightRecords(np.arange(m), np.zeros(m, dtype=np.int64),
                            np.array([p.n for p in pending], dtype=np.float64),
                            np.array([p.steps for p in pending], dtype=np.int64),
                            np.array([p.r for p in pending], dtype=np.float64),
                            np.array([int(p.start_side) for p in pending], dtype=np.int8),
                            np.array([int(p.end_side) for p in pending], dtype=np.int8),
                            np.array([p.censored for p in pending], dtype=np.bool_),
                            np.zeros(m, dtype=np.int8), np.zeros((0, 2)), np.zeros((0, 2)))


def accumulate(records, filters: FlightFilter = FlightFilter(),
               bins_per_octave: int = 8) -> HistogramSet:
    """Stream records (a FlightRecords block, an iterable of blocks, or of
    FlightRecord) into psi(n), theta(r) and survival histograms."""
    hs = HistogramSet.empty(bins_per_octave)
    for block in _blocks(records):
        hs.seen += len(block)
        ok = block.status == 0
        hs.errors += int(np.count_nonzero(~ok))
        keep = ok.copy()
        if filters.exclude_censored:
            hs.censored += int(np.count_nonzero(block.censored & ok))
            keep &= ~block.censored
        if filters.same_side:
            same = (block.start_side == block.end_side) & (block.start_side != 0)
            hs.side_rejected += int(np.count_nonzero(keep & ~same))
            keep &= same
        hs.psi.add(block.n[keep])
        hs.theta.add(block.r[keep])
        hs.survival.add(block.r[keep])
    if hs.used == 0:
        raise InsufficientDataError("no flights survived the filters")
    return hs


# ---------------------------------------------------------------------------


def ols(x, y):
    """Least-squares line through (x, y): (slope, intercept, slope stderr).

    The stderr comes from the residuals themselves, so exactly linear data
    gives a stderr at rounding level rather than the square root of one.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = len(x)
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    slope = float(dx @ (y - ym)) / sxx
    intercept = ym - slope * xm
    if n <= 2:
        return slope, intercept, 0.0
    resid = y - (intercept + slope * x)
    return slope, intercept, math.sqrt(float(resid @ resid) / (n - 2) / sxx)


@dataclass(frozen=True)
class TailFit:
    kind: str
    exponent: float
    stderr: float
    window: tuple
    estimator: str
    n_used: int
    slope: float
    n_points: int

    def to_dict(self) -> dict:
        return {"kind": self.kind, "exponent": self.exponent, "stderr": self.stderr,
                "window": list(self.window), "estimator": self.estimator,
                "n_used": self.n_used, "slope": self.slope, "n_points": self.n_points}


def fit_tail(hist: TailHistogram, window, estimator: str = CCDF_OLS) -> TailFit:
    """Log-log OLS over ``window`` = (lo, hi).

    ccdf-ols regresses log P(X >= e) on log e at the bin edges in the window;
    the density exponent is that slope minus one (theta = -dP/dr).  For a
    survival histogram the slope itself is reported.  density-ols regresses
    the log-binned density on the log bin centre.
    """
    lo, hi = window
    e = hist.edges
    inside = (e[:-1] >= lo * (1 - 1e-12)) & (e[1:] <= hi * (1 + 1e-12))
    nonempty = inside & (hist.counts > 0)
    if np.count_nonzero(nonempty) < MIN_FIT_BINS:
        raise InsufficientDataError(
            f"{np.count_nonzero(nonempty)} nonempty bins in window, need {MIN_FIT_BINS}")
    n_used = int(hist.counts[inside].sum())
    if estimator == CCDF_OLS:
        s = hist.ccdf()
        pts = (e >= lo * (1 - 1e-12)) & (e <= hi * (1 + 1e-12)) & (s > 0)
        x, y = np.log(e[pts]), np.log(s[pts])
        slope, _, stderr = ols(x, y)
        exponent = slope if hist.kind == SURVIVAL else slope - 1.0
    elif estimator == DENSITY_OLS:
        x = 0.5 * (np.log(e[:-1]) + np.log(e[1:]))[nonempty]
        y = np.log(hist.density()[nonempty])
        slope, _, stderr = ols(x, y)
        exponent = slope + 1.0 if hist.kind == SURVIVAL else slope
    else:
        raise UsageError(f"unknown estimator {estimator!r}")
    return TailFit(hist.kind, float(exponent), stderr, (float(lo), float(hi)),
                   estimator, n_used, slope, int(len(x)))


def bootstrap_fit(hist: TailHistogram, window, estimator: str = CCDF_OLS,
                  n_boot: int = 200, seed: int = 0, level: float = 0.95):
    """Percentile interval and standard deviation of the exponent under
    multinomial resampling of the binned records."""
    rng = np.random.default_rng(seed)
    p = np.concatenate([hist.counts, [hist.zero_count]]).astype(np.float64)
    p /= p.sum()
    vals = []
    for _ in range(n_boot):
        draw = rng.multinomial(hist.total, p)
        h = TailHistogram(hist.kind, hist.bins_per_octave, hist.k0, draw[:-1], int(draw[-1]))
        try:
            vals.append(fit_tail(h, window, estimator).exponent)
        except InsufficientDataError:
            continue
    vals = np.array(vals)
    a = (1.0 - level) / 2.0
    return float(np.quantile(vals, a)), float(np.quantile(vals, 1 - a)), float(vals.std(ddof=1))


def default_window(kind: str, eps: float, diameter: float, lattice: bool = False) -> tuple:
    """r in [10 eps, diameter / 10]; n in [10^2, diameter^2 / 10]."""
    if kind == PSI_N:
        return (100.0, diameter ** 2 / 10.0)
    return (10.0 * eps, diameter / 10.0)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TailPrediction:
    d: float
    d_e: int
    alpha: float
    beta: float
    survival_exponent: float

    def expected(self, kind: str) -> float:
        """Expected fitted exponent for a histogram kind (densities decay,
        so the theta and psi exponents are -beta and -alpha)."""
        return {THETA_R: -self.beta, PSI_N: -self.alpha,
                SURVIVAL: self.survival_exponent}[kind]

    def to_dict(self) -> dict:
        return {"d": self.d, "d_e": self.d_e, "alpha": self.alpha, "beta": self.beta,
                "survival_exponent": self.survival_exponent}


def predict(d: float, d_e: int) -> TailPrediction:
    if not (0.0 <= d <= d_e):
        raise DomainError(f"dimension d={d} outside [0, {d_e}]")
    surv = d_e - d - 2.0
    return TailPrediction(float(d), int(d_e), (d - d_e + 4.0) / 2.0, d - d_e + 3.0, surv)


_QUANTITY = {"alpha": PSI_N, "beta": THETA_R, "survival": SURVIVAL}


@dataclass(frozen=True)
class Verdict:
    name: str
    kind: str
    fitted: float
    stderr: float
    predicted: float
    tolerance: float
    passed: bool

    @property
    def deviation(self) -> float:
        return abs(self.fitted - self.predicted)

    def to_dict(self) -> dict:
        return {"name": self.name, "kind": self.kind, "fitted": self.fitted,
                "stderr": self.stderr, "predicted": self.predicted,
                "tolerance": self.tolerance, "deviation": self.deviation,
                "passed": self.passed}

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"[{mark}] {self.name}: fitted {self.fitted:+.4f} +/- {self.stderr:.4f}, "
                f"predicted {self.predicted:+.4f}, tol {self.tolerance}")


def compare(fit: TailFit, pred: TailPrediction, tolerance: float,
            quantity: str | None = None, name: str | None = None) -> Verdict:
    """Pass iff |fitted - predicted| <= tolerance + 2 stderr."""
    if quantity is not None:
        if quantity not in _QUANTITY:
            raise UsageError(f"unknown quantity {quantity!r}")
        if _QUANTITY[quantity] != fit.kind:
            raise UsageError(f"cannot compare a {fit.kind} fit against {quantity}")
    expected = pred.expected(fit.kind)
    ok = abs(fit.exponent - expected) <= tolerance + 2.0 * fit.stderr
    return Verdict(name or fit.kind, fit.kind, fit.exponent, fit.stderr, expected,
                   float(tolerance), bool(ok))
