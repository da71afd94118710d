"""Command line front end.

Every file written lands inside ``--out`` and carries the resolved config
and seed in a ``# {json}`` first line (CSV) or a ``config`` key (JSON).
Exit codes: 0 success, 1 failed verdict, 2 config or usage error,
3 insufficient data.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import dimension as dim_mod
from . import fractalgen as fg
from . import stats
from .errors import (ConfigError, DomainError, InsufficientDataError, RangeError, SizeError,
                     UnsupportedOperationError, UsageError)
from .flights import (HEIGHT, LATTICE_ADJACENT, WHITNEY, EngineConfig, FlightRecords, Scene,
                      StartSpec, iter_campaign)
from .geometry import ANALYTIC, SIDE_NAMES, Boundary
from .whitney import WhitneyParams, default_box, level_cubes, whitney_decompose

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA = 0, 1, 2, 3
LOG4_LOG3 = math.log(4.0) / math.log(3.0)


class OutputDir:
    """Resolves output names, refusing anything that escapes the directory."""

    def __init__(self, root):
        self.root = Path(root).resolve()

    def path(self, name: str) -> Path:
        p = (self.root / name).resolve()
        if not p.is_relative_to(self.root):
            raise UsageError(f"output {name!r} escapes the output directory")
        p.parent.mkdir(parents=True, exist_ok=True)
        return p

    def write_json(self, name: str, obj) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return p


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _header_line(obj) -> str:
    return "# " + json.dumps(obj, sort_keys=True, default=_jsonable) + "\n"


def _read_header(path) -> dict:
    with open(path) as fh:
        first = fh.readline()
    if not first.startswith("# "):
        raise ConfigError(f"{path} has no config header")
    return json.loads(first[2:])


# ---------------------------------------------------------------------------
# boundaries


def generate_boundary(spec: dict) -> Boundary:
    """Boundary from a generator description such as {"generator": "koch",
    "iterations": 7} or {"generator": "saw", "n_steps": 10000, "seed": 1}."""
    spec = dict(spec)
    kind = spec.pop("generator", None)
    if kind == "koch":
        b = fg.koch_generate(fg.KochConfig(**spec))
    elif kind == "saw":
        b = fg.saw_generate(fg.SawConfig(**spec))
    elif kind == "line":
        b = fg.line_reference(int(spec.get("d_e", 2)))
    else:
        raise ConfigError(f"unknown generator {kind!r}")
    return b


def load_boundary(source, base: Path | None = None) -> Boundary:
    if isinstance(source, dict):
        return generate_boundary(source)
    p = Path(source)
    if base is not None and not p.is_absolute():
        p = base / p
    if not p.exists():
        raise ConfigError(f"boundary file {p} does not exist")
    return Boundary.load(p)


def boundary_diameter(b: Boundary) -> float:
    return math.inf if b.kind in ANALYTIC else float(dim_mod.curve_diameter(b.vertices))


# ---------------------------------------------------------------------------
# campaign config


@dataclass
class StatsConfig:
    same_side: bool = True
    estimator: str = stats.CCDF_OLS
    window_r: tuple | None = None
    window_n: tuple | None = None


@dataclass
class CampaignConfig:
    boundary: object
    engine: EngineConfig
    start: StartSpec
    stats: StatsConfig = field(default_factory=StatsConfig)
    output_dir: str = "out"
    seed: int | None = None

    @classmethod
    def from_dict(cls, obj: dict, base: Path | None = None) -> "CampaignConfig":
        if "boundary" not in obj:
            raise ConfigError("campaign config needs a boundary")
        if obj.get("seed") is None:
            raise ConfigError("a master seed is required (config 'seed' or --seed)")
        src = obj["boundary"]
        if isinstance(src, str):
            p = Path(src)
            if base is not None and not p.is_absolute():
                p = base / p
            if not p.exists():
                raise ConfigError(f"boundary file {p} does not exist")
            src = str(p)
        try:
            engine = EngineConfig(**obj.get("engine", {}))
            start = StartSpec(**obj.get("start", {"mode": WHITNEY, "eps": None}))
            st = StatsConfig(**obj.get("stats", {}))
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cls(src, engine, start, st, obj.get("output_dir", "out"), obj.get("seed"))

    def to_dict(self) -> dict:
        return {"boundary": self.boundary, "engine": asdict(self.engine),
                "start": asdict(self.start), "stats": asdict(self.stats),
                "output_dir": self.output_dir, "seed": self.seed}


def default_windows(b: Boundary, eps: float, r_esc: float) -> tuple:
    """r in [10 eps, diameter/10], n in [10^2, diameter^2/10].  The analytic
    references have no diameter; their r window stops at 10^3 eps."""
    if b.kind in ANALYTIC:
        return (10.0 * eps, 1000.0 * eps), (100.0, 1e6)
    diam = boundary_diameter(b)
    return (10.0 * eps, diam / 10.0), (100.0, diam ** 2 / 10.0)


# ---------------------------------------------------------------------------
# flights CSV


_SIDE_CODES = {v: k for k, v in SIDE_NAMES.items()}


def read_flights_csv(path) -> tuple[dict, FlightRecords]:
    header = _read_header(path)
    cols = {k: [] for k in ("flight_id", "worker", "n", "r", "start_side", "end_side", "censored")}
    with open(path, newline="") as fh:
        fh.readline()
        for row in csv.DictReader(fh):
            for k in cols:
                cols[k].append(row[k])
    m = len(cols["n"])
    recs = FlightRecords(
        np.array(cols["flight_id"], dtype=np.int64), np.array(cols["worker"], dtype=np.int64),
        np.array(cols["n"], dtype=np.float64), np.zeros(m, dtype=np.int64),
        np.array(cols["r"], dtype=np.float64),
        np.array([_SIDE_CODES[s] for s in cols["start_side"]], dtype=np.int8),
        np.array([_SIDE_CODES[s] for s in cols["end_side"]], dtype=np.int8),
        np.array(cols["censored"], dtype=np.int64).astype(np.bool_),
        np.zeros(m, dtype=np.int8), np.zeros((0, 2)), np.zeros((0, 2)))
    return header, recs


def write_flights_csv(path, blocks, header: dict, integer_n: bool) -> dict:
    seen = errors = censored = 0
    with open(path, "w", newline="") as fh:
        fh.write(_header_line(header))
        fh.write("flight_id,worker,n,r,start_side,end_side,censored\n")
        for b in blocks:
            seen += len(b)
            ok = b.status == 0
            errors += int(np.count_nonzero(~ok))
            censored += int(np.count_nonzero(b.censored & ok))
            for i in np.flatnonzero(ok):
                n = str(int(b.n[i])) if integer_n else repr(float(b.n[i]))
                fh.write(f"{b.flight_id[i]},{b.worker[i]},{n},{float(b.r[i])!r},"
                         f"{SIDE_NAMES[int(b.start_side[i])]},{SIDE_NAMES[int(b.end_side[i])]},"
                         f"{int(b.censored[i])}\n")
    return {"flights": seen, "errors": errors, "censored": censored}


# ---------------------------------------------------------------------------
# SVG


def loglog_svg(x, y, slope=None, intercept=None, title="", width=480, height=360) -> str:
    """Minimal log-log scatter plot, with an optional fitted line
    log y = slope log x + intercept."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    lx, ly = np.log10(x[ok]), np.log10(y[ok])
    pad = 40
    if len(lx) == 0:
        lx, ly = np.zeros(1), np.zeros(1)
    x0, x1 = lx.min(), max(lx.max(), lx.min() + 1e-9)
    y0, y1 = ly.min(), max(ly.max(), ly.min() + 1e-9)

    def px(u):
        return pad + (u - x0) / (x1 - x0) * (width - 2 * pad)

    def py(v):
        return height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#888"/>',
             f'<text x="{pad}" y="{pad - 10}" font-size="12">{title}</text>',
             f'<text x="{pad}" y="{height - 10}" font-size="10">log10 x: {x0:.2f} .. {x1:.2f}'
             f'   log10 y: {y0:.2f} .. {y1:.2f}</text>']
    for u, v in zip(lx, ly):
        parts.append(f'<circle cx="{px(u):.1f}" cy="{py(v):.1f}" r="2" fill="#1f5fa8"/>')
    if slope is not None and intercept is not None:
        # intercept is in natural-log units
        a = slope
        b = intercept / math.log(10.0)
        parts.append(f'<line x1="{px(x0):.1f}" y1="{py(a * x0 + b):.1f}" x2="{px(x1):.1f}" '
                     f'y2="{py(a * x1 + b):.1f}" stroke="#c33"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _ccdf_svg(hist: stats.TailHistogram, fit: stats.TailFit, title: str) -> str:
    e = hist.edges
    s = hist.ccdf()
    lo, hi = fit.window
    pts = (e >= lo) & (e <= hi) & (s > 0)
    intercept = None
    if fit.estimator == stats.CCDF_OLS and pts.any():
        intercept = float(np.mean(np.log(s[pts]) - fit.slope * np.log(e[pts])))
    return loglog_svg(e, s, fit.slope if intercept is not None else None, intercept, title)


# ---------------------------------------------------------------------------
# fitting


def fit_histograms(hs: stats.HistogramSet, window_r, window_n, estimator: str) -> dict:
    fits = {}
    for kind, window in ((stats.SURVIVAL, window_r), (stats.THETA_R, window_r),
                         (stats.PSI_N, window_n)):
        try:
            fits[kind] = stats.fit_tail(hs[kind], window, estimator)
        except InsufficientDataError as exc:
            fits[kind] = exc
    return fits


def _write_histograms(out: OutputDir, hs: stats.HistogramSet, header: dict, prefix: str = ""):
    for kind in stats.HIST_KINDS:
        hs[kind].write_csv(out.path(f"{prefix}hist_{kind}.csv"), header)


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    name: str
    boundary: dict
    engine: str
    start_mode: str
    eps: float | None
    delta: float | None
    n_flights: int
    d: float
    d_e: int
    tolerances: dict
    box_dimension: tuple | None = None
    window_r: tuple | None = None
    n_walks: int = 1


PRESETS = {
    "line2d": Preset("line2d", {"generator": "line", "d_e": 2}, "wos", HEIGHT, 1.0, 0.01,
                     1_000_000, 1.0, 2, {stats.SURVIVAL: 0.05, stats.THETA_R: 0.1}),
    "plane3d": Preset("plane3d", {"generator": "line", "d_e": 3}, "wos", HEIGHT, 1.0, 0.01,
                      1_000_000, 2.0, 3, {stats.SURVIVAL: 0.05}),
    "koch": Preset("koch", {"generator": "koch", "iterations": 7}, "wos", WHITNEY, 2.0 ** -9,
                   None, 2_000_000, LOG4_LOG3, 2, {stats.SURVIVAL: 0.08},
                   box_dimension=(LOG4_LOG3, 0.03)),
    "saw": Preset("saw", {"generator": "saw", "n_steps": 10_000, "n_pivot_attempts": 100_000},
                  "lattice", LATTICE_ADJACENT, None, None, 10_000_000, 4.0 / 3.0, 2,
                  {stats.THETA_R: 0.1, stats.PSI_N: 0.1}, box_dimension=(4.0 / 3.0, 0.03),
                  window_r=(10.0, 10_000 ** 0.75 / 10.0), n_walks=8),
}

MAX_CENSORED_FRACTION = 0.05


def koch_box_dimension(b: Boundary) -> dim_mod.DimensionEstimate:
    """Dyadic ladder 2^-1 .. 2^-13 of the unit-span curve, default trimming."""
    return dim_mod.fit_dimension(dim_mod.box_count(b, dim_mod.dyadic_ladder(1.0, 1, 13)))


def saw_box_dimension(walks) -> dim_mod.DimensionEstimate:
    """Ensemble box counts at eps = 2^0 .. 2^10 lattice units, fitted on
    [4, D/4] with D the largest walk diameter."""
    ladder = 2.0 ** np.arange(10, -1, -1)
    series = dim_mod.ensemble_box_count(walks, ladder)
    return dim_mod.fit_dimension(series, window=(4.0, series.diameter / 4.0))


def dimension_verdict(name: str, est: dim_mod.DimensionEstimate, target: float,
                      tol: float) -> stats.Verdict:
    return stats.Verdict(name, "box_dimension", est.d, est.stderr, target, tol,
                         abs(est.d - target) <= tol)


def run_preset(name: str, n_flights: int | None = None, seed: int = 0,
               workers: int | None = None, out: OutputDir | None = None,
               svg: bool = False, log=print) -> list:
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    p = PRESETS[name]
    n_flights = p.n_flights if n_flights is None else int(n_flights)
    verdicts = []
    gen = dict(p.boundary)
    walks = []
    if gen["generator"] == "saw":
        for k in range(p.n_walks):
            walks.append(generate_boundary({**gen, "seed": seed + k}))
        boundary = walks[0]
    else:
        boundary = generate_boundary(gen)
    if out is not None:
        boundary.save(out.path(f"{name}_boundary.json"))
    if p.box_dimension is not None:
        est = koch_box_dimension(boundary) if name == "koch" else saw_box_dimension(walks)
        v = dimension_verdict(f"{name}: box dimension", est, *p.box_dimension)
        verdicts.append(v)
        log(v.line())
    scene = Scene(boundary)
    eps = p.eps
    if name == "koch":
        eps = boundary_diameter(boundary) * 2.0 ** -9
    spec = StartSpec(p.start_mode, eps)
    cfg = EngineConfig(p.engine, delta=p.delta, seed=seed, n_flights=n_flights)
    rcfg = cfg.resolved(scene, spec)
    w_r, w_n = default_windows(boundary, eps if eps is not None else 1.0, rcfg.r_esc)
    if p.window_r is not None:
        w_r = p.window_r
    hs = stats.accumulate(iter_campaign(scene, spec, cfg, workers, keep_points=False))
    header = {"preset": name, "seed": seed, "config": asdict(rcfg), "start": asdict(spec),
              "window_r": w_r, "window_n": w_n}
    if out is not None:
        _write_histograms(out, hs, header, f"{name}_")
    pred = stats.predict(p.d, p.d_e)
    for kind, tol in p.tolerances.items():
        fit = stats.fit_tail(hs[kind], w_n if kind == stats.PSI_N else w_r)
        v = stats.compare(fit, pred, tol, name=f"{name}: {kind} exponent")
        verdicts.append(v)
        log(v.line())
        if svg and out is not None:
            out.path(f"{name}_{kind}.svg").write_text(_ccdf_svg(hs[kind], fit, v.name))
    if name == "koch":
        # the survival exponent as literally stated for this scenario, -(2 - d)
        fit = stats.fit_tail(hs[stats.SURVIVAL], w_r)
        v = stats.Verdict(f"{name}: survival exponent vs -(2 - d)", stats.SURVIVAL,
                          fit.exponent, fit.stderr, -(2.0 - p.d), 0.08,
                          abs(fit.exponent + 2.0 - p.d) <= 0.08 + 2.0 * fit.stderr)
        verdicts.append(v)
        log(v.line())
    cf = hs.censored_fraction
    v = stats.Verdict(f"{name}: censored fraction", "censored", cf, 0.0, 0.0,
                      MAX_CENSORED_FRACTION, cf < MAX_CENSORED_FRACTION)
    verdicts.append(v)
    log(v.line())
    if out is not None:
        out.write_json(f"{name}_verdicts.json", {**header, "flights_used": hs.used,
                                                 "verdicts": [x.to_dict() for x in verdicts]})
    return verdicts


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    out = OutputDir(args.out)
    if args.family == "saw":
        cfg = {"generator": "saw", "n_steps": args.steps, "n_pivot_attempts": args.attempts,
               "seed": args.seed, "burn_in": args.burn_in}
    elif args.family == "koch":
        cfg = {"generator": "koch", "iterations": args.iterations}
    else:
        cfg = {"generator": "line", "d_e": args.d_e}
    b = generate_boundary(cfg)
    b = Boundary(b.kind, b.vertices, {**b.meta, "config": cfg})
    b.save(out.path(args.name))
    print(out.path(args.name))
    return EXIT_OK


def cmd_dimension(args) -> int:
    out = OutputDir(args.out)
    b = load_boundary(args.boundary)
    diam = boundary_diameter(b)
    scale = args.scale if args.scale is not None else (1.0 if math.isinf(diam) else diam)
    series = dim_mod.box_count(b, dim_mod.dyadic_ladder(scale, args.j_min, args.j_max))
    est = dim_mod.fit_dimension(series, window=tuple(args.window) if args.window else None)
    cfg = {"boundary": str(args.boundary), "scale": scale, "j_min": args.j_min,
           "j_max": args.j_max, "window": args.window}
    with open(out.path(f"{args.name}.csv"), "w") as fh:
        fh.write(_header_line(cfg))
        fh.write("eps,count\n")
        for e, c in series.rows():
            fh.write(f"{e!r},{c}\n")
    out.write_json(f"{args.name}.json", {"config": cfg, "estimate": est.to_dict()})
    print(f"d = {est.d:.4f} +/- {est.stderr:.4f} over eps in {est.window}")
    return EXIT_OK


def cmd_whitney(args) -> int:
    out = OutputDir(args.out)
    b = load_boundary(args.boundary)
    scene = Scene(b)
    params = WhitneyParams(args.c1, args.c2, args.max_depth)
    box = default_box(scene.index)
    dec = whitney_decompose(scene.index, box, params)
    cfg = {"boundary": str(args.boundary), "params": asdict(params),
           "box": {"lo": list(box.lo), "side": box.side}}
    with open(out.path(f"{args.name}.csv"), "w") as fh:
        fh.write(_header_line(cfg))
        fh.write("level,t,count\n")
        for j in range(0, params.max_depth + 1):
            t = box.side * 2.0 ** -j
            try:
                c = level_cubes(dec, t).count
            except RangeError:
                continue
            fh.write(f"{j},{t!r},{c}\n")
    if args.dump_cubes:
        out.write_json(f"{args.name}_cubes.json", {
            "config": cfg, "depth": dec.depth, "corners": dec.corners, "side": dec.side,
            "dist": dec.dist, "discarded": dec.discarded})
    print(f"{len(dec)} cubes, {dec.discarded} discarded at max depth")
    return EXIT_OK


def _campaign_from_args(args) -> tuple[CampaignConfig, Path | None]:
    base = None
    obj = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        obj = json.loads(path.read_text())
        base = path.parent
    if args.boundary:
        obj["boundary"] = args.boundary
    eng = dict(obj.get("engine", {}))
    for flag, key, conv in (("engine", "engine", str), ("flights", "n_flights", _count),
                            ("delta", "delta", float), ("n_max", "n_max", _count),
                            ("r_esc", "r_esc", float)):
        v = getattr(args, flag)
        if v is not None:
            eng[key] = conv(v)
    start = dict(obj.get("start", {}))
    if args.eps is not None:
        start["eps"] = float(args.eps)
    if args.start_mode is not None:
        start["mode"] = args.start_mode
    if "mode" not in start:
        start["mode"] = LATTICE_ADJACENT if eng.get("engine") == "lattice" else WHITNEY
    obj["start"] = start
    if args.seed is not None:
        obj["seed"] = args.seed
    if obj.get("seed") is None:
        raise ConfigError("a master seed is required (config 'seed' or --seed)")
    eng["seed"] = int(obj["seed"])
    obj["engine"] = eng
    if args.out is not None:
        obj["output_dir"] = args.out
    return CampaignConfig.from_dict(obj, base), base


def _count(v) -> int:
    f = float(v)
    if not f.is_integer() or f < 0:
        raise ConfigError(f"expected a nonnegative integer, got {v!r}")
    return int(f)


def cmd_flights(args) -> int:
    cc, _ = _campaign_from_args(args)
    out = OutputDir(cc.output_dir)
    b = load_boundary(cc.boundary)
    scene = Scene(b)
    rcfg = cc.engine.resolved(scene, cc.start)
    header = {"config": {**cc.to_dict(), "engine": asdict(rcfg)}, "seed": rcfg.seed,
              "scene": {"kind": b.kind, "dim": b.dim, "diameter": boundary_diameter(b)}}
    blocks = iter_campaign(scene, cc.start, cc.engine, args.workers, keep_points=False)
    summary = write_flights_csv(out.path(args.name), blocks, header,
                                integer_n=cc.engine.engine == "lattice")
    print(json.dumps(summary))
    return EXIT_OK


def cmd_fit(args) -> int:
    out = OutputDir(args.out)
    header, recs = read_flights_csv(args.flights)
    conf = header["config"]
    b = load_boundary(conf["boundary"])
    eps = conf["start"].get("eps") or 1.0
    w_r, w_n = default_windows(b, eps, conf["engine"]["r_esc"])
    if args.window_r:
        w_r = tuple(args.window_r)
    if args.window_n:
        w_n = tuple(args.window_n)
    filt = stats.FlightFilter(same_side=not args.all_sides)
    hs = stats.accumulate(recs, filt)
    h = {"source": str(args.flights), "seed": header.get("seed"), "config": conf,
         "window_r": w_r, "window_n": w_n, "estimator": args.estimator,
         "filters": asdict(filt)}
    _write_histograms(out, hs, h)
    fits = fit_histograms(hs, w_r, w_n, args.estimator)
    result = {**h, "flights_used": hs.used, "censored_fraction": hs.censored_fraction,
              "fits": {k: (f.to_dict() if isinstance(f, stats.TailFit) else {"error": str(f)})
                       for k, f in fits.items()}}
    failed = False
    if args.d is not None:
        pred = stats.predict(args.d, args.d_e)
        result["prediction"] = pred.to_dict()
        vs = []
        for kind in args.compare:
            f = fits[kind]
            if isinstance(f, Exception):
                raise f
            v = stats.compare(f, pred, args.tol)
            vs.append(v.to_dict())
            print(v.line())
            failed |= not v.passed
        result["verdicts"] = vs
    for kind, f in fits.items():
        if isinstance(f, stats.TailFit):
            print(f"{kind}: exponent {f.exponent:+.4f} +/- {f.stderr:.4f} "
                  f"over {f.window} ({f.n_points} points)")
            if args.svg:
                out.path(f"{kind}.svg").write_text(_ccdf_svg(hs[kind], f, kind))
    out.write_json(args.name, result)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_report(args) -> int:
    out = OutputDir(args.out)
    rows = []
    for path in args.inputs:
        obj = json.loads(Path(path).read_text())
        for v in obj.get("verdicts", []):
            rows.append({**v, "source": str(path)})
    if not rows:
        raise InsufficientDataError("no verdicts found in the inputs")
    for v in rows:
        mark = "PASS" if v["passed"] else "FAIL"
        print(f"[{mark}] {v['name']}: fitted {v['fitted']:+.4f} predicted "
              f"{v['predicted']:+.4f} tol {v['tolerance']}  ({v['source']})")
    ok = all(v["passed"] for v in rows)
    out.write_json(args.name, {"inputs": [str(p) for p in args.inputs], "passed": ok,
                               "verdicts": rows})
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    out = OutputDir(args.out)
    flights = _count(args.flights) if args.flights is not None else None
    vs = run_preset(args.preset, flights, args.seed, args.workers, out, args.svg)
    ok = all(v.passed for v in vs)
    print("ALL PASS" if ok else "SOME CHECKS FAILED")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flightlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        return p

    g = add("generate", cmd_generate, "write a boundary JSON")
    g.add_argument("family", choices=["saw", "koch", "line"])
    g.add_argument("--steps", type=int, default=10_000)
    g.add_argument("--attempts", type=int, default=100_000)
    g.add_argument("--burn-in", type=int, default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--iterations", type=int, default=6)
    g.add_argument("--d-e", type=int, default=2)
    g.add_argument("--out", default="out")
    g.add_argument("--name", default="boundary.json")

    d = add("dimension", cmd_dimension, "box-counting dimension of a curve")
    d.add_argument("--boundary", required=True)
    d.add_argument("--scale", type=float, default=None, help="ladder scale (default: diameter)")
    d.add_argument("--j-min", type=int, default=1)
    d.add_argument("--j-max", type=int, default=12)
    d.add_argument("--window", type=float, nargs=2, default=None, metavar=("EPS_MIN", "EPS_MAX"))
    d.add_argument("--out", default="out")
    d.add_argument("--name", default="dimension")

    w = add("whitney", cmd_whitney, "Whitney cube counts per dyadic level")
    w.add_argument("--boundary", required=True)
    w.add_argument("--c1", type=float, default=1.0)
    w.add_argument("--c2", type=float, default=4.0)
    w.add_argument("--max-depth", type=int, default=12)
    w.add_argument("--dump-cubes", action="store_true")
    w.add_argument("--out", default="out")
    w.add_argument("--name", default="whitney")

    f = add("flights", cmd_flights, "run a flight campaign")
    f.add_argument("--config", default=None, help="campaign JSON")
    f.add_argument("--boundary", default=None)
    f.add_argument("--engine", choices=["wos", "lattice"], default=None)
    f.add_argument("--flights", default=None)
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--eps", type=float, default=None)
    f.add_argument("--start-mode", choices=[WHITNEY, LATTICE_ADJACENT, HEIGHT], default=None)
    f.add_argument("--delta", type=float, default=None)
    f.add_argument("--n-max", default=None)
    f.add_argument("--r-esc", type=float, default=None)
    f.add_argument("--workers", type=int, default=None)
    f.add_argument("--out", default=None)
    f.add_argument("--name", default="flights.csv")

    t = add("fit", cmd_fit, "histograms and tail fits of a flights CSV")
    t.add_argument("--flights", required=True)
    t.add_argument("--window-r", type=float, nargs=2, default=None)
    t.add_argument("--window-n", type=float, nargs=2, default=None)
    t.add_argument("--estimator", choices=[stats.CCDF_OLS, stats.DENSITY_OLS],
                   default=stats.CCDF_OLS)
    t.add_argument("--all-sides", action="store_true", help="keep opposite-side flights")
    t.add_argument("--d", type=float, default=None, help="boundary dimension to compare with")
    t.add_argument("--d-e", type=int, default=2)
    t.add_argument("--tol", type=float, default=0.1)
    t.add_argument("--compare", nargs="+", choices=list(stats.HIST_KINDS),
                   default=[stats.SURVIVAL])
    t.add_argument("--svg", action="store_true")
    t.add_argument("--out", default="out")
    t.add_argument("--name", default="fit.json")

    r = add("report", cmd_report, "collect verdicts from fit/verify JSON files")
    r.add_argument("inputs", nargs="+")
    r.add_argument("--out", default="out")
    r.add_argument("--name", default="report.json")

    v = add("verify", cmd_verify, "end-to-end check of a named scenario")
    v.add_argument("--preset", required=True, choices=sorted(PRESETS))
    v.add_argument("--flights", default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--workers", type=int, default=None)
    v.add_argument("--svg", action="store_true")
    v.add_argument("--out", default="out")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, UsageError, RangeError, SizeError, DomainError,
            UnsupportedOperationError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
