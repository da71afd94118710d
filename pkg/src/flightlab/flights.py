"""First-passage flight engines.

Two engines share one record format.  The lattice engine runs a simple
symmetric walk on Z^2 from a site next to a lattice path until it lands on a
site adjacent to (or on) the path.  The walk-on-spheres engine samples the
exact Brownian hitting law off-lattice: from p it jumps to a uniform point on
the sphere of radius dist(p), and is absorbed once dist(p) < delta.

Campaigns split flights into fixed-size chunks.  Chunk c draws from its own
stream seeded by (master_seed, c), so the records do not depend on how many
threads execute the chunks.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterator

import numba
import numpy as np
from numba import njit, prange

from .errors import ConfigError, RangeError
from .geometry import (ANALYTIC, LATTICE2D, LINE2D, PLANE3D, SIDE_NAMES, Boundary,
                       DistanceIndex, Side, build_index, nearest_query, query_many,
                       side_code)
from .whitney import WhitneyDecomposition, WhitneyParams, default_box, level_cubes, whitney_decompose

WHITNEY = "whitney-uniform"
LATTICE_ADJACENT = "lattice-adjacent-uniform"
HEIGHT = "height"
START_MODES = (WHITNEY, LATTICE_ADJACENT, HEIGHT)

ENV_WORKERS = "FLIGHTLAB_WORKERS"

STATUS_OK = 0
STATUS_BAD_START = 1


@dataclass(frozen=True)
class StartSpec:
    """How flight starting points are drawn.

    ``height`` puts every start at distance ``eps`` above the origin of an
    analytic line or plane, where the hitting law is known in closed form.
    """

    mode: str = WHITNEY
    eps: float | None = None

    def __post_init__(self):
        if self.mode not in START_MODES:
            raise ConfigError(f"unknown start mode {self.mode!r}")
        if self.mode != LATTICE_ADJACENT and (self.eps is None or self.eps <= 0):
            raise ConfigError(f"start mode {self.mode!r} needs eps > 0")


@dataclass(frozen=True)
class EngineConfig:
    engine: str = "wos"
    delta: float | None = None
    n_max: int | None = None
    r_esc: float | None = None
    seed: int = 0
    n_flights: int = 0
    chunk_size: int = 4096

    def __post_init__(self):
        if self.engine not in ("wos", "lattice"):
            raise ConfigError(f"unknown engine {self.engine!r}")
        if self.delta is not None and self.delta <= 0:
            raise ConfigError("delta must be > 0")
        if self.n_max is not None and self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.n_flights < 0:
            raise ConfigError("n_flights must be >= 0")
        if self.chunk_size < 1:
            raise ConfigError("chunk_size must be >= 1")

    def resolved(self, scene: "Scene", spec: StartSpec) -> "EngineConfig":
        """Fill defaults: delta = eps/100, R_esc = 4 x diameter (10^6 eps for
        the unbounded analytic references), n_max 10^5 WoS steps or 10^8
        lattice steps."""
        eps = spec.eps if spec.eps is not None else 1.0
        delta = self.delta if self.delta is not None else eps / 100.0
        if self.r_esc is not None:
            r_esc = self.r_esc
        elif scene.boundary.kind in ANALYTIC:
            r_esc = 1e6 * eps
        else:
            r_esc = 4.0 * scene.index.diameter
        n_max = self.n_max or (100_000 if self.engine == "wos" else 100_000_000)
        if r_esc <= eps:
            raise ConfigError("R_esc must exceed eps")
        return replace(self, delta=delta, r_esc=r_esc, n_max=n_max)


@dataclass(frozen=True)
class FlightRecord:
    start: tuple
    end: tuple
    n: float
    steps: int
    r: float
    start_side: Side
    end_side: Side
    censored: bool
    flight_id: int = 0
    worker: int = 0


@dataclass(eq=False)
class FlightRecords:
    """Columnar block of flights.  ``worker`` holds the stream (chunk) id."""

    flight_id: np.ndarray
    worker: np.ndarray
    n: np.ndarray
    steps: np.ndarray
    r: np.ndarray
    start_side: np.ndarray
    end_side: np.ndarray
    censored: np.ndarray
    status: np.ndarray
    start: np.ndarray
    end: np.ndarray

    def __len__(self) -> int:
        return len(self.flight_id)

    @classmethod
    def empty(cls, dim: int = 2) -> "FlightRecords":
        return cls.allocate(0, dim, True)

    @classmethod
    def allocate(cls, m: int, dim: int, keep_points: bool) -> "FlightRecords":
        pm = m if keep_points else 0
        return cls(np.arange(m, dtype=np.int64), np.zeros(m, dtype=np.int64),
                   np.zeros(m), np.zeros(m, dtype=np.int64), np.zeros(m),
                   np.zeros(m, dtype=np.int8), np.zeros(m, dtype=np.int8),
                   np.zeros(m, dtype=np.bool_), np.zeros(m, dtype=np.int8),
                   np.zeros((pm, dim)), np.zeros((pm, dim)))

    @classmethod
    def concat(cls, blocks) -> "FlightRecords":
        blocks = list(blocks)
        if not blocks:
            return cls.empty()
        return cls(*(np.concatenate([getattr(b, f) for b in blocks])
                     for f in cls.__dataclass_fields__))

    def __getitem__(self, i) -> FlightRecord:
        has_pts = len(self.start) == len(self)
        return FlightRecord(
            tuple(self.start[i].tolist()) if has_pts else (),
            tuple(self.end[i].tolist()) if has_pts else (),
            float(self.n[i]), int(self.steps[i]), float(self.r[i]),
            Side(int(self.start_side[i])), Side(int(self.end_side[i])),
            bool(self.censored[i]), int(self.flight_id[i]), int(self.worker[i]))

    def __iter__(self) -> Iterator[FlightRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def n_errors(self) -> int:
        return int(np.count_nonzero(self.status != STATUS_OK))

    def ok(self) -> "FlightRecords":
        return self.select(self.status == STATUS_OK)

    def select(self, mask) -> "FlightRecords":
        has_pts = len(self.start) == len(self)
        vals = {}
        for f in self.__dataclass_fields__:
            a = getattr(self, f)
            vals[f] = a[mask] if (has_pts or f not in ("start", "end")) else a
        return FlightRecords(**vals)

    def canonical_bytes(self) -> bytes:
        """Schedule-independent serialization: records sorted by every field."""
        cols = [self.censored.astype(np.int64), self.end_side, self.start_side,
                self.r, self.n, self.steps]
        order = np.lexsort(cols)
        parts = [getattr(self, f)[order].tobytes()
                 for f in ("n", "steps", "r", "start_side", "end_side", "censored", "status")]
        if len(self.start) == len(self):
            parts += [self.start[order].tobytes(), self.end[order].tobytes()]
        return b"".join(parts)

    def write_csv(self, path, header: dict | None = None, integer_n: bool = False) -> None:
        """Columns flight_id, worker, n, r, start_side, end_side, censored.
        Flights that errored are left out (their count is in the header)."""
        ok = self.status == STATUS_OK
        with open(path, "w", newline="") as fh:
            if header is not None:
                fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
            fh.write("flight_id,worker,n,r,start_side,end_side,censored\n")
            for i in np.flatnonzero(ok):
                n = str(int(self.n[i])) if integer_n else repr(float(self.n[i]))
                fh.write(f"{self.flight_id[i]},{self.worker[i]},{n},{float(self.r[i])!r},"
                         f"{SIDE_NAMES[int(self.start_side[i])]},"
                         f"{SIDE_NAMES[int(self.end_side[i])]},{int(self.censored[i])}\n")


# ---------------------------------------------------------------------------
# scene


@dataclass(frozen=True, eq=False)
class LatticeDomain:
    """Absorbing-site grid around a lattice path.

    ``grid`` codes: 0 free, otherwise side label + 2 (1 right, 2 ambiguous or
    on the path, 3 left).  Sites outside the grid are free.
    """

    origin: tuple
    grid: np.ndarray
    shell: np.ndarray
    shell_side: np.ndarray

    def absorbing_set(self) -> set:
        ii, jj = np.nonzero(self.grid)
        return set(zip((ii + self.origin[0]).tolist(), (jj + self.origin[1]).tolist()))


def lattice_domain(boundary: Boundary, index: DistanceIndex | None = None) -> LatticeDomain:
    if boundary.kind != LATTICE2D:
        raise ConfigError("lattice engine needs a lattice-path2d boundary")
    index = index or build_index(boundary)
    v = boundary.vertices
    lo = v.min(axis=0) - 2
    hi = v.max(axis=0) + 2
    grid = np.zeros(tuple(hi - lo + 1), dtype=np.int8)
    on = v - lo
    grid[on[:, 0], on[:, 1]] = 2
    nbrs = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]])
    shell = (v[:, None, :] + nbrs[None, :, :]).reshape(-1, 2)
    shell = np.unique(shell, axis=0)
    shell = shell[grid[shell[:, 0] - lo[0], shell[:, 1] - lo[1]] == 0]
    _, _, sides = query_many(index, shell.astype(np.float64))
    grid[shell[:, 0] - lo[0], shell[:, 1] - lo[1]] = sides + 2
    for a in (grid, shell, sides):
        a.setflags(write=False)
    return LatticeDomain((int(lo[0]), int(lo[1])), grid, shell, sides)


@dataclass(eq=False)
class Scene:
    boundary: Boundary
    whitney_params: WhitneyParams | None = None

    @cached_property
    def index(self) -> DistanceIndex:
        return build_index(self.boundary)

    @cached_property
    def lattice(self) -> LatticeDomain:
        return lattice_domain(self.boundary, self.index)

    @property
    def dim(self) -> int:
        return self.boundary.dim

    def decomposition(self, eps: float) -> WhitneyDecomposition:
        """Whitney decomposition deep enough to resolve level ``eps``."""
        box = default_box(self.index)
        depth = max(0, math.ceil(math.log2(box.side / eps))) + 3
        params = self.whitney_params or WhitneyParams(max_depth=depth)
        if params.max_depth < depth:
            params = replace(params, max_depth=depth)
        cache = self.__dict__.setdefault("_decs", {})
        key = (params, box)
        if key not in cache:
            cache[key] = whitney_decompose(self.index, box, params)
        return cache[key]

    def start_candidates(self, spec: StartSpec) -> np.ndarray:
        if spec.mode == LATTICE_ADJACENT:
            return self.lattice.shell.astype(np.float64)
        if spec.mode == HEIGHT:
            if self.boundary.kind not in ANALYTIC:
                raise ConfigError("height starts are defined for the analytic references")
            p = np.zeros((1, self.dim))
            p[0, -1] = spec.eps
            return p
        level = level_cubes(self.decomposition(spec.eps), spec.eps)
        if level.count == 0:
            raise RangeError(f"no Whitney cubes at level {spec.eps}")
        return level.centers


def sample_start(source, spec: StartSpec, rng: np.random.Generator,
                 size: int | None = None) -> np.ndarray:
    """One start point (or ``size`` of them): a uniformly chosen Q_eps cube
    centre (Whitney mode) or a uniformly chosen free site next to the path
    (lattice mode)."""
    if spec.mode == WHITNEY:
        if not isinstance(source, WhitneyDecomposition):
            raise ConfigError("whitney-uniform starts need a WhitneyDecomposition")
        cands = level_cubes(source, spec.eps).centers
    elif spec.mode == LATTICE_ADJACENT:
        if isinstance(source, Boundary):
            source = lattice_domain(source)
        if not isinstance(source, LatticeDomain):
            raise ConfigError("lattice-adjacent starts need a lattice boundary")
        cands = source.shell
    else:
        if not isinstance(source, Scene):
            source = Scene(source)
        cands = source.start_candidates(spec)
    if len(cands) == 0:
        raise RangeError("no start candidates")
    return np.array(cands[rng.integers(len(cands), size=size)])


# ---------------------------------------------------------------------------
# kernels

KIND_LINE, KIND_PLANE, KIND_POLY = 0, 1, 2


def _kind_code(index: DistanceIndex) -> int:
    return {LINE2D: KIND_LINE, PLANE3D: KIND_PLANE}.get(index.kind, KIND_POLY)


@njit(cache=True)
def _probe(kind, px, py, pz, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state):
    if kind == 0:
        return abs(py), (1 if py > 0.0 else (-1 if py < 0.0 else 0))
    if kind == 1:
        return abs(pz), (1 if pz > 0.0 else (-1 if pz < 0.0 else 0))
    nearest_query(px, py, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state)
    return state[0], side_code(state, seg, px, py, closed)


@njit(cache=True)
def _direction(dim):
    if dim == 2:
        a = 2.0 * math.pi * np.random.random()
        return math.cos(a), math.sin(a), 0.0
    z = 2.0 * np.random.random() - 1.0
    a = 2.0 * math.pi * np.random.random()
    s = math.sqrt(max(0.0, 1.0 - z * z))
    return s * math.cos(a), s * math.sin(a), z


@njit(cache=True)
def _wos_flight(kind, dim, sx, sy, sz, delta, n_max, r_esc, seg, x0, y0, lh, lnx, lny,
                cs, ci, loff, closed, state, res, endp):
    """One walk-on-spheres flight.  res <- [n, steps, r, start_side, end_side,
    censored, status]; endp <- end point."""
    d, s_side = _probe(kind, sx, sy, sz, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state)
    res[3] = s_side
    if not d > delta:
        res[0] = 0.0
        res[1] = 0.0
        res[2] = 0.0
        res[4] = 0
        res[5] = 0
        res[6] = 1
        endp[0] = sx
        endp[1] = sy
        endp[2] = sz
        return
    px, py, pz = sx, sy, sz
    t = 0.0
    steps = 0
    r2 = r_esc * r_esc
    side = s_side
    censored = 0
    while True:
        if d < delta:
            break
        if steps >= n_max:
            censored = 1
            break
        ux, uy, uz = _direction(dim)
        px += d * ux
        py += d * uy
        pz += d * uz
        t += d * d / dim
        steps += 1
        if (px - sx) ** 2 + (py - sy) ** 2 + (pz - sz) ** 2 > r2:
            censored = 1
            break
        d, side = _probe(kind, px, py, pz, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state)
    if censored:
        ex, ey, ez = px, py, pz
        side = 0
    elif kind == 0:
        ex, ey, ez = px, 0.0, 0.0
    elif kind == 1:
        ex, ey, ez = px, py, 0.0
    else:
        s = int(state[1])
        ax, ay, bx, by = seg[s, 0], seg[s, 1], seg[s, 2], seg[s, 3]
        dx, dy = bx - ax, by - ay
        u = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
        u = min(max(u, 0.0), 1.0)
        ex, ey, ez = ax + u * dx, ay + u * dy, 0.0
    res[0] = t
    res[1] = steps
    res[2] = math.sqrt((ex - sx) ** 2 + (ey - sy) ** 2 + (ez - sz) ** 2)
    res[4] = side
    res[5] = censored
    res[6] = 0
    endp[0] = ex
    endp[1] = ey
    endp[2] = ez


@njit(cache=True)
def _lattice_flight(sx, sy, grid, gx0, gy0, n_max, r_esc, res, endp):
    """One lattice flight from site (sx, sy); same result layout as WoS."""
    gw = grid.shape[0]
    gh = grid.shape[1]
    gi = sx - gx0
    gj = sy - gy0
    s_side = 0
    if 0 <= gi < gw and 0 <= gj < gh:
        s_side = grid[gi, gj] - 2 if grid[gi, gj] != 0 else 0
    res[3] = s_side
    x = sx
    y = sy
    n = 0
    bits = 0
    nb = 0
    r2 = r_esc * r_esc
    censored = 0
    side = 0
    while True:
        if nb == 0:
            bits = np.random.randint(0, 1 << 30)
            nb = 15
        m = bits & 3
        bits >>= 2
        nb -= 1
        if m == 0:
            x += 1
        elif m == 1:
            x -= 1
        elif m == 2:
            y += 1
        else:
            y -= 1
        n += 1
        gi = x - gx0
        gj = y - gy0
        if 0 <= gi < gw and 0 <= gj < gh:
            g = grid[gi, gj]
            if g != 0:
                side = g - 2
                break
        if n >= n_max:
            censored = 1
            break
        if (x - sx) * (x - sx) + (y - sy) * (y - sy) > r2:
            censored = 1
            break
    res[0] = n
    res[1] = n
    res[2] = math.sqrt(float((x - sx) * (x - sx) + (y - sy) * (y - sy)))
    res[4] = 0 if censored else side
    res[5] = censored
    res[6] = 0
    endp[0] = x
    endp[1] = y
    endp[2] = 0.0


@njit(cache=True)
def _seeded(seed):
    np.random.seed(seed)


@njit(cache=True)
def _wos_single(seed, kind, dim, sx, sy, sz, delta, n_max, r_esc, seg, x0, y0, lh, lnx, lny,
                cs, ci, loff, closed, res, endp):
    np.random.seed(seed)
    state = np.empty(3)
    _wos_flight(kind, dim, sx, sy, sz, delta, n_max, r_esc, seg, x0, y0, lh, lnx, lny,
                cs, ci, loff, closed, state, res, endp)


@njit(cache=True)
def _lattice_single(seed, sx, sy, grid, gx0, gy0, n_max, r_esc, res, endp):
    np.random.seed(seed)
    _lattice_flight(sx, sy, grid, gx0, gy0, n_max, r_esc, res, endp)


@njit(parallel=True, cache=True)
def _campaign_kernel(engine, seeds, first_id, chunk, n_total, cands, kind, dim, delta,
                     n_max, r_esc, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed,
                     grid, gx0, gy0, out_f, out_i, starts, ends, keep_points):
    """Run chunks of flights.  Chunk c covers flights first_id + c*chunk ..
    and reseeds the (thread-local) generator with seeds[c] before starting."""
    n_chunks = seeds.shape[0]
    m = cands.shape[0]
    for c in prange(n_chunks):
        np.random.seed(seeds[c])
        state = np.empty(3)
        res = np.empty(7)
        endp = np.empty(3)
        lo = c * chunk
        hi = min(lo + chunk, n_total)
        for i in range(lo, hi):
            j = np.random.randint(0, m)
            sx = cands[j, 0]
            sy = cands[j, 1]
            sz = cands[j, 2] if dim == 3 else 0.0
            if engine == 0:
                _wos_flight(kind, dim, sx, sy, sz, delta, n_max, r_esc, seg, x0, y0, lh,
                            lnx, lny, cs, ci, loff, closed, state, res, endp)
            else:
                _lattice_flight(int(sx), int(sy), grid, gx0, gy0, n_max, r_esc, res, endp)
            out_f[i, 0] = res[0]
            out_f[i, 1] = res[2]
            out_i[i, 0] = int(res[1])
            out_i[i, 1] = int(res[3])
            out_i[i, 2] = int(res[4])
            out_i[i, 3] = int(res[5])
            out_i[i, 4] = int(res[6])
            out_i[i, 5] = c
            if keep_points:
                starts[i, 0] = sx
                starts[i, 1] = sy
                ends[i, 0] = endp[0]
                ends[i, 1] = endp[1]
                if dim == 3:
                    starts[i, 2] = sz
                    ends[i, 2] = endp[2]


def chunk_seed(master_seed: int, chunk: int) -> int:
    """32-bit seed of chunk ``chunk``'s stream, mixed from the master seed."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(chunk)])
    return int(ss.generate_state(1, np.uint32)[0])


def _rng_seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**32))


_DUMMY_SEG = np.zeros((0, 4))
_DUMMY_I = np.ones(1, dtype=np.int64)
_DUMMY_F = np.ones(1)
_DUMMY_GRID = np.zeros((1, 1), dtype=np.int8)


def _index_args(index: DistanceIndex | None):
    if index is None or index.analytic:
        return (_DUMMY_SEG, 0.0, 0.0, _DUMMY_F, _DUMMY_I, _DUMMY_I, _DUMMY_I, _DUMMY_I,
                _DUMMY_I, False)
    return index.kernel_args()


def _record_from(res, endp, start, dim) -> FlightRecord:
    return FlightRecord(tuple(float(v) for v in start), tuple(float(v) for v in endp[:dim]),
                        float(res[0]), int(res[1]), float(res[2]), Side(int(res[3])),
                        Side(int(res[4])), bool(res[5]))


def run_flight_wos(index: DistanceIndex, start, cfg: EngineConfig,
                   rng: np.random.Generator) -> FlightRecord:
    """Single walk-on-spheres flight; ``cfg`` must carry delta, n_max, r_esc."""
    start = np.asarray(start, dtype=np.float64)
    if cfg.delta is None or cfg.r_esc is None:
        raise ConfigError("run_flight_wos needs explicit delta and r_esc")
    res = np.zeros(7)
    endp = np.zeros(3)
    sz = start[2] if index.dim == 3 else 0.0
    _wos_single(_rng_seed(rng), _kind_code(index), index.dim, start[0], start[1], sz,
                cfg.delta, cfg.n_max or 100_000, cfg.r_esc, *_index_args(index), res, endp)
    if res[6] != STATUS_OK:
        raise RangeError("start point is within delta of the boundary")
    return _record_from(res, endp, start, index.dim)


def run_flight_lattice(domain, start, cfg: EngineConfig,
                       rng: np.random.Generator) -> FlightRecord:
    """Single lattice flight from a free site adjacent to the path."""
    if isinstance(domain, Boundary):
        domain = lattice_domain(domain)
    sx, sy = (int(v) for v in start)
    res = np.zeros(7)
    endp = np.zeros(3)
    r_esc = cfg.r_esc if cfg.r_esc is not None else math.inf
    _lattice_single(_rng_seed(rng), sx, sy, domain.grid, domain.origin[0], domain.origin[1],
                    cfg.n_max or 100_000_000, r_esc, res, endp)
    return _record_from(res, endp, (sx, sy), 2)


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(ENV_WORKERS)
        workers = int(env) if env else numba.config.NUMBA_NUM_THREADS
    return max(1, min(int(workers), numba.config.NUMBA_NUM_THREADS))


def iter_campaign(scene: Scene, spec: StartSpec, cfg: EngineConfig,
                  workers: int | None = None, keep_points: bool = True,
                  block_chunks: int = 64) -> Iterator[FlightRecords]:
    """Yield consecutive blocks of records, ordered by (chunk, local index)."""
    if cfg.engine == "lattice" and spec.mode != LATTICE_ADJACENT:
        raise ConfigError("the lattice engine starts from lattice-adjacent sites")
    if cfg.engine == "wos" and spec.mode == LATTICE_ADJACENT:
        raise ConfigError("walk-on-spheres needs a whitney-uniform or height start")
    cfg = cfg.resolved(scene, spec)
    if cfg.n_flights == 0:
        return
    dim = scene.dim
    cands = np.ascontiguousarray(scene.start_candidates(spec), dtype=np.float64)
    if dim == 2:
        cands = np.ascontiguousarray(np.column_stack([cands, np.zeros(len(cands))]))
    if cfg.engine == "lattice":
        dom = scene.lattice
        grid, gx0, gy0 = dom.grid, dom.origin[0], dom.origin[1]
        idx_args = _index_args(None)
        kind = KIND_POLY
    else:
        grid, gx0, gy0 = _DUMMY_GRID, 0, 0
        idx_args = _index_args(scene.index)
        kind = _kind_code(scene.index)
    numba.set_num_threads(resolve_workers(workers))
    chunk = cfg.chunk_size
    n_chunks = -(-cfg.n_flights // chunk)
    for c0 in range(0, n_chunks, block_chunks):
        c1 = min(n_chunks, c0 + block_chunks)
        first = c0 * chunk
        m = min(cfg.n_flights, c1 * chunk) - first
        seeds = np.array([chunk_seed(cfg.seed, c) for c in range(c0, c1)], dtype=np.int64)
        out_f = np.zeros((m, 2))
        out_i = np.zeros((m, 6), dtype=np.int64)
        pm = m if keep_points else 0
        starts = np.zeros((pm, dim))
        ends = np.zeros((pm, dim))
        _campaign_kernel(0 if cfg.engine == "wos" else 1, seeds, first, chunk, m, cands,
                         kind, dim, cfg.delta, cfg.n_max, cfg.r_esc, *idx_args,
                         grid, gx0, gy0, out_f, out_i, starts, ends, keep_points)
        yield FlightRecords(np.arange(first, first + m, dtype=np.int64), out_i[:, 5] + c0,
                            out_f[:, 0], out_i[:, 0], out_f[:, 1],
                            out_i[:, 1].astype(np.int8), out_i[:, 2].astype(np.int8),
                            out_i[:, 3].astype(np.bool_), out_i[:, 4].astype(np.int8),
                            starts, ends)


def run_campaign(scene: Scene, spec: StartSpec, cfg: EngineConfig,
                 workers: int | None = None, keep_points: bool = True) -> FlightRecords:
    return FlightRecords.concat(iter_campaign(scene, spec, cfg, workers, keep_points)) \
        if cfg.n_flights else FlightRecords.empty(scene.dim)


# ---------------------------------------------------------------------------
# hitting experiments


@njit(cache=True)
def _level_hit_kernel(seed, n, cands, r, delta, n_max, kind, dim, seg, x0, y0, lh, lnx, lny,
                      cs, ci, loff, closed):
    """WoS in {delta < dist < r}: radius min(d, r - d).  Counts walks that
    come within delta of the level dist = r before reaching dist < delta."""
    np.random.seed(seed)
    state = np.empty(3)
    hits = 0
    m = cands.shape[0]
    for _ in range(n):
        j = np.random.randint(0, m)
        px, py, pz = cands[j, 0], cands[j, 1], cands[j, 2]
        steps = 0
        while steps < n_max:
            d, _ = _probe(kind, px, py, pz, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state)
            if d >= r - delta:
                hits += 1
                break
            if d < delta:
                break
            rad = min(d, r - d)
            ux, uy, uz = _direction(dim)
            px += rad * ux
            py += rad * uy
            pz += rad * uz
            steps += 1
    return hits


@njit(cache=True)
def _ball_hit_kernel(seed, n, cx, cy, cz, radius, delta, n_max, kind, dim, seg, x0, y0, lh,
                     lnx, lny, cs, ci, loff, closed):
    """WoS in Omega intersected with B(c, radius): fraction absorbed on the
    boundary rather than on the sphere."""
    np.random.seed(seed)
    state = np.empty(3)
    hits = 0
    for _ in range(n):
        px, py, pz = cx, cy, cz
        steps = 0
        while steps < n_max:
            d, _ = _probe(kind, px, py, pz, seg, x0, y0, lh, lnx, lny, cs, ci, loff, closed, state)
            if d < delta:
                hits += 1
                break
            gap = radius - math.sqrt((px - cx) ** 2 + (py - cy) ** 2 + (pz - cz) ** 2)
            if gap < delta:
                break
            rad = min(d, gap)
            ux, uy, uz = _direction(dim)
            px += rad * ux
            py += rad * uy
            pz += rad * uz
            steps += 1
    return hits


def level_hit_experiment(dec: WhitneyDecomposition, index: DistanceIndex, eps: float,
                         r: float, n_flights: int, seed: int = 0,
                         delta: float | None = None, n_max: int = 1_000_000) -> float:
    """Fraction of Brownian paths from uniformly chosen Q_eps cube centres
    that reach the level set dist = r before the boundary."""
    if r <= eps:
        return 1.0
    delta = eps / 100.0 if delta is None else delta
    cands = level_cubes(dec, eps).centers
    if len(cands) == 0:
        raise RangeError(f"no Whitney cubes at level {eps}")
    if cands.shape[1] == 2:
        cands = np.column_stack([cands, np.zeros(len(cands))])
    hits = _level_hit_kernel(chunk_seed(seed, 0), int(n_flights),
                             np.ascontiguousarray(cands), r, delta, n_max,
                             _kind_code(index), index.dim, *_index_args(index))
    return hits / n_flights


def ball_hit_fraction(index: DistanceIndex, x, radius: float, n_walks: int, seed: int,
                      delta: float, n_max: int = 1_000_000) -> float:
    x = np.asarray(x, dtype=np.float64)
    cz = x[2] if len(x) == 3 else 0.0
    hits = _ball_hit_kernel(chunk_seed(seed, 0), int(n_walks), x[0], x[1], cz, radius, delta,
                            n_max, _kind_code(index), index.dim, *_index_args(index))
    return hits / n_walks
