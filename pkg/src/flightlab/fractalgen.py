"""Boundary families: triadic Koch prefractals, pivot-algorithm SAWs and the
analytic line / plane references."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, SizeError, UnsupportedOperationError
from .geometry import LATTICE2D, LINE2D, PLANE3D, POLYLINE2D, Boundary

MAX_KOCH_ITERATIONS = 10


@dataclass(frozen=True)
class KochConfig:
    iterations: int = 6
    variant: str = "triadic"

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if self.variant != "triadic":
            raise ConfigError(f"unsupported Koch variant {self.variant!r}")


@dataclass(frozen=True)
class SawConfig:
    n_steps: int = 10_000
    n_pivot_attempts: int = 100_000
    seed: int = 0
    # accepted pivots discarded before counting attempts; None means 10 * n_steps
    burn_in: int | None = None

    def __post_init__(self):
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if self.n_pivot_attempts < 0:
            raise ConfigError("n_pivot_attempts must be >= 0")
        if self.burn_in is not None and self.burn_in < 0:
            raise ConfigError("burn_in must be >= 0")

    @property
    def burn_in_accepted(self) -> int:
        return 10 * self.n_steps if self.burn_in is None else self.burn_in


def koch_generate(cfg: KochConfig) -> Boundary:
    k = cfg.iterations
    if k > MAX_KOCH_ITERATIONS:
        raise SizeError(f"Koch iterations {k} > {MAX_KOCH_ITERATIONS}")
    pts = np.array([[0.0, 0.0], [1.0, 0.0]])
    c, s = 0.5, math.sqrt(3.0) / 2.0
    for _ in range(k):
        a = pts[:-1]
        d = (pts[1:] - a) / 3.0
        p1 = a + d
        peak = p1 + np.column_stack([c * d[:, 0] - s * d[:, 1], s * d[:, 0] + c * d[:, 1]])
        p3 = a + 2.0 * d
        out = np.empty((4 * len(a) + 1, 2))
        out[0:-1:4] = a
        out[1::4] = p1
        out[2::4] = peak
        out[3::4] = p3
        out[-1] = pts[-1]
        pts = out
    pts[-1] = (1.0, 0.0)
    return Boundary(POLYLINE2D, pts, {"generator": "koch", "iterations": k,
                                      "variant": cfg.variant})


def line_reference(d_e: int) -> Boundary:
    if d_e == 2:
        return Boundary(LINE2D, meta={"generator": "line", "d_e": 2})
    if d_e == 3:
        return Boundary(PLANE3D, meta={"generator": "line", "d_e": 3})
    raise UnsupportedOperationError(f"no analytic reference in dimension {d_e}")


# ---------------------------------------------------------------------------
# pivot algorithm

# the 7 non-identity symmetries of Z^2, as (a, b, c, d) for [[a, b], [c, d]]
LATTICE_SYMMETRIES = np.array([
    [0, -1, 1, 0],    # rotate +90
    [-1, 0, 0, -1],   # rotate 180
    [0, 1, -1, 0],    # rotate -90
    [1, 0, 0, -1],    # reflect in x axis
    [-1, 0, 0, 1],    # reflect in y axis
    [0, 1, 1, 0],     # reflect in y = x
    [0, -1, -1, 0],   # reflect in y = -x
], dtype=np.int64)

_EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)
_OFF = 1 << 31


@njit(cache=True)
def _pack(x, y):
    return (np.uint64(x + _OFF) << np.uint64(32)) | np.uint64(y + _OFF)


@njit(cache=True)
def _home(key, bits):
    return np.int64((key * np.uint64(0x9E3779B97F4A7C15)) >> np.uint64(64 - bits))


@njit(cache=True)
def _find(keys, bits, key):
    mask = keys.shape[0] - 1
    i = _home(key, bits)
    while True:
        k = keys[i]
        if k == key:
            return i
        if k == _EMPTY:
            return -1
        i = (i + 1) & mask


@njit(cache=True)
def _insert(keys, vals, bits, key, val):
    mask = keys.shape[0] - 1
    i = _home(key, bits)
    while keys[i] != _EMPTY and keys[i] != key:
        i = (i + 1) & mask
    keys[i] = key
    vals[i] = val


@njit(cache=True)
def _delete(keys, vals, bits, key):
    mask = keys.shape[0] - 1
    i = _find(keys, bits, key)
    if i < 0:
        return
    j = i
    while True:
        j = (j + 1) & mask
        if keys[j] == _EMPTY:
            break
        home = _home(keys[j], bits)
        if ((j - home) & mask) >= ((j - i) & mask):
            keys[i] = keys[j]
            vals[i] = vals[j]
            i = j
    keys[i] = _EMPTY


@njit(cache=True)
def site_lookup(keys, vals, bits, x, y):
    """Walk index stored for site (x, y), or -1."""
    slot = _find(keys, bits, _pack(x, y))
    return -1 if slot < 0 else vals[slot]


@njit(cache=True)
def make_site_table(coords):
    n = coords.shape[0]
    bits = 4
    while (1 << bits) < 4 * n:
        bits += 1
    keys = np.full(1 << bits, _EMPTY, dtype=np.uint64)
    vals = np.zeros(1 << bits, dtype=np.int64)
    for j in range(n):
        _insert(keys, vals, bits, _pack(coords[j, 0], coords[j, 1]), j)
    return keys, vals, bits


@njit(cache=True)
def try_pivot(coords, keys, vals, bits, k, sym, buf):
    """Attempt one pivot about site ``k`` with symmetry row ``sym``.

    The shorter side of the walk is transformed, so the result equals the
    textbook suffix pivot up to a global lattice symmetry.  Returns True and
    updates ``coords`` and the site table in place iff the move is accepted.
    """
    n = coords.shape[0] - 1
    a, b, c, d = sym[0], sym[1], sym[2], sym[3]
    kx = coords[k, 0]
    ky = coords[k, 1]
    if 2 * k >= n:
        lo, hi, step = k + 1, n + 1, 1
    else:
        lo, hi, step = k - 1, -1, -1
    m = 0
    j = lo
    while j != hi:
        rx = coords[j, 0] - kx
        ry = coords[j, 1] - ky
        qx = kx + a * rx + b * ry
        qy = ky + c * rx + d * ry
        slot = _find(keys, bits, _pack(qx, qy))
        if slot >= 0:
            idx = vals[slot]
            if (step == 1 and idx <= k) or (step == -1 and idx >= k):
                return False
        buf[m, 0] = qx
        buf[m, 1] = qy
        m += 1
        j += step
    j = lo
    while j != hi:
        _delete(keys, vals, bits, _pack(coords[j, 0], coords[j, 1]))
        j += step
    j = lo
    m = 0
    while j != hi:
        coords[j, 0] = buf[m, 0]
        coords[j, 1] = buf[m, 1]
        _insert(keys, vals, bits, _pack(buf[m, 0], buf[m, 1]), j)
        m += 1
        j += step
    return True


@njit(cache=True)
def _pivot_batch(coords, keys, vals, bits, sites, syms, symtab, stop_after):
    """Run proposals until the batch ends or ``stop_after`` acceptances.

    Returns (proposals consumed, acceptances)."""
    buf = np.empty((coords.shape[0], 2), dtype=np.int64)
    acc = 0
    for q in range(sites.shape[0]):
        if try_pivot(coords, keys, vals, bits, sites[q], symtab[syms[q]], buf):
            acc += 1
            if acc >= stop_after:
                return q + 1, acc
    return sites.shape[0], acc


def _proposals(rng, n, size):
    return (rng.integers(1, n, size=size, dtype=np.int64),
            rng.integers(0, len(LATTICE_SYMMETRIES), size=size, dtype=np.int64))


def saw_generate(cfg: SawConfig, batch: int = 65_536) -> Boundary:
    """Self-avoiding walk by the pivot algorithm, started from a straight rod.

    ``cfg.burn_in_accepted`` accepted moves are made first and discarded, then
    ``cfg.n_pivot_attempts`` further proposals are applied.
    """
    n = cfg.n_steps
    coords = np.zeros((n + 1, 2), dtype=np.int64)
    coords[:, 0] = np.arange(n + 1)
    rng = np.random.default_rng(cfg.seed)
    accepted = 0
    attempts = 0
    if n >= 2:
        keys, vals, bits = make_site_table(coords)
        remaining = cfg.burn_in_accepted
        while remaining > 0:
            sites, syms = _proposals(rng, n, batch)
            _, acc = _pivot_batch(coords, keys, vals, bits, sites, syms,
                                  LATTICE_SYMMETRIES, remaining)
            remaining -= acc
        left = cfg.n_pivot_attempts
        while left > 0:
            size = min(batch, left)
            sites, syms = _proposals(rng, n, size)
            used, acc = _pivot_batch(coords, keys, vals, bits, sites, syms,
                                     LATTICE_SYMMETRIES, size + 1)
            accepted += acc
            attempts += used
            left -= used
    coords -= coords[0]
    meta = {"generator": "saw", "n_steps": n, "n_pivot_attempts": cfg.n_pivot_attempts,
            "burn_in": cfg.burn_in_accepted, "seed": cfg.seed, "accepted": accepted}
    return Boundary(LATTICE2D, coords, meta)
