"""Whitney level counts against box counts, level by level.

    python3 scripts/whitney_comparability.py --koch 6 --saw-steps 10000
"""
import argparse

import numpy as np

from flightlab.dimension import box_count
from flightlab.fractalgen import KochConfig, SawConfig, koch_generate, saw_generate
from flightlab.geometry import build_index
from flightlab.whitney import WhitneyParams, level_counts, whitney_decompose


def table(name, boundary, ts, max_depth):
    dec = whitney_decompose(build_index(boundary), params=WhitneyParams(max_depth=max_depth))
    q = level_counts(dec, ts)
    n = box_count(boundary, ts).counts
    print(f"{name}: {len(dec)} cubes")
    print("       t    #Q_t     N_t   ratio")
    for t, a, b in zip(ts, q, n):
        print(f"{t:8.4g} {a:7d} {b:7d} {a / b:7.3f}")
    r = q / n
    for i in range(len(r) - 4):
        w = r[i:i + 5]
        band = w.max() / w.min() if w.min() > 0 else float("inf")
        print(f"  band over levels {i}..{i + 4}: {band:.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--koch", type=int, default=6)
    ap.add_argument("--saw-steps", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    table(f"koch k={args.koch}", koch_generate(KochConfig(args.koch)),
          2.0 ** -np.arange(3, 11), 12)
    walk = saw_generate(SawConfig(args.saw_steps, 10 * args.saw_steps, args.seed))
    table(f"saw n={args.saw_steps}", walk, 2.0 ** np.arange(7, -1, -1), 15)


if __name__ == "__main__":
    main()
