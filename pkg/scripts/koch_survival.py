"""Survival exponent of Whitney-started flights on Koch curves, across
iteration depth and starting scale.

    python3 scripts/koch_survival.py --iterations 5 6 7 --flights 2e5
"""
import argparse
import math

from flightlab import stats
from flightlab.flights import WHITNEY, EngineConfig, Scene, StartSpec, iter_campaign
from flightlab.fractalgen import KochConfig, koch_generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iterations", type=int, nargs="+", default=[5, 6, 7])
    ap.add_argument("--levels", type=int, nargs="+", default=[8, 9, 10],
                    help="starting scale eps = diameter * 2**-level")
    ap.add_argument("--flights", type=float, default=2e5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    d = math.log(4.0) / math.log(3.0)
    print(f"d = {d:.4f}; d_e - d - 2 = {-d:.4f}; -(2 - d) = {-(2 - d):.4f}")
    for k in args.iterations:
        scene = Scene(koch_generate(KochConfig(k)))
        diam = scene.index.diameter
        for j in args.levels:
            eps = diam * 2.0 ** -j
            if eps < 3.0 ** -k:
                continue
            cfg = EngineConfig(seed=args.seed, n_flights=int(args.flights))
            hs = stats.accumulate(iter_campaign(scene, StartSpec(WHITNEY, eps), cfg,
                                                keep_points=False))
            fit = stats.fit_tail(hs.survival, (10 * eps, diam / 10))
            print(f"k={k} eps=D*2^-{j}: survival {fit.exponent:+.4f} +/- {fit.stderr:.4f} "
                  f"({fit.n_points} points, censored {hs.censored_fraction:.4f})")


if __name__ == "__main__":
    main()
