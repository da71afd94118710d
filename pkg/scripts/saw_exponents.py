"""Lattice flights over pivot-generated SAWs: theta and psi exponents for a
sweep of fit windows, with and without the same-side filter.

    python3 scripts/saw_exponents.py --steps 10000 --flights 1e7
"""
import argparse
import json

from flightlab import stats
from flightlab.flights import LATTICE_ADJACENT, EngineConfig, Scene, StartSpec, iter_campaign
from flightlab.fractalgen import SawConfig, saw_generate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10_000)
    ap.add_argument("--attempts", type=int, default=100_000)
    ap.add_argument("--flights", type=float, default=1e6)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None, help="optional JSON output path")
    args = ap.parse_args()

    walk = saw_generate(SawConfig(args.steps, args.attempts, args.seed))
    scene = Scene(walk)
    cfg = EngineConfig("lattice", seed=args.seed, n_flights=int(args.flights))
    same = stats.HistogramSet.empty()
    both = stats.HistogramSet.empty()
    for block in iter_campaign(scene, StartSpec(LATTICE_ADJACENT), cfg, keep_points=False):
        same = same.merge(stats.accumulate(block))
        both = both.merge(stats.accumulate(block, stats.FlightFilter(same_side=False)))
    n34 = args.steps ** 0.75
    pred = stats.predict(4.0 / 3.0, 2)
    rows = []
    for lo, hi in ((5, n34 / 20), (10, n34 / 10), (10, n34 / 5), (20, n34 / 5)):
        for label, hs in (("same-side", same), ("all", both)):
            th = stats.fit_tail(hs.theta, (lo, hi))
            ps = stats.fit_tail(hs.psi, (lo ** 2, hi ** 2))
            rows.append({"window_r": [lo, hi], "filter": label, "theta": th.exponent,
                         "theta_se": th.stderr, "psi": ps.exponent, "psi_se": ps.stderr})
            print(f"r in [{lo:g}, {hi:.0f}] {label:9s} theta {th.exponent:+.3f} "
                  f"({-pred.beta:+.3f})  psi {ps.exponent:+.3f} ({-pred.alpha:+.3f})")
    print(f"censored fraction {same.censored_fraction:.4f}, "
          f"opposite-side fraction {same.side_rejected / max(same.seen, 1):.4f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"args": vars(args), "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
