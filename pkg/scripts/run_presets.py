"""Run the verify presets and collect every verdict in one JSON report.

    python3 scripts/run_presets.py --out out/presets line2d plane3d koch saw
"""
import argparse
import time
from pathlib import Path

from flightlab.cli import PRESETS, OutputDir, run_preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*", default=sorted(PRESETS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--flights", type=float, default=None, help="override the flight count")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default="out/presets")
    args = ap.parse_args()
    out = OutputDir(args.out)
    rows = []
    for name in args.presets:
        t0 = time.perf_counter()
        n = None if args.flights is None else int(args.flights)
        vs = run_preset(name, n, args.seed, args.workers, out, svg=True)
        secs = time.perf_counter() - t0
        print(f"{name}: {secs:.0f} s")
        rows += [{**v.to_dict(), "preset": name, "seconds": secs} for v in vs]
    out.write_json("report.json", {"seed": args.seed, "verdicts": rows})
    print(Path(args.out) / "report.json")


if __name__ == "__main__":
    main()
