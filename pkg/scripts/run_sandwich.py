#!/usr/bin/env python3
"""Sweep the grid-LP sandwich against the closed form min(2s/K, 1).

Shows how the pessimistic/optimistic bracket tightens with resolution, e.g.

    python scripts/run_sandwich.py --k 2 --resolutions 8 16 32 64
    python scripts/run_sandwich.py --k 3 --resolutions 6 10 12 --s 0.3 0.75 1.5
"""

import argparse
import time

from pvmerge import SumThreshold, ruschendorf_value, ucp_bounds


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[8, 16, 32, 64])
    ap.add_argument(
        "--s", nargs="+", default=["0.1", "0.25", "0.5", "0.75", "1.0"],
        help="thresholds as decimal strings (parsed exactly)",
    )
    args = ap.parse_args()

    print(f"{'s':>6} {'n':>5} {'lower':>10} {'upper':>10} {'gap':>10} {'exact':>8}")
    for s in args.s:
        spec = SumThreshold(s)
        ref = ruschendorf_value(s, args.k)
        for n in args.resolutions:
            t0 = time.time()
            b = ucp_bounds(spec, args.k, n)
            dt = time.time() - t0
            ok = b.lower - 1e-9 <= ref <= b.upper + 1e-9
            print(
                f"{s:>6} {n:>5} {b.lower:>10.6f} {b.upper:>10.6f} "
                f"{b.gap:>10.6f} {ref:>8.4f}  {'ok' if ok else 'MISS'} {dt:.2f}s"
            )
        print()


if __name__ == "__main__":
    main()
