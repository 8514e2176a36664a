"""Time the box-search miner on synthetic records.

    python scripts/bench_mining.py --records 10000 --attempts 2000 --workers 8
"""

import argparse
import os

from innout_forge.synthetic import bench_mining


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--records", type=int, default=10_000)
    ap.add_argument("--attempts", type=int, default=2000)
    ap.add_argument("--workers", type=int, default=min(8, os.cpu_count() or 1))
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    found, seconds = bench_mining(args.records, args.attempts, args.workers, args.seed)
    print(f"{args.records} records x {args.attempts} attempts on {args.workers} worker(s): "
          f"{seconds:.1f} s ({1000 * seconds / args.records:.2f} ms/record), {found} patterns")


if __name__ == "__main__":
    main()
