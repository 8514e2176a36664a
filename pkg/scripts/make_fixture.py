"""Write the synthetic 20-video fixture and, optionally, refresh the golden
pipeline outputs from a single-worker reference run.

    python scripts/make_fixture.py --out /tmp/fixture
    python scripts/make_fixture.py --out /tmp/fixture --golden tests/data/golden
"""

import argparse
import dataclasses
import shutil
import tempfile
from pathlib import Path

from innout_forge.config import PipelineConfig
from innout_forge.pipeline import run_all, stats_report
from innout_forge.synthetic import make_fixture


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--videos", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--golden", help="directory to receive patterns.jsonl and stats.jsonl")
    args = ap.parse_args()

    paths = make_fixture(args.out, n_videos=args.videos, seed=args.seed)
    print("fixture:", paths)
    if args.golden:
        cfg = PipelineConfig()
        cfg = cfg.replace(inputs=dataclasses.replace(cfg.inputs, **paths))
        with tempfile.TemporaryDirectory() as tmp:
            patterns, reports = run_all(cfg, tmp, seed=0, workers=1)
            golden = Path(args.golden)
            golden.mkdir(parents=True, exist_ok=True)
            shutil.copy(patterns, golden / "patterns.jsonl")
            shutil.copy(Path(tmp) / "stats.jsonl", golden / "stats.jsonl")
        print(stats_report(reports))


if __name__ == "__main__":
    main()
