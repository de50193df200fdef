"""Build the two-parameter product table stage by stage and snapshot each
completed stage to JSON, so tests and the CLI can reload it without solving."""

import argparse
import json
import time
from pathlib import Path

from artifact import winfty


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--top-stage", type=int, default=7)
    ap.add_argument("--stage4", choices=("solve", "loaded"), default="solve")
    ap.add_argument("--out-dir", type=Path, default=Path("data"))
    ap.add_argument(
        "--snapshot-from",
        type=int,
        default=7,
        help="write tableN.json for every completed stage N >= this",
    )
    args = ap.parse_args()
    args.out_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.time()

    def say(msg):
        print(f"[{time.time() - t0:8.1f}s] {msg}", flush=True)

    b = winfty.WBuilder(top_stage=args.top_stage, stage4=args.stage4, progress=say)
    while b.built_stage < b.top_stage:
        b.run_stage(b.built_stage + 1)
        if b.built_stage >= args.snapshot_from:
            tag = "" if args.stage4 == "solve" else f"_{args.stage4}"
            path = args.out_dir / f"table{b.built_stage}{tag}.json"
            path.write_text(json.dumps(winfty.table_data(b)))
            say(f"wrote {path} ({path.stat().st_size / 1e6:.1f} MB)")
    say(f"done: {len(b.alg.gens)} generators, {len(b.alg.table)} table pairs")


if __name__ == "__main__":
    main()
