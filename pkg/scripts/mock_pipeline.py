#!/usr/bin/env python3
"""End-to-end pipeline against mock endpoints: annotate -> clean -> genqa -> eval -> score -> report.

Every step goes through the ``faceqa`` command line, so this doubles as a
smoke test of the installed entry point.

    python3 scripts/mock_pipeline.py --workdir /tmp/faceqa-demo --images 100
"""

import argparse
import os
import time

from faceqa.cli import dispatch
from faceqa.schema import write_records
from faceqa.synthetic import image_refs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--workdir", required=True)
    ap.add_argument("--images", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--concurrency", type=int, default=8)
    args = ap.parse_args()

    os.makedirs(args.workdir, exist_ok=True)
    os.chdir(args.workdir)
    write_records(image_refs(args.images), "images.recs")
    conc = str(args.concurrency)
    steps = [
        ["annotate", "--in", "images.recs", "--out", "annos.recs", "--failures", "failures.recs",
         "--raw", "raw.recs", "--endpoint", f"mock://annotate?seed={args.seed}",
         "--concurrency", conc],
        ["clean", "--in", "raw.recs", "--out", "clean.recs", "--report", "drops.recs"],
        ["genqa", "--annos", "clean.recs", "--seed", str(args.seed), "--out", "qa.recs",
         "--captions", "captions.recs"],
        ["eval", "--qa", "qa.recs", "--endpoint", "mock://gold", "--out", "evals.recs",
         "--concurrency", conc],
        ["score", "--in", "evals.recs", "--out", "report.json"],
        ["report", "--in", "report.json", "--layout", "table2"],
    ]
    start = time.perf_counter()
    for argv in steps:
        code = dispatch(argv)
        if code:
            raise SystemExit(f"step {argv[0]} failed with exit code {code}")
    print(f"pipeline finished in {time.perf_counter() - start:.1f}s; outputs in {args.workdir}")


if __name__ == "__main__":
    main()
