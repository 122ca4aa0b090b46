#!/usr/bin/env python3
"""Drive the full benchmark sweep through the CLI.

Runs every variant on every shipped objective with the evaluation protocol
used in the result tables (32 repeats, 50 evaluations), then emits plot data.
Expect a multi-hour wall time on one core; trim --repeats for a smoke pass.
"""

import argparse
import sys
from pathlib import Path

from treedbo.cli import main as cli_main

OBJECTIVES = ("exp2d", "rkhs", "synth_hetero")
VARIANTS = ("bo", "bo_warp", "htbo", "htbo_warp")


def run(out_root: Path, repeats: int, iters: int, seed: int) -> int:
    for objective in OBJECTIVES:
        out = out_root / objective
        args = ["run", "--objective", objective, "--iters", str(iters),
                "--repeats", str(repeats), "--seed", str(seed),
                "--out", str(out)]
        for v in VARIANTS:
            args += ["--variant", v]
        code = cli_main(args)
        if code != 0:
            return code
        code = cli_main(["plotdata", str(out)])
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="bench_out")
    ap.add_argument("--repeats", type=int, default=32)
    ap.add_argument("--iters", type=int, default=47,
                    help="queries after the 3-point initial design (47 -> 50 evals)")
    ap.add_argument("--seed", type=int, default=0)
    ns = ap.parse_args()
    sys.exit(run(Path(ns.out), ns.repeats, ns.iters, ns.seed))
