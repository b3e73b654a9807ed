#!/usr/bin/env python3
"""Run experiment configs and print one summary line each.

    python3 scripts/run_experiments.py                   # every configs/*.json
    python3 scripts/run_experiments.py configs/prg.json  # just these
"""

import argparse
import glob
import json
import os
import sys
import time

from bpprg.verify import ExperimentConfig, run_experiment


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("configs", nargs="*")
    ap.add_argument("--out", default="results")
    args = ap.parse_args(argv)
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    paths = args.configs or sorted(glob.glob(os.path.join(here, "configs", "*.json")))
    failed = False
    for path in paths:
        cfg = ExperimentConfig.load(path)
        name = os.path.splitext(os.path.basename(path))[0]
        t0 = time.perf_counter()
        res = run_experiment(cfg)
        res.id = name  # one output per config file, even when ids repeat
        res.write(args.out)
        s = res.summary()
        failed |= s["fails"] > 0
        print(f"{name:16s} {json.dumps(s)}  {time.perf_counter() - t0:7.1f}s", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
