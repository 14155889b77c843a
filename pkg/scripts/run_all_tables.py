#!/usr/bin/env python3
"""Run every shipped experiment config and emit markdown reports.

The table16 grid fits boosting over 6,033-gene cohorts and takes a few
minutes; pass --quick to skip the heavy grids.
"""

import argparse
import sys
import time
from pathlib import Path

from genebench.cli import main as cli_main

QUICK = ["smoke.json", "table12.json", "table14.json", "svm_tables.json", "stability.json"]
HEAVY = ["table13.json", "table15.json", "table16.json", "table17.json"]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true", help="skip the heavy grids")
    parser.add_argument("--configs", default=None, help="directory of configs")
    args = parser.parse_args()

    config_dir = Path(args.configs) if args.configs else Path(__file__).resolve().parent.parent / "configs"
    names = QUICK if args.quick else QUICK + HEAVY
    worst = 0
    for name in names:
        path = config_dir / name
        print(f"=== {name}")
        t0 = time.time()
        rc = cli_main(["run", "--config", str(path), "--format", "markdown"])
        print(f"    rc={rc} ({time.time() - t0:.1f}s)")
        worst = max(worst, rc)
    return worst


if __name__ == "__main__":
    sys.exit(main())
