#!/usr/bin/env python3
"""Desk-scale benchmark campaigns: the configurations the acceptance suite
checks, runnable standalone.

Writes per-trial trajectories and summary CSVs under results/ (override
with --out) and prints the re-verified summaries.
"""

import argparse
import sys
from pathlib import Path

from almkit import cli


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results", help="output root directory")
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args()

    out = Path(args.out)
    campaigns = {
        "lcqp_m10_n200": [
            "bench-lcqp", "--m", "10", "--n", "200", "--rho", "1.0",
            "--trials", str(args.trials), "--jobs", str(args.jobs),
            "--out", str(out / "lcqp_m10_n200"),
        ],
        "lcqp_m10_n200_penalty": [
            "bench-lcqp", "--m", "10", "--n", "200", "--rho", "1.0", "--penalty-mode",
            "--trials", str(args.trials), "--jobs", str(args.jobs),
            "--out", str(out / "lcqp_m10_n200_penalty"),
        ],
        "ev_n200": [
            "bench-ev", "--n", "200",
            "--trials", str(args.trials), "--jobs", str(args.jobs),
            "--out", str(out / "ev_n200"),
        ],
    }

    worst = 0
    for name, argv in campaigns.items():
        print(f"== {name}")
        rc = cli.main(argv)
        worst = max(worst, rc)
        cli.main(["report", str(out / name)])
        print()
    return worst


if __name__ == "__main__":
    sys.exit(main())
