"""Monte-Carlo comparison of ALPA, regularized LS and LASSO over noise levels.

Thin wrapper around the ``bench`` subcommand with smaller defaults, useful for
a quick look; pass --trials 500 for the full sweep.
"""

import argparse
import sys
from pathlib import Path

from alpadeconv.cli import main as cli_main
from alpadeconv.io import default_output_dir


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=default_output_dir() / "bench")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--sigmas", default="0.01,0.02,0.03")
    ap.add_argument("--lasso-delta", choices=("rule", "matched"), default="matched")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    return cli_main(["bench", "--trials", str(args.trials), "--sigmas", args.sigmas,
                     "--lasso-delta", args.lasso_delta, "--jobs", str(args.jobs),
                     "--seed", str(args.seed), "--out", str(args.out)])


if __name__ == "__main__":
    sys.exit(main())
