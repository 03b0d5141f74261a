"""Run every subcommand with its built-in defaults into ``out/<subcommand>``."""

import argparse
import sys
import time

from rogueqp.cli import main
from rogueqp.experiments import RUNNERS


def run(out: str, threads: int) -> int:
    status = 0
    for sub in RUNNERS:
        t0 = time.perf_counter()
        code = main([sub, "--out", f"{out}/{sub}", "--threads", str(threads)])
        print(f"{sub}: exit {code} in {time.perf_counter() - t0:.1f}s", file=sys.stderr)
        status = status or code
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    sys.exit(run(args.out, args.threads))
