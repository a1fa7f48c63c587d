#!/usr/bin/env python3
"""Write the data behind every figure command into one directory.

    python3 scripts/reproduce_figures.py --outdir results
"""

import argparse
import pathlib
import sys
import time

from symradio.cli import main


def run(outdir, quick=False):
    outdir = pathlib.Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    configs = pathlib.Path(__file__).resolve().parent.parent / "configs"
    status = 0
    for name in ("fig2", "fig3", "fig4", "fig5"):
        argv = [name, "--config", str(configs / f"{name}.ini"), "--out", str(outdir / f"{name}.csv")]
        if quick and name in ("fig4", "fig5"):
            argv += ["--realizations", "50"]
        t0 = time.perf_counter()
        rc = main(argv)
        print(f"{name}: exit {rc} in {time.perf_counter() - t0:.1f} s -> {outdir / (name + '.csv')}")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results")
    ap.add_argument("--quick", action="store_true", help="50 realizations for the BD-count sweeps")
    args = ap.parse_args()
    sys.exit(run(args.outdir, args.quick))
