"""Render figure families from a simulator output directory.

  plots --in DIR --out DIR --figs v_sweep,trajectories,bcd,sensitivity

v_sweep reads DIR/summary.csv; trajectories renders every run directory
(holding state.csv) found in DIR; bcd reads bcd_trace.csv files; and
sensitivity reads labelled family summaries under DIR.
"""

from __future__ import annotations

import argparse
import os
import sys

from .figures import (plot_bcd, plot_sensitivity, plot_trajectories,
                      plot_v_sweep)
from .io import SchemaError, find_run_dirs

FIGS = ("v_sweep", "trajectories", "bcd", "sensitivity")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="plots", description=__doc__)
    ap.add_argument("--in", dest="src", required=True,
                    help="simulator output directory")
    ap.add_argument("--out", dest="out", required=True,
                    help="directory for rendered figures")
    ap.add_argument("--figs", default="v_sweep,trajectories,bcd",
                    help=f"comma list from {','.join(FIGS)}")
    args = ap.parse_args(argv)

    wanted = [f.strip() for f in args.figs.split(",") if f.strip()]
    unknown = [f for f in wanted if f not in FIGS]
    if unknown:
        print(f"error: unknown figure(s) {unknown}; choose from {FIGS}",
              file=sys.stderr)
        return 1

    rendered = []
    try:
        if "v_sweep" in wanted:
            res = plot_v_sweep(os.path.join(args.src, "summary.csv"),
                               args.out)
            rendered += res.paths
            if not res.bounds_dominate:
                print("warning: plotted queue averages exceed bound lines",
                      file=sys.stderr)
        if "trajectories" in wanted:
            runs = find_run_dirs(args.src)
            if not runs:
                raise SchemaError(f"{args.src}: no run directories with "
                                  f"state.csv")
            for run in runs:
                sub = os.path.join(args.out,
                                   os.path.basename(os.path.abspath(run)))
                res = plot_trajectories(run, sub)
                rendered += res.paths
                if not res.bounds_dominate:
                    print(f"warning: {run}: trajectory exceeds its bound",
                          file=sys.stderr)
        if "bcd" in wanted:
            traces = []
            direct = os.path.join(args.src, "bcd_trace.csv")
            if os.path.exists(direct):
                traces.append(direct)
            for run in find_run_dirs(args.src):
                p = os.path.join(run, "bcd_trace.csv")
                if os.path.exists(p) and os.path.abspath(p) not in map(
                        os.path.abspath, traces):
                    traces.append(p)
            if not traces:
                raise SchemaError(f"{args.src}: no bcd_trace.csv found "
                                  f"(run the simulator with --bcd-trace)")
            for p in traces:
                sub = os.path.join(
                    args.out, os.path.basename(os.path.dirname(p)))
                rendered += plot_bcd(p, sub).paths
        if "sensitivity" in wanted:
            rendered += plot_sensitivity(args.src, args.out).paths
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in rendered:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
