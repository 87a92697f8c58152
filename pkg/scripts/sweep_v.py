#!/usr/bin/env python3
"""Six-point penalty-weight sweep on the default scenario."""

import argparse

from easyo import sim
from easyo.model import Params, TopologyConfig, build_topology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--V-list", default="100,300,500,700,1000,1500")
    ap.add_argument("--slots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--bcd-trace", action="store_true")
    args = ap.parse_args()

    net = build_topology(TopologyConfig())
    vs = [float(v) for v in args.V_list.split(",")]
    cells = sim.sweep_V(net, Params(), vs, seed=args.seed, T=args.slots,
                        out_dir=args.out, bcd_trace=args.bcd_trace)
    for m in cells:
        print(f"V={m.V:7g} objective={m.avg_objective:8.4f} "
              f"utility={m.avg_utility:7.4f} cost={m.avg_cost:7.4f} "
              f"avg_q={m.avg_data_queue:8.3f} avg_e={m.avg_energy:9.2f} "
              f"violations={m.monitor_violations}")
    print(f"-> {args.out}/summary.csv")


if __name__ == "__main__":
    main()
