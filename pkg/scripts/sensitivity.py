#!/usr/bin/env python3
"""Sensitivity campaigns: electricity price range, objective weight,
sensing cost, and supply mix vs harvest ceiling.

All runs in a family share one seed so differences are paired.  Each
family writes a labelled summary.csv consumable by `plots --figs
sensitivity`.
"""

import argparse
import dataclasses
import os

from easyo import sim
from easyo.model import Params, TopologyConfig, build_topology


def family(out_dir, name, runs, slots, seed):
    metrics = []
    for label, params, supply in runs:
        net = build_topology(TopologyConfig(supply_mix=supply))
        p = dataclasses.replace(params, slots=slots, seed=seed)
        m = sim.run(net, p, T=slots, label=label)
        metrics.append(m)
        print(f"{name:12s} {label:14s} objective={m.avg_objective:8.4f} "
              f"utility={m.avg_utility:7.4f} cost={m.avg_cost:7.4f} "
              f"violations={m.monitor_violations}")
    os.makedirs(os.path.join(out_dir, name), exist_ok=True)
    sim.write_summary(os.path.join(out_dir, name, "summary.csv"), metrics)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--slots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=101)
    ap.add_argument("--out", default="out/sensitivity")
    args = ap.parse_args()
    base = Params()

    family(args.out, "price_range", [
        ("sg_max=0.2", dataclasses.replace(base, sg_min=0.1, sg_max=0.2), "mixed"),
        ("sg_max=1", base, "mixed"),
        ("sg_max=10", dataclasses.replace(base, sg_max=10.0), "mixed"),
    ], args.slots, args.seed)

    family(args.out, "utility_weight", [
        ("omega1=0.3", dataclasses.replace(base, omega1=0.3), "mixed"),
        ("omega1=0.6", base, "mixed"),
        ("omega1=0.9", dataclasses.replace(base, omega1=0.9), "mixed"),
    ], args.slots, args.seed)

    family(args.out, "sensing_cost", [
        ("p_sense=0.05", dataclasses.replace(base, p_sense=0.05), "mixed"),
        ("p_sense=0.1", base, "mixed"),
        ("p_sense=0.5", dataclasses.replace(base, p_sense=0.5), "mixed"),
    ], args.slots, args.seed)

    family(args.out, "supply_mix", [
        ("all-EH h=2", dataclasses.replace(base, h_max=2.0), "all_eh"),
        ("all-EH h=0.2", dataclasses.replace(base, h_max=0.2), "all_eh"),
        ("all-EG h=2", dataclasses.replace(base, h_max=2.0), "all_eg"),
        ("all-EG h=0.2", dataclasses.replace(base, h_max=0.2), "all_eg"),
    ], args.slots, args.seed)
    print(f"-> {args.out}/<family>/summary.csv")


if __name__ == "__main__":
    main()
