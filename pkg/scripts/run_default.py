#!/usr/bin/env python3
"""Run the default 20-node scenario once and print the summary line."""

import argparse

from easyo import sim
from easyo.model import Params, TopologyConfig, build_topology


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--V", type=float, default=1000.0)
    ap.add_argument("--slots", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/run_default")
    ap.add_argument("--bcd-trace", action="store_true")
    args = ap.parse_args()

    net = build_topology(TopologyConfig())
    params = Params(V=args.V, slots=args.slots, seed=args.seed)
    m = sim.run(net, params, out_dir=args.out, bcd_trace=args.bcd_trace)
    print(f"V={m.V:g} slots={m.slots} seed={m.seed}")
    print(f"avg objective {m.avg_objective:.4f} "
          f"(utility {m.avg_utility:.4f}, cost {m.avg_cost:.4f})")
    print(f"max data queue {m.max_data_queue:.2f} / bound {m.q_bound:g}")
    print(f"max energy {m.max_energy:.2f} / bound {m.e_bound:.2f}")
    print(f"monitor violations {m.monitor_violations}, "
          f"audits {m.audits} (min slack {m.min_audit_slack:.3g})")
    print(f"wall clock {m.wall_clock:.1f}s -> {args.out}")


if __name__ == "__main__":
    main()
