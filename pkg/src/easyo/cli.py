"""Command-line front end.

Subcommands:
  run           simulate one configuration
  sweep         one run per V value, combined summary
  audit         run with the drift inequality audited every slot
  gen-topology  generate and dump an explicit topology file

Exit codes: 0 success with clean monitors, 2 monitor violations, 1 errors.
All randomness flows from a single seed, printed for every run.  The
EASYO_OUT environment variable overrides the default output directory.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import sim
from .model import ConfigError, Network, Params, TopologyConfig, \
    TopologyError, build_topology, format_topology, parse_config_text


def load_config(path: str):
    """Parse a config file into (Network, Params).

    An absent or empty file yields the default scenario: the seeded
    20-node generated topology with the standard parameter set.
    """
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    cfg, params = parse_config_text(text)
    net = build_topology(cfg)
    return net, params


def default_scenario():
    return build_topology(TopologyConfig()), Params()


def _resolve(args):
    if args.config:
        net, params = load_config(args.config)
    else:
        net, params = default_scenario()
    if getattr(args, "V", None) is not None:
        params = replace(params, V=float(args.V))
    if getattr(args, "seed", None) is not None:
        params = replace(params, seed=int(args.seed))
    if getattr(args, "slots", None) is not None:
        params = replace(params, slots=int(args.slots))
    return net, params


def _out_dir(args, default_name):
    base = args.out or os.environ.get("EASYO_OUT") or "out"
    return os.path.join(base, default_name) if args.out is None else args.out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="easyo", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    run_p = sub.add_parser("run", help="simulate one configuration")
    sweep_p = sub.add_parser("sweep", help="sweep the penalty weight V")
    audit_p = sub.add_parser("audit", help="run with per-slot drift audits")
    for p in (run_p, sweep_p, audit_p):
        p.add_argument("--config", help="config file (defaults to the "
                       "standard scenario)")
        p.add_argument("--slots", type=int, help="override slot count")
        p.add_argument("--seed", type=int, help="override run seed")
        p.add_argument("--out", help="output directory")
        p.add_argument("--csv-every", type=int, default=None,
                       help="per-slot CSV cadence")
        p.add_argument("--bcd-trace", action="store_true",
                       help="dump power-solver convergence traces")
        p.add_argument("--label", default="", help="summary row label")
    for p in (run_p, audit_p):
        p.add_argument("--V", type=float, help="override penalty weight")
    sweep_p.add_argument("--V-list", required=True,
                         help="comma-separated V values")
    audit_p.add_argument("--full", action="store_true",
                         help="audit every slot (the default here)")

    gen_p = sub.add_parser("gen-topology", help="generate a topology file")
    gen_p.add_argument("--nodes", type=int, default=20)
    gen_p.add_argument("--channels", type=int, default=14)
    gen_p.add_argument("--sessions", type=int, default=6)
    gen_p.add_argument("--links", type=int, default=78)
    gen_p.add_argument("--seed", type=int, default=7)
    gen_p.add_argument("--supply", default="mixed")
    gen_p.add_argument("--out", required=True, help="output file")

    args = ap.parse_args(argv)
    try:
        if args.cmd == "gen-topology":
            net = build_topology(TopologyConfig(
                n_nodes=args.nodes, n_channels=args.channels,
                n_sessions=args.sessions, target_links=args.links,
                seed=args.seed, supply_mix=args.supply))
            text = format_topology(net)
            with open(args.out, "w") as fh:
                fh.write(text)
            print(f"wrote {args.out}: {net.n_nodes} nodes, "
                  f"{net.n_links} links, {net.n_sessions} sessions")
            return 0

        net, params = _resolve(args)
        if args.cmd == "run":
            out_dir = _out_dir(args, "run")
            print(f"run: V={params.V:g} slots={params.slots} "
                  f"seed={params.seed} out={out_dir}")
            m = sim.run(net, params, out_dir=out_dir,
                        csv_every=args.csv_every, bcd_trace=args.bcd_trace,
                        label=args.label)
            return _report(m)
        if args.cmd == "audit":
            out_dir = _out_dir(args, "audit")
            print(f"audit: V={params.V:g} slots={params.slots} "
                  f"seed={params.seed} out={out_dir}")
            m = sim.run(net, params, out_dir=out_dir, full_audit=True,
                        csv_every=args.csv_every, bcd_trace=args.bcd_trace,
                        label=args.label)
            print(f"audits={m.audits} violations={m.audit_violations} "
                  f"min_slack={m.min_audit_slack:.6g}")
            return _report(m)
        if args.cmd == "sweep":
            out_dir = _out_dir(args, "sweep")
            vs = [float(t) for t in args.V_list.split(",") if t.strip()]
            print(f"sweep: V={vs} slots={params.slots} "
                  f"base_seed={params.seed} out={out_dir}")
            cells = sim.sweep_V(net, params, vs, T=args.slots,
                                out_dir=out_dir, csv_every=args.csv_every,
                                bcd_trace=args.bcd_trace)
            worst = 0
            for m in cells:
                worst = max(worst, _report(m))
            return worst
    except (ConfigError, TopologyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


def _report(m: sim.RunMetrics) -> int:
    print(f"  label={m.label or '-'} V={m.V:g} seed={m.seed} "
          f"avg_objective={m.avg_objective:.6g} "
          f"avg_utility={m.avg_utility:.6g} avg_cost={m.avg_cost:.6g} "
          f"max_q={m.max_data_queue:.6g} (bound {m.q_bound:.6g}) "
          f"wall={m.wall_clock:.2f}s")
    if m.error:
        print(f"  error: {m.error}", file=sys.stderr)
        return 1
    if m.monitor_violations:
        print(f"  monitor violations: {m.monitor_violations}",
              file=sys.stderr)
        for s in m.violation_samples[:5]:
            print(f"    {s}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
