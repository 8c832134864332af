"""Command-line front end: simulate, sweep, analyze, topology."""

from __future__ import annotations

import argparse
import random
import sys

from .analysis import CellModel, expected_neighbors, mc_cell, mc_pair_collision, prob_arbp, prob_ibsp
from .engine import run_sim
from .medium import Topology
from .metrics import ConfigError, SimConfig


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--protocol", choices=("arbp", "ibsp", "daibsp"), default="arbp")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--lambda", dest="lam", type=float, default=5.0)
    p.add_argument("--events", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--area", type=float, default=500.0)
    p.add_argument("--range", dest="range_m", type=float, default=50.0)
    p.add_argument("--t-min", type=float, default=0.002)
    p.add_argument("--t-max", type=float, default=0.1)
    p.add_argument("--trace", default=None, help="write a per-action event trace")


def _config_from(args) -> SimConfig:
    return SimConfig(
        protocol=args.protocol,
        n_nodes=args.nodes,
        lam=args.lam,
        total_events=args.events,
        alpha=args.alpha,
        beta=args.beta,
        seed=args.seed,
        area=args.area,
        range_m=args.range_m,
        t_min=args.t_min,
        t_max_initial=args.t_max,
        trace=args.trace,
    )


def _cmd_simulate(args) -> int:
    cfg = _config_from(args)
    m = run_sim(cfg)
    print(f"protocol={cfg.protocol} nodes={cfg.n_nodes} lambda={cfg.lam} seed={cfg.seed}")
    print(f"sent={m.data_sent} delivered={m.data_delivered} "
          f"success_rate={m.success_rate():.3f}%")
    print(f"avg_delay_s={m.avg_delay():.6f} drops={m.drops} "
          f"tx_count={m.tx_count} fallbacks={m.fallback_count}")
    return 0


def _cmd_sweep(args) -> int:
    from .sweep import SweepGrid, run_sweep

    grid = SweepGrid.from_file(args.grid)

    def progress(i, total, row):
        print(f"[{i}/{total}] {row['protocol']} N={row['N']} seed={row['seed']} "
              f"success={row['success_rate']}", file=sys.stderr)

    run_sweep(grid, args.out, progress=progress)
    print(f"wrote {args.out}")
    return 0


def _cmd_analyze(args) -> int:
    """Formula values vs Monte Carlo estimates, as CSV on stdout."""
    n = expected_neighbors(args.range_m, args.radius, args.nodes)
    cell = CellModel(n=n, t_min=args.t_min, window_width=args.t_max - args.t_min)
    tau = args.t_min / (args.t_max - args.t_min)
    print("quantity,formula,monte_carlo")
    print(f"expected_neighbors,{n:.6f},")
    print(f"pair_collision,{2 * tau - tau * tau:.6f},"
          f"{mc_pair_collision(args.t_min, args.t_max - args.t_min, args.trials, args.seed):.6f}")
    k = max(2, int(round(n)) + 1)
    p_arbp = prob_arbp(cell)
    p_ibsp = prob_ibsp(cell)
    mc_arbp = mc_cell("arbp", k, cell, args.trials, args.seed)
    mc_ibsp = mc_cell("ibsp", k, cell, min(args.trials, 100_000), args.seed)
    print(f"prob_arbp,{p_arbp:.6f},{mc_arbp:.6f}")
    print(f"prob_ibsp,{p_ibsp:.6f},{mc_ibsp:.6f}")
    return 0


def _cmd_topology(args) -> int:
    if args.action == "gen":
        rng = random.Random(f"{args.seed}:topo")
        if args.disk:
            topo = Topology.scatter_disk(args.nodes, args.area, args.range_m, rng)
        else:
            topo = Topology.scatter_square(args.nodes, args.area, args.range_m, rng)
        topo.save(args.path)
        print(f"wrote {args.path} ({args.nodes} nodes)")
    else:
        topo = Topology.load(args.path, args.range_m)
        degs = [len(topo.neighbors(i)) for i in range(len(topo))]
        print(f"{len(topo)} nodes, mean degree {sum(degs) / len(degs):.2f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="backoffsim",
        description="Broadcast MAC back-off protocol simulator and analyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one seeded simulation")
    _add_sim_args(p)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a JSON grid, write a CSV")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("analyze", help="formulas vs Monte Carlo, CSV to stdout")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--radius", type=float, default=500.0)
    p.add_argument("--range", dest="range_m", type=float, default=50.0)
    p.add_argument("--t-min", type=float, default=0.002)
    p.add_argument("--t-max", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("topology", help="generate or inspect node lists")
    p.add_argument("action", choices=("gen", "load"))
    p.add_argument("path")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--area", type=float, default=500.0)
    p.add_argument("--disk", action="store_true")
    p.add_argument("--range", dest="range_m", type=float, default=50.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=_cmd_topology)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
