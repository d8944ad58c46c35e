"""Command line entry point: ``lifetree <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

from . import harness
from .flowbound import lp_bound
from .lifetime import FullyAggregated, lifetime, parse_query, save_tree
from .mdst import aggregated_tree
from .oracle import SetCoverInstance, brute_force_optimal, set_cover_gadget
from .topology import is_connected, load_graph, random_network, save_graph
from .treesearch import ecrt, local_opt, min_hop_tree


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _num(x):
    return x if math.isfinite(x) else None


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def cmd_generate(args) -> int:
    for attempt in range(args.max_resamples + 1):
        seed = args.seed + attempt
        g = random_network(args.n, args.area, args.r, args.alpha, args.mean_energy, seed,
                           args.root_position)
        if is_connected(g) or args.allow_disconnected:
            break
    else:
        print(f"no connected network within {args.max_resamples} resamples", file=sys.stderr)
        return 1
    save_graph(g, args.out)
    _emit({"out": str(args.out), "n": g.n, "edges": len(g.edges), "seed": seed,
           "resamples": attempt, "connected": is_connected(g)})
    return 0


def cmd_solve(args) -> int:
    g = load_graph(args.graph)
    model = parse_query(args.query, args.rx_cost, args.include_rx)
    t0 = time.perf_counter()
    if args.algorithm == "aggregated-tree":
        if not isinstance(model, FullyAggregated):
            print("aggregated-tree needs --query full", file=sys.stderr)
            return 2
        res = aggregated_tree(g, model.c_r, scan_all=args.scan_all)
        tree = res.tree
        extra = {"probes": len(res.probes)}
    elif args.algorithm == "min-hop":
        tree, extra = min_hop_tree(g, args.tie_break), {}
    elif args.algorithm == "ecrt":
        tree, extra = ecrt(g, model), {}
    elif args.algorithm == "local-opt":
        tree, extra = local_opt(g, min_hop_tree(g), model, acceptance=args.acceptance), {}
    else:
        tree, extra = local_opt(g, ecrt(g, model), model, acceptance=args.acceptance), {}
    ms = (time.perf_counter() - t0) * 1000.0
    if args.out:
        save_tree(tree, args.out)
    rep = lifetime(tree, g, model)
    _emit({"algorithm": args.algorithm, "query": model.label,
           "lifetime": _num(float(f"{rep.lifetime:.6g}")), "bottleneck": rep.bottleneck,
           "depth": rep.depth, "runtime_ms": round(ms, 3), **extra,
           **({"out": str(args.out)} if args.out else {})})
    return 0


def cmd_bound(args) -> int:
    g = load_graph(args.graph)
    b = lp_bound(g, args.rel_tol)
    _emit({"t_lp": b.t_lp, "cut_nodes": list(b.cut_nodes), "probes": b.probes})
    return 0


def cmd_oracle(args) -> int:
    g = load_graph(args.graph)
    model = parse_query(args.query, args.rx_cost, args.include_rx)
    tree, t = brute_force_optimal(g, model, max_nodes=args.max_nodes)
    _emit({"t_opt": _num(t), "query": model.label, "tree": tree.to_dict()})
    return 0


def cmd_gadget(args) -> int:
    sets = json.loads(Path(args.sets).read_text()) if Path(args.sets).exists() else json.loads(args.sets)
    inst = SetCoverInstance.of(sets, args.p)
    g = set_cover_gadget(inst)
    save_graph(g, args.out)
    _emit({"out": str(args.out), "n": g.n, "edges": len(g.edges),
           "has_cover": inst.has_cover()})
    return 0


def cmd_sweep(args) -> int:
    common = dict(trials=args.trials, master_seed=args.seed)
    if args.preset:
        cfg = harness.preset(args.preset, **common)
    else:
        cfg = harness.SweepConfig(
            n=_ints(args.n), area_side=args.area, r_values=_floats(args.r),
            alpha=_floats(args.alpha), mean_energy=args.mean_energy, c_r=args.rx_cost,
            query=args.query, ell_values=_ints(args.ell) if args.ell else None,
            algorithms=[a.strip() for a in args.algorithms.split(",")],
            trials=args.trials or 20, master_seed=args.seed or 0,
            include_rx=args.include_rx, root_position=args.root_position)
    rows = harness.run_sweep(cfg, workers=args.workers)
    harness.write_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}", file=sys.stderr)
    return 0


def cmd_chart(args) -> int:
    rows = harness.read_csv(args.csv)
    if args.preset:
        spec = harness.preset_chart(args.preset, args.out)
    else:
        spec = harness.ChartSpec(x=args.x, y=args.y, series=tuple(args.series.split(",")),
                                 out=str(args.out), split=args.split, show_lp=args.show_lp,
                                 log_x=args.log_x)
    for p in harness.emit_chart(rows, spec):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lifetree", description="Maximum-lifetime routing trees for sensor networks.")
    sub = ap.add_subparsers(dest="command", required=True)

    def query_opts(p):
        p.add_argument("--query", default="unagg", help="full | unagg | partial:<ell>")
        p.add_argument("--rx-cost", type=float, default=0.5, help="receive cost c_r")
        p.add_argument("--include-rx", action="store_true",
                       help="charge receive cost in the unagg/partial models")

    p = sub.add_parser("generate", help="random unit-disk network to a JSON graph file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--area", type=float, default=100.0)
    p.add_argument("--r", type=float, required=True, help="scaled radio range")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--mean-energy", type=float, default=1000.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--root-position", choices=("random", "corner", "center"), default="random")
    p.add_argument("--max-resamples", type=int, default=1000)
    p.add_argument("--allow-disconnected", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="build a routing tree")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--algorithm", choices=harness.ALGORITHMS, required=True)
    query_opts(p)
    p.add_argument("--scan-all", action="store_true", help="aggregated-tree: probe every candidate")
    p.add_argument("--tie-break", default="lowest", help="min-hop: lowest | random:<seed>")
    p.add_argument("--acceptance", choices=("leximin", "strict"), default="leximin")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bound", help="multipath (max-flow) upper bound")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--rel-tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("oracle", help="exhaustive optimum for small graphs")
    p.add_argument("--graph", type=Path, required=True)
    query_opts(p)
    p.add_argument("--max-nodes", type=int, default=10)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gadget", help="Set-Cover reduction graph")
    p.add_argument("--sets", required=True, help="JSON list of sets, inline or a file path")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gadget)

    p = sub.add_parser("sweep", help="seeded experiment sweep to CSV")
    p.add_argument("--preset", choices=sorted(harness.PRESETS))
    p.add_argument("--n", default="50")
    p.add_argument("--area", type=float, default=100.0)
    p.add_argument("--r", default="1.5")
    p.add_argument("--alpha", default="1")
    p.add_argument("--mean-energy", type=float, default=1000.0)
    p.add_argument("--rx-cost", type=float, default=0.5)
    p.add_argument("--include-rx", action="store_true")
    p.add_argument("--query", default="full", help="full | unagg | partial")
    p.add_argument("--ell", help="comma-separated caps for the partial query")
    p.add_argument("--algorithms", default="min-hop")
    p.add_argument("--root-position", choices=("random", "corner", "center"), default="random")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help=f"overrides ${harness.THREADS_ENV}")
    p.add_argument("--out", type=Path, default=Path("results.csv"))
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("chart", help="SVG chart from a sweep CSV")
    p.add_argument("--csv", type=Path, required=True)
    p.add_argument("--preset", choices=sorted(harness.PRESET_CHARTS))
    p.add_argument("--x", default="r")
    p.add_argument("--y", default="lifetime", help="a numeric column or 'ratio'")
    p.add_argument("--series", default="algorithm")
    p.add_argument("--split")
    p.add_argument("--show-lp", action="store_true")
    p.add_argument("--log-x", action="store_true")
    p.add_argument("--out", type=Path, default=Path("chart.svg"))
    p.set_defaults(func=cmd_chart)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"lifetree: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
