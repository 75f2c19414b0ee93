"""``kdag-sim`` command line: gen | build | simulate | grid | sweep."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import asdict

from kdag.builder import build_kdag
from kdag.energy import EnergyModel, PolicyKind, RoutingPolicy, simulate_lifetime
from kdag.experiments import ScenarioGrid, k_sweep, run_grid, saturated_build, sweep_csv
from kdag.graph import ConnectivityGraph, build_spd, extract_spt, generate_instance


def _k_arg(text):
    if text == "max":
        return text
    k = int(text)
    if k < 0:
        raise argparse.ArgumentTypeError("k must be >= 0 or 'max'")
    return k


@contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _load_graph(args) -> ConnectivityGraph:
    if args.instance:
        with open(args.instance, encoding="utf-8") as fh:
            return ConnectivityGraph.from_json(fh.read())
    return generate_instance(args.nodes, args.side, args.range, args.seed)


def _build(graph, args, record_trace=False):
    spd = build_spd(graph)
    if args.k == "max":
        build, _ = saturated_build(spd, graph, seed=args.seed, record_trace=record_trace)
    else:
        build = build_kdag(spd, args.k, graph, seed=args.seed, record_trace=record_trace)
    return spd, build


def _dump_trace(build, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            build.run.dump_trace(fh)


def cmd_gen(args):
    graph = generate_instance(args.nodes, args.side, args.range, args.seed)
    with _output(args.out) as fh:
        fh.write(graph.to_json() + "\n")


def cmd_build(args):
    graph = _load_graph(args)
    _, build = _build(graph, args, record_trace=bool(args.trace))
    _dump_trace(build, args.trace)
    with _output(args.out) as fh:
        if args.format == "csv":
            fh.write("round,from,to,level,ldc\n")
            for e in build.edge_log:
                fh.write(f"{e.round},{e.child},{e.parent},{e.level},{e.ldc!r}\n")
        else:
            fh.write(build.edge_log_json() + "\n")


def cmd_simulate(args):
    graph = _load_graph(args)
    model = EnergyModel()
    policy = RoutingPolicy.parse(args.policy)
    spd, build = _build(graph, args, record_trace=bool(args.trace))
    _dump_trace(build, args.trace)
    dags = {"spt": extract_spt(spd), "spd": spd, "kdag": build.dag}
    wanted = list(dags) if args.dag == "all" else [args.dag]
    results = [simulate_lifetime(dags[name], model, policy).to_dict() for name in wanted]
    with _output(args.out) as fh:
        if args.format == "csv":
            keys = list(results[0])
            fh.write(",".join(keys) + "\n")
            for r in results:
                fh.write(",".join(str(r[key]) for key in keys) + "\n")
        else:
            fh.write(json.dumps(results[0] if len(results) == 1 else results) + "\n")


def cmd_grid(args):
    grid = ScenarioGrid(instances_per_scenario=args.instances, range=args.range,
                        base_seed=args.seed)
    if args.nodes is not None:
        grid = ScenarioGrid((args.nodes,), (args.side,), args.range, args.instances, args.seed)
    result = run_grid(grid, args.k, args.policy, jobs=args.jobs)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps(result.to_json()) + "\n")
        elif args.summary:
            fh.write(result.summary_csv())
        else:
            fh.write(result.to_csv())


def cmd_sweep(args):
    graph = _load_graph(args)
    points = k_sweep(graph, args.policy, seed=args.seed)
    with _output(args.out) as fh:
        if args.format == "json":
            fh.write(json.dumps([asdict(p) for p in points]) + "\n")
        else:
            fh.write(sweep_csv(points))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--nodes", type=int, help="sensor count, base excluded (default 50)")
    common.add_argument("--side", type=float, default=100.0, help="square area side (m)")
    common.add_argument("--range", type=float, default=50.0, help="radio range (m)")
    common.add_argument("--k", type=_k_arg, default="max", help="slack bound, or 'max'")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--policy", choices=[p.value for p in PolicyKind],
                        default="mpe")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"),
                        help="default: csv for grid/sweep, json otherwise")
    common.add_argument("--instance", help="instance JSON to load instead of generating")
    common.add_argument("--trace", metavar="PATH", help="write an NDJSON message trace")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kdag-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="generate a connected instance")
    sub.add_parser("build", parents=[common], help="build a k-DAG and print its edge log")
    p = sub.add_parser("simulate", parents=[common], help="lifetime of one topology")
    p.add_argument("--dag", choices=("spt", "spd", "kdag", "all"), default="kdag")
    p = sub.add_parser("grid", parents=[common], help="SPD vs k-DAG over the scenario grid")
    p.add_argument("--instances", type=int, default=10, help="instances per scenario")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--summary", action="store_true", help="long-format aggregate CSV")
    sub.add_parser("sweep", parents=[common], help="lifetime ratio across k")
    return parser


COMMANDS = {"gen": cmd_gen, "build": cmd_build, "simulate": cmd_simulate, "grid": cmd_grid,
            "sweep": cmd_sweep}


def main(argv=None) -> int:
    # grid runs the full scenario grid unless --nodes is given
    args = build_parser().parse_args(argv)
    if args.format is None:
        args.format = "csv" if args.command in ("grid", "sweep") else "json"
    if args.nodes is None and args.command != "grid":
        args.nodes = 50
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    COMMANDS[args.command](args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
