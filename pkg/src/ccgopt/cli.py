"""Command-line surface: compile, equilibrium, stackelberg, verify,
report, ingest.

Every run writes its seed and the fully resolved configuration into a
comment header, and all outputs are text (graph/zdd files, CSV traces,
JSON results) so fixtures diff cleanly.  Timing columns are the one
nondeterministic output; pass --no-timings to zero them when byte-exact
reproducibility matters.  Set CCG_LOG=debug|info|warning for logging.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .congestion import CostModel
from .equilibrium import SolverConfig, fw_gap, solve_accelerated, \
    solve_naive_softmin, solve_standard_fw
from .errors import CcgoptError
from .graphs import StrategyClass, load_graph
from .stackelberg import StackelbergConfig, baseline_heuristic, \
    exhaustive_search, optimize_pgd
from .tape import values
from .verify import SUITES, run_suites
from .zdd import build_family, load_zdd

log = logging.getLogger("ccgopt")

VARIANT_NAMES = {"accel": "accelerated", "naive": "naive_softmin",
                 "fw": "standard_fw"}


def main(argv=None) -> int:
    _setup_logging()
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CcgoptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _setup_logging():
    level = os.environ.get("CCG_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="ccgopt",
        description="Combinatorial congestion games: compile strategy "
                    "families to ZDDs, compute equilibria, optimize "
                    "leader parameters.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(required=True)

    def add_instance_flags(p, need_class=True):
        p.add_argument("--graph", help="graph file")
        p.add_argument("--zdd", help="precompiled zdd file")
        if need_class:
            p.add_argument("--class", dest="sclass",
                           choices=("paths", "hamilton", "steiner"),
                           help="strategy family to compile")

    def add_cost_flags(p):
        p.add_argument("--cost", choices=("fractional", "exponential"),
                       default="fractional")
        p.add_argument("--congestion-C", dest="congestion", type=float,
                       default=10.0, help="congestion factor (default 10)")

    def add_common(p):
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-timings", action="store_true",
                       help="zero the wall-clock columns for byte-exact runs")
        p.add_argument("--plot", action="store_true",
                       help="also render figures next to the CSV output")

    p = sub.add_parser("compile", help="compile a strategy family to a zdd")
    add_instance_flags(p)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("equilibrium", help="compute an equilibrium flow")
    add_instance_flags(p)
    add_cost_flags(p)
    p.add_argument("--variant", choices=tuple(VARIANT_NAMES), default="accel")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--T", dest="iterations", type=int, default=300)
    p.add_argument("--theta", help="comma-separated capacities (default: all ones)")
    p.add_argument("--track-gap", action="store_true",
                   help="record the duality gap each iteration")
    add_common(p)
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("stackelberg", help="optimize the leader parameters")
    add_instance_flags(p)
    add_cost_flags(p)
    p.add_argument("--optimizer", choices=("pgd", "heuristic", "grid"),
                   default="pgd")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--T", dest="iterations", type=int, default=300)
    p.add_argument("--theta", help="starting capacities (default: all ones)")
    p.add_argument("--outer-step", type=float, default=5.0)
    p.add_argument("--max-outer", type=int, default=100)
    p.add_argument("--step", type=float, default=0.05,
                   help="grid spacing for --optimizer grid")
    p.add_argument("--delta", type=float, default=1.0,
                   help="push size for --optimizer heuristic")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes for the grid search")
    add_common(p)
    p.set_defaults(func=cmd_stackelberg)

    p = sub.add_parser("verify", help="run the oracle suites")
    add_instance_flags(p)
    p.add_argument("--congestion-C", dest="congestion", type=float, default=10.0)
    p.add_argument("--suite", action="append", choices=SUITES + ("all",),
                   help="suite to run (repeatable; default all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="render figures from trace CSVs")
    p.add_argument("--equilibrium-csv")
    p.add_argument("--stackelberg-csv")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ingest", help="convert public datasets to graph files")
    p.add_argument("--format", choices=("tsplib", "graphml"), required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--od", nargs=2, type=int, metavar=("S", "T"))
    p.add_argument("--terminals", type=int, nargs="+")
    p.set_defaults(func=cmd_ingest)

    return parser


def _load_instance(args):
    """Resolve (graph, zdd) from --graph/--zdd/--class flags."""
    graph = load_graph(args.graph) if args.graph else None
    if args.zdd:
        zdd = load_zdd(args.zdd)
        log.info("loaded zdd with %d nodes, n=%d", len(zdd), zdd.n)
    else:
        if graph is None:
            raise CcgoptError("need --graph or --zdd")
        if not getattr(args, "sclass", None):
            raise CcgoptError("need --class to compile from a graph")
        zdd = build_family(graph, StrategyClass(args.sclass))
        log.info("compiled %s family: %d nodes, %s sets in %.3fs",
                 args.sclass, len(zdd), zdd.count(),
                 zdd.build_stats.get("build_seconds", 0.0))
    return graph, zdd


def _model_for(args, graph, zdd):
    if graph is not None:
        return CostModel.for_graph(graph, args.cost, args.congestion)
    return CostModel(args.cost, np.ones(zdd.n), args.congestion)


def _theta_from(args, n):
    if args.theta:
        theta = np.array([float(v) for v in args.theta.split(",")])
        if theta.size != n:
            raise CcgoptError(f"--theta needs {n} entries")
        return theta
    return np.ones(n)


def _resolved_config(args) -> dict:
    skip = {"func"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip or value is None:
            continue
        out[key] = value if not isinstance(value, Path) else str(value)
    return out


def _stamp(fh, args):
    config = json.dumps(_resolved_config(args), sort_keys=True)
    fh.write(f"# ccgopt {__version__}\n")
    fh.write(f"# seed {getattr(args, 'seed', 0)}\n")
    fh.write(f"# config {config}\n")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_compile(args) -> int:
    graph, zdd = _load_instance(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.graph).stem if args.graph else Path(args.zdd).stem
    out_path = out_dir / f"{stem}.zdd"
    zdd.save(out_path)
    stats = zdd.build_stats
    print(f"vertices {graph.vertex_count if graph else '-'}")
    print(f"edges {zdd.n}")
    print(f"zdd_nodes {len(zdd)}")
    print(f"family_size {zdd.count()}")
    if "build_seconds" in stats:
        print(f"build_seconds {stats['build_seconds']:.6f}")
    if "max_frontier_vertices" in stats:
        print(f"max_frontier_vertices {stats['max_frontier_vertices']}")
    print(f"written {out_path}")
    return 0


def _zero_timings_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    column = None
    out = []
    for line in lines:
        if line.startswith("#"):
            out.append(line)
            continue
        cells = line.rstrip("\n").split(",")
        if column is None:  # header row
            column = cells.index("wall_clock_ms")
            out.append(line)
            continue
        cells[column] = "0.0"
        out.append(",".join(cells) + "\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(out)


def cmd_equilibrium(args) -> int:
    graph, zdd = _load_instance(args)
    model = _model_for(args, graph, zdd)
    theta = _theta_from(args, zdd.n)
    config = SolverConfig(iterations=args.iterations, eta=args.eta,
                          variant=VARIANT_NAMES[args.variant],
                          track_gap=args.track_gap)
    if config.variant == "accelerated":
        y_vars, trace = solve_accelerated(zdd, model, theta, config)
        flow = values(y_vars)
    elif config.variant == "naive_softmin":
        y_vars, trace = solve_naive_softmin(zdd, model, theta, config)
        flow = values(y_vars)
    else:
        flow, trace = solve_standard_fw(zdd, model, theta, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "equilibrium_trace.csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        _stamp(fh, args)
        trace.write_csv(fh)
    if args.no_timings:
        _zero_timings_csv(csv_path)
    result = {
        "variant": config.variant,
        "theta": [float(v) for v in theta],
        "flow": [float(v) for v in flow],
        "potential": model.potential_value(flow, theta),
        "fw_gap": fw_gap(zdd, model, flow, theta),
        "social_cost": model.social_cost_values(theta, flow),
        "seed": args.seed,
        "config": _resolved_config(args),
    }
    _write_json(out_dir / "equilibrium_result.json", result)
    print(f"flow {' '.join(repr(float(v)) for v in flow)}")
    print(f"potential {result['potential']!r}")
    print(f"fw_gap {result['fw_gap']!r}")
    if args.plot:
        from .report import render_equilibrium_trace
        render_equilibrium_trace(csv_path, out_dir / "equilibrium_trace.png")
    return 0


def cmd_stackelberg(args) -> int:
    graph, zdd = _load_instance(args)
    model = _model_for(args, graph, zdd)
    theta0 = _theta_from(args, zdd.n)
    inner = SolverConfig(iterations=args.iterations, eta=args.eta)
    config = StackelbergConfig(outer_step=args.outer_step, inner=inner,
                               max_outer_iters=args.max_outer,
                               heuristic_delta=args.delta,
                               rng_seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "stackelberg_trace.csv"
    started = time.perf_counter()
    if args.optimizer == "grid":
        from .fastpath import equilibrium_flow
        theta_star, objective = exhaustive_search(args.step, zdd, model,
                                                  config, jobs=args.jobs)
        elapsed = 0.0 if args.no_timings else (time.perf_counter() - started) * 1e3
        with open(csv_path, "w", encoding="utf-8") as fh:
            _stamp(fh, args)
            names = ",".join(f"theta_{i}" for i in range(1, zdd.n + 1))
            fh.write(f"k,wall_clock_ms,F,{names}\n")
            row = ",".join(repr(float(v)) for v in theta_star)
            fh.write(f"0,{elapsed!r},{objective!r},{row}\n")
        flow = equilibrium_flow(zdd, model, theta_star, config.inner)
        final = {"theta": [float(v) for v in theta_star], "F": objective}
    else:
        run = optimize_pgd if args.optimizer == "pgd" else baseline_heuristic
        trace = run(theta0, zdd, model, config)
        with open(csv_path, "w", encoding="utf-8") as fh:
            _stamp(fh, args)
            trace.write_csv(fh)
        if args.no_timings:
            _zero_timings_csv(csv_path)
        flow = trace.result_flow
        final = {"theta": [float(v) for v in trace.result.theta],
                 "F": trace.result.objective,
                 "iterations": len(trace.records) - 1}
    if flow is not None:
        final["flow"] = [float(v) for v in flow]
    final["seed"] = args.seed
    final["config"] = _resolved_config(args)
    _write_json(out_dir / "stackelberg_result.json", final)
    print(f"theta {' '.join(repr(float(v)) for v in final['theta'])}")
    print(f"F {final['F']!r}")
    if args.plot and args.optimizer != "grid":
        from .report import render_stackelberg_trace
        render_stackelberg_trace(csv_path, out_dir / "stackelberg_trace.png")
    return 0


def cmd_verify(args) -> int:
    # load without validation so structural violations are reported as
    # suite failures instead of parse-time errors
    graph = load_graph(args.graph) if args.graph else None
    if args.zdd:
        zdd = load_zdd(args.zdd, validate=False)
    else:
        if graph is None or not getattr(args, "sclass", None):
            raise CcgoptError("need --zdd, or --graph with --class")
        zdd = build_family(graph, StrategyClass(args.sclass))
    raw_suites = args.suite or ["all"]
    if "all" in raw_suites:
        suites = SUITES
        if graph is None:  # cost-model suites need edge lengths
            suites = tuple(s for s in suites if s not in ("gradient", "lemma"))
    else:
        suites = tuple(dict.fromkeys(raw_suites))
        if graph is None and any(s in ("gradient", "lemma") for s in suites):
            raise CcgoptError("gradient/lemma suites need --graph")
    results = run_suites(zdd, graph, suites, args.congestion, args.seed)
    if args.json:
        payload = [{"name": r.name, "passed": r.passed,
                    "measured": r.measured, "threshold": r.threshold,
                    "detail": r.detail} for r in results]
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for r in results:
            print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_report(args) -> int:
    from .report import render_equilibrium_trace, render_stackelberg_trace
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wrote = []
    if args.equilibrium_csv:
        out = out_dir / (Path(args.equilibrium_csv).stem + ".png")
        render_equilibrium_trace(args.equilibrium_csv, out)
        wrote.append(out)
    if args.stackelberg_csv:
        out = out_dir / (Path(args.stackelberg_csv).stem + ".png")
        render_stackelberg_trace(args.stackelberg_csv, out)
        wrote.append(out)
    if not wrote:
        raise CcgoptError("nothing to render; pass a trace CSV")
    for path in wrote:
        print(f"written {path}")
    return 0


def cmd_ingest(args) -> int:
    from .datasets import graphml_graph, tsplib_graph
    from .graphs import write_graph
    designation = None
    if args.od:
        designation = ("od", args.od[0], args.od[1])
    elif args.terminals:
        designation = ("terminals", tuple(args.terminals))
    with open(args.input, "r", encoding="utf-8") as fh:
        text = fh.read()
    if args.format == "tsplib":
        graph = tsplib_graph(text, designation)
    else:
        graph = graphml_graph(text, designation)
    write_graph(graph, args.out)
    print(f"written {args.out} ({graph.vertex_count} vertices, "
          f"{graph.edge_count} edges)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
