"""Command line interface.

Subcommands: validate, analyze, solve, gen, bench. Machine-parseable
output (JSON or CSV) goes to stdout or --out; logs go to stderr, with
verbosity controlled by the IDD_LOG environment variable (debug, info,
warning). Exit codes: 0 success, 1 domain failure, 2 I/O or parse
failure, 3 no solution within limits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .analyze import analyze as run_analysis
from .analyze import build_constraint_set, constraint_set_from_sidecar
from .evaluate import evaluate
from .generate import (
    DENSITIES,
    FIXTURE_KINDS,
    GenerationError,
    GenProfile,
    generate_property_fixture,
    tpcds_like,
    tpch_like,
)
from .generate import generate as generate_instance
from .exact import SearchLimits, SearchStats, brute_force, solve_exact
from .heuristics import dp_schedule, greedy
from .localsearch import LnsParams, TabuParams, VnsParams, lns, tabu_bswap, tabu_fswap, vns
from .model import (
    InstanceFormatError,
    InvalidInstanceError,
    instance_from_doc,
    load,
    store,
    validate,
)

log = logging.getLogger("idxorder")

ALGORITHMS = (
    "exact",
    "brute",
    "greedy",
    "dp",
    "tabu-bswap",
    "tabu-fswap",
    "lns",
    "vns",
    "portfolio",
)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_IO = 2
EXIT_NO_SOLUTION = 3


def _setup_logging() -> None:
    level_name = os.environ.get("IDD_LOG", "warning").lower()
    level = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING,
             "quiet": logging.ERROR}.get(level_name, logging.WARNING)
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump_json(payload, out_path: str | None) -> None:
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", out_path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        text = Path(args.instance).read_text(encoding="utf-8")
        doc = json.loads(text)
        instance = instance_from_doc(doc)
    except (OSError, json.JSONDecodeError, InstanceFormatError) as exc:
        log.error("cannot read instance: %s", exc)
        return EXIT_IO
    report = validate(instance)
    _dump_json([v.to_doc() for v in report], args.out)
    return EXIT_OK if not report else EXIT_DOMAIN


def _load_or_exit(path: str):
    try:
        return load(path), None
    except (OSError, InstanceFormatError) as exc:
        log.error("cannot read instance: %s", exc)
        return None, EXIT_IO
    except InvalidInstanceError as exc:
        log.error("instance invalid: %s", exc)
        return None, EXIT_DOMAIN


def cmd_analyze(args) -> int:
    instance, err = _load_or_exit(args.instance)
    if instance is None:
        return err
    _, report = run_analysis(
        instance, time_budget=args.budget, tail_budget=args.tail_budget
    )
    _dump_json(report.to_doc(), args.out)
    return EXIT_OK


def _constraints_for(instance, args):
    if getattr(args, "no_constraints", False):
        return build_constraint_set(instance)
    spec = getattr(args, "constraints", "auto")
    if spec is None or spec == "auto":
        constraints, _ = run_analysis(instance, time_budget=args.budget)
        return constraints
    doc = json.loads(Path(spec).read_text(encoding="utf-8"))
    return constraint_set_from_sidecar(instance, doc)


def _run_algorithm(algo: str, instance, constraints, args) -> tuple[list[int] | None, float, bool, SearchStats]:
    limits = SearchLimits(
        max_nodes=args.max_nodes,
        max_seconds=args.deadline if algo in ("exact", "brute") and args.deadline else None,
    ) if (args.max_nodes or (args.deadline and algo in ("exact", "brute"))) else None

    if args.start:
        doc = json.loads(Path(args.start).read_text(encoding="utf-8"))
        start = list(doc["order"])
    else:
        start = greedy(instance)

    deadline = args.deadline if args.deadline is not None else 10.0
    if algo == "greedy":
        order = greedy(instance)
        return order, evaluate(instance, order).objective, False, SearchStats()
    if algo == "dp":
        order = dp_schedule(instance)
        return order, evaluate(instance, order).objective, False, SearchStats()
    if algo == "brute":
        outcome = brute_force(instance)
        return outcome.best, outcome.objective, outcome.proven, outcome.stats
    if algo == "exact":
        outcome = solve_exact(instance, constraints, limits, initial=start)
        return outcome.best, outcome.objective, outcome.proven, outcome.stats
    if algo == "tabu-bswap":
        order, stats = tabu_bswap(instance, start, TabuParams(deadline=deadline, seed=args.seed))
        return order, evaluate(instance, order).objective, False, stats
    if algo == "tabu-fswap":
        order, stats = tabu_fswap(instance, start, TabuParams(deadline=deadline, seed=args.seed))
        return order, evaluate(instance, order).objective, False, stats
    if algo == "lns":
        order, stats = lns(instance, constraints, start, LnsParams(deadline=deadline, seed=args.seed))
        return order, evaluate(instance, order).objective, False, stats
    if algo == "vns":
        order, stats = vns(instance, constraints, start, VnsParams(deadline=deadline, seed=args.seed))
        return order, evaluate(instance, order).objective, False, stats
    if algo == "portfolio":
        def run_one(name):
            return name, _run_algorithm(name, instance, constraints, args)

        with ThreadPoolExecutor(max_workers=2) as pool:
            results = list(pool.map(run_one, ["tabu-fswap", "vns"]))
        results.sort(key=lambda r: (r[1][1], r[0]))
        name, best = results[0]
        log.info("portfolio winner: %s", name)
        return best
    raise ValueError(f"unknown algorithm {algo!r}")


def cmd_solve(args) -> int:
    instance, err = _load_or_exit(args.instance)
    if instance is None:
        return err
    if args.algo == "brute" and len(instance.indexes) > 10:
        log.error("brute force is capped at 10 indexes")
        return EXIT_DOMAIN
    constraints = _constraints_for(instance, args)
    order, objective, proven, stats = _run_algorithm(args.algo, instance, constraints, args)
    if order is None:
        log.error("no solution found within limits")
        return EXIT_NO_SOLUTION

    if args.curve:
        result = evaluate(instance, order)
        with open(args.curve, "w", encoding="utf-8", newline="") as fh:
            result.write_curve(fh)
    if args.timeline:
        with open(args.timeline, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["elapsed_seconds", "objective"])
            for t, obj in stats.incumbent_timeline:
                writer.writerow([repr(t), repr(obj)])

    payload = {
        "algorithm": args.algo,
        "instance": instance.name,
        "order": list(order),
        "objective": objective,
        "proven": proven,
        "stats": stats.to_doc(),
    }
    _dump_json(payload, args.out)
    return EXIT_OK


def cmd_gen(args) -> int:
    try:
        if args.fixture:
            instance = generate_property_fixture(args.fixture, args.seed)
        else:
            if args.profile == "tpch-like":
                profile = tpch_like(args.seed, args.density)
            elif args.profile == "tpcds-like":
                profile = tpcds_like(args.seed, args.density)
            else:
                profile = GenProfile(
                    name="custom",
                    queries=args.queries,
                    indexes=args.indexes,
                    plans=args.plans,
                    max_plan_size=args.max_plan_size,
                    build_interactions=args.build_interactions,
                    query_interactions=args.query_interactions,
                    density=args.density,
                    seed=args.seed,
                )
            instance = generate_instance(profile)
    except GenerationError as exc:
        log.error("generation failed: %s", exc)
        return EXIT_DOMAIN
    if args.out:
        store(instance, args.out)
    else:
        from .model import instance_to_doc

        _dump_json(instance_to_doc(instance), None)
    return EXIT_OK


def cmd_bench(args) -> int:
    corpus = sorted(Path(args.corpus).glob("*.json"))
    if not corpus:
        log.error("no instance files in %s", args.corpus)
        return EXIT_DOMAIN
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    for a in algos:
        if a not in ALGORITHMS:
            log.error("unknown algorithm %s", a)
            return EXIT_DOMAIN

    rows: list[dict] = []
    for path in corpus:
        instance, err = _load_or_exit(str(path))
        if instance is None:
            return err
        constraints = _constraints_for(instance, args)
        for algo in algos:
            started = time.monotonic()
            order, objective, proven, stats = _run_algorithm(algo, instance, constraints, args)
            elapsed = time.monotonic() - started
            ttb = stats.incumbent_timeline[-1][0] if stats.incumbent_timeline else elapsed
            row = {
                "instance": instance.name,
                "algo": algo,
                "objective": objective,
                "time_to_best_s": round(ttb, 3),
                "nodes": stats.nodes,
            }
            if args.compare_constraints and algo == "exact":
                plain = build_constraint_set(instance)
                base = solve_exact(
                    instance,
                    plain,
                    SearchLimits(max_nodes=args.max_nodes) if args.max_nodes else None,
                    initial=greedy(instance),
                )
                row["nodes_without_constraints"] = base.stats.nodes
                row["node_ratio"] = (
                    round(base.stats.nodes / stats.nodes, 2) if stats.nodes else float("inf")
                )
            if args.random_baseline and algo == "greedy":
                import random as _random

                rng = _random.Random(args.seed)
                objs = []
                ids = list(range(len(instance.indexes)))
                for _ in range(args.random_baseline):
                    perm = _random_feasible(rng, instance, ids)
                    objs.append(evaluate(instance, perm).objective)
                row["random_avg"] = statistics.fmean(objs)
                row["random_min"] = min(objs)
            rows.append(row)

    fields: list[str] = []
    for row in rows:
        for key in row:
            if key not in fields:
                fields.append(key)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    by_algo: dict[str, list[float]] = {}
    for row in rows:
        by_algo.setdefault(row["algo"], []).append(row["objective"])
    for algo in sorted(by_algo):
        objs = by_algo[algo]
        writer.writerow({"instance": "MEAN", "algo": algo, "objective": statistics.fmean(objs)})
        writer.writerow({"instance": "MEDIAN", "algo": algo, "objective": statistics.median(objs)})
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _random_feasible(rng, instance, ids) -> list[int]:
    from .evaluate import tables

    tbl = tables(instance)
    remaining = list(ids)
    built = 0
    order = []
    while remaining:
        eligible = [i for i in remaining if not tbl.pred_mask[i] & ~built]
        pick = rng.choice(eligible)
        remaining.remove(pick)
        order.append(pick)
        built |= 1 << pick
    return order


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="idxorder", description="Index deployment ordering solvers"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_val = sub.add_parser("validate", help="validate an instance file")
    p_val.add_argument("instance")
    p_val.add_argument("--out")
    p_val.set_defaults(func=cmd_validate)

    p_ana = sub.add_parser("analyze", help="derive ordering constraints")
    p_ana.add_argument("instance")
    p_ana.add_argument("--budget", type=float, default=60.0, help="analysis time budget, seconds")
    p_ana.add_argument("--tail-budget", type=int, default=50000)
    p_ana.add_argument("--out")
    p_ana.set_defaults(func=cmd_analyze)

    p_sol = sub.add_parser("solve", help="solve an instance")
    p_sol.add_argument("instance")
    p_sol.add_argument("--algo", choices=ALGORITHMS, default="vns")
    p_sol.add_argument(
        "--constraints",
        nargs="?",
        const="auto",
        default="auto",
        help="run the analyzer (default) or load a sidecar JSON file",
    )
    p_sol.add_argument("--no-constraints", action="store_true")
    p_sol.add_argument("--deadline", type=float, default=None, help="seconds")
    p_sol.add_argument("--max-nodes", type=int, default=None)
    p_sol.add_argument("--seed", type=int, default=0)
    p_sol.add_argument("--start", help="solution JSON providing the starting order")
    p_sol.add_argument("--curve", help="write the per-step curve CSV here")
    p_sol.add_argument("--timeline", help="write the incumbent timeline CSV here")
    p_sol.add_argument("--budget", type=float, default=60.0, help="analyzer budget, seconds")
    p_sol.add_argument("--out")
    p_sol.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("gen", help="generate an instance")
    p_gen.add_argument("--profile", choices=("tpch-like", "tpcds-like", "custom"), default="tpch-like")
    p_gen.add_argument("--fixture", choices=FIXTURE_KINDS)
    p_gen.add_argument("--density", choices=DENSITIES, default="full")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--queries", type=int, default=10)
    p_gen.add_argument("--indexes", type=int, default=12)
    p_gen.add_argument("--plans", type=int, default=30)
    p_gen.add_argument("--max-plan-size", type=int, default=4)
    p_gen.add_argument("--build-interactions", type=int, default=6)
    p_gen.add_argument("--query-interactions", type=int, default=10)
    p_gen.add_argument("--out")
    p_gen.set_defaults(func=cmd_gen)

    p_ben = sub.add_parser("bench", help="run algorithms over a corpus directory")
    p_ben.add_argument("corpus")
    p_ben.add_argument("--algos", default="greedy,vns")
    p_ben.add_argument("--deadline", type=float, default=10.0)
    p_ben.add_argument("--max-nodes", type=int, default=None)
    p_ben.add_argument("--seed", type=int, default=0)
    p_ben.add_argument("--start", default=None)
    p_ben.add_argument("--budget", type=float, default=60.0)
    p_ben.add_argument("--random-baseline", type=int, default=0)
    p_ben.add_argument("--compare-constraints", action="store_true")
    p_ben.add_argument("--out")
    p_ben.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (InstanceFormatError, json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
