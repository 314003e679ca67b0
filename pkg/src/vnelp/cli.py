"""Batch experiment driver: instance generation, solving, rounding and
formulation comparison, with machine-readable JSON/CSV output.

Exit codes: 0 success, 1 input error, 2 enumeration/solver budget exceeded.
The environment variable ``VNE_ROUND_BUDGET`` overrides the solver node
budget.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from . import cactus, rounding, scenarios, serde
from .formulations import build_mcf, build_novel
from .lp import solve_ip, solve_lp
from .model import Instance
from .oracle import BudgetExceededError

ROUND_CSV_HEADER = ["instance_id", "strategy", "seed", "iterations", "profit",
                    "lp_objective", "profit_ratio", "max_node_load",
                    "max_edge_load", "runtime_ms"]
COMPARE_CSV_HEADER = ["instance_id", "mcf_lp", "novel_lp", "ip",
                      "ratio_mcf_over_novel", "ratio_novel_over_ip",
                      "ratio_mcf_over_ip"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _append_csv(path: str, header: Sequence[str], row: Sequence) -> None:
    exists = os.path.exists(path) and os.path.getsize(path) > 0
    with open(path, "a", newline="") as fh:
        writer = csv.writer(fh)
        if not exists:
            writer.writerow(header)
        writer.writerow(row)


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        fh.write(serde.dumps(obj) + "\n")


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args) -> int:
    substrate = scenarios.load_substrate(args.substrate)
    config = scenarios.GenerationConfig(
        request_count=args.requests, nrf=args.nrf, erf=args.erf, seed=args.seed)
    name = os.path.splitext(os.path.basename(args.out))[0]
    instance, report = scenarios.generate_instance(substrate, config, name=name)
    serde.save_instance(instance, args.out)
    if report["dropped_infeasible"]:
        print(f"dropped {len(report['dropped_infeasible'])} infeasible "
              f"request(s): {', '.join(report['dropped_infeasible'])}",
              file=sys.stderr)
    print(f"wrote {args.out}: {len(instance.requests)} requests on "
          f"{substrate.name} (seed={args.seed}, nrf={args.nrf}, erf={args.erf})")
    return 0


# ---------------------------------------------------------------------------
# solve


def _cmd_solve(args) -> int:
    instance = serde.load_instance(args.infile)
    requests = list(instance.requests)
    started = time.perf_counter()
    if args.formulation == "mcf":
        lp, variables = build_mcf(requests, instance.substrate,
                                  integral=(args.mode == "ip"))
    else:
        for r in requests:
            if not cactus.is_cactus(r):
                raise ValueError(
                    f"request {r.id} is not a cactus; the novel formulation "
                    f"does not apply")
        structures = {r.id: cactus.analyze(r) for r in requests}
        lp, variables = build_novel(requests, instance.substrate, structures,
                                    integral=(args.mode == "ip"))
    if args.mode == "ip":
        solution = solve_ip(lp, variables.binaries)
    else:
        solution = solve_lp(lp)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    payload = {
        "instance": instance.name,
        "formulation": args.formulation,
        "mode": args.mode,
        "status": solution.status,
        "objective": solution.objective,
        "gap": solution.gap,
        "assignment": {k: v for k, v in sorted(solution.assignment.items())
                       if abs(v) > 1e-9},
        "runtime_ms": round(elapsed_ms, 3),
    }
    _write_json(args.out, payload)
    print(f"{args.formulation}/{args.mode}: {solution.status}, "
          f"objective {solution.objective:.6f} ({elapsed_ms:.0f} ms)")
    return 0


# ---------------------------------------------------------------------------
# round


def _iteration_outcome(problem, strategy, seed, k):
    if strategy == "heuristic":
        return rounding.heuristic_iteration(problem, seed, k)
    return rounding.vanilla_iteration(problem, seed, k)


def _chunk_best(payload):
    problem, strategy, seed, ks = payload
    criterion = "max_profit" if strategy == "heuristic" else \
        {"minload": "min_load", "maxprofit": "max_profit"}[strategy]
    best_key, best_k, best_outcome = None, None, None
    for k in ks:
        outcome = _iteration_outcome(problem, strategy, seed, k)
        key = rounding.selection_key(outcome, criterion)
        if best_key is None or key > best_key or (key == best_key and k < best_k):
            best_key, best_k, best_outcome = key, k, outcome
    return best_key, best_k, best_outcome


def _best_outcome(problem, strategy, seed, iterations, parallel):
    ks = list(range(iterations))
    if parallel <= 1 or iterations < 4:
        chunks = [ks]
    else:
        chunks = [ks[i::parallel] for i in range(parallel)]
    payloads = [(problem, strategy, seed, chunk) for chunk in chunks if chunk]
    if len(payloads) == 1:
        results = [_chunk_best(payloads[0])]
    else:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(_chunk_best, payloads))
    # deterministic merge: best key, earliest iteration on ties
    best = max(results, key=lambda t: (t[0], -t[1]))
    return best[2]


def _cmd_round(args) -> int:
    instance = serde.load_instance(args.infile)
    started = time.perf_counter()
    trace = None
    if args.strategy == "randround":
        result = rounding.run_randround(instance, max_rounds=args.iterations,
                                        seed=args.seed)
        outcome, lp_objective = result.outcome, result.lp_objective
        dropped = result.dropped
        trace = list(result.trace)
        decompositions = result.decompositions
    else:
        pipeline = rounding.solve_and_decompose(instance)
        outcome = _best_outcome(pipeline.problem, args.strategy, args.seed,
                                args.iterations, args.parallel)
        lp_objective = pipeline.lp_objective
        dropped = pipeline.dropped
        decompositions = pipeline.decompositions
    elapsed_ms = (time.perf_counter() - started) * 1000.0

    chosen_mappings = {}
    for rid, idx in sorted(outcome.choices.items()):
        if idx is None:
            continue
        entry = decompositions[rid].entries[idx]
        chosen_mappings[rid] = serde.mapping_to_obj(entry.mapping)
    payload = {
        "instance": instance.name,
        "strategy": args.strategy,
        "seed": args.seed,
        "iterations": args.iterations,
        "lp_objective": lp_objective,
        "profit": outcome.profit,
        "max_node_load": outcome.max_node_load,
        "max_edge_load": outcome.max_edge_load,
        "choices": {rid: idx for rid, idx in sorted(outcome.choices.items())},
        "mappings": chosen_mappings,
        "dropped": list(dropped),
        "runtime_ms": round(elapsed_ms, 3),
    }
    if trace is not None:
        payload["trace"] = trace
    if args.out:
        _write_json(args.out, payload)
    if args.csv:
        ratio = outcome.profit / lp_objective if lp_objective > 0 else 0.0
        _append_csv(args.csv, ROUND_CSV_HEADER, [
            instance.name, args.strategy, args.seed, args.iterations,
            outcome.profit, lp_objective, ratio, outcome.max_node_load,
            outcome.max_edge_load, round(elapsed_ms, 3)])
    print(f"{args.strategy}: profit {outcome.profit:.6f} "
          f"(lp {lp_objective:.6f}), loads node {outcome.max_node_load:.3f} "
          f"edge {outcome.max_edge_load:.3f} ({elapsed_ms:.0f} ms)")
    return 0


# ---------------------------------------------------------------------------
# compare-bounds


def _compare_row(path: str) -> list:
    instance = serde.load_instance(path)
    requests = list(instance.requests)
    mcf_lp_model, _ = build_mcf(requests, instance.substrate)
    mcf_lp = solve_lp(mcf_lp_model).objective
    structures = {r.id: cactus.analyze(r) for r in requests}
    novel_model, _ = build_novel(requests, instance.substrate, structures)
    novel_lp = solve_lp(novel_model).objective
    ip_model, ip_vars = build_mcf(requests, instance.substrate, integral=True)
    ip = solve_ip(ip_model, ip_vars.binaries).objective

    def ratio(a, b):
        return a / b if b > 0 else float("inf") if a > 0 else float("nan")

    return [instance.name, mcf_lp, novel_lp, ip,
            ratio(mcf_lp, novel_lp), ratio(novel_lp, ip), ratio(mcf_lp, ip)]


def _cmd_compare(args) -> int:
    paths = list(args.infile)
    if args.parallel > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(_compare_row, paths))
    else:
        rows = [_compare_row(p) for p in paths]
    rows.sort(key=lambda r: r[0])
    for row in rows:
        _append_csv(args.csv, COMPARE_CSV_HEADER, row)
        print(f"{row[0]}: mcf_lp={row[1]:.6f} novel_lp={row[2]:.6f} ip={row[3]:.6f}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vnelp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a random instance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--requests", type=int, required=True)
    p.add_argument("--nrf", type=float, default=0.5)
    p.add_argument("--erf", type=float, default=1.0)
    p.add_argument("--substrate", default="geant",
                   help="builtin name (geant, ring(n)) or JSON path")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("solve", help="solve one formulation")
    p.add_argument("--formulation", choices=["mcf", "novel"], required=True)
    p.add_argument("--mode", choices=["lp", "ip"], required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("round", help="run the rounding pipeline")
    p.add_argument("--strategy",
                   choices=["randround", "minload", "maxprofit", "heuristic"],
                   required=True)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=_cmd_round)

    p = sub.add_parser("compare-bounds",
                       help="objectives of both formulations plus the integer optimum")
    p.add_argument("--in", dest="infile", nargs="+", required=True)
    p.add_argument("--csv", required=True)
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=_cmd_compare)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 2
    except (serde.InstanceFormatError, scenarios.GenerationError,
            cactus.NotCactusError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
