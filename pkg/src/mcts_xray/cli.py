"""Command-line entry point: ``mcts-xray <command> ...``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analytics
from .entropy import entropy_mismatches, per_step_bounds
from .env import LaneEnv, SCENARIOS, load_env_config, scenario_config
from .reduction import ALGORITHMS, SIZE_MEASURES, TradeOffParams, reduce
from .search import SELECTION_MODES, SearchConfig, best_action, run_search
from .serialization import (TreeParseError, TreeValidationError, export_dot, load_tree,
                            read_document, save_tree)
from .tree import ActionAlphabet, materialize_summary, node_count, validate

log = logging.getLogger("mcts_xray")


class UsageError(Exception):
    pass


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _float_list(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise argparse.ArgumentTypeError("beta factors must be non-negative")
    return values


def _algo_list(text):
    algos = [x.strip() for x in text.split(",") if x.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad or not algos:
        raise argparse.ArgumentTypeError(f"unknown algorithms {bad}; choose from {', '.join(ALGORITHMS)}")
    return algos


def cmd_generate(args) -> int:
    cfg = scenario_config(args.scenario, args.seed)
    if args.config:
        cfg = load_env_config(args.config, base=cfg)
    env = LaneEnv(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    state = env.initial_state()
    alphabet = ActionAlphabet.driving()
    for step in range(args.steps):
        if state.terminal:
            log.info("episode ended after %d steps", step)
            break
        search = SearchConfig(budget=args.budget, gamma=args.gamma,
                              exploration_weight=args.exploration,
                              selection_mode=args.selection,
                              rollout_depth_cap=args.rollout_depth,
                              seed=args.seed * 100_003 + step)
        root = run_search(state, env, config=search)
        meta = {"scenario": args.scenario, "seed": args.seed, "step": step,
                "budget": args.budget, "gamma": args.gamma}
        save_tree(out / f"tree_{step:03d}.tree", root, alphabet, meta)
        state, _, _ = env.step(state, best_action(root))
    return 0


def cmd_entropy(args) -> int:
    doc = load_tree(args.tree)
    root = doc.root
    report = per_step_bounds(root)
    print(f"entropy          {root.entropy:.12g}")
    print(f"depth            {root.depth}")
    print(f"nodes            {node_count(root)}")
    print(f"root visits      {root.number_visits}")
    print(f"branching used   {root.max_branching}")
    print(f"depth LB         {report.depth_lower_bound:.12g}")
    print(f"per-step bounds  [{report.per_step_lower:.12g}, {report.per_step_upper:.12g}]")
    if args.verify:
        bad = entropy_mismatches(root, tol=1e-9)
        for path, stored, recomputed in bad[:20]:
            print(f"mismatch at {path}: stored {stored!r} recomputed {recomputed!r}", file=sys.stderr)
        if bad:
            return 1
        print("verify           ok")
    return 0


def _params(beta_factor, size_measure):
    return TradeOffParams(beta_factor=beta_factor, size_measure=size_measure)


def cmd_reduce(args) -> int:
    doc = load_tree(args.tree)
    root = doc.root
    params = _params(args.beta_factor, args.size_measure)
    result = reduce(root, args.algo, params)
    if result.degenerate:
        print("degenerate: zero-entropy tree, output is the input unchanged")
    reduced = result.reduced
    problems = validate(reduced)
    if problems:
        raise TreeValidationError(problems)
    meta = dict(doc.meta)
    meta["reduction"] = {"algorithm": args.algo, "beta_factor": args.beta_factor,
                         "beta": result.params.beta, "size_measure": args.size_measure,
                         "applied": len(result.applied), "degenerate": result.degenerate}
    save_tree(args.out, root, doc.alphabet, meta)
    if args.report:
        row = analytics.compare(root, reduced, result.params)
        row = dataclasses.replace(row, algorithm=args.algo, beta_factor=args.beta_factor)
        Path(args.report).write_text(analytics.emit_csv([row]), encoding="utf-8")
    return 0


def cmd_compare(args) -> int:
    doc = load_tree(args.tree)
    root = doc.root
    if not root.has_summary:
        raise UsageError(f"{args.tree} holds no reduced tree; run 'reduce' first")
    info = doc.meta.get("reduction", {})
    beta_factor = args.beta_factor if args.beta_factor is not None else info.get("beta_factor", 1.0)
    size_measure = info.get("size_measure", "visits")
    row = analytics.compare(root, materialize_summary(root), _params(beta_factor, size_measure))
    row = dataclasses.replace(row, algorithm=info.get("algorithm", ""), beta_factor=beta_factor)
    sys.stdout.write(analytics.emit_csv([row]))
    return 0


def _reduce_file(job):
    path, algos, factors, size_measure = job
    rows = []
    for algo in algos:
        for factor in factors:
            root = load_tree(path).root
            params = _params(factor, size_measure)
            result = reduce(root, algo, params)
            row = analytics.compare(root, result.reduced, result.params)
            rows.append(dataclasses.replace(row, algorithm=algo, beta_factor=factor,
                                            tree=Path(path).name))
    return rows


def _worker_count(requested):
    limit = os.environ.get("MCTS_XRAY_THREADS")
    n = requested or os.cpu_count() or 1
    if limit:
        n = min(n, max(1, int(limit)))
    return n


def cmd_batch(args) -> int:
    files = sorted(Path(args.input).glob("*.tree"))
    if not files:
        raise UsageError(f"no .tree files in {args.input}")
    jobs = [(str(f), args.algos, args.beta_factors, args.size_measure) for f in files]
    workers = _worker_count(args.workers)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_file = list(pool.map(_reduce_file, jobs))
    else:
        per_file = [_reduce_file(job) for job in jobs]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for algo in args.algos:
        for factor in args.beta_factors:
            rows = [r for file_rows in per_file for r in file_rows
                    if r.algorithm == algo and r.beta_factor == factor]
            (out / f"{algo}_beta{factor!r}.csv").write_text(
                analytics.emit_csv(rows, per_tree=True), encoding="utf-8")
            summary.append(analytics.aggregate(rows))
    (out / "summary.csv").write_text(analytics.emit_csv(summary), encoding="utf-8")
    print(f"{len(files)} trees x {len(args.algos)} algorithms x {len(args.beta_factors)} "
          f"beta factors = {len(files) * len(summary)} reductions")
    return 0


def cmd_export_dot(args) -> int:
    doc = load_tree(args.tree)
    text = export_dot(doc.root, show_summarized=args.summarized, alphabet=doc.alphabet)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    doc = read_document(Path(args.tree).read_text(encoding="utf-8"), check=False)
    problems = validate(doc.root)
    if doc.root.has_summary:
        problems += [dataclasses.replace(v, invariant="summary " + v.invariant)
                     for v in validate(materialize_summary(doc.root))]
    for v in problems:
        print(v)
    if problems:
        return 1
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcts-xray", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run search episodes and write tree files")
    p.add_argument("--scenario", choices=sorted(SCENARIOS), default="curve")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=_positive_int, default=100)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--steps", type=_positive_int, default=1)
    p.add_argument("--exploration", type=float, default=1.0)
    p.add_argument("--selection", choices=SELECTION_MODES, default="uct-mean")
    p.add_argument("--rollout-depth", type=int, default=10)
    p.add_argument("--config", help="key = value file overriding the scenario settings")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("entropy", help="print entropy, depth and per-step bounds")
    p.add_argument("tree")
    p.add_argument("--verify", action="store_true",
                   help="recompute every node recursively; exit 1 on mismatch > 1e-9")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("reduce", help="reduce one tree")
    p.add_argument("tree")
    p.add_argument("--algo", choices=ALGORITHMS, required=True)
    p.add_argument("--beta-factor", type=float, default=1.0)
    p.add_argument("--size-measure", choices=SIZE_MEASURES, default="visits")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="write a one-row comparison CSV here")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("compare", help="comparison row for a reduced tree file")
    p.add_argument("tree")
    p.add_argument("--beta-factor", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("batch", help="reduce a directory of trees and tabulate")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--algos", type=_algo_list, default=list(ALGORITHMS))
    p.add_argument("--beta-factors", type=_float_list, default=[1.0, 0.5, 0.25])
    p.add_argument("--size-measure", choices=SIZE_MEASURES, default="visits")
    p.add_argument("--workers", type=_positive_int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("export-dot", help="render a tree as Graphviz DOT")
    p.add_argument("tree")
    p.add_argument("--summarized", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)

    p = sub.add_parser("validate", help="check tree invariants")
    p.add_argument("tree")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (TreeParseError, TreeValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
