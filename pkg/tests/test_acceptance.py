"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test prints a PASS/FAIL line and records a one-line detail that the
terminal summary repeats under "acceptance criteria".
"""

import math
import random
import time

import pytest

from builders import build, grow
from oracles import best_tradeoff, single_removals
from mcts_xray.cli import main as cli_main
from mcts_xray.entropy import (
    child_removal_entropy_unweighted,
    entropy_after_child_removal,
    local_entropy,
    local_entropy_after_full_removal,
    per_step_bounds,
    predict_removal,
    propagated_entropy_closed_form,
    subtree_entropy_recursive,
    update_entropy,
)
from mcts_xray.env import LaneEnv, scenario_config
from mcts_xray.reduction import ALGORITHMS, RemovalCandidate, TradeOffParams, apply_removal, main_child, reduce, tradeoff_value
from mcts_xray.search import SearchConfig, best_action, run_search
from mcts_xray.tree import (
    TreeNode,
    begin_summary,
    clone,
    find_node,
    iter_nodes,
    iter_summarized,
    node_count,
    most_visited_action,
    validate,
)
from mcts_xray import analytics

GATED = ("local", "two-stage-stop", "two-stage-v2")
BETA_FACTORS = (1.0, 0.5, 0.25)


def _report(record_property, ok, detail):
    record_property("detail", detail)
    print(f"{'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _episode_trees(scenario, seeds, steps, budget=100):
    """Trees along greedy episodes, as ``generate`` writes them."""
    trees = []
    for seed in seeds:
        env = LaneEnv(scenario_config(scenario, seed))
        state = env.initial_state()
        for step in range(steps):
            if state.terminal:
                break
            root = run_search(state, env, config=SearchConfig(budget=budget, seed=seed * 100_003 + step))
            trees.append(root)
            state, _, _ = env.step(state, best_action(root))
    return trees


@pytest.fixture(scope="module")
def families():
    """Two scenario families of at least 50 generated trees each."""
    out = {}
    for scenario in ("curve", "merge"):
        trees = _episode_trees(scenario, range(10), 5)
        extra = 10
        while len(trees) < 50:
            trees += _episode_trees(scenario, [extra], 5)
            extra += 1
        out[scenario] = trees[:50]
    return out


def _recursive_errors(root):
    """Largest |stored - recomputed| entropy over the tree (recomputed from counts)."""
    worst = 0.0

    def walk(node):
        nonlocal worst
        counts = node.child_number_visits
        total = sum(counts)
        h = 0.0
        for a, c in enumerate(counts):
            if c:
                p = c / total
                h += -p * math.log2(p) + p * walk(node.children[a])
        worst = max(worst, abs(h - node.entropy))
        return h

    walk(root)
    return worst


def test_criterion_01_incremental_entropy(record_property):
    start = time.perf_counter()
    worst = 0.0
    iterations = 0

    def check(root, i):
        nonlocal worst, iterations
        worst = max(worst, _recursive_errors(root))
        iterations += 1

    for seed in range(20):
        env = LaneEnv(scenario_config("curve", seed))
        assert env.n_actions == 7
        for budget in (16, 64, 256, 512):
            run_search(env.initial_state(), env, config=SearchConfig(budget=budget, seed=seed), on_iteration=check)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 60
    _report(record_property, ok,
            f"{iterations} iterations checked, max error {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 60s)")


def test_criterion_02_closed_forms(record_property):
    rng = random.Random(2024)
    err_full = 0.0
    for _ in range(1000):
        n = rng.randint(2, 7)
        w = [rng.random() + 1e-3 for _ in range(n)]
        s = sum(w)
        p = [x / s for x in w]
        k = rng.randrange(n)
        rest = [x for i, x in enumerate(p) if i != k]
        r = sum(rest)
        direct = local_entropy([x / r for x in rest])
        err_full = max(err_full, abs(local_entropy_after_full_removal(p, k) - direct))

    err_child = 0.0
    done = 0
    while done < 1000:
        root = grow(rng, rng.randint(2, 7), rng.randint(3, 60), revisit_budget=3)
        nodes = [n for n in iter_nodes(root) if len(n.visited_children()) >= 2]
        if not nodes:
            continue
        node = rng.choice(nodes)
        k = rng.choice([a for a, _ in node.visited_children()])
        copy = clone(node)
        del copy.children[k]
        copy.child_number_visits[k] = 0
        err_child = max(err_child, abs(entropy_after_child_removal(node, k) - subtree_entropy_recursive(copy)))
        done += 1

    # counts (2,1,1) with stored child entropies (1,0,0)
    node = TreeNode(3)
    for a in range(3):
        node.add_child(a).number_visits = 1
    node.children[0].entropy = 1.0
    node.child_number_visits = [2, 1, 1]
    update_entropy(node)
    corrected, printed = entropy_after_child_removal(node, 0), child_removal_entropy_unweighted(node, 0)

    worked = build({0: {0: 2, 1: 2}, 1: {0: None, 1: None}})
    exact = predict_removal(worked.children[0], [0]).root_entropy
    closed = propagated_entropy_closed_form(worked, 0, 2, new_child_entropy=0.0)

    ok = (err_full <= 1e-12 and err_child <= 1e-12
          and abs(corrected - 1.0) <= 1e-12 and abs(printed - 0.0) <= 1e-12
          and abs(exact - 1.5) <= 1e-12 and abs(closed - 1.0242076) <= 1e-6)
    _report(record_property, ok,
            f"full-slot max err {err_full:.1e}, single-child max err {err_child:.1e} (tol 1e-12); "
            f"unweighted form {printed:.7f} vs {corrected:.7f}; closed propagation {closed:.7f} vs exact {exact:.7f}")


def _legal_random_subset(rng, node):
    live = [a for a, _ in node.visited_children()]
    main = most_visited_action(node.child_number_visits)
    others = [a for a in live if a != main]
    if not others or rng.random() < 0.2:
        return tuple(live)
    return tuple(sorted(rng.sample(others, rng.randint(1, len(others)))))


def _mutated_clone(root, path, subset):
    copy = clone(root)
    node = find_node(copy, path)
    for a in subset:
        del node.children[a]
        node.child_number_visits[a] = 0
    while node is not None:
        node.number_visits = sum(node.child_number_visits) + 1
        if node.parent is not None:
            node.parent.child_number_visits[node.action] = node.number_visits
        node = node.parent
    return copy


def test_criterion_03_exact_propagation(record_property):
    rng = random.Random(3)
    err_pred = err_apply = 0.0
    pairs = 0
    while pairs < 200:
        if rng.random() < 0.5:
            env = LaneEnv(scenario_config(rng.choice(["curve", "merge"]), rng.randrange(1000)))
            root = run_search(env.initial_state(), env,
                              config=SearchConfig(budget=rng.randint(10, 150), seed=rng.randrange(1000)))
        else:
            root = grow(rng, rng.randint(2, 7), rng.randint(3, 150), revisit_budget=5)
        candidates = [n for n in iter_nodes(root) if n.visited_children()]
        if not candidates:
            continue
        node = rng.choice(candidates)
        subset = _legal_random_subset(rng, node)
        predicted = predict_removal(node, subset).root_entropy
        oracle = subtree_entropy_recursive(_mutated_clone(root, node.path(), subset))
        err_pred = max(err_pred, abs(predicted - oracle))

        begin_summary(root)
        before = predict_removal(node, subset, summarized=True).root_entropy
        apply_removal(root, RemovalCandidate(node.path(), subset, 0, before, 0.0))
        err_apply = max(err_apply, abs(root.entropy_summarized - before))
        pairs += 1
    ok = err_pred <= 1e-9 and err_apply <= 1e-9
    _report(record_property, ok,
            f"{pairs} pairs; prediction vs rebuilt clone max err {err_pred:.1e}, "
            f"applied vs predicted max err {err_apply:.1e} (tol 1e-9)")


def test_criterion_04_bounds(record_property, families):
    nodes = violations = 0
    for root in families["curve"]:
        for node in iter_nodes(root):
            r = per_step_bounds(node)
            nodes += 1
            if not r.per_step_lower <= r.per_step_upper:
                violations += 1
    even = per_step_bounds(build({0: {0: None, 1: None}, 1: {0: None, 1: None}}))
    chain = per_step_bounds(build({1: {0: {1: {0: None}}}}))
    ok = (violations == 0 and even.entropy == 2.0 and even.depth == 2
          and abs(even.per_step_lower - 1.0) <= 1e-12 and abs(even.per_step_upper - 1.0) <= 1e-12
          and (chain.per_step_lower, chain.per_step_upper) == (0.0, 0.0))
    _report(record_property, ok,
            f"{nodes} nodes in 50 trees, {violations} with lower > upper; even binary tree "
            f"({even.per_step_lower}, {even.per_step_upper}); chain ({chain.per_step_lower}, {chain.per_step_upper})")


def _reduction_runs(families):
    for scenario in ("curve", "merge"):
        for root in families[scenario]:
            for factor in BETA_FACTORS:
                for algo in ALGORITHMS:
                    params = TradeOffParams(factor).resolve(root)
                    result = reduce(root, algo, params)
                    yield root, algo, factor, params, result


def test_criterion_05_tradeoff_gate(record_property, families):
    runs = drops = 0
    for root, algo, _, params, result in _reduction_runs(families):
        if algo not in GATED:
            continue
        runs += 1
        if tradeoff_value(result.reduced, params) < tradeoff_value(root, params):
            drops += 1
    _report(record_property, drops == 0,
            f"{runs} gated reductions over 100 trees x 3 beta factors, {drops} decreased the trade-off (exact)")


def test_criterion_06_structural_safety(record_property, families):
    runs = problems = 0
    for root, algo, _, _, result in _reduction_runs(families):
        runs += 1
        reduced = result.reduced
        bad = bool(validate(reduced)) or reduced.action is not None or reduced.parent is not None
        for node in iter_summarized(root):
            if node.children_summarized and main_child(node) not in node.children_summarized:
                bad = True
        problems += bad
    _report(record_property, problems == 0,
            f"{runs} reductions (all algorithms), {problems} failed validation, main-child protection or root presence")


def _strictly_decreasing_everywhere(root):
    return all(predict_removal(node, subset).root_entropy < root.entropy
               for node, subset in single_removals(root))


def test_criterion_07_small_instance_oracle(record_property):
    rng = random.Random(7)
    trees = []
    while len(trees) < 50:
        root = grow(rng, rng.randint(2, 3), rng.randint(2, 12), revisit_budget=2, terminal_prob=0.2)
        if root.entropy > 0:
            trees.append(root)
    beaten = 0
    worst_margin = math.inf
    for root in trees:
        for factor in BETA_FACTORS:
            params = TradeOffParams(factor).resolve(root)
            optimum = best_tradeoff(root, params.beta)
            for algo in ALGORITHMS:
                got = tradeoff_value(reduce(root, algo, params).reduced, params)
                worst_margin = min(worst_margin, optimum - got)
                if got > optimum + 1e-12:
                    beaten += 1

    eligible = not_identity = 0
    for root in trees:
        if not _strictly_decreasing_everywhere(root):
            continue
        eligible += 1
        for algo in ALGORITHMS:
            if reduce(root, algo, TradeOffParams(beta=0.0)).applied:
                not_identity += 1
    ok = beaten == 0 and not_identity == 0 and eligible > 0
    _report(record_property, ok,
            f"50 trees (<=12 nodes, |A|<=3) x 3 betas x 4 algorithms: {beaten} beat the exhaustive optimum "
            f"(smallest margin {worst_margin:.1e}); beta=0 gave {not_identity} non-identity results "
            f"on {eligible} trees where every legal removal lowers entropy")


def test_criterion_08_reduction_trends(record_property, families):
    lines = []
    ok = True
    for scenario in ("curve", "merge"):
        rows = {}
        for root in families[scenario]:
            for factor in (1.0, 0.25):
                for algo in ALGORITHMS:
                    params = TradeOffParams(factor).resolve(root)
                    row = analytics.compare(root, reduce(root, algo, params).reduced, params)
                    rows.setdefault((algo, factor), []).append(row)
        mean = {key: analytics.aggregate(r) for key, r in rows.items()}
        for algo in ALGORITHMS:
            full, quarter = mean[algo, 1.0].total_tree_reduction, mean[algo, 0.25].total_tree_reduction
            ok &= full >= quarter
            lines.append(f"{scenario}/{algo} size {full:.3f}>={quarter:.3f}")
        stop, local = mean["two-stage-stop", 0.25].entropy_reduction, mean["local", 0.25].entropy_reduction
        ok &= stop <= local
        lines.append(f"{scenario} entropy@1/4 stop {stop:.4f}<=local {local:.4f}")
    _report(record_property, ok, "; ".join(lines))


def test_criterion_09_performance(record_property):
    root = grow(random.Random(9), 7, 10_000, revisit_budget=100)
    n = node_count(root)
    timings = []
    for factor in (1.0, 0.25):
        start = time.perf_counter()
        reduce(root, "two-stage-v2", TradeOffParams(factor))
        timings.append(time.perf_counter() - start)
    ok = n == 10_000 and max(timings) < 5.0
    _report(record_property, ok,
            f"{n}-node tree, two-stage-v2 took {timings[0]:.2f}s at beta_ub and {timings[1]:.2f}s at beta_ub/4 (limit 5s)")


def test_criterion_10_determinism(record_property, tmp_path):
    def run(tag):
        trees, tables = tmp_path / tag / "trees", tmp_path / tag / "tables"
        for scenario, seed in (("curve", 3), ("merge", 4)):
            cli_main(["generate", "--scenario", scenario, "--seed", str(seed), "--steps", "4",
                      "--out", str(trees / scenario)])
        cli_main(["batch", "--in", str(trees / "curve"), "--out", str(tables / "curve")])
        cli_main(["batch", "--in", str(trees / "merge"), "--out", str(tables / "merge"), "--workers", "1"])
        return {p.relative_to(tmp_path / tag): p.read_bytes()
                for p in sorted((tmp_path / tag).rglob("*")) if p.is_file()}

    first, second = run("a"), run("b")
    differing = [str(k) for k in first if first[k] != second.get(k)]
    ok = first.keys() == second.keys() and not differing and len(first) > 0
    _report(record_property, ok, f"{len(first)} files compared across two runs, {len(differing)} differ")
