from __future__ import annotations

import math
import random
from collections import defaultdict

import pytest
from hypothesis import given, settings, strategies as st

from dspace.builtin import narrative_space, toy_listing_space
from dspace.constraints import ConstraintSet, parse_constraints
from dspace.search import SearchConfig, check_convergence, mcts_search, uct_score
from dspace.search.common import SearchConfigError
from dspace.search.mcts import NONE, Tree
from dspace.search.problem import Problem
from dspace.space import DesignSpace, validate_solution
from dspace.space import make_dimension as _mk

from oracles import all_selections, brute_counts, brute_optimum, brute_reward, random_rules, random_space

NO_WINDOW = 10**9


def dim(did, ids, multi=False, max_count=None):
    return _mk(did, did.upper(), [(i, i) for i in ids], multi, max_count)


def test_uct_examples():
    assert uct_score(5, 1, 2, 5) == pytest.approx(5 + 5 * math.sqrt(math.log(2)), abs=1e-9)
    assert uct_score(12, 4, 50, 0) == 3.0
    assert uct_score(7, 1, 1, 5) == 7.0
    with pytest.raises(ValueError):
        uct_score(0, 0, 3, 5)


def test_convergence_examples():
    assert check_convergence([7.3] * 100, 100, 0.1)
    assert not check_convergence([7.3] * 99, 100, 0.1)
    assert not check_convergence([0.0] * 99 + [0.11], 100, 0.1)
    assert check_convergence([0.0] * 99 + [0.1], 100, 0.1)
    assert check_convergence([5.0] + [0.0] * 100, 100, 0.1)


def test_config_validation():
    with pytest.raises(SearchConfigError):
        SearchConfig(window=0)
    with pytest.raises(SearchConfigError):
        SearchConfig(epsilon=-1)
    assert SearchConfig().uct_c == 5.0 and SearchConfig().window == 100


def _expand_fully(tree, node=0):
    while tree.untried[node]:
        tree.add_child(node, tree.untried[node].pop(0))
    for child in tree.children[node]:
        _expand_fully(tree, child)


def test_full_tree_holds_every_solution_once():
    space = DesignSpace(
        "s", (dim("a", ["x", "y"]), dim("m", ["p", "q", "r", "s"], True, 3), dim("b", ["u", "v", "w"]))
    )
    tree = Tree(Problem(space, ConstraintSet()), prune_hard=False)
    _expand_fully(tree)
    leaves = [v for v in range(len(tree)) if tree.is_terminal(v)]
    decoded = [tree.problem.to_solution(tree.state[v][2]) for v in leaves]
    assert len(decoded) == len(set(decoded)) == space.solution_count()
    assert all(validate_solution(space, s) == [] for s in decoded)


def test_small_space_stops_once_covered():
    space = DesignSpace("s", (dim("a", ["x", "y"]), dim("m", ["p", "q", "r"], True, 2)))
    out = mcts_search(space, ConstraintSet(), SearchConfig(window=NO_WINDOW, prune_hard=False))
    assert out.stop_reason == "exhausted"
    assert out.iterations_run >= space.solution_count()


def test_multi_select_children_are_canonical():
    space = DesignSpace("s", (dim("m", ["p", "q", "r", "s"], True, 3),))
    out = mcts_search(space, ConstraintSet(), SearchConfig(window=NO_WINDOW, prune_hard=False))
    tree = out.tree
    for v in range(len(tree)):
        kids = [tree.action[c] for c in tree.children[v]]
        d, cur, _ = tree.state[v]
        if not tree.is_terminal(v):
            last = cur[-1] if cur else -1
            assert all(a == NONE or a > last for a in kids)
            assert (NONE in kids) == bool(cur) or not kids
        assert NONE not in [tree.action[c] for c in tree.children[0]]


def _replay(events, n_nodes):
    visits = [0] * n_nodes
    totals = [0.0] * n_nodes
    for path, reward in events:
        for v in path:
            visits[v] += 1
            totals[v] += reward
    return visits, totals


def test_backprop_conservation_and_visit_monotonicity():
    space = narrative_space()
    cs = parse_constraints(
        "hard_constraint(x, 1) :- headline(x, sensationalism).\n"
        "soft_positive_constraint(x, 1) :- narrative_intent(x, explain), narrative_pattern(x, compare).\n"
        "soft_negative_constraint(x, 1) :- narrative_perspective(x, first_person).",
        space,
    )
    config = SearchConfig(seed=3, window=NO_WINDOW, max_iterations=500, record_events=True)
    out = mcts_search(space, cs, config)
    tree = out.tree
    visits, totals = _replay(out.events, len(tree))
    assert visits == tree.visits
    assert totals == tree.reward
    for v in range(len(tree)):
        assert tree.visits[v] >= sum(tree.visits[c] for c in tree.children[v])
    assert [r for _, r in out.events] == out.reward_trace


def test_seed_determinism():
    space = narrative_space()
    cs = parse_constraints("soft_positive_constraint(x, 1) :- narrative_intent(x, explain).", space)
    a = mcts_search(space, cs, SearchConfig(seed=9, window=NO_WINDOW, max_iterations=400))
    b = mcts_search(space, cs, SearchConfig(seed=9, window=NO_WINDOW, max_iterations=400))
    assert a.reward_trace == b.reward_trace and a.best_solution == b.best_solution


def test_empty_constraint_set_converges_by_window():
    out = mcts_search(narrative_space(), ConstraintSet(), SearchConfig(seed=1))
    assert out.stop_reason == "window" and out.converged
    assert out.best_reward == 0.0 and out.iterations_run == 100


def test_single_solution_space():
    space = DesignSpace("s", (dim("a", ["x"]), dim("b", ["y"])))
    out = mcts_search(space, ConstraintSet(), SearchConfig())
    assert out.iterations_run == 1
    assert out.best_solution.selected("a") == {"x"}


def test_unique_optimum_hits_rmax():
    space = toy_listing_space()
    cs = parse_constraints(
        "soft_positive_constraint(x, 1) :- D1(x, e12), D2(x, e23).\n"
        "soft_positive_constraint(x, 2) :- D3(x, e34).\n"
        "hard_constraint(x, 1) :- D1(x, e11).",
        space,
    )
    out = mcts_search(space, cs, SearchConfig(seed=0))
    assert out.hit_rmax and out.best_reward == 10.0 and out.stop_reason == "r_max"
    assert out.best_solution.selected("D2") == {"e23"}


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_outcome_invariants(seed):
    rng = random.Random(seed)
    space = random_space(rng, max_dims=4, max_elems=4, max_multi=1, min_dims=2)
    cs = random_rules(rng, space, max_rules=10)
    out = mcts_search(space, cs, SearchConfig(seed=seed, max_iterations=300))
    assert out.best_reward == max(out.reward_trace)
    assert out.best_reward <= 10.0
    assert out.hit_rmax == (out.best_reward == 10.0)
    assert out.valid_count <= out.evaluated_count == out.iterations_run
    sel = {k: frozenset(v) for k, v in out.best_solution.selections.items()}
    assert brute_reward(space, cs, sel) == pytest.approx(out.best_reward, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_pruning_never_hides_a_hard_free_optimum(seed):
    rng = random.Random(seed)
    space = random_space(rng, max_dims=4, max_elems=4, max_multi=1, min_dims=2)
    cs = random_rules(rng, space, max_rules=12)
    sels = list(all_selections(space))
    best = brute_optimum(space, cs)
    if not any(brute_counts(cs, s)[0] == 0 and brute_reward(space, cs, s) == best for s in sels):
        return
    out = mcts_search(space, cs, SearchConfig(seed=seed, window=NO_WINDOW, max_iterations=10**6))
    assert out.best_reward == pytest.approx(best, abs=1e-12)


def test_tree_paths_are_legal_prefixes():
    space = narrative_space()
    out = mcts_search(space, ConstraintSet(), SearchConfig(seed=2, window=NO_WINDOW, max_iterations=300))
    tree = out.tree
    counts = defaultdict(int)
    for v in range(1, len(tree)):
        picks = tree.partial_picks(v)
        for d, sel in enumerate(picks):
            assert len(sel) == len(set(sel)) and list(sel) == sorted(sel)
            assert 1 <= len(sel) <= space.dimensions[d].capacity
        counts[len(picks)] += 1
    assert counts
