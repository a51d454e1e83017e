"""Constraint-guided Monte Carlo Tree Search over a design space.

Each tree level commits one element. Dimensions are expanded in declared
order; inside a multi-select dimension children are restricted to elements
with a larger index than the last one chosen, plus the termination symbol
``NONE`` once at least one element is selected, so every selection set has
exactly one path. A dimension closes automatically when its ``max_count`` is
reached or no larger index remains.

With ``prune_hard`` (the default) expansion and rollouts skip actions that
would complete the body of a hard rule, falling back to every legal action
when none is compliant. A hard-rule-free optimum is never pruned.
"""

from __future__ import annotations

import math
import random

from ..constraints import ConstraintSet
from ..space import DesignSpace
from .common import SearchConfig, SearchOutcome, Tracker
from .problem import Picks, Problem

NONE = -1


def uct_score(total_reward: float, visits: int, parent_visits: int, c: float) -> float:
    """Mean reward plus ``c * sqrt(ln(parent_visits) / visits)``."""
    if visits < 1:
        raise ValueError("unvisited nodes are expanded, never scored")
    return total_reward / visits + c * math.sqrt(math.log(parent_visits) / visits)


class Tree:
    """Array-of-fields search tree; node 0 is the empty root."""

    def __init__(self, problem: Problem, prune_hard: bool = True):
        self.problem = problem
        self.prune_hard = prune_hard and any(problem.hard_by_dim)
        self.parent: list[int] = [-1]
        self.action: list[int] = [NONE]
        self.dim: list[int] = [0]  # dimension the node's action was taken in (-1 for root)
        self.visits: list[int] = [0]
        self.reward: list[float] = [0.0]
        self.children: list[list[int]] = [[]]
        self.state: list[tuple[int, tuple[int, ...], Picks]] = [(0, (), ())]
        self.untried: list[list[int]] = [self.compliant_actions(0, (), ())]
        self.exhausted: list[bool] = [False]
        self.dim[0] = -1

    def __len__(self) -> int:
        return len(self.parent)

    def legal_actions(self, d: int, cur: tuple[int, ...]) -> list[int]:
        p = self.problem
        if d >= p.n_dims:
            return []
        if not p.multi[d]:
            return list(range(p.sizes[d]))
        start = cur[-1] + 1 if cur else 0
        actions = list(range(start, p.sizes[d]))
        if cur:
            actions.append(NONE)
        return actions

    def violates(self, d: int, cur: tuple[int, ...], prefix: Picks, a: int) -> bool:
        nd, ncur, nprefix = self.apply(d, cur, prefix, a)
        return self.problem.completes_hard(d, nd, ncur, nprefix)

    def compliant_actions(self, d: int, cur: tuple[int, ...], prefix: Picks) -> list[int]:
        actions = self.legal_actions(d, cur)
        if not self.prune_hard or d >= self.problem.n_dims or not self.problem.hard_by_dim[d]:
            return actions
        ok = [a for a in actions if not self.violates(d, cur, prefix, a)]
        return ok or actions

    def apply(
        self, d: int, cur: tuple[int, ...], prefix: Picks, a: int
    ) -> tuple[int, tuple[int, ...], Picks]:
        p = self.problem
        if a == NONE:
            return d + 1, (), prefix + (cur,)
        if not p.multi[d]:
            return d + 1, (), prefix + ((a,),)
        cur = cur + (a,)
        if len(cur) >= p.caps[d] or a == p.sizes[d] - 1:
            return d + 1, (), prefix + (cur,)
        return d, cur, prefix

    def add_child(self, node: int, a: int) -> int:
        d, cur, prefix = self.state[node]
        state = self.apply(d, cur, prefix, a)
        child = len(self.parent)
        self.parent.append(node)
        self.action.append(a)
        self.dim.append(d)
        self.visits.append(0)
        self.reward.append(0.0)
        self.children.append([])
        self.state.append(state)
        untried = self.compliant_actions(*state)
        self.untried.append(untried)
        self.exhausted.append(not untried)
        self.children[node].append(child)
        return child

    def is_terminal(self, node: int) -> bool:
        return self.state[node][0] >= self.problem.n_dims

    def partial_picks(self, node: int) -> Picks:
        """Completed dimensions plus the open multi-select selection, if any."""
        d, cur, prefix = self.state[node]
        return prefix + ((cur,) if cur else ())

    def path(self, node: int) -> list[int]:
        out = []
        while node != -1:
            out.append(node)
            node = self.parent[node]
        return out

    def refresh_exhausted(self, node: int) -> None:
        self.exhausted[node] = not self.untried[node] and all(
            self.exhausted[c] for c in self.children[node]
        )


def rollout(tree: Tree, node: int, rng: random.Random) -> Picks:
    """Uniform random continuation from ``node`` to a complete solution."""
    d, cur, prefix = tree.state[node]
    problem = tree.problem
    n = problem.n_dims
    while d < n:
        actions = tree.legal_actions(d, cur)
        if tree.prune_hard and problem.hard_by_dim[d]:
            # rejection sampling; fall back to any legal action if all violate
            candidates = list(actions)
            while candidates:
                a = candidates.pop(rng.randrange(len(candidates)))
                if not tree.violates(d, cur, prefix, a):
                    break
            else:
                a = actions[rng.randrange(len(actions))]
        else:
            a = actions[rng.randrange(len(actions))]
        d, cur, prefix = tree.apply(d, cur, prefix, a)
    return prefix


def select(tree: Tree, c: float) -> int:
    """Descend by max UCT until a node with untried actions (or a terminal) is reached."""
    node = 0
    visits, reward, exhausted = tree.visits, tree.reward, tree.exhausted
    while not tree.untried[node] and not tree.is_terminal(node):
        best, best_score = -1, float("-inf")
        # inlined uct_score with the parent's log hoisted out of the loop
        log_n = math.log(visits[node])
        for child in tree.children[node]:
            if exhausted[child]:
                continue
            n = visits[child]
            s = reward[child] / n + c * math.sqrt(log_n / n)
            if s > best_score:
                best, best_score = child, s
        if best < 0:  # every child exhausted; only reachable when the root is
            break
        node = best
    return node


def mcts_search(space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None,
                problem: Problem | None = None) -> SearchOutcome:
    config = config or SearchConfig()
    problem = problem or Problem(space, cs, config.weights)
    rng = random.Random(config.seed)
    tree = Tree(problem, config.prune_hard)
    tracker = Tracker(problem, config, "mcts")
    events: list[tuple[tuple[int, ...], float]] | None = [] if config.record_events else None
    r_max = problem.weights.r_max
    # a space small enough to cover within the budget stops once every solution was seen
    n_solutions = space.solution_count()
    seen: set[Picks] | None = set() if n_solutions <= config.max_iterations else None
    stop_reason = "max_iterations"
    iteration = 0
    while iteration < config.max_iterations:
        node = select(tree, config.uct_c)
        if tree.untried[node]:
            untried = tree.untried[node]
            a = untried.pop(rng.randrange(len(untried)))
            node = tree.add_child(node, a)
        picks = rollout(tree, node, rng)
        reward = tracker.evaluate(picks, iteration)
        path = tree.path(node)
        for v in path:
            tree.visits[v] += 1
            tree.reward[v] += reward
            tree.refresh_exhausted(v)
        if events is not None:
            events.append((tuple(path), reward))
        tracker.record(reward)
        iteration += 1
        if reward >= r_max:
            stop_reason = "r_max"
            break
        if tracker.converged():
            stop_reason = "window"
            break
        if seen is not None:
            seen.add(picks)
        if tree.exhausted[0] or (seen is not None and len(seen) == n_solutions):
            stop_reason = "exhausted"
            break
    return tracker.finish(iteration, stop_reason, events=events, tree=tree)
