"""Searchers over design spaces: constraint-guided MCTS and GA/SA/beam baselines."""

from __future__ import annotations

from ..constraints import ConstraintSet
from ..space import DesignSpace
from .baselines import annealing_search, baseline_search, beam_search, genetic_search, sa_accept
from .common import SearchConfig, SearchConfigError, SearchOutcome, check_convergence
from .mcts import NONE, Tree, mcts_search, uct_score
from .problem import Problem

ALGORITHMS = ("mcts", "ga", "sa", "beam")


def run_search(
    algorithm: str, space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None
) -> SearchOutcome:
    if algorithm == "mcts":
        return mcts_search(space, cs, config)
    return baseline_search(algorithm, space, cs, config)


__all__ = [
    "ALGORITHMS",
    "NONE",
    "Problem",
    "SearchConfig",
    "SearchConfigError",
    "SearchOutcome",
    "Tree",
    "annealing_search",
    "baseline_search",
    "beam_search",
    "check_convergence",
    "genetic_search",
    "mcts_search",
    "run_search",
    "sa_accept",
    "uct_score",
]
