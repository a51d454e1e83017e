"""Configuration, outcome record and bookkeeping shared by every searcher."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..reward import RewardWeights
from ..space import DesignSolution, DesignSpace, solution_to_dict
from .problem import Picks, Problem

# Relative slack for float noise in the window range test only.
_RANGE_SLACK = 1e-12


class SearchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    uct_c: float = 5.0
    window: int = 100
    epsilon: float = 0.1
    max_iterations: int = 20_000
    seed: int = 0
    weights: RewardWeights = field(default_factory=RewardWeights)
    population: int = 100
    initial_temperature: float = 1000.0
    cooling_rate: float = 0.999
    beam_width: int = 5
    elitism: bool = False
    record_events: bool = False
    prune_hard: bool = True

    def __post_init__(self) -> None:
        if self.window < 1:
            raise SearchConfigError("window must be positive")
        if self.epsilon < 0:
            raise SearchConfigError("epsilon must be non-negative")
        if self.max_iterations < 1:
            raise SearchConfigError("max_iterations must be positive")
        if self.population < 2:
            raise SearchConfigError("population must be at least 2")
        if not 0 < self.cooling_rate <= 1:
            raise SearchConfigError("cooling_rate must lie in (0, 1]")
        if self.beam_width < 1:
            raise SearchConfigError("beam_width must be positive")


def check_convergence(history: Sequence[float], window: int, epsilon: float) -> bool:
    """True once the last ``window`` rewards span at most ``epsilon``."""
    if len(history) < window:
        return False
    tail = history[len(history) - window :]
    hi, lo = max(tail), min(tail)
    return hi - lo <= epsilon + _RANGE_SLACK * max(1.0, abs(hi), abs(lo))


@dataclass
class SearchOutcome:
    algorithm: str
    best_solution: DesignSolution
    best_reward: float
    best_iteration: int
    reward_trace: list[float]
    iterations_run: int
    wall_time_seconds: float
    best_time_seconds: float
    valid_count: int
    evaluated_count: int
    converged: bool
    hit_rmax: bool
    stop_reason: str
    convergence_iteration: int
    convergence_time_seconds: float
    convergence_reward: float
    seed: int
    events: list[tuple[tuple[int, ...], float]] | None = field(default=None, repr=False)
    tree: Any = field(default=None, repr=False)

    @property
    def validity_ratio(self) -> float:
        return self.valid_count / self.evaluated_count if self.evaluated_count else 0.0

    def to_dict(self, space: DesignSpace, include_trace: bool = True) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "best_solution": solution_to_dict(space, self.best_solution),
            "best_reward": self.best_reward,
            "best_iteration": self.best_iteration,
            "iterations_run": self.iterations_run,
            "evaluated_count": self.evaluated_count,
            "valid_count": self.valid_count,
            "validity_ratio": self.validity_ratio,
            "converged": self.converged,
            "hit_rmax": self.hit_rmax,
            "stop_reason": self.stop_reason,
            "convergence_iteration": self.convergence_iteration,
            "convergence_reward": self.convergence_reward,
        }
        if include_trace:
            doc["reward_trace"] = list(self.reward_trace)
        doc["timing"] = {
            "wall_time_seconds": round(self.wall_time_seconds, 3),
            "best_time_seconds": round(self.best_time_seconds, 3),
            "convergence_time_seconds": round(self.convergence_time_seconds, 3),
        }
        return doc


class Tracker:
    """Records trace, best solution, validity and timing during one run."""

    def __init__(self, problem: Problem, config: SearchConfig, algorithm: str):
        self.problem = problem
        self.config = config
        self.algorithm = algorithm
        self.trace: list[float] = []
        self.best_reward = float("-inf")
        self.best_picks: Picks | None = None
        self.best_iteration = -1
        self.best_time = 0.0
        self.valid = 0
        self.evaluated = 0
        self.start = time.perf_counter()

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def evaluate(self, picks: Picks, iteration: int) -> float:
        """Score a complete solution, updating validity counts and the incumbent."""
        reward, valid = self.problem.score(picks)
        self.observe(picks, reward, valid, iteration)
        return reward

    def observe(self, picks: Picks, reward: float, valid: bool, iteration: int) -> None:
        self.evaluated += 1
        self.valid += valid
        if reward > self.best_reward:
            self.best_reward = reward
            self.best_picks = picks
            self.best_iteration = iteration
            self.best_time = self.elapsed()

    def record(self, reward: float) -> None:
        self.trace.append(reward)

    def converged(self) -> bool:
        return check_convergence(self.trace, self.config.window, self.config.epsilon)

    def hit_rmax(self) -> bool:
        return self.best_reward >= self.problem.weights.r_max

    def finish(self, iterations: int, stop_reason: str, **extra: Any) -> SearchOutcome:
        wall = self.elapsed()
        assert self.best_picks is not None
        return SearchOutcome(
            algorithm=self.algorithm,
            best_solution=self.problem.to_solution(self.best_picks),
            best_reward=self.best_reward,
            best_iteration=self.best_iteration,
            reward_trace=self.trace,
            iterations_run=iterations,
            wall_time_seconds=wall,
            best_time_seconds=self.best_time,
            valid_count=self.valid,
            evaluated_count=self.evaluated,
            converged=stop_reason == "window",
            hit_rmax=self.hit_rmax(),
            stop_reason=stop_reason,
            convergence_iteration=iterations,
            convergence_time_seconds=wall,
            convergence_reward=self.best_reward,
            seed=self.config.seed,
            **extra,
        )
