"""Baseline searchers: genetic algorithm, simulated annealing and beam search.

All three score complete solutions with the same reward as MCTS and share its
outcome record, so their numbers are directly comparable.
"""

from __future__ import annotations

import math
import random

from ..constraints import ConstraintSet
from ..space import DesignSpace
from .common import SearchConfig, SearchConfigError, SearchOutcome, Tracker
from .mcts import Tree
from .problem import Picks, Problem

TOURNAMENT_SIZE = 3


def _repair(problem: Problem, d: int, gene: set[int], rng: random.Random) -> tuple[int, ...]:
    """Clamp a multi-select gene into ``1..max_count`` elements."""
    if not gene:
        gene.add(rng.randrange(problem.sizes[d]))
    while len(gene) > problem.caps[d]:
        gene.discard(rng.choice(sorted(gene)))
    return tuple(sorted(gene))


def _toggle(problem: Problem, d: int, gene: tuple[int, ...], rng: random.Random) -> tuple[int, ...]:
    e = rng.randrange(problem.sizes[d])
    chosen = set(gene)
    if e in chosen:
        chosen.discard(e)
    else:
        chosen.add(e)
    return _repair(problem, d, chosen, rng)


def _tournament(scores: list[float], rng: random.Random) -> int:
    best = rng.randrange(len(scores))
    for _ in range(TOURNAMENT_SIZE - 1):
        i = rng.randrange(len(scores))
        if scores[i] > scores[best]:
            best = i
    return best


def genetic_search(
    space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None,
    problem: Problem | None = None,
) -> SearchOutcome:
    """Generational GA: tournament selection, uniform crossover, mutation, repair.

    ``max_iterations`` bounds total evaluations, so the generation cap is
    ``max_iterations // population``. The convergence window runs over the
    per-generation best reward. ``config.elitism`` carries the generation's
    best individual over unchanged (off by default).
    """
    config = config or SearchConfig()
    problem = problem or Problem(space, cs, config.weights)
    rng = random.Random(config.seed)
    tracker = Tracker(problem, config, "ga")
    n = problem.n_dims
    pop_size = config.population
    max_generations = max(1, config.max_iterations // pop_size)
    r_max = problem.weights.r_max
    mutation_p = 1.0 / n

    population: list[Picks] = [problem.random_picks(rng) for _ in range(pop_size)]
    stop_reason = "max_iterations"
    generation = 0
    while generation < max_generations:
        scored = problem.score_batch(population)
        scores = []
        for picks, (reward, valid) in zip(population, scored):
            tracker.observe(picks, reward, valid, generation)
            scores.append(reward)
        elite = max(range(pop_size), key=scores.__getitem__)
        tracker.record(scores[elite])
        generation += 1
        if scores[elite] >= r_max:
            stop_reason = "r_max"
            break
        if tracker.converged():
            stop_reason = "window"
            break
        if generation >= max_generations:
            break
        children: list[Picks] = [population[elite]] if config.elitism else []
        while len(children) < pop_size:
            a = population[_tournament(scores, rng)]
            b = population[_tournament(scores, rng)]
            child = []
            for d in range(n):
                gene = a[d] if rng.random() < 0.5 else b[d]
                if rng.random() < mutation_p:
                    if problem.multi[d] and rng.random() < 0.5:
                        gene = _toggle(problem, d, gene, rng)
                    else:
                        gene = problem.random_option(d, rng)
                child.append(gene)
            children.append(tuple(child))
        population = children
    return tracker.finish(generation, stop_reason)


def sa_accept(delta: float, temperature: float, rng: random.Random) -> bool:
    """Metropolis rule; non-worsening moves always pass, none others at T <= 0."""
    if delta >= 0:
        return True
    if temperature <= 0:
        return False
    return rng.random() < math.exp(delta / temperature)


def _neighbor(problem: Problem, picks: Picks, rng: random.Random) -> Picks:
    movable = [d for d in range(problem.n_dims) if problem.sizes[d] > 1]
    if not movable:
        return picks
    d = rng.choice(movable)
    gene = picks[d]
    if problem.multi[d] and rng.random() < 0.5:
        new = _toggle(problem, d, gene, rng)
    else:
        new = gene
        while new == gene:
            new = problem.random_option(d, rng)
    return picks[:d] + (new,) + picks[d + 1 :]


def annealing_search(
    space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None,
    problem: Problem | None = None,
) -> SearchOutcome:
    """Simulated annealing with geometric cooling.

    The trace holds the current-state reward after each step (the initial
    state first); every proposed neighbour counts as one evaluation.
    """
    config = config or SearchConfig()
    problem = problem or Problem(space, cs, config.weights)
    rng = random.Random(config.seed)
    tracker = Tracker(problem, config, "sa")
    r_max = problem.weights.r_max

    current = problem.random_picks(rng)
    current_reward = tracker.evaluate(current, 0)
    tracker.record(current_reward)
    temperature = config.initial_temperature
    stop_reason = "r_max" if current_reward >= r_max else "max_iterations"
    step = 0
    while stop_reason == "max_iterations" and step < config.max_iterations:
        step += 1
        candidate = _neighbor(problem, current, rng)
        reward = tracker.evaluate(candidate, step)
        if sa_accept(reward - current_reward, temperature, rng):
            current, current_reward = candidate, reward
        temperature *= config.cooling_rate
        tracker.record(current_reward)
        if current_reward >= r_max:
            stop_reason = "r_max"
        elif tracker.converged():
            stop_reason = "window"
    return tracker.finish(step, stop_reason)


def beam_search(
    space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None,
    problem: Problem | None = None,
) -> SearchOutcome:
    """Deterministic beam search over the same move model as the MCTS tree.

    Partial states are scored with rules over unassigned dimensions counted
    as unsatisfied; ties keep generation order. Runs one full pass.
    """
    config = config or SearchConfig()
    problem = problem or Problem(space, cs, config.weights)
    tracker = Tracker(problem, config, "beam")
    moves = Tree(problem)
    n = problem.n_dims
    beam: list[tuple[int, tuple[int, ...], Picks]] = [(0, (), ())]
    step = 0
    while any(state[0] < n for state in beam):
        candidates: list[tuple[float, tuple[int, tuple[int, ...], Picks]]] = []
        for state in beam:
            d, cur, prefix = state
            if d >= n:
                score, _ = problem.score(prefix)
                candidates.append((score, state))
                continue
            for a in moves.legal_actions(d, cur):
                nxt = moves.apply(d, cur, prefix, a)
                nd, ncur, nprefix = nxt
                if nd >= n:
                    score = tracker.evaluate(nprefix, step)
                    tracker.record(score)
                else:
                    open_dim = (ncur,) if ncur else ()
                    score = problem.score_partial(nprefix + open_dim)
                candidates.append((score, nxt))
        candidates.sort(key=lambda item: -item[0])
        beam = [state for _, state in candidates[: config.beam_width]]
        step += 1
    return tracker.finish(step, "complete")


_SEARCHERS = {
    "ga": genetic_search,
    "sa": annealing_search,
    "beam": beam_search,
}


def baseline_search(
    kind: str, space: DesignSpace, cs: ConstraintSet, config: SearchConfig | None = None
) -> SearchOutcome:
    try:
        searcher = _SEARCHERS[kind]
    except KeyError:
        raise SearchConfigError(
            f"unknown baseline {kind!r}; expected one of {sorted(_SEARCHERS)}"
        ) from None
    return searcher(space, cs, config)


__all__ = [
    "annealing_search",
    "baseline_search",
    "beam_search",
    "genetic_search",
    "sa_accept",
]
