"""Constraint-aware reward with a selection-quantity penalty.

``total = r_c - delta * r_q`` where

    r_c = -alpha * V_h/|C_h| + beta * V_p/|C_p| - gamma * V_n/|C_n|
    r_q = sum over recommended multi-select dims of | |E_k| - n_k |

Terms with an empty denominator contribute 0. With the penalty subtracted,
``beta`` is a true upper bound reached exactly when no hard or soft-negative
rule fires, every soft-positive rule fires, and every recommended count is
met. ``additive_penalty=True`` restores the literal ``r_c + delta * r_q``
form for audits; the upper bound does not hold there.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .constraints import ConstraintSet, SatisfactionCounts, evaluate, recommended_counts
from .space import DesignSolution, DesignSpace


@dataclass(frozen=True)
class RewardWeights:
    alpha: float = 20.0
    beta: float = 10.0
    gamma: float = 1.0
    delta: float = 0.5
    additive_penalty: bool = False

    def __post_init__(self) -> None:
        for name in ("alpha", "gamma", "delta"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def r_max(self) -> float:
        return self.beta


@dataclass(frozen=True)
class RewardBreakdown:
    r_constraint: float
    r_quantity: float
    total: float
    counts: SatisfactionCounts


def _ratio(v: int, n: int) -> float:
    return v / n if n else 0.0


def constraint_reward(
    counts: SatisfactionCounts, totals: tuple[int, int, int], w: RewardWeights
) -> float:
    n_hard, n_pos, n_neg = totals
    return (
        -w.alpha * _ratio(counts.v_hard, n_hard)
        + w.beta * _ratio(counts.v_pos, n_pos)
        - w.gamma * _ratio(counts.v_neg, n_neg)
    )


def quantity_penalty(solution: DesignSolution, rec: Mapping[str, int]) -> float:
    return float(sum(abs(len(solution.selected(did)) - n) for did, n in rec.items()))


def combine(r_c: float, r_q: float, w: RewardWeights) -> float:
    return r_c + w.delta * r_q if w.additive_penalty else r_c - w.delta * r_q


def total_reward(
    space: DesignSpace,
    cs: ConstraintSet,
    solution: DesignSolution,
    w: RewardWeights | None = None,
) -> RewardBreakdown:
    w = w or RewardWeights()
    counts = evaluate(cs, solution)
    r_c = constraint_reward(counts, cs.totals, w)
    rec = recommended_counts(cs, space)
    r_q = quantity_penalty(solution, rec)
    return RewardBreakdown(r_c, r_q, combine(r_c, r_q, w), counts)
