"""Index-level view of a (space, constraints, weights) triple used by all searchers.

Solutions are handled as ``picks``: one sorted tuple of element indices per
dimension. Scoring goes through the rule kernel on a flat byte mask.
"""

from __future__ import annotations

import random
from typing import Sequence

from .. import kernels
from ..constraints import ConstraintSet, RuleKind, SatisfactionCounts, recommended_counts
from ..reward import RewardBreakdown, RewardWeights, combine, constraint_reward
from ..space import DesignSolution, DesignSpace, solution_from_indices

Picks = tuple[tuple[int, ...], ...]

_KIND_CODE = {RuleKind.HARD: 0, RuleKind.SOFT_POSITIVE: 1, RuleKind.SOFT_NEGATIVE: 2}


class Problem:
    def __init__(
        self,
        space: DesignSpace,
        cs: ConstraintSet,
        weights: RewardWeights | None = None,
        kernel_cls: type | None = None,
    ):
        self.space = space
        self.cs = cs
        self.weights = weights or RewardWeights()
        self.n_dims = len(space.dimensions)
        self.sizes = [d.size for d in space.dimensions]
        self.caps = [min(d.capacity, d.size) for d in space.dimensions]
        self.multi = [d.multi_select for d in space.dimensions]
        self.offsets = [0]
        for m in self.sizes:
            self.offsets.append(self.offsets[-1] + m)
        self.n_atoms = self.offsets[-1]
        self.totals = cs.totals

        lit_atom: list[int] = []
        lit_neg: list[int] = []
        rule_start = [0]
        rule_kind = []
        for rule in cs.rules:
            for lit in rule.body:
                d = space.dimension_index(lit.atom.dimension_id)
                e = space.dimensions[d].index_of(lit.atom.element_id)
                lit_atom.append(self.offsets[d] + e)
                lit_neg.append(1 if lit.negated else 0)
            rule_start.append(len(lit_atom))
            rule_kind.append(_KIND_CODE[rule.kind])
        rec = recommended_counts(cs, space)
        rec_dim = [space.dimension_index(did) for did in rec]
        rec_count = [rec[did] for did in rec]
        self.recommended = rec
        # hard rules grouped by every dimension they mention: (dim, element, negated) literals
        self.hard_by_dim: list[list[tuple[tuple[int, int, bool], ...]]] = [[] for _ in range(self.n_dims)]
        for rule in cs.of_kind(RuleKind.HARD):
            lits = tuple(
                (
                    space.dimension_index(lit.atom.dimension_id),
                    space.dimension(lit.atom.dimension_id).index_of(lit.atom.element_id),
                    lit.negated,
                )
                for lit in rule.body
            )
            for d in sorted({lit[0] for lit in lits}):
                self.hard_by_dim[d].append(lits)
        cls = kernel_cls or kernels.RuleKernel
        self.kernel = cls(lit_atom, lit_neg, rule_start, rule_kind, self.offsets, rec_dim, rec_count)

    # -- masks and scoring -------------------------------------------------

    def mask(self, picks: Sequence[Sequence[int]]) -> bytearray:
        buf = bytearray(self.n_atoms)
        offsets = self.offsets
        for d, idx in enumerate(picks):
            base = offsets[d]
            for i in idx:
                buf[base + i] = 1
        return buf

    def _total(self, raw: tuple[int, int, int, int]) -> float:
        counts = SatisfactionCounts(raw[0], raw[1], raw[2])
        r_c = constraint_reward(counts, self.totals, self.weights)
        return combine(r_c, float(raw[3]), self.weights)

    def score(self, picks: Sequence[Sequence[int]]) -> tuple[float, bool]:
        """Reward of a complete solution and whether it violates no hard rule."""
        raw = self.kernel.evaluate(self.mask(picks))
        return self._total(raw), raw[0] == 0

    def score_partial(self, picks: Sequence[Sequence[int]]) -> float:
        """Reward where rules touching an unassigned dimension count as unsatisfied."""
        return self._total(self.kernel.evaluate(self.mask(picks), True))

    def score_batch(self, population: Sequence[Sequence[Sequence[int]]]) -> list[tuple[float, bool]]:
        buf = bytearray()
        for picks in population:
            buf += self.mask(picks)
        return [(self._total(raw), raw[0] == 0) for raw in self.kernel.evaluate_batch(buf)]

    def breakdown(self, picks: Sequence[Sequence[int]]) -> RewardBreakdown:
        raw = self.kernel.evaluate(self.mask(picks))
        counts = SatisfactionCounts(raw[0], raw[1], raw[2])
        r_c = constraint_reward(counts, self.totals, self.weights)
        return RewardBreakdown(r_c, float(raw[3]), combine(r_c, float(raw[3]), self.weights), counts)

    def completes_hard(
        self, touched: int, open_dim: int, cur: tuple[int, ...], prefix: Picks
    ) -> bool:
        """Whether a hard rule mentioning dimension ``touched`` is now certainly fired.

        ``prefix`` holds closed dimensions, ``cur`` the open multi-select
        selection on ``open_dim``. A positive literal is settled once its
        element is chosen; a negated one only when its dimension is closed.
        """
        for lits in self.hard_by_dim[touched]:
            for d, e, neg in lits:
                if d < open_dim:
                    sel = prefix[d]
                    if (e in sel) == neg:
                        break
                elif d == open_dim and not neg:
                    if e not in cur:
                        break
                else:
                    break
            else:
                return True
        return False

    # -- conversions and sampling -----------------------------------------

    def to_solution(self, picks: Sequence[Sequence[int]]) -> DesignSolution:
        return solution_from_indices(self.space, picks)

    def random_option(self, d: int, rng: random.Random) -> tuple[int, ...]:
        m = self.sizes[d]
        if not self.multi[d]:
            return (rng.randrange(m),)
        k = rng.randint(1, self.caps[d])
        return tuple(sorted(rng.sample(range(m), k)))

    def random_picks(self, rng: random.Random) -> Picks:
        return tuple(self.random_option(d, rng) for d in range(self.n_dims))
