from __future__ import annotations

import os
import random
import subprocess
import sys

import pytest
from hypothesis import given, settings, strategies as st

from dspace import kernels
from dspace.constraints import ConstraintSet, RuleKind
from dspace.search.problem import Problem

from oracles import random_rules, random_space

BACKENDS = kernels.available_backends()
needs_cython = pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernel not built")


def _random_masks(problem: Problem, rng: random.Random, n: int, partial: bool):
    out = []
    for _ in range(n):
        picks = list(problem.random_picks(rng))
        if partial:
            cut = rng.randint(0, problem.n_dims)
            picks = picks[:cut] + [()] * (problem.n_dims - cut)
        out.append(problem.mask(picks))
    return out


def _partial_oracle(problem: Problem, cs, mask) -> tuple[int, int, int, int]:
    """Rules touching an empty dimension are unsatisfied; r_q skips empty dims."""
    space = problem.space
    selected = {}
    for d, dim in enumerate(space.dimensions):
        base = problem.offsets[d]
        selected[dim.dimension_id] = {e.element_id for i, e in enumerate(dim.elements) if mask[base + i]}
    tally = {RuleKind.HARD: 0, RuleKind.SOFT_POSITIVE: 0, RuleKind.SOFT_NEGATIVE: 0}
    for rule in cs.rules:
        ok = True
        for lit in rule.body:
            chosen = selected[lit.atom.dimension_id]
            if not chosen or ((lit.atom.element_id in chosen) == lit.negated):
                ok = False
                break
        tally[rule.kind] += ok
    rq = 0
    for did, n in problem.recommended.items():
        if selected[did]:
            rq += abs(len(selected[did]) - n)
    return tally[RuleKind.HARD], tally[RuleKind.SOFT_POSITIVE], tally[RuleKind.SOFT_NEGATIVE], rq


def test_backend_selection():
    assert kernels.BACKEND in BACKENDS
    assert "python" in BACKENDS


def test_pure_python_env_forces_fallback():
    env = dict(os.environ, DSPACE_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "from dspace import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_python_kernel_matches_oracle(seed, partial):
    rng = random.Random(seed)
    space = random_space(rng, max_dims=5, max_elems=6, max_multi=2)
    cs = random_rules(rng, space)
    problem = Problem(space, cs, kernel_cls=kernels.PyRuleKernel)
    for mask in _random_masks(problem, rng, 20, partial):
        assert problem.kernel.evaluate(mask, partial) == _partial_oracle(problem, cs, mask)


@needs_cython
@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_backends_agree(seed, partial):
    rng = random.Random(seed)
    space = random_space(rng, max_dims=5, max_elems=6, max_multi=2)
    cs = random_rules(rng, space)
    py = Problem(space, cs, kernel_cls=BACKENDS["python"]).kernel
    cy = Problem(space, cs, kernel_cls=BACKENDS["cython"]).kernel
    masks = _random_masks(Problem(space, cs), rng, 30, partial)
    for mask in masks:
        assert py.evaluate(mask, partial) == cy.evaluate(mask, partial)
    buf = bytearray(b"".join(masks))
    assert py.evaluate_batch(buf, partial) == cy.evaluate_batch(buf, partial)


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_batch_equals_single(name):
    rng = random.Random(11)
    space = random_space(rng, max_dims=4, max_elems=5, max_multi=1, min_dims=2)
    cs = random_rules(rng, space, max_rules=15)
    problem = Problem(space, cs, kernel_cls=BACKENDS[name])
    masks = _random_masks(problem, rng, 50, False)
    batch = problem.kernel.evaluate_batch(bytearray(b"".join(masks)))
    assert batch == [problem.kernel.evaluate(m) for m in masks]


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_empty_rule_set(name):
    rng = random.Random(2)
    space = random_space(rng, min_dims=2)
    problem = Problem(space, ConstraintSet(), kernel_cls=BACKENDS[name])
    mask = problem.mask(problem.random_picks(rng))
    assert problem.kernel.evaluate(mask) == (0, 0, 0, 0)
    assert problem.kernel.evaluate_batch(bytearray()) == []
