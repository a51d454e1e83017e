from __future__ import annotations

import csv
import random
from statistics import fmean

import pytest
from hypothesis import given, settings, strategies as st

from dspace import bench
from dspace.bench import (
    BenchSpec,
    GenerationError,
    NoiseParams,
    exhaustive_optimum,
    generate_constraint_set,
    generated_sets,
    load_bench_spec,
    load_raw,
    run_bench,
    sample_target,
    write_report,
)
from dspace.builtin import narrative_space, toy_listing_space
from dspace.constraints import RuleKind, parse_constraints
from dspace.reward import total_reward
from dspace.space import DesignSolution, validate_solution

from oracles import all_selections, brute_optimum, random_space


def test_target_scores_rmax_and_is_optimal():
    space = toy_listing_space()
    target = sample_target(space, random.Random(0))
    cs = generate_constraint_set(space, target, seed=3)
    assert total_reward(space, cs, target).total == 10.0
    assert brute_optimum(space, cs) == 10.0


def test_zero_noise_gives_only_soft_positive_rules():
    space = narrative_space()
    target = sample_target(space, random.Random(1))
    cs = generate_constraint_set(space, target, NoiseParams.zero(), seed=0)
    assert cs.rules and all(r.kind is RuleKind.SOFT_POSITIVE for r in cs.rules)


def test_noise_rules_never_fire_on_target():
    space = narrative_space()
    target = sample_target(space, random.Random(2))
    cs = generate_constraint_set(space, target, seed=5)
    counts = total_reward(space, cs, target).counts
    assert counts.v_hard == 0 and counts.v_neg == 0
    assert len(cs.of_kind(RuleKind.HARD)) == 3 and len(cs.of_kind(RuleKind.SOFT_NEGATIVE)) == 3


def test_invalid_target_rejected():
    with pytest.raises(GenerationError):
        generate_constraint_set(toy_listing_space(), DesignSolution.of(D1="e11"))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**9))
def test_generated_optimum_matches_oracle(seed):
    rng = random.Random(seed)
    space = random_space(rng, max_dims=3, max_elems=4, max_multi=1, min_dims=2)
    target = sample_target(space, rng)
    assert validate_solution(space, target) == []
    try:
        cs = generate_constraint_set(space, target, seed=seed)
    except GenerationError:
        return  # tiny spaces may leave no room for noise that misses the target
    assert brute_optimum(space, cs) == 10.0
    assert exhaustive_optimum(space, cs) == 10.0
    best = {k: frozenset(v) for k, v in target.selections.items()}
    assert best in list(all_selections(space))


def test_generated_sets_are_deterministic():
    space = narrative_space()
    a = generated_sets(space, 3, seed=4)
    b = generated_sets(space, 3, seed=4)
    assert [n for n, _ in a] == ["set00", "set01", "set02"]
    assert [cs.rules for _, cs in a] == [cs.rules for _, cs in b]


def _small_spec(**kw):
    space = toy_listing_space()
    sets = generated_sets(space, 2, seed=0)
    return BenchSpec(space, sets, runs_per_cell=3, max_iterations=2000, **kw)


def test_seeds_are_distinct_per_run():
    spec = _small_spec()
    seeds = {spec.seed_for(i, r) for i in range(2) for r in range(3)}
    assert len(seeds) == 6
    report = run_bench(spec)
    per_algo = {}
    for rec in report.records:
        per_algo.setdefault(rec["algorithm"], []).append(rec["seed"])
    assert all(len(set(s)) == len(s) == 6 for s in per_algo.values())


def test_report_means_equal_raw_means(tmp_path):
    report = run_bench(_small_spec())
    paths = write_report(report, tmp_path)
    raw = load_raw(paths["raw"])
    assert raw == [dict(sorted(r.items())) for r in report.records]
    for row in report.rows:
        cell = [r for r in raw if r["algorithm"] == row["algorithm"] and r["constraint_set"] == row["constraint_set"]]
        assert row["runs"] == len(cell) == 3
        assert row["best_reward"] == pytest.approx(fmean(r["best_reward"] for r in cell))
        if row["algorithm"] == "beam":
            assert row["conv_reward"] is None and row["validity_ratio"] is None
        else:
            assert row["validity_ratio"] == pytest.approx(fmean(r["validity_ratio"] for r in cell))
    with paths["report"].open(newline="") as fh:
        table = list(csv.reader(fh))
    assert table[0][-5:] == ["Best Reward", "Best Time(s)", "Conv. Reward", "Conv. Time(s)", "Validity Ratio"]
    beam = [r for r in table[1:] if r[0] == "beam"]
    assert beam and all(r[-3:] == ["N/A"] * 3 for r in beam)
    assert paths["summary"].exists()


def test_failed_run_is_recorded(monkeypatch):
    real = bench.run_search

    def flaky(algorithm, *args, **kwargs):
        if algorithm == "sa":
            raise RuntimeError("boom")
        return real(algorithm, *args, **kwargs)

    monkeypatch.setattr(bench, "run_search", flaky)
    report = run_bench(_small_spec())
    failed = [r for r in report.records if "error" in r]
    assert failed and all(r["algorithm"] == "sa" and r["error"] == "RuntimeError: boom" for r in failed)
    row = report.row("sa", "set00")
    assert row["runs"] == 0 and row["failures"] == 3 and row["best_reward"] is None
    assert report.row("ga", "set00")["runs"] == 3


def test_bundled_bench_spec_loads():
    from importlib import resources

    path = resources.files("dspace").joinpath("data/bench_medals.json")
    spec, doc = load_bench_spec(str(path))
    assert len(spec.constraint_sets) == 10 and spec.runs_per_cell == 10
    assert spec.space.dimension("fact_type").size == 10


def test_bench_spec_errors(tmp_path):
    path = tmp_path / "b.json"
    path.write_text('{"runs_per_cell": 1}')
    with pytest.raises(ValueError):
        load_bench_spec(path)
    with pytest.raises(ValueError):
        BenchSpec(toy_listing_space(), [], algorithms=("tabu",))
    with pytest.raises(ValueError):
        BenchSpec(toy_listing_space(), [], runs_per_cell=0)


def test_bench_spec_with_constraint_files(tmp_path):
    space = toy_listing_space()
    (tmp_path / "space.json").write_text(__import__("dspace.space", fromlist=["dump_space"]).dump_space(space))
    (tmp_path / "a.lp").write_text("soft_positive_constraint(x, 1) :- D1(x, e12).\n")
    (tmp_path / "b.json").write_text(
        '{"space": "space.json", "constraints": ["a.lp"], "algorithms": ["beam"], "runs_per_cell": 1}'
    )
    spec, _ = load_bench_spec(tmp_path / "b.json")
    report = run_bench(spec)
    assert report.row("beam", "a")["best_reward"] == pytest.approx(
        brute_optimum(space, parse_constraints("soft_positive_constraint(x, 1) :- D1(x, e12).", space))
    )
