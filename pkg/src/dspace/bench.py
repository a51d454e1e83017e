"""Benchmark harness: generated constraint sets with a known optimum, repeated
seeded runs per algorithm, and Table-3 style aggregate metrics.

Outputs ``raw.jsonl`` (one record per run) and ``report.csv`` (one row per
algorithm and constraint set), plus ``summary.csv`` averaging over sets.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Any, Iterable, Sequence

from .constraints import (
    Atom,
    ConstraintSet,
    Literal,
    Rule,
    RuleKind,
    load_constraints,
)
from .reward import RewardWeights, total_reward
from .search import ALGORITHMS, Problem, SearchConfig, run_search
from .space import (
    DesignSolution,
    DesignSpace,
    dimension_options,
    load_space,
    validate_solution,
)

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "Best Reward",
    "Best Time(s)",
    "Conv. Reward",
    "Conv. Time(s)",
    "Validity Ratio",
)
NOT_APPLICABLE = "N/A"
VERIFY_CAP = 200_000


class GenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseParams:
    n_hard: int = 3
    n_soft_negative: int = 3
    hard_body: tuple[int, int] = (2, 3)
    negative_body: tuple[int, int] = (1, 2)
    negation_prob: float = 0.15
    pair_prob: float = 0.3
    pin_prob: float = 1.0

    @classmethod
    def zero(cls) -> NoiseParams:
        return cls(n_hard=0, n_soft_negative=0)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> NoiseParams:
        doc = dict(doc)
        for key in ("hard_body", "negative_body"):
            if key in doc:
                doc[key] = tuple(doc[key])
        return cls(**doc)


def sample_target(space: DesignSpace, rng: random.Random) -> DesignSolution:
    picks = []
    for dim in space.dimensions:
        if dim.multi_select:
            k = rng.randint(1, min(dim.max_count, dim.size))
            picks.append(tuple(sorted(rng.sample(range(dim.size), k))))
        else:
            picks.append((rng.randrange(dim.size),))
    return DesignSolution(
        {
            dim.dimension_id: frozenset(dim.elements[i].element_id for i in idx)
            for dim, idx in zip(space.dimensions, picks)
        }
    )


def _pin_rules(
    space: DesignSpace,
    target: DesignSolution,
    pair_prob: float,
    pin_prob: float,
    rng: random.Random,
) -> list[list[Literal]]:
    """Soft-positive bodies that fire exactly when the target's elements are chosen."""
    singles: list[Literal] = []
    bodies: list[list[Literal]] = []
    for dim in space.dimensions:
        if pin_prob < 1.0 and rng.random() >= pin_prob:
            continue
        chosen = [e.element_id for e in dim.elements if e.element_id in target.selected(dim.dimension_id)]
        for eid in chosen:
            lit = Literal(Atom(dim.dimension_id, eid))
            if dim.multi_select:
                bodies.append([lit])
            else:
                singles.append(lit)
    rng.shuffle(singles)
    while singles:
        lit = singles.pop()
        if singles and rng.random() < pair_prob:
            bodies.append([lit, singles.pop()])
        else:
            bodies.append([lit])
    return bodies


def _noise_body(
    space: DesignSpace,
    target: DesignSolution,
    length_range: tuple[int, int],
    negation_prob: float,
    rng: random.Random,
) -> list[Literal] | None:
    n = len(space.dimensions)
    lo, hi = length_range
    for _ in range(100):
        length = rng.randint(min(lo, n), min(hi, n))
        dims = sorted(rng.sample(range(n), length))
        body = []
        for d in dims:
            dim = space.dimensions[d]
            element = dim.elements[rng.randrange(dim.size)]
            body.append(Literal(Atom(dim.dimension_id, element.element_id), rng.random() < negation_prob))
        if not all(lit.holds(target) for lit in body):
            return body
    return None


def generate_constraint_set(
    space: DesignSpace,
    target: DesignSolution,
    noise: NoiseParams | None = None,
    seed: int = 0,
    weights: RewardWeights | None = None,
    max_retries: int = 20,
) -> ConstraintSet:
    """Constraint set whose maximum reward (``beta``) is attained by ``target``."""
    problems = validate_solution(space, target)
    if problems:
        raise GenerationError(f"target is not a valid solution: {problems}")
    noise = noise or NoiseParams()
    weights = weights or RewardWeights()
    for attempt in range(max_retries):
        rng = random.Random(seed * 7919 + attempt)
        rules: list[Rule] = []
        seen: set[tuple[RuleKind, tuple[Literal, ...]]] = set()
        for k, body in enumerate(_pin_rules(space, target, noise.pair_prob, noise.pin_prob, rng), start=1):
            rules.append(Rule(RuleKind.SOFT_POSITIVE, k, tuple(body)))
        ok = True
        for kind, count, length in (
            (RuleKind.HARD, noise.n_hard, noise.hard_body),
            (RuleKind.SOFT_NEGATIVE, noise.n_soft_negative, noise.negative_body),
        ):
            k = 0
            while k < count:
                body = _noise_body(space, target, length, noise.negation_prob, rng)
                if body is None:
                    ok = False
                    break
                key = (kind, tuple(body))
                if key in seen:
                    continue
                seen.add(key)
                k += 1
                rules.append(Rule(kind, k, tuple(body)))
        if not ok:
            continue
        cs = ConstraintSet(tuple(rules))
        if verify_optimum(space, cs, target, weights):
            return cs
        log.debug("generated set failed verification on attempt %d", attempt)
    raise GenerationError(f"no verifiable constraint set after {max_retries} attempts")


def verify_optimum(
    space: DesignSpace,
    cs: ConstraintSet,
    target: DesignSolution,
    weights: RewardWeights | None = None,
    cap: int = VERIFY_CAP,
) -> bool:
    """Target scores ``beta`` and, when the space is small enough, nothing beats it."""
    weights = weights or RewardWeights()
    best = total_reward(space, cs, target, weights).total
    if best != weights.r_max:
        return False
    if space.solution_count() > cap:
        return True
    return exhaustive_optimum(space, cs, weights) <= best


def exhaustive_optimum(
    space: DesignSpace, cs: ConstraintSet, weights: RewardWeights | None = None,
) -> float:
    """Maximum reward over every solution, scored in batches through the kernel."""
    problem = Problem(space, cs, weights or RewardWeights())
    options = [list(dimension_options(d)) for d in space.dimensions]
    best = float("-inf")
    batch: list[tuple[tuple[int, ...], ...]] = []
    for combo in itertools.product(*options):
        batch.append(combo)
        if len(batch) == 4096:
            best = max(best, max(r for r, _ in problem.score_batch(batch)))
            batch = []
    if batch:
        best = max(best, max(r for r, _ in problem.score_batch(batch)))
    return best


# -- protocol -----------------------------------------------------------------


@dataclass
class BenchSpec:
    space: DesignSpace
    constraint_sets: list[tuple[str, ConstraintSet]]
    algorithms: tuple[str, ...] = ALGORITHMS
    runs_per_cell: int = 10
    base_seed: int = 0
    window: int = 100
    epsilon: float = 0.1
    max_iterations: int = 20_000
    weights: RewardWeights = field(default_factory=RewardWeights)
    workers: int = 1

    def __post_init__(self) -> None:
        if self.runs_per_cell < 1:
            raise ValueError("runs_per_cell must be at least 1")
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown:
            raise ValueError(f"unknown algorithms {unknown}")

    def seed_for(self, set_index: int, run: int) -> int:
        return self.base_seed + 1000 * set_index + run


@dataclass
class BenchReport:
    rows: list[dict[str, Any]]
    records: list[dict[str, Any]]

    def row(self, algorithm: str, constraint_set: str) -> dict[str, Any]:
        for r in self.rows:
            if r["algorithm"] == algorithm and r["constraint_set"] == constraint_set:
                return r
        raise KeyError((algorithm, constraint_set))

    def summary(self) -> list[dict[str, Any]]:
        """Per-algorithm means over all successful runs."""
        out = []
        for algorithm in dict.fromkeys(r["algorithm"] for r in self.records):
            runs = [r for r in self.records if r["algorithm"] == algorithm and "error" not in r]
            out.append({"algorithm": algorithm, "runs": len(runs), **_aggregate(algorithm, runs)})
        return out


def _metric_mean(runs: Sequence[dict[str, Any]], key: str) -> float | None:
    values = [r[key] for r in runs if r.get(key) is not None]
    return fmean(values) if values else None


def _aggregate(algorithm: str, runs: Sequence[dict[str, Any]]) -> dict[str, Any]:
    out = {
        "best_reward": _metric_mean(runs, "best_reward"),
        "best_time": _metric_mean(runs, "best_time"),
        "conv_reward": None,
        "conv_time": None,
        "validity_ratio": None,
    }
    if algorithm != "beam":
        out["conv_reward"] = _metric_mean(runs, "conv_reward")
        out["conv_time"] = _metric_mean(runs, "conv_time")
        out["validity_ratio"] = _metric_mean(runs, "validity_ratio")
    return out


def _run_one(job: tuple[DesignSpace, ConstraintSet, str, str, int, SearchConfig]) -> dict[str, Any]:
    space, cs, set_name, algorithm, run, config = job
    record: dict[str, Any] = {
        "algorithm": algorithm,
        "constraint_set": set_name,
        "run": run,
        "seed": config.seed,
    }
    try:
        outcome = run_search(algorithm, space, cs, config)
    except Exception as exc:  # a failed run is data, the bench continues
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record.update(
        best_reward=outcome.best_reward,
        best_time=round(outcome.best_time_seconds, 3),
        iterations=outcome.iterations_run,
        evaluated_count=outcome.evaluated_count,
        valid_count=outcome.valid_count,
        stop_reason=outcome.stop_reason,
        hit_rmax=outcome.hit_rmax,
    )
    if algorithm == "beam":
        record.update(conv_reward=None, conv_time=None, validity_ratio=None)
    else:
        record.update(
            conv_reward=outcome.convergence_reward,
            conv_time=round(outcome.convergence_time_seconds, 3),
            validity_ratio=outcome.validity_ratio,
        )
    return record


def run_bench(spec: BenchSpec, progress: bool = False) -> BenchReport:
    jobs = []
    for set_index, (name, cs) in enumerate(spec.constraint_sets):
        for algorithm in spec.algorithms:
            for run in range(spec.runs_per_cell):
                config = SearchConfig(
                    window=spec.window,
                    epsilon=spec.epsilon,
                    max_iterations=spec.max_iterations,
                    seed=spec.seed_for(set_index, run),
                    weights=spec.weights,
                )
                jobs.append((spec.space, cs, name, algorithm, run, config))
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        records = []
        for i, job in enumerate(jobs):
            records.append(_run_one(job))
            if progress and (i + 1) % 10 == 0:
                log.info("bench: %d/%d runs done", i + 1, len(jobs))
    rows = []
    for name, _ in spec.constraint_sets:
        for algorithm in spec.algorithms:
            cell = [r for r in records if r["algorithm"] == algorithm and r["constraint_set"] == name]
            ok = [r for r in cell if "error" not in r]
            rows.append(
                {
                    "algorithm": algorithm,
                    "constraint_set": name,
                    "runs": len(ok),
                    "failures": len(cell) - len(ok),
                    **_aggregate(algorithm, ok),
                }
            )
    return BenchReport(rows, records)


def _fmt(value: float | None) -> str:
    return NOT_APPLICABLE if value is None else f"{value:.6f}"


def _write_table(path: Path, rows: Iterable[dict[str, Any]], lead: Sequence[str]) -> None:
    keys = ("best_reward", "best_time", "conv_reward", "conv_time", "validity_ratio")
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([c.replace("_", " ").title() for c in lead] + list(REPORT_COLUMNS))
        for row in rows:
            writer.writerow([row[c] for c in lead] + [_fmt(row[k]) for k in keys])


def write_report(report: BenchReport, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "report": out / "report.csv",
        "summary": out / "summary.csv",
        "raw": out / "raw.jsonl",
    }
    _write_table(paths["report"], report.rows, ("algorithm", "constraint_set", "runs", "failures"))
    _write_table(paths["summary"], report.summary(), ("algorithm", "runs"))
    with paths["raw"].open("w", encoding="utf-8") as fh:
        for record in report.records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return paths


def load_raw(path: str | Path) -> list[dict[str, Any]]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines() if line]


# -- spec files ---------------------------------------------------------------


def load_bench_spec(path: str | Path) -> tuple[BenchSpec, dict[str, Any]]:
    """Read a JSON bench spec. Returns the spec and the raw document.

    Recognised keys: ``space`` (path) or ``dataset`` (CSV path, with optional
    ``value_cap``); ``constraints`` (list of paths) or ``generate``
    (``{"count", "seed", "noise"}``); ``algorithms``, ``runs_per_cell``,
    ``seed``, ``window``, ``epsilon``, ``max_iterations``, ``workers``,
    ``weights`` and ``out_dir``. Relative paths resolve against the spec file.
    """
    from .instantiate import DEFAULT_VALUE_CAP, build_fact_space, profile_dataset

    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    root = path.parent

    def resolve(p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else root / q

    if "space" in doc:
        space = load_space(resolve(doc["space"]))
    elif "dataset" in doc:
        profile = profile_dataset(resolve(doc["dataset"]))
        space = build_fact_space(profile, int(doc.get("value_cap", DEFAULT_VALUE_CAP)))
    else:
        raise ValueError("bench spec needs a 'space' or 'dataset' entry")
    weights = RewardWeights(**doc.get("weights", {}))

    sets: list[tuple[str, ConstraintSet]] = []
    if "constraints" in doc:
        for p in doc["constraints"]:
            sets.append((Path(p).stem, load_constraints(resolve(p), space)))
    if "generate" in doc:
        gen = doc["generate"]
        noise = NoiseParams.from_dict(gen.get("noise", {}))
        sets.extend(generated_sets(space, int(gen.get("count", 10)), int(gen.get("seed", 0)), noise, weights))
    if not sets:
        raise ValueError("bench spec has no constraint sets")
    spec = BenchSpec(
        space=space,
        constraint_sets=sets,
        algorithms=tuple(doc.get("algorithms", ALGORITHMS)),
        runs_per_cell=int(doc.get("runs_per_cell", 10)),
        base_seed=int(doc.get("seed", 0)),
        window=int(doc.get("window", 100)),
        epsilon=float(doc.get("epsilon", 0.1)),
        max_iterations=int(doc.get("max_iterations", 20_000)),
        weights=weights,
        workers=int(doc.get("workers", 1)),
    )
    return spec, doc


def generated_sets(
    space: DesignSpace,
    count: int,
    seed: int = 0,
    noise: NoiseParams | None = None,
    weights: RewardWeights | None = None,
) -> list[tuple[str, ConstraintSet]]:
    rng = random.Random(seed)
    out = []
    for i in range(count):
        target = sample_target(space, rng)
        cs = generate_constraint_set(space, target, noise, seed=seed * 1009 + i, weights=weights)
        out.append((f"set{i:02d}", cs))
    return out


def spec_as_dict(spec: BenchSpec) -> dict[str, Any]:
    return {
        "space_id": spec.space.space_id,
        "constraint_sets": [name for name, _ in spec.constraint_sets],
        "algorithms": list(spec.algorithms),
        "runs_per_cell": spec.runs_per_cell,
        "seed": spec.base_seed,
        "window": spec.window,
        "epsilon": spec.epsilon,
        "max_iterations": spec.max_iterations,
        "weights": asdict(spec.weights),
        "workers": spec.workers,
    }


__all__ = [
    "BenchReport",
    "BenchSpec",
    "GenerationError",
    "NoiseParams",
    "REPORT_COLUMNS",
    "exhaustive_optimum",
    "generate_constraint_set",
    "generated_sets",
    "load_bench_spec",
    "load_raw",
    "run_bench",
    "sample_target",
    "spec_as_dict",
    "verify_optimum",
    "write_report",
]
