"""Command line entry point: validate, instantiate, gen-constraints, solve, bench.

Stages talk through files (space JSON, rule text, solution JSON) so each one
can be run and tested on its own. ``--json`` prints exactly one JSON document
on stdout; warnings and errors always go to stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

from . import __version__

COMMANDS = ("validate", "instantiate", "gen-constraints", "solve", "bench")


@dataclass
class CommandResult:
    exit_code: int
    stdout: str = ""
    diagnostics: list[str] = field(default_factory=list)


class UsageError(Exception):
    pass


def _dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False)


def _write(path: str | Path, text: str) -> None:
    path = Path(path)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def _prefix(exc: BaseException) -> str:
    module = type(exc).__module__
    if module.startswith("dspace."):
        return module.split(".")[1]
    return "error"


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset here
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="emit one JSON document on stdout")

    parser = argparse.ArgumentParser(
        prog="dspace",
        description="Design-space exploration: constraint rules, reward, and tree search.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--json", action="store_true", help="emit one JSON document on stdout")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("validate", parents=[common], help="check a space (and optional rules, solution, plan)")
    p.add_argument("--space", required=True)
    p.add_argument("--constraints")
    p.add_argument("--solution", help="solution JSON (a solve output or a bare selection map)")
    p.add_argument("--plan")

    p = sub.add_parser("instantiate", parents=[common], help="build the data-fact space from a CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--value-cap", type=int, default=20)
    p.add_argument("--space-id", default="data_fact")

    p = sub.add_parser("gen-constraints", parents=[common], help="produce a rule file from a provider")
    p.add_argument("--space", required=True)
    p.add_argument("--provider", required=True, help="provider config JSON")
    p.add_argument("--requirement", help="text, or @file to read it from a file")
    p.add_argument("--context", help="file holding contextual information")
    p.add_argument("--pack", help="domain pack JSON (default: bundled pack)")
    p.add_argument("--cache", help="directory for cached responses")
    p.add_argument("--strict", action="store_true", help="fail on any dropped rule")
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", parents=[common], help="search a space, optionally run an action plan")
    p.add_argument("--space", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--constraints")
    src.add_argument("--provider", help="provider config JSON")
    p.add_argument("--requirement", help="llm provider only: text or @file")
    p.add_argument("--context", help="llm provider only")
    p.add_argument("--pack", help="llm provider only")
    p.add_argument("--cache", help="llm provider only")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--algo", choices=("mcts", "ga", "sa", "beam"), default="mcts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--c", type=float, default=5.0, help="UCT exploration constant")
    p.add_argument("--max-iters", type=int, default=20_000)
    p.add_argument("--alpha", type=float, default=20.0)
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--no-prune", action="store_true", help="disable hard-rule pruning in MCTS")
    p.add_argument("--no-trace", action="store_true", help="omit the reward trace")
    p.add_argument("--plan", help="action plan JSON to execute on the best solution")
    p.add_argument("--out", help="write the solution document here")
    p.add_argument("--outcome", help="write the action outcome document here")

    p = sub.add_parser("bench", parents=[common], help="run the benchmark protocol")
    p.add_argument("--spec", required=True)
    p.add_argument("--out-dir", help="default: the spec's out_dir, else ./bench_out")
    p.add_argument("--workers", type=int)
    p.add_argument("--runs", type=int, help="override runs_per_cell")
    return parser


# -- commands ----------------------------------------------------------------------


def _read_requirement(value: str | None) -> str:
    if not value:
        raise UsageError("--requirement is needed for an llm provider")
    if value.startswith("@"):
        return Path(value[1:]).read_text(encoding="utf-8")
    return value


def _cmd_validate(args, diag: list[str]) -> tuple[int, Any, str]:
    from .actions import default_registry, load_plan, validate_plan
    from .constraints import load_constraints
    from .space import load_space, solution_from_dict, validate_solution

    space = load_space(args.space)
    violations: list[str] = []
    if args.constraints:
        load_constraints(args.constraints, space)
    if args.solution:
        doc = json.loads(Path(args.solution).read_text(encoding="utf-8"))
        selections = doc.get("best_solution", doc) if isinstance(doc, dict) else doc
        violations += validate_solution(space, solution_from_dict(selections))
    if args.plan:
        violations += validate_plan(load_plan(args.plan), space, default_registry())
    n = len(violations)
    text = "\n".join([f"{n} violations", *violations])
    return (0 if n == 0 else 1), {"violations": violations, "count": n}, text


def _cmd_instantiate(args, diag: list[str]) -> tuple[int, Any, str]:
    from .instantiate import build_fact_space, profile_dataset
    from .space import dump_space, validate_space

    space = build_fact_space(profile_dataset(args.data), args.value_cap, args.space_id)
    problems = validate_space(space)
    if problems:
        diag.extend(problems)
        return 1, {"violations": problems}, "\n".join(problems)
    _write(args.out, dump_space(space))
    doc = {
        "space_id": space.space_id,
        "out": str(args.out),
        "dimensions": {d.dimension_id: d.size for d in space.dimensions},
        "solution_count": space.solution_count(),
    }
    sizes = ", ".join(f"{k}={v}" for k, v in doc["dimensions"].items())
    return 0, doc, f"wrote {args.out}: {sizes}"


def _constraints_from_provider(args, space, diag: list[str]):
    from .provider import assemble_prompt, fetch_with_warnings, load_domain_pack, load_provider_config

    config = load_provider_config(args.provider)
    bundle = None
    if config.kind == "llm":
        context = Path(args.context).read_text(encoding="utf-8") if args.context else None
        pack = load_domain_pack(args.pack)
        bundle = assemble_prompt(_read_requirement(args.requirement), context, space, pack)
    result = fetch_with_warnings(config, space, bundle, strict=args.strict, cache_dir=args.cache)
    diag.extend(f"provider: dropped rule: {w}" for w in result.warnings)
    return result


def _cmd_gen_constraints(args, diag: list[str]) -> tuple[int, Any, str]:
    from .constraints import serialize_constraints
    from .space import load_space

    space = load_space(args.space)
    result = _constraints_from_provider(args, space, diag)
    _write(args.out, serialize_constraints(result.constraints))
    cs = result.constraints
    doc = {
        "out": str(args.out),
        "rules": len(cs),
        "hard": cs.n_hard,
        "soft_positive": cs.n_pos,
        "soft_negative": cs.n_neg,
        "dropped": len(result.warnings),
        "cached": result.cached,
    }
    return 0, doc, f"wrote {len(cs)} rules to {args.out} ({len(result.warnings)} dropped)"


def _cmd_solve(args, diag: list[str]) -> tuple[int, Any, str]:
    from .actions import default_registry, execute_plan, load_plan, validate_plan
    from .constraints import load_constraints
    from .reward import RewardWeights
    from .search import SearchConfig, run_search
    from .search.problem import Problem
    from .space import load_space, solution_to_indices

    space = load_space(args.space)
    if args.constraints:
        cs = load_constraints(args.constraints, space)
    else:
        cs = _constraints_from_provider(args, space, diag).constraints
    weights = RewardWeights(args.alpha, args.beta, args.gamma, args.delta)
    config = SearchConfig(
        uct_c=args.c,
        window=args.window,
        epsilon=args.epsilon,
        max_iterations=args.max_iters,
        seed=args.seed,
        weights=weights,
        prune_hard=not args.no_prune,
    )
    plan = None
    if args.plan:
        plan = load_plan(args.plan)
        problems = validate_plan(plan, space, default_registry())
        if problems:
            raise UsageError("plan: " + "; ".join(problems))

    outcome = run_search(args.algo, space, cs, config)
    problem = Problem(space, cs, weights)
    br = problem.breakdown(solution_to_indices(space, outcome.best_solution))
    solution_doc = {"space_id": space.space_id, **outcome.to_dict(space, include_trace=not args.no_trace)}
    solution_doc["reward_breakdown"] = {
        "r_constraint": br.r_constraint,
        "r_quantity": br.r_quantity,
        "v_hard": br.counts.v_hard,
        "v_pos": br.counts.v_pos,
        "v_neg": br.counts.v_neg,
    }
    if args.out:
        _write(args.out, _dumps(solution_doc))

    outcome_doc = None
    code = 0
    if plan is not None:
        result = execute_plan(plan, space, outcome.best_solution, default_registry())
        outcome_doc = result.to_dict()
        if result.failed:
            diag.append(f"actions: {result.failed_action} failed: {result.error}")
            code = 1
        if args.outcome:
            _write(args.outcome, _dumps(outcome_doc))

    doc = {"solution": solution_doc}
    if outcome_doc is not None:
        doc["outcome"] = outcome_doc
    chosen = "; ".join(f"{k}={','.join(v)}" for k, v in solution_doc["best_solution"].items())
    lines = [
        f"{args.algo}: best reward {outcome.best_reward:.4f} at iteration {outcome.best_iteration}"
        f" ({outcome.stop_reason} after {outcome.iterations_run})",
        chosen,
    ]
    if outcome_doc is not None and isinstance(outcome_doc["composed"], str):
        lines.append(outcome_doc["composed"])
    elif outcome_doc is not None and outcome_doc["composed"] is not None:
        lines.append(_dumps(outcome_doc["composed"]))
    return code, doc, "\n".join(lines)


def _fmt(v: Any) -> str:
    if v is None:
        return "N/A"
    return f"{v:.3f}" if isinstance(v, float) else str(v)


def _cmd_bench(args, diag: list[str]) -> tuple[int, Any, str]:
    from dataclasses import replace

    from .bench import load_bench_spec, run_bench, write_report

    spec, doc = load_bench_spec(args.spec)
    if args.workers is not None:
        spec = replace(spec, workers=args.workers)
    if args.runs is not None:
        spec = replace(spec, runs_per_cell=args.runs)
    out_dir = args.out_dir or doc.get("out_dir") or "bench_out"
    if not args.out_dir and doc.get("out_dir") and not Path(out_dir).is_absolute():
        out_dir = str(Path(args.spec).parent / out_dir)
    report = run_bench(spec)
    paths = write_report(report, out_dir)
    failures = [r for r in report.records if "error" in r]
    for r in failures:
        diag.append(f"bench: {r['algorithm']} {r['constraint_set']} run {r['run']}: {r['error']}")
    summary = report.summary()
    header = "algorithm  best_reward  best_time  conv_reward  conv_time  validity"
    rows = [
        f"{s['algorithm']:<10} {_fmt(s['best_reward']):>11} {_fmt(s['best_time']):>10} "
        f"{_fmt(s['conv_reward']):>12} {_fmt(s['conv_time']):>10} {_fmt(s['validity_ratio']):>9}"
        for s in summary
    ]
    out = {"paths": {k: str(v) for k, v in paths.items()}, "summary": summary, "failures": len(failures)}
    return 0, out, "\n".join([header, *rows, f"wrote {paths['report']}"])


_HANDLERS = {
    "validate": _cmd_validate,
    "instantiate": _cmd_instantiate,
    "gen-constraints": _cmd_gen_constraints,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
}


def dispatch(argv: Sequence[str] | None = None) -> CommandResult:
    parser = build_parser()
    out, err = io.StringIO(), io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(list(argv) if argv is not None else None)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        diags = [line for line in err.getvalue().splitlines() if line]
        return CommandResult(code, out.getvalue(), diags)
    if not args.command:
        return CommandResult(2, "", [parser.format_usage().strip(), "dspace: error: a command is required"])

    diag: list[str] = []
    try:
        code, doc, text = _HANDLERS[args.command](args, diag)
    except UsageError as exc:
        return CommandResult(2, "", diag + [f"{args.command}: {exc}"])
    except Exception as exc:  # module errors surface as prefixed messages
        return CommandResult(1, "", diag + [f"{_prefix(exc)}: {exc}"])
    stdout = _dumps(doc) + "\n" if getattr(args, "json", False) else (text + "\n" if text else "")
    return CommandResult(code, stdout, diag)


def main(argv: Sequence[str] | None = None) -> int:
    result = dispatch(argv)
    if result.stdout:
        sys.stdout.write(result.stdout)
    for line in result.diagnostics:
        print(line, file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
