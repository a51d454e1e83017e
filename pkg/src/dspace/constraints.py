"""Answer-set-style design constraints.

Rules are one per line::

    hard_constraint(x, 1) :- D1(x, e11).
    soft_positive_constraint(x, 2) :- D1(x, e13), D2(x, e21).
    soft_negative_constraint(x, 3) :- not D3(x, e31).

The head predicate selects the rule kind, ``x`` is the fixed design instance
symbol and the integer is the rule index. A body literal ``D(x, e)`` is true
when element ``e`` is selected on dimension ``D``; ``not`` negates it. Lines
starting with ``%`` are comments. Since solutions are complete assignments,
negation as failure is plain negation and there is no rule chaining.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .space import DesignSolution, DesignSpace


class ConstraintError(ValueError):
    pass


class ConstraintParseError(ConstraintError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConstraintBindingError(ConstraintError):
    def __init__(self, symbol: str, message: str, lineno: int | None = None):
        prefix = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{prefix}{message}")
        self.symbol = symbol
        self.lineno = lineno


class RuleKind(str, enum.Enum):
    HARD = "hard"
    SOFT_POSITIVE = "soft_positive"
    SOFT_NEGATIVE = "soft_negative"

    @property
    def head(self) -> str:
        return f"{self.value}_constraint"


_HEADS = {k.head: k for k in RuleKind}
_IDENT = r"[A-Za-z0-9_]+"
_LIT = rf"(?:(not)\s+)?({_IDENT})\s*\(\s*x\s*,\s*({_IDENT})\s*\)"
_LIT_RE = re.compile(_LIT)
_BODY_RE = re.compile(rf"\s*{_LIT}(?:\s*,\s*{_LIT})*\s*")
_RULE_RE = re.compile(
    rf"^\s*({_IDENT})\s*\(\s*x\s*,\s*(\d+)\s*\)\s*:-\s*(.*?)\s*\.\s*$"
)


@dataclass(frozen=True)
class Atom:
    dimension_id: str
    element_id: str

    def holds(self, solution: DesignSolution) -> bool:
        return self.element_id in solution.selected(self.dimension_id)


@dataclass(frozen=True)
class Literal:
    atom: Atom
    negated: bool = False

    def holds(self, solution: DesignSolution) -> bool:
        return self.atom.holds(solution) != self.negated

    def __str__(self) -> str:
        text = f"{self.atom.dimension_id}(x, {self.atom.element_id})"
        return f"not {text}" if self.negated else text


@dataclass(frozen=True)
class Rule:
    kind: RuleKind
    index: int
    body: tuple[Literal, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RuleKind(self.kind))
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise ConstraintError("rule body must contain at least one literal")

    def fires(self, solution: DesignSolution) -> bool:
        return all(lit.holds(solution) for lit in self.body)

    def __str__(self) -> str:
        return f"{self.kind.head}(x, {self.index}) :- {', '.join(map(str, self.body))}."


@dataclass(frozen=True)
class SatisfactionCounts:
    v_hard: int = 0
    v_pos: int = 0
    v_neg: int = 0


@dataclass(frozen=True)
class ConstraintSet:
    rules: tuple[Rule, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rules", tuple(self.rules))

    def __len__(self) -> int:
        return len(self.rules)

    def of_kind(self, kind: RuleKind) -> list[Rule]:
        return [r for r in self.rules if r.kind is kind]

    @property
    def n_hard(self) -> int:
        return len(self.of_kind(RuleKind.HARD))

    @property
    def n_pos(self) -> int:
        return len(self.of_kind(RuleKind.SOFT_POSITIVE))

    @property
    def n_neg(self) -> int:
        return len(self.of_kind(RuleKind.SOFT_NEGATIVE))

    @property
    def totals(self) -> tuple[int, int, int]:
        return self.n_hard, self.n_pos, self.n_neg


def parse_rule(line: str, lineno: int = 1) -> Rule | None:
    """Parse one line; ``None`` for blank and comment lines."""
    text = line.split("%", 1)[0]
    if not text.strip():
        return None
    m = _RULE_RE.match(text)
    if m is None:
        raise ConstraintParseError(lineno, f"not a rule: {line.strip()!r}")
    head, index, body = m.groups()
    if head not in _HEADS:
        raise ConstraintParseError(lineno, f"unknown rule head {head!r}")
    if not _BODY_RE.fullmatch(body):
        raise ConstraintParseError(lineno, f"malformed rule body {body!r}")
    literals = tuple(
        Literal(Atom(dim, elem), negated=bool(neg)) for neg, dim, elem in _LIT_RE.findall(body)
    )
    return Rule(_HEADS[head], int(index), literals)


def bind_rule(rule: Rule, space: DesignSpace, lineno: int | None = None) -> None:
    """Raise ConstraintBindingError if ``rule`` mentions symbols absent from ``space``."""
    for lit in rule.body:
        dim, elem = lit.atom.dimension_id, lit.atom.element_id
        if dim not in space:
            raise ConstraintBindingError(dim, f"unknown dimension {dim!r}", lineno)
        if not space.has_element(dim, elem):
            raise ConstraintBindingError(
                elem, f"unknown element {elem!r} in dimension {dim!r}", lineno
            )


def parse_constraints(text: str, space: DesignSpace | None = None) -> ConstraintSet:
    """Strictly parse a constraint document; any bad line raises."""
    rules: list[Rule] = []
    seen: set[tuple[RuleKind, int]] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        rule = parse_rule(line, lineno)
        if rule is None:
            continue
        key = (rule.kind, rule.index)
        if key in seen:
            raise ConstraintParseError(lineno, f"duplicate rule {rule.kind.head}(x, {rule.index})")
        seen.add(key)
        if space is not None:
            bind_rule(rule, space, lineno)
        rules.append(rule)
    return ConstraintSet(tuple(rules))


def parse_lenient(
    lines: Iterable[str], space: DesignSpace
) -> tuple[ConstraintSet, list[str]]:
    """Parse what can be parsed; every dropped line yields a warning string."""
    rules: list[Rule] = []
    warnings: list[str] = []
    seen: set[tuple[RuleKind, int]] = set()
    for lineno, line in enumerate(lines, start=1):
        try:
            rule = parse_rule(line, lineno)
            if rule is None:
                continue
            bind_rule(rule, space, lineno)
        except ConstraintError as exc:
            warnings.append(str(exc))
            continue
        key = (rule.kind, rule.index)
        if key in seen:
            warnings.append(f"line {lineno}: duplicate rule {rule.kind.head}(x, {rule.index})")
            continue
        seen.add(key)
        rules.append(rule)
    return ConstraintSet(tuple(rules)), warnings


def serialize_constraints(cs: ConstraintSet) -> str:
    """Canonical text, one rule per line (no trailing newline)."""
    return "\n".join(str(rule) for rule in cs.rules)


def evaluate(cs: ConstraintSet, solution: DesignSolution) -> SatisfactionCounts:
    counts = {RuleKind.HARD: 0, RuleKind.SOFT_POSITIVE: 0, RuleKind.SOFT_NEGATIVE: 0}
    for rule in cs.rules:
        if rule.fires(solution):
            counts[rule.kind] += 1
    return SatisfactionCounts(
        counts[RuleKind.HARD], counts[RuleKind.SOFT_POSITIVE], counts[RuleKind.SOFT_NEGATIVE]
    )


def recommended_counts(cs: ConstraintSet, space: DesignSpace) -> dict[str, int]:
    """Distinct positively-mentioned elements per multi-select dimension in soft-positive rules."""
    mentioned: dict[str, set[str]] = {}
    for rule in cs.of_kind(RuleKind.SOFT_POSITIVE):
        for lit in rule.body:
            did = lit.atom.dimension_id
            if lit.negated or did not in space or not space.dimension(did).multi_select:
                continue
            mentioned.setdefault(did, set()).add(lit.atom.element_id)
    return {
        d.dimension_id: len(mentioned[d.dimension_id])
        for d in space.dimensions
        if d.dimension_id in mentioned
    }


def load_constraints(path: str | Path, space: DesignSpace | None = None) -> ConstraintSet:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConstraintError(f"{path}: cannot read ({exc})") from None
    return parse_constraints(text, space)
