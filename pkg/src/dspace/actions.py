"""Turn a design solution into an outcome by running bound actions and composing their parts.

A plan binds each action to the dimensions it consumes. Every action receives
the selected elements of its dimensions (dimension provenance kept on each
element) and returns either text or a mapping. Parts are composed with
``concat`` (text joined by a separator) or ``merge-keyed`` (mappings merged,
later keys win).
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Union

from .space import DesignSolution, DesignSpace, Element

COMPOSERS = ("concat", "merge-keyed")

Payload = Union[str, Mapping[str, Any]]
ActionFn = Callable[[tuple[Element, ...], Mapping[str, Any]], Payload]


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class ActionSpec:
    action_name: str
    dimension_ids: tuple[str, ...]
    parameters: Mapping[str, Any] = field(default_factory=dict)
    key: str | None = None  # slot name under merge-keyed; defaults to action_name

    @property
    def slot(self) -> str:
        return self.key or self.action_name


@dataclass(frozen=True)
class ActionPlan:
    actions: tuple[ActionSpec, ...]
    composer: str = "concat"
    separator: str = "\n"

    def __post_init__(self) -> None:
        if self.composer not in COMPOSERS:
            raise PlanError(f"unknown composer {self.composer!r}, expected one of {COMPOSERS}")


@dataclass(frozen=True)
class OutcomePart:
    action_name: str
    payload: Payload


@dataclass
class Outcome:
    parts: list[OutcomePart]
    composed: Payload | None
    failed: bool = False
    failed_action: str | None = None
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "parts": [{"action_name": p.action_name, "payload": _plain(p.payload)} for p in self.parts],
            "composed": _plain(self.composed),
            "failed": self.failed,
            "failed_action": self.failed_action,
            "error": self.error,
        }


def _plain(payload: Payload | None) -> Any:
    if isinstance(payload, Mapping):
        return {k: _plain(v) for k, v in payload.items()}
    return payload


class ActionRegistry:
    """Name to action function; read-only once built."""

    def __init__(self, actions: Mapping[str, ActionFn] | None = None):
        self._actions = MappingProxyType(dict(actions or {}))

    def __contains__(self, name: object) -> bool:
        return name in self._actions

    def get(self, name: str) -> ActionFn:
        try:
            return self._actions[name]
        except KeyError:
            raise PlanError(f"action {name!r} is not registered") from None

    def names(self) -> list[str]:
        return sorted(self._actions)

    def extended(self, **actions: ActionFn) -> ActionRegistry:
        """A new registry with extra actions; this one is left untouched."""
        merged = dict(self._actions)
        merged.update(actions)
        return ActionRegistry(merged)


# -- built-in action ---------------------------------------------------------


def template_render(elements: tuple[Element, ...], params: Mapping[str, Any]) -> Payload:
    """Fill ``{dimension_id}`` placeholders with the labels selected in that dimension.

    Labels of a multi-select dimension are joined with ``", "`` (or the
    ``joiner`` parameter). ``{elements}`` expands to every label. With a
    ``key`` parameter the text is returned as ``{key: text}``.
    """
    template = params.get("template")
    if not isinstance(template, str):
        raise PlanError("template_render needs a string 'template' parameter")
    joiner = params.get("joiner", ", ")
    by_dim: dict[str, list[str]] = {}
    for el in elements:
        by_dim.setdefault(el.dimension_id, []).append(el.label)
    values = {did: joiner.join(labels) for did, labels in by_dim.items()}
    values["elements"] = joiner.join(el.label for el in elements)
    names = [f for _, f, _, _ in string.Formatter().parse(template) if f is not None]
    missing = sorted({n for n in names if n not in values})
    if missing:
        raise PlanError(f"template refers to unbound placeholder(s): {', '.join(missing)}")
    text = template.format_map(values)
    key = params.get("key")
    return {key: text} if key else text


def default_registry() -> ActionRegistry:
    return ActionRegistry({"template_render": template_render})


# -- plan files ----------------------------------------------------------------


def plan_from_dict(doc: Mapping[str, Any]) -> ActionPlan:
    if not isinstance(doc, Mapping):
        raise PlanError("plan must be a JSON object")
    raw_actions = doc.get("actions", [])
    if not isinstance(raw_actions, list):
        raise PlanError("'actions' must be a list")
    actions = []
    for i, item in enumerate(raw_actions):
        if not isinstance(item, Mapping):
            raise PlanError(f"actions[{i}] must be an object")
        name = item.get("action_name", item.get("name"))
        if not isinstance(name, str) or not name:
            raise PlanError(f"actions[{i}] is missing 'action_name'")
        dims = item.get("dimension_ids", [])
        if not isinstance(dims, list) or not all(isinstance(d, str) for d in dims):
            raise PlanError(f"actions[{i}].dimension_ids must be a list of strings")
        params = item.get("parameters", {})
        if not isinstance(params, Mapping):
            raise PlanError(f"actions[{i}].parameters must be an object")
        actions.append(ActionSpec(name, tuple(dims), dict(params), item.get("key")))
    return ActionPlan(
        tuple(actions),
        doc.get("composer", "concat"),
        doc.get("separator", "\n"),
    )


def plan_to_dict(plan: ActionPlan) -> dict[str, Any]:
    actions = []
    for a in plan.actions:
        item: dict[str, Any] = {
            "action_name": a.action_name,
            "dimension_ids": list(a.dimension_ids),
            "parameters": dict(a.parameters),
        }
        if a.key:
            item["key"] = a.key
        actions.append(item)
    return {"actions": actions, "composer": plan.composer, "separator": plan.separator}


def load_plan(path: str | Path) -> ActionPlan:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise PlanError(f"{path}: cannot read ({exc})") from None
    except json.JSONDecodeError as exc:
        raise PlanError(f"{path}: invalid JSON ({exc})") from None
    return plan_from_dict(doc)


def validate_plan(plan: ActionPlan, space: DesignSpace, registry: ActionRegistry | None = None) -> list[str]:
    """Problems with the plan: unknown dimensions or actions, and uncovered dimensions."""
    problems = []
    covered: set[str] = set()
    for a in plan.actions:
        if registry is not None and a.action_name not in registry:
            problems.append(f"action {a.action_name!r} is not registered")
        for did in a.dimension_ids:
            if did not in space:
                problems.append(f"action {a.action_name!r} refers to unknown dimension {did!r}")
            covered.add(did)
    for dim in space.dimensions:
        if dim.dimension_id not in covered:
            problems.append(f"dimension {dim.dimension_id!r} is not bound to any action")
    return problems


# -- execution -----------------------------------------------------------------


def gather_elements(
    plan: ActionPlan, space: DesignSpace, solution: DesignSolution
) -> list[tuple[Element, ...]]:
    """Per action, the selected elements of its dimensions in space order."""
    out = []
    for a in plan.actions:
        for did in a.dimension_ids:
            if did not in space:
                raise PlanError(f"action {a.action_name!r} refers to unknown dimension {did!r}")
        wanted = set(a.dimension_ids)
        elements = []
        for dim in space.dimensions:
            if dim.dimension_id not in wanted:
                continue
            chosen = solution.selected(dim.dimension_id)
            elements.extend(el for el in dim.elements if el.element_id in chosen)
        out.append(tuple(elements))
    return out


def compose(plan: ActionPlan, parts: Iterable[OutcomePart]) -> Payload:
    parts = list(parts)
    if plan.composer == "concat":
        texts = [
            p.payload if isinstance(p.payload, str) else json.dumps(_plain(p.payload), sort_keys=True)
            for p in parts
        ]
        return plan.separator.join(texts)
    slots = {a.action_name: a.slot for a in plan.actions}
    merged: dict[str, Any] = {}
    for p in parts:
        if isinstance(p.payload, Mapping):
            merged.update(p.payload)
        else:
            merged[slots.get(p.action_name, p.action_name)] = p.payload
    return merged


def execute_plan(
    plan: ActionPlan,
    space: DesignSpace,
    solution: DesignSolution,
    registry: ActionRegistry | None = None,
) -> Outcome:
    registry = registry or default_registry()
    element_sets = gather_elements(plan, space, solution)
    parts: list[OutcomePart] = []
    for spec, elements in zip(plan.actions, element_sets):
        params = dict(spec.parameters)
        try:
            fn = registry.get(spec.action_name)
            payload = fn(elements, params)
        except Exception as exc:  # the failing action is reported, the rest skipped
            return Outcome(parts, None, True, spec.action_name, f"{type(exc).__name__}: {exc}")
        if spec.key and isinstance(payload, str) and plan.composer == "merge-keyed":
            payload = {spec.key: payload}
        parts.append(OutcomePart(spec.action_name, payload))
    if not parts:
        return Outcome([], None)
    return Outcome(parts, compose(plan, parts))
