"""Structured design-space model: dimensions, elements and design solutions.

A design space is an ordered tuple of orthogonal dimensions. Each dimension
holds a finite, ordered list of elements; multi-select dimensions allow up to
``max_count`` simultaneous selections. A design solution picks a non-empty
element set for every dimension.

The JSON document format (``SCHEMA_VERSION`` 1)::

    {
      "schema_version": 1,
      "space_id": "narrative",
      "dimensions": [
        {"dimension_id": "headline", "label": "Headline",
         "multi_select": false, "max_count": 1,
         "elements": [{"element_id": "asking_a_question",
                       "label": "Asking a question",
                       "payload": {"field": "sales", "aggregation": "sum"}}]}
      ]
    }

``payload`` and ``max_count`` are optional. Identifiers must match
``IDENTIFIER_RE`` so they can appear unquoted in constraint rules.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping

SCHEMA_VERSION = 1
DEFAULT_MAX_COUNT = 3
IDENTIFIER_RE = re.compile(r"^[A-Za-z0-9_]+$")


class SpaceError(ValueError):
    """Raised for malformed space documents."""


class CapacityError(RuntimeError):
    """Raised when an enumeration would exceed its cap."""


@dataclass(frozen=True)
class Element:
    dimension_id: str
    element_id: str
    label: str
    payload: tuple[tuple[str, str], ...] | None = None

    def payload_dict(self) -> dict[str, str] | None:
        return None if self.payload is None else dict(self.payload)


@dataclass(frozen=True)
class Dimension:
    dimension_id: str
    label: str
    elements: tuple[Element, ...]
    multi_select: bool = False
    max_count: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def capacity(self) -> int:
        """Largest legal selection size for this dimension."""
        return self.max_count if self.multi_select else 1

    def index_of(self, element_id: str) -> int:
        for i, element in enumerate(self.elements):
            if element.element_id == element_id:
                return i
        raise KeyError(element_id)

    def element_ids(self) -> list[str]:
        return [e.element_id for e in self.elements]

    def option_count(self) -> int:
        """Number of legal selection sets on this dimension."""
        m = len(self.elements)
        if not self.multi_select:
            return m
        return sum(math.comb(m, s) for s in range(1, min(self.max_count, m) + 1))


@dataclass(frozen=True)
class DesignSpace:
    space_id: str
    dimensions: tuple[Dimension, ...]
    _index: dict[str, int] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "dimensions", tuple(self.dimensions))
        index: dict[str, int] = {}
        for i, dim in enumerate(self.dimensions):
            index.setdefault(dim.dimension_id, i)
        object.__setattr__(self, "_index", index)

    def __contains__(self, dimension_id: object) -> bool:
        return dimension_id in self._index

    def dimension(self, dimension_id: str) -> Dimension:
        try:
            return self.dimensions[self._index[dimension_id]]
        except KeyError:
            raise KeyError(f"unknown dimension {dimension_id!r}") from None

    def dimension_index(self, dimension_id: str) -> int:
        return self._index[dimension_id]

    def has_element(self, dimension_id: str, element_id: str) -> bool:
        if dimension_id not in self._index:
            return False
        return any(e.element_id == element_id for e in self.dimension(dimension_id).elements)

    @property
    def n_elements(self) -> int:
        return sum(d.size for d in self.dimensions)

    def solution_count(self) -> int:
        return math.prod(d.option_count() for d in self.dimensions)


@dataclass(frozen=True)
class DesignSolution:
    """One selected element set per dimension."""

    selections: Mapping[str, frozenset[str]]

    def __post_init__(self) -> None:
        frozen = {k: frozenset(v) for k, v in self.selections.items()}
        object.__setattr__(self, "selections", frozen)

    def __hash__(self) -> int:
        return hash(frozenset(self.selections.items()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DesignSolution):
            return NotImplemented
        return dict(self.selections) == dict(other.selections)

    def selected(self, dimension_id: str) -> frozenset[str]:
        return self.selections.get(dimension_id, frozenset())

    @classmethod
    def of(cls, **selections: str | Iterable[str]) -> DesignSolution:
        """Shorthand: ``DesignSolution.of(headline="x", pattern=["a", "b"])``."""
        return cls({k: {v} if isinstance(v, str) else set(v) for k, v in selections.items()})


def validate_space(space: DesignSpace) -> list[str]:
    """Return human-readable invariant violations; empty when the space is well formed."""
    problems: list[str] = []
    if not IDENTIFIER_RE.match(space.space_id or ""):
        problems.append(f"space_id {space.space_id!r} is not a valid identifier")
    if not space.dimensions:
        problems.append("space has no dimensions")
    seen_dims: set[str] = set()
    for dim in space.dimensions:
        did = dim.dimension_id
        if not IDENTIFIER_RE.match(did or ""):
            problems.append(f"dimension {did!r}: invalid identifier")
        if did in seen_dims:
            problems.append(f"dimension {did!r}: duplicate dimension_id")
        seen_dims.add(did)
        if not dim.elements:
            problems.append(f"dimension {did!r}: has no elements")
        if dim.multi_select:
            if dim.max_count < 1:
                problems.append(f"dimension {did!r}: max_count {dim.max_count} must be positive")
            elif dim.elements and dim.max_count > len(dim.elements):
                problems.append(
                    f"dimension {did!r}: max_count {dim.max_count} exceeds its "
                    f"{len(dim.elements)} elements"
                )
        seen_elems: set[str] = set()
        for element in dim.elements:
            eid = element.element_id
            if not IDENTIFIER_RE.match(eid or ""):
                problems.append(f"dimension {did!r}: element {eid!r} has an invalid identifier")
            if eid in seen_elems:
                problems.append(f"dimension {did!r}: duplicate element {eid!r}")
            seen_elems.add(eid)
            if element.dimension_id != did:
                problems.append(
                    f"dimension {did!r}: element {eid!r} claims dimension {element.dimension_id!r}"
                )
            if element.payload is not None:
                for pair in element.payload:
                    if len(pair) != 2 or not all(isinstance(x, str) for x in pair):
                        problems.append(
                            f"dimension {did!r}: element {eid!r} payload must be string pairs"
                        )
                        break
    return problems


def validate_solution(space: DesignSpace, solution: DesignSolution) -> list[str]:
    problems: list[str] = []
    for did in solution.selections:
        if did not in space:
            problems.append(f"selection names unknown dimension {did!r}")
    for dim in space.dimensions:
        did = dim.dimension_id
        if did not in solution.selections:
            problems.append(f"dimension {did!r}: no selection")
            continue
        chosen = solution.selections[did]
        known = set(dim.element_ids())
        unknown = sorted(chosen - known)
        if unknown:
            problems.append(f"dimension {did!r}: unknown elements {unknown}")
        if not chosen:
            problems.append(f"dimension {did!r}: empty selection")
        elif len(chosen) > dim.capacity:
            kind = "multi-select" if dim.multi_select else "single-select"
            problems.append(
                f"dimension {did!r}: {len(chosen)} elements selected on a {kind} "
                f"dimension (max {dim.capacity})"
            )
    return problems


def dimension_options(dim: Dimension) -> Iterator[tuple[int, ...]]:
    """Legal selection sets of ``dim`` as sorted index tuples, size-major order."""
    if not dim.multi_select:
        for i in range(dim.size):
            yield (i,)
        return
    for s in range(1, min(dim.max_count, dim.size) + 1):
        yield from itertools.combinations(range(dim.size), s)


def enumerate_solutions(space: DesignSpace, cap: int) -> list[DesignSolution]:
    total = space.solution_count()
    if total > cap:
        raise CapacityError(f"space {space.space_id!r} has {total} solutions, cap is {cap}")
    per_dim = [list(dimension_options(d)) for d in space.dimensions]
    out = []
    for combo in itertools.product(*per_dim):
        out.append(solution_from_indices(space, combo))
    return out


def solution_from_indices(space: DesignSpace, picks: Iterable[Iterable[int]]) -> DesignSolution:
    selections = {}
    for dim, idx in zip(space.dimensions, picks):
        selections[dim.dimension_id] = frozenset(dim.elements[i].element_id for i in idx)
    return DesignSolution(selections)


def solution_to_indices(space: DesignSpace, solution: DesignSolution) -> list[tuple[int, ...]]:
    out = []
    for dim in space.dimensions:
        chosen = solution.selected(dim.dimension_id)
        out.append(tuple(i for i, e in enumerate(dim.elements) if e.element_id in chosen))
    return out


# -- serialization ---------------------------------------------------------


def space_to_dict(space: DesignSpace) -> dict[str, Any]:
    dims = []
    for dim in space.dimensions:
        elements = []
        for e in dim.elements:
            item: dict[str, Any] = {"element_id": e.element_id, "label": e.label}
            if e.payload is not None:
                item["payload"] = dict(e.payload)
            elements.append(item)
        dims.append(
            {
                "dimension_id": dim.dimension_id,
                "label": dim.label,
                "multi_select": dim.multi_select,
                "max_count": dim.max_count,
                "elements": elements,
            }
        )
    return {"schema_version": SCHEMA_VERSION, "space_id": space.space_id, "dimensions": dims}


def space_from_dict(doc: Mapping[str, Any]) -> DesignSpace:
    if not isinstance(doc, Mapping):
        raise SpaceError("space document must be a JSON object")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SpaceError(f"unsupported schema_version {version!r}")
    try:
        space_id = str(doc["space_id"])
        raw_dims = doc["dimensions"]
    except KeyError as exc:
        raise SpaceError(f"space document missing field {exc.args[0]!r}") from None
    dims = []
    for raw in raw_dims:
        try:
            did = str(raw["dimension_id"])
            raw_elements = raw["elements"]
        except (KeyError, TypeError) as exc:
            raise SpaceError(f"dimension entry missing field {exc}") from None
        elements = []
        for e in raw_elements:
            if "element_id" not in e:
                raise SpaceError(f"dimension {did!r}: element without element_id")
            payload = e.get("payload")
            if payload is not None:
                if not isinstance(payload, Mapping):
                    raise SpaceError(f"dimension {did!r}: payload must be an object")
                payload = tuple((str(k), str(v)) for k, v in payload.items())
            eid = str(e["element_id"])
            elements.append(Element(did, eid, str(e.get("label", eid)), payload))
        multi = bool(raw.get("multi_select", False))
        if "max_count" in raw:
            max_count = int(raw["max_count"])
        elif multi:
            max_count = min(DEFAULT_MAX_COUNT, max(len(elements), 1))
        else:
            max_count = 1
        dims.append(Dimension(did, str(raw.get("label", did)), tuple(elements), multi, max_count))
    return DesignSpace(space_id, tuple(dims))


def dump_space(space: DesignSpace) -> str:
    return json.dumps(space_to_dict(space), indent=2, ensure_ascii=False) + "\n"


def load_space(path: str | Path) -> DesignSpace:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SpaceError(f"{path}: invalid JSON ({exc})") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise SpaceError(f"{path}: cannot read ({exc})") from None
    return space_from_dict(doc)


def solution_to_dict(space: DesignSpace, solution: DesignSolution) -> dict[str, list[str]]:
    """Selections in space order, elements in declared order (stable output)."""
    out = {}
    for dim in space.dimensions:
        chosen = solution.selected(dim.dimension_id)
        out[dim.dimension_id] = [e.element_id for e in dim.elements if e.element_id in chosen]
    return out


def solution_from_dict(doc: Mapping[str, Iterable[str]]) -> DesignSolution:
    return DesignSolution({k: frozenset([v] if isinstance(v, str) else v) for k, v in doc.items()})


def make_dimension(
    dimension_id: str,
    label: str,
    elements: Iterable[tuple[str, str]],
    multi_select: bool = False,
    max_count: int | None = None,
) -> Dimension:
    """Build a dimension from ``(element_id, label)`` pairs."""
    elems = tuple(Element(dimension_id, eid, lab) for eid, lab in elements)
    if max_count is None:
        max_count = min(DEFAULT_MAX_COUNT, max(len(elems), 1)) if multi_select else 1
    return Dimension(dimension_id, label, elems, multi_select, max_count)
