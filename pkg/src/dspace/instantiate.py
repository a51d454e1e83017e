"""Build the six-dimension data-fact space from a CSV file."""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .builtin import slug
from .space import DEFAULT_MAX_COUNT, Dimension, DesignSpace, Element

FACT_TYPES = (
    "Value",
    "Difference",
    "Proportion",
    "Trend",
    "Categorization",
    "Distribution",
    "Rank",
    "Association",
    "Extreme",
    "Outlier",
)
TITLE_STYLES = (
    "Data highlighting",
    "Stating an issue",
    "Making an evaluation or judgment",
    "Asking a question",
)
AGGREGATIONS = ("sum", "mean", "max", "min", "count")
DEFAULT_VALUE_CAP = 20

_YEAR_RE = re.compile(r"^\d{4}$")
_DATE_RE = re.compile(r"^\d{4}-\d{2}(-\d{2}([T ]\d{2}:\d{2}(:\d{2}(\.\d+)?)?(Z|[+-]\d{2}:?\d{2})?)?)?$")


class IngestionError(ValueError):
    pass


@dataclass(frozen=True)
class ColumnProfile:
    name: str
    kind: str  # "categorical" | "temporal" | "numerical"
    distinct: tuple[str, ...]  # first-appearance order, non-empty cells only


@dataclass(frozen=True)
class DatasetProfile:
    columns: tuple[ColumnProfile, ...]
    row_count: int

    def of_kind(self, *kinds: str) -> list[ColumnProfile]:
        return [c for c in self.columns if c.kind in kinds]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def infer_kind(values: list[str]) -> str:
    """Temporal beats numerical, so a column of 4-digit years is temporal."""
    cells = [v for v in values if v != ""]
    if not cells:
        return "categorical"
    if all(_YEAR_RE.match(v) or _DATE_RE.match(v) for v in cells):
        return "temporal"
    if all(_is_number(v) for v in cells):
        return "numerical"
    return "categorical"


def profile_rows(header: list[str], rows: list[list[str]]) -> DatasetProfile:
    columns = []
    for j, name in enumerate(header):
        values = [row[j].strip() for row in rows]
        distinct = tuple(dict.fromkeys(v for v in values if v != ""))
        columns.append(ColumnProfile(name.strip(), infer_kind(values), distinct))
    return DatasetProfile(tuple(columns), len(rows))


def profile_dataset(csv_path: str | Path) -> DatasetProfile:
    path = Path(csv_path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"{path}: cannot read ({exc})") from None
    rows = [r for r in csv.reader(text.splitlines()) if r]
    if not rows:
        raise IngestionError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if any(not h.strip() for h in header):
        raise IngestionError(f"{path}: header has an empty column name")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise IngestionError(
                f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
            )
    return profile_rows(header, body)


def _unique_id(base: str, taken: set[str]) -> str:
    eid, k = base, 2
    while eid in taken:
        eid = f"{base}_{k}"
        k += 1
    taken.add(eid)
    return eid


def _fixed(did: str, label: str, labels: tuple[str, ...]) -> Dimension:
    return Dimension(did, label, tuple(Element(did, slug(x), x) for x in labels))


def _value_dimension(did: str, label: str, fields, value_cap: int) -> Dimension:
    taken: set[str] = set()
    elements = []
    for col in fields:
        for value in col.distinct[:value_cap]:
            eid = _unique_id(f"{slug(col.name)}_{slug(value)}", taken)
            payload = (("field", col.name), ("value", value))
            elements.append(Element(did, eid, f"({col.name}, {value})", payload))
    return Dimension(did, label, tuple(elements), True, min(DEFAULT_MAX_COUNT, len(elements)))


def build_fact_space(
    profile: DatasetProfile,
    value_cap: int = DEFAULT_VALUE_CAP,
    space_id: str = "data_fact",
) -> DesignSpace:
    groupable = profile.of_kind("categorical", "temporal")
    numerical = profile.of_kind("numerical")
    missing = []
    if not groupable:
        missing.append("categorical/temporal")
    if not numerical:
        missing.append("numerical")
    if missing:
        raise IngestionError(f"dataset needs at least one {' and one '.join(missing)} column")
    if value_cap < 1:
        raise ValueError("value_cap must be positive")

    taken: set[str] = set()
    breakdown = Dimension(
        "breakdown",
        "Breakdown",
        tuple(Element("breakdown", _unique_id(slug(c.name), taken), c.name) for c in groupable),
    )
    taken = set()
    measures = []
    for col in numerical:
        for agg in AGGREGATIONS:
            eid = _unique_id(f"{slug(col.name)}_{agg}", taken)
            payload = (("field", col.name), ("aggregation", agg))
            measures.append(Element("measure", eid, f"({col.name}, {agg})", payload))
    measure = Dimension("measure", "Measure", tuple(measures), True, min(DEFAULT_MAX_COUNT, len(measures)))
    return DesignSpace(
        space_id,
        (
            _fixed("fact_type", "Fact Type", FACT_TYPES),
            breakdown,
            measure,
            _value_dimension("subspace", "Subspace", groupable, value_cap),
            _value_dimension("focus", "Focus", groupable, value_cap),
            _fixed("visualization_title", "Visualization Title", TITLE_STYLES),
        ),
    )
