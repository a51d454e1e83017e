from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from dspace.instantiate import (
    FACT_TYPES,
    IngestionError,
    build_fact_space,
    infer_kind,
    profile_dataset,
    profile_rows,
)
from dspace.space import dump_space, validate_space

FACT_TYPE_LABELS = [
    "Value", "Difference", "Proportion", "Trend", "Categorization",
    "Distribution", "Rank", "Association", "Extreme", "Outlier",
]


def write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_kind_inference_examples():
    assert infer_kind([str(y) for y in range(2014, 2025)]) == "temporal"
    assert infer_kind(["Seattle", "Vancouver"]) == "categorical"
    assert infer_kind(["12", "n/a"]) == "categorical"
    assert infer_kind(["1.5", "-2", "3e4"]) == "numerical"
    assert infer_kind(["2020-01-05", "2021-12-31"]) == "temporal"
    assert infer_kind(["", ""]) == "categorical"


def test_two_categorical_one_numerical():
    profile = profile_rows(["city", "shop", "sales"], [["a", "x", "1"], ["b", "y", "2"], ["a", "z", "3"]])
    space = build_fact_space(profile)
    assert space.dimension("breakdown").size == 2
    assert space.dimension("measure").size == 5
    assert [e.label for e in space.dimension("fact_type").elements] == FACT_TYPE_LABELS
    assert space.dimension("subspace").size == 2 + 3
    assert space.dimension("focus").size == space.dimension("subspace").size
    assert validate_space(space) == []


def test_measure_payloads():
    profile = profile_rows(["city", "sales"], [["a", "1"]])
    measure = build_fact_space(profile).dimension("measure")
    assert [e.payload_dict() for e in measure.elements][0] == {"field": "sales", "aggregation": "sum"}
    assert measure.multi_select
    sub = build_fact_space(profile).dimension("subspace").elements[0]
    assert sub.payload_dict() == {"field": "city", "value": "a"}


def test_missing_numerical_is_an_error():
    with pytest.raises(IngestionError, match="numerical"):
        build_fact_space(profile_rows(["city"], [["a"]]))
    with pytest.raises(IngestionError, match="categorical"):
        build_fact_space(profile_rows(["sales"], [["1"]]))


def test_value_cap():
    rows = [[f"c{i}", str(i)] for i in range(30)]
    space = build_fact_space(profile_rows(["city", "sales"], rows), value_cap=20)
    assert space.dimension("subspace").size == 20
    assert build_fact_space(profile_rows(["city", "sales"], rows), value_cap=7).dimension("focus").size == 7


def test_ingestion_errors(tmp_path):
    with pytest.raises(IngestionError):
        profile_dataset(tmp_path / "missing.csv")
    with pytest.raises(IngestionError):
        profile_dataset(write(tmp_path, ""))
    with pytest.raises(IngestionError, match="row 3"):
        profile_dataset(write(tmp_path, "a,b\n1,2\n3\n"))


def test_profile_is_deterministic(tmp_path):
    path = write(tmp_path, "country,year,medals\nuk,2016,3\nus,2012,5\nuk,2012,1\n")
    a = build_fact_space(profile_dataset(path))
    b = build_fact_space(profile_dataset(path))
    assert dump_space(a) == dump_space(b)
    assert [c.distinct for c in profile_dataset(path).columns][0] == ("uk", "us")


def test_duplicate_slug_ids_are_made_unique():
    profile = profile_rows(["city", "sales"], [["New York", "1"], ["new_york", "2"]])
    space = build_fact_space(profile)
    ids = [e.element_id for e in space.dimension("subspace").elements]
    assert len(ids) == len(set(ids)) == 2
    assert validate_space(space) == []


def test_bundled_toy_csv():
    from importlib import resources

    path = resources.files("dspace").joinpath("data/medals_toy.csv")
    profile = profile_dataset(str(path))
    assert profile.row_count == 50
    assert [c.kind for c in profile.columns] == ["categorical", "categorical", "temporal", "numerical"]
    assert tuple(FACT_TYPES) == tuple(FACT_TYPE_LABELS)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 3),
    st.integers(1, 2),
    st.integers(1, 8),
    st.integers(1, 25),
)
def test_counts_are_exact_functions_of_profile(n_cat, n_num, n_rows, cap):
    header = [f"c{i}" for i in range(n_cat)] + [f"n{j}" for j in range(n_num)]
    rows = [[f"v{r % 5}_{i}" for i in range(n_cat)] + [str(r * 1.5) for _ in range(n_num)] for r in range(n_rows)]
    profile = profile_rows(header, rows)
    space = build_fact_space(profile, value_cap=cap)
    assert validate_space(space) == []
    assert space.dimension("breakdown").size == n_cat
    assert space.dimension("measure").size == 5 * n_num
    expected = sum(min(len(c.distinct), cap) for c in profile.of_kind("categorical", "temporal"))
    assert space.dimension("subspace").size == space.dimension("focus").size == expected
    assert space.dimension("fact_type").size == 10 and space.dimension("visualization_title").size == 4
