from __future__ import annotations

import json
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from dspace.builtin import narrative_space, toy_listing_space
from dspace.space import (
    CapacityError,
    DesignSolution,
    DesignSpace,
    Dimension,
    Element,
    SpaceError,
    dump_space,
    enumerate_solutions,
    load_space,
    make_dimension,
    solution_from_indices,
    solution_to_indices,
    space_from_dict,
    space_to_dict,
    validate_solution,
    validate_space,
)

from oracles import all_selections, random_space


def dim(did, ids, multi_select=False, max_count=None):
    return make_dimension(did, did.upper(), [(i, i.upper()) for i in ids], multi_select, max_count)


WORKED = DesignSolution.of(
    headline="stating_an_issue",
    narrative_intent="inform",
    narrative_structure="inverted_pyramid",
    narrative_pattern=["compare", "concretize"],
    narrative_perspective="third_person",
)


def test_narrative_space_is_valid():
    space = narrative_space()
    assert validate_space(space) == []
    assert [d.dimension_id for d in space.dimensions] == [
        "headline",
        "narrative_intent",
        "narrative_structure",
        "narrative_pattern",
        "narrative_perspective",
    ]
    assert space.n_elements == 35
    assert space.dimension("narrative_pattern").multi_select


def test_empty_dimension_is_one_violation():
    space = DesignSpace("s", (Dimension("a", "A", ()), dim("b", ["x", "y"])))
    problems = validate_space(space)
    assert len(problems) == 1 and "a" in problems[0]


def test_max_count_above_size_is_one_violation():
    elems = tuple(Element("m", f"e{i}", f"E{i}") for i in range(5))
    space = DesignSpace("s", (Dimension("m", "M", elems, True, 7),))
    assert len(validate_space(space)) == 1


def test_duplicate_ids_are_reported():
    d = dim("a", ["x", "x"])
    assert validate_space(DesignSpace("s", (d,)))
    assert validate_space(DesignSpace("s", (dim("a", ["x"]), dim("a", ["y"]))))


def test_worked_solution_is_valid():
    assert validate_solution(narrative_space(), WORKED) == []


def test_two_intents_is_one_violation():
    sol = DesignSolution({**WORKED.selections, "narrative_intent": frozenset({"inform", "explain"})})
    assert len(validate_solution(narrative_space(), sol)) == 1


def test_missing_headline_is_one_violation():
    sel = dict(WORKED.selections)
    del sel["headline"]
    assert len(validate_solution(narrative_space(), DesignSolution(sel))) == 1


def test_unknown_dimension_and_element_are_violations():
    sol = DesignSolution({**WORKED.selections, "colour": frozenset({"red"})})
    assert any("colour" in v for v in validate_solution(narrative_space(), sol))
    sol = DesignSolution({**WORKED.selections, "headline": frozenset({"shouting"})})
    assert any("shouting" in v for v in validate_solution(narrative_space(), sol))


def test_empty_multi_select_is_a_violation():
    sol = DesignSolution({**WORKED.selections, "narrative_pattern": frozenset()})
    assert validate_solution(narrative_space(), sol)


def test_enumerate_product_count():
    space = DesignSpace("s", (dim("a", ["1", "2"]), dim("b", ["1", "2", "3"])))
    assert len(enumerate_solutions(space, 100)) == 6


def test_enumerate_multi_select_binomial():
    space = DesignSpace("s", (dim("m", ["x", "y", "z"], multi_select=True, max_count=2),))
    sols = enumerate_solutions(space, 100)
    assert len(sols) == math.comb(3, 1) + math.comb(3, 2)
    assert len(set(sols)) == 6


def test_enumerate_capacity_error():
    with pytest.raises(CapacityError):
        enumerate_solutions(narrative_space(), 1000)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_enumeration_matches_itertools_oracle(seed):
    space = random_space(random.Random(seed), max_dims=4, max_elems=4, max_multi=2)
    ours = {frozenset((k, v) for k, v in s.selections.items()) for s in enumerate_solutions(space, 10**5)}
    ref = {frozenset(sel.items()) for sel in all_selections(space)}
    assert ours == ref
    assert len(ours) == space.solution_count()
    assert all(validate_solution(space, DesignSolution(dict(s))) == [] for s in ours)


def test_enumeration_is_deterministic():
    space = toy_listing_space()
    assert enumerate_solutions(space, 1000) == enumerate_solutions(space, 1000)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_serialization_round_trip(seed):
    space = random_space(random.Random(seed))
    assert space_from_dict(json.loads(dump_space(space))) == space


def test_payload_round_trip(tmp_path):
    el = Element("measure", "sales_sum", "(sales, sum)", (("field", "sales"), ("aggregation", "sum")))
    space = DesignSpace("s", (Dimension("measure", "Measure", (el,), True, 1),))
    path = tmp_path / "s.json"
    path.write_text(dump_space(space))
    assert load_space(path) == space
    assert load_space(path).dimensions[0].elements[0].payload_dict() == {"field": "sales", "aggregation": "sum"}


def test_default_max_count_when_unspecified():
    doc = {
        "space_id": "s",
        "dimensions": [
            {"dimension_id": "a", "label": "A", "multi_select": True,
             "elements": [{"element_id": f"e{i}", "label": str(i)} for i in range(5)]},
            {"dimension_id": "b", "label": "B", "multi_select": True,
             "elements": [{"element_id": "x", "label": "x"}, {"element_id": "y", "label": "y"}]},
        ],
    }
    space = space_from_dict(doc)
    assert space.dimension("a").max_count == 3
    assert space.dimension("b").max_count == 2


def test_space_from_dict_rejects_bad_documents():
    with pytest.raises(SpaceError):
        space_from_dict({"dimensions": []})
    with pytest.raises(SpaceError):
        space_from_dict({"space_id": "s", "dimensions": [{"dimension_id": "a", "elements": [{}]}]})
    empty = space_from_dict({"space_id": "s", "dimensions": [{"dimension_id": "a", "elements": []}]})
    assert validate_space(empty)
    assert "schema_version" in space_to_dict(narrative_space())


def test_load_space_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpaceError):
        load_space(bad)
    with pytest.raises(SpaceError):
        load_space(tmp_path / "missing.json")


def test_index_conversions_round_trip():
    space = narrative_space()
    picks = solution_to_indices(space, WORKED)
    assert solution_from_indices(space, picks) == WORKED
