"""Built-in example spaces."""

from __future__ import annotations

import re

from .space import DesignSpace, make_dimension


def slug(text: str) -> str:
    s = re.sub(r"[^0-9A-Za-z]+", "_", text.strip().lower()).strip("_")
    return s or "x"


def _dim(did: str, label: str, labels: list[str], multi: bool = False, max_count: int | None = None):
    return make_dimension(did, label, [(slug(x), x) for x in labels], multi, max_count)


def narrative_space() -> DesignSpace:
    """Five-dimension narrative composition space for data-driven articles."""
    return DesignSpace(
        "narrative",
        (
            _dim(
                "headline",
                "Headline",
                [
                    "Data highlighting",
                    "Stating an issue",
                    "Making an evaluation or judgment",
                    "Asking a question",
                    "Sensationalism",
                ],
            ),
            _dim("narrative_intent", "Narrative Intent", ["Inform", "Explain", "Persuade", "Entertain"]),
            _dim(
                "narrative_structure",
                "Narrative Structure",
                ["Inverted pyramid", "Freytag pyramid", "Drilling-down", "Compositing"],
            ),
            _dim(
                "narrative_pattern",
                "Narrative Pattern",
                [
                    "Compare",
                    "Concretize",
                    "Repetition",
                    "Gradual reveal",
                    "Slow-down/Speed-up",
                    "Familiarization",
                    "Defamiliarization",
                    "Silent data",
                    "Physical metaphor",
                    "Humans behind the dots",
                    "Breaking the 4th wall",
                    "Rhetorical question",
                    "Call to action",
                    "Make a guess",
                    "Exploration",
                    "Addressing the audience",
                    "Convention breaking",
                    "Users find themselves",
                ],
                multi=True,
            ),
            _dim(
                "narrative_perspective",
                "Narrative Perspective",
                ["First-person", "Second-person", "Third-person", "Shifting perspective"],
            ),
        ),
    )


def toy_listing_space() -> DesignSpace:
    """Three abstract dimensions ``D1..D3`` with elements ``e11..e34``."""
    dims = []
    for i in (1, 2, 3):
        dims.append(
            make_dimension(f"D{i}", f"D{i}", [(f"e{i}{j}", f"e{i}{j}") for j in (1, 2, 3, 4)])
        )
    return DesignSpace("listing", tuple(dims))
