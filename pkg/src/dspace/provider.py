"""Constraint sources: static rule files and an OpenAI-compatible chat endpoint.

The LLM path assembles a five-part prompt (role, injected requirement /
context / space, rule semantics, generation rules, examples), posts a single
chat-completion request, and keeps every response line that parses and binds
against the space. Prompt text here is a working default, not a fixed wording.

Credentials are only ever referenced by environment-variable name; the value
is read at request time and never logged, cached or serialized.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx

from .constraints import ConstraintSet, parse_constraints, parse_lenient
from .space import DesignSpace, Element

log = logging.getLogger(__name__)

PROVIDER_KINDS = ("file", "llm")
RETRY_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})
NO_CONTEXT = "(no context provided)"

RULE_TEMPLATES = (
    "hard_constraint(x, k) :- D1(x, e11).",
    "soft_positive_constraint(x, k) :- D1(x, e13), D2(x, e21).",
    "soft_negative_constraint(x, k) :- D3(x, e31).",
)

CONSTRAINT_SEMANTICS = "\n".join(
    [
        "Write each constraint as one rule on its own line, in one of these forms:",
        *RULE_TEMPLATES,
        "",
        "Di is a dimension id and eij an element id from the design space above.",
        "k is a positive integer, unique among rules with the same head.",
        "A body is a comma-separated conjunction of atoms D(x, e); prefix an atom",
        "with 'not' to require that the element is NOT selected.",
        "hard_constraint: the solution is invalid when the body holds.",
        "soft_positive_constraint: a recommended combination; rewarded when the body holds.",
        "soft_negative_constraint: a discouraged combination; penalized when the body holds.",
        "Lines starting with % are comments.",
    ]
)

BASE_GENERATION_RULES = (
    "Use only dimension and element ids listed in the design space.",
    "Every rule must follow the grammar exactly; do not invent other heads.",
    "Do not write hard and soft rules that contradict each other.",
    "Return all rules inside a single fenced code block.",
)

_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_RULE_LINE_RE = re.compile(r"^\s*(hard|soft_positive|soft_negative)_constraint\s*\(")


class ProviderError(RuntimeError):
    pass


class ConfigError(ProviderError):
    pass


class TransportError(ProviderError):
    """The endpoint could not be reached, refused the request, or answered garbage."""


class EmptyResultError(ProviderError):
    """The exchange worked but yielded no usable rule."""

    def __init__(self, message: str, prose: bool):
        super().__init__(message)
        self.prose = prose  # True when the reply held no rule-shaped line at all


class StrictModeError(ProviderError):
    def __init__(self, warnings: list[str]):
        super().__init__("strict mode: " + "; ".join(warnings))
        self.warnings = warnings


# -- configuration -------------------------------------------------------------

_LLM_FIELDS = ("base_url", "model", "api_key_env", "timeout", "retries", "temperature")


@dataclass(frozen=True)
class ProviderConfig:
    kind: str
    path: str | None = None
    base_url: str | None = None
    model: str | None = None
    api_key_env: str | None = None  # name of the variable holding the key, never the key
    timeout: float = 60.0
    retries: int = 3
    temperature: float = 0.2

    def __post_init__(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"provider kind must be one of {PROVIDER_KINDS}, got {self.kind!r}")
        if self.kind == "file":
            if not self.path:
                raise ConfigError("file provider needs 'path'")
            if self.base_url or self.model or self.api_key_env:
                raise ConfigError("file provider must not carry llm fields")
        else:
            if not self.base_url or not self.model:
                raise ConfigError("llm provider needs 'base_url' and 'model'")
            if self.path:
                raise ConfigError("llm provider must not carry 'path'")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")
        if self.retries < 0:
            raise ConfigError("retries must be non-negative")

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], base_dir: Path | None = None) -> ProviderConfig:
        if not isinstance(doc, Mapping):
            raise ConfigError("provider config must be a JSON object")
        if any(k in doc for k in ("api_key", "key", "token", "password")):
            raise ConfigError("put the credential in an environment variable and name it in 'api_key_env'")
        known = {"kind", "path", *_LLM_FIELDS}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown provider field(s): {', '.join(unknown)}")
        kw = dict(doc)
        if kw.get("path") and base_dir is not None and not Path(kw["path"]).is_absolute():
            kw["path"] = str(base_dir / kw["path"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict[str, Any]:
        if self.kind == "file":
            return {"kind": "file", "path": self.path}
        return {"kind": "llm", **{k: getattr(self, k) for k in _LLM_FIELDS}}


def load_provider_config(path: str | Path) -> ProviderConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ProviderConfig.from_dict(doc, path.parent)


# -- prompt ----------------------------------------------------------------------


@dataclass(frozen=True)
class DomainPack:
    role: str
    rules: tuple[str, ...]
    examples: tuple[str, ...]
    name: str = "custom"


def domain_pack_from_dict(doc: Mapping[str, Any]) -> DomainPack:
    if not isinstance(doc, Mapping):
        raise ConfigError("domain pack must be a JSON object")
    missing = [k for k in ("role", "rules", "examples") if k not in doc]
    if missing:
        raise ConfigError(f"domain pack is missing field(s): {', '.join(missing)}")
    if not isinstance(doc["role"], str) or not doc["role"].strip():
        raise ConfigError("domain pack 'role' must be non-empty text")
    for k in ("rules", "examples"):
        if not isinstance(doc[k], list) or not all(isinstance(x, str) for x in doc[k]):
            raise ConfigError(f"domain pack '{k}' must be a list of strings")
    return DomainPack(doc["role"], tuple(doc["rules"]), tuple(doc["examples"]), doc.get("name", "custom"))


def load_domain_pack(path: str | Path | None = None) -> DomainPack:
    """Load a pack file, or the bundled default when ``path`` is None."""
    try:
        if path is None:
            text = resources.files("dspace").joinpath("data/default_pack.json").read_text("utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        doc = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"domain pack: {exc}") from None
    return domain_pack_from_dict(doc)


def render_space(space: DesignSpace) -> str:
    lines = [f"Design space '{space.space_id}'"]
    for dim in space.dimensions:
        mode = f"multi-select, 1 to {dim.capacity} elements" if dim.multi_select else "single-select"
        lines.append(f"Dimension {dim.dimension_id} ({dim.label}), {mode}:")
        for el in dim.elements:
            lines.append(f"  - {dim.dimension_id}(x, {el.element_id})  % {el.label}")
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptBundle:
    role_specification: str
    requirement: str
    context: str
    space_text: str
    constraint_semantics: str
    generation_rules: str
    examples: str

    def missing(self) -> list[str]:
        return [name for name, value in self.__dict__.items() if not value.strip()]

    def user_text(self) -> str:
        return "\n\n".join(
            [
                f"## Requirement\n{self.requirement}",
                f"## Context\n{self.context}",
                f"## Design space\n{self.space_text}",
                f"## Constraint semantics\n{self.constraint_semantics}",
                f"## Generation rules\n{self.generation_rules}",
                f"## Examples\n{self.examples}",
            ]
        )

    def messages(self) -> list[dict[str, str]]:
        return [
            {"role": "system", "content": self.role_specification},
            {"role": "user", "content": self.user_text()},
        ]


def assemble_prompt(
    requirement: str,
    context: str | None,
    space: DesignSpace,
    pack: DomainPack | None = None,
) -> PromptBundle:
    pack = pack or load_domain_pack()
    if not requirement.strip():
        raise ConfigError("requirement text is empty")
    rules = [*BASE_GENERATION_RULES, *pack.rules]
    bundle = PromptBundle(
        role_specification=pack.role,
        requirement=requirement.strip(),
        context=context.strip() if context and context.strip() else NO_CONTEXT,
        space_text=render_space(space),
        constraint_semantics=CONSTRAINT_SEMANTICS,
        generation_rules="\n".join(f"- {r}" for r in rules),
        examples="\n\n".join(pack.examples) if pack.examples else "(none)",
    )
    missing = bundle.missing()
    if missing:
        raise ConfigError(f"prompt is missing: {', '.join(missing)}")
    return bundle


# -- transport -----------------------------------------------------------------


def request_body(config: ProviderConfig, messages: list[dict[str, str]]) -> dict[str, Any]:
    return {"model": config.model, "messages": messages, "temperature": config.temperature}


def request_hash(config: ProviderConfig, messages: list[dict[str, str]]) -> str:
    doc = {"url": config.base_url, **request_body(config, messages)}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode("utf-8")).hexdigest()


def _headers(config: ProviderConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if config.api_key_env:
        key = os.environ.get(config.api_key_env)
        if not key:
            raise ConfigError(f"environment variable {config.api_key_env} is not set")
        headers["Authorization"] = f"Bearer {key}"
    return headers


def backoff_delay(attempt: int, rng: random.Random, base: float = 0.5, cap: float = 30.0) -> float:
    """Exponential backoff with full jitter on top of half the step."""
    step = min(cap, base * 2**attempt)
    return step / 2 + rng.uniform(0, step / 2)


def chat_completion(
    config: ProviderConfig,
    messages: list[dict[str, str]],
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> str:
    """POST one chat-completion exchange and return the assistant text."""
    if config.kind != "llm":
        raise ConfigError("chat_completion needs an llm provider config")
    url = config.base_url.rstrip("/") + "/chat/completions"
    headers = _headers(config)
    body = request_body(config, messages)
    rng = rng or random.Random()
    own_client = client is None
    client = client or httpx.Client(timeout=config.timeout)
    last = "no attempt made"
    try:
        for attempt in range(config.retries + 1):
            if attempt:
                sleep(backoff_delay(attempt - 1, rng))
            try:
                resp = client.post(url, json=body, headers=headers, timeout=config.timeout)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("provider request failed (attempt %d): %s", attempt + 1, last)
                continue
            if resp.status_code in (401, 403):
                raise TransportError(f"endpoint rejected the credential (HTTP {resp.status_code})")
            if resp.status_code in RETRY_STATUS:
                last = f"HTTP {resp.status_code}"
                log.warning("provider returned %s (attempt %d)", last, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise TransportError(f"endpoint returned HTTP {resp.status_code}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError):
                raise TransportError("response is not a chat-completion document") from None
    finally:
        if own_client:
            client.close()
    raise TransportError(f"giving up after {config.retries + 1} attempt(s): {last}")


# -- extraction ----------------------------------------------------------------


def extract_rule_lines(text: str) -> tuple[list[str], bool]:
    """Candidate rule lines and whether they came from a fenced block."""
    blocks = _FENCE_RE.findall(text)
    if blocks:
        lines = [ln for block in blocks for ln in block.splitlines()]
        return [ln for ln in lines if ln.strip()], True
    return [ln for ln in text.splitlines() if _RULE_LINE_RE.match(ln)], False


def rules_from_response(text: str, space: DesignSpace) -> tuple[ConstraintSet, list[str]]:
    lines, _ = extract_rule_lines(text)
    if not lines:
        raise EmptyResultError("the model returned prose without any rule", prose=True)
    cs, warnings = parse_lenient(lines, space)
    if not len(cs):
        raise EmptyResultError(
            f"none of {len(lines)} candidate line(s) parsed: " + "; ".join(warnings[:5]), prose=False
        )
    return cs, warnings


@dataclass
class FetchResult:
    constraints: ConstraintSet
    warnings: list[str] = field(default_factory=list)
    raw_text: str | None = None
    cached: bool = False


def fetch_with_warnings(
    config: ProviderConfig,
    space: DesignSpace,
    bundle: PromptBundle | None = None,
    path: str | Path | None = None,
    strict: bool = False,
    cache_dir: str | Path | None = None,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> FetchResult:
    if config.kind == "file":
        source = Path(path or config.path)
        try:
            text = source.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{source}: cannot read ({exc})") from None
        return FetchResult(parse_constraints(text, space))

    if bundle is None:
        raise ConfigError("llm provider needs a prompt bundle")
    messages = bundle.messages()
    cache_file = None
    text = None
    if cache_dir is not None:
        cache_file = Path(cache_dir) / f"{request_hash(config, messages)}.json"
        if cache_file.exists():
            text = json.loads(cache_file.read_text(encoding="utf-8"))["content"]
    cached = text is not None
    if text is None:
        text = chat_completion(config, messages, client=client, sleep=sleep)
    cs, warnings = rules_from_response(text, space)
    if cache_file is not None and not cached:
        cache_file.parent.mkdir(parents=True, exist_ok=True)
        cache_file.write_text(json.dumps({"content": text}), encoding="utf-8")
    for w in warnings:
        log.warning("dropped rule: %s", w)
    if strict and warnings:
        raise StrictModeError(warnings)
    return FetchResult(cs, warnings, text, cached)


def fetch_constraints(
    config: ProviderConfig,
    space: DesignSpace,
    bundle: PromptBundle | None = None,
    **kw: Any,
) -> ConstraintSet:
    return fetch_with_warnings(config, space, bundle, **kw).constraints


def make_llm_action(config: ProviderConfig, instruction: str, client: httpx.Client | None = None):
    """An action that asks the endpoint to realize the selected elements.

    Register it under a name of your choice; it is never part of the default
    registry, so deterministic runs stay offline.
    """

    def llm_action(elements: tuple[Element, ...], params: Mapping[str, Any]) -> str:
        listing = "\n".join(f"- {el.dimension_id}: {el.label}" for el in elements)
        prompt = f"{params.get('instruction', instruction)}\n\nDesign choices:\n{listing}"
        return chat_completion(config, [{"role": "user", "content": prompt}], client=client)

    return llm_action
