"""Narrative generation: prompt assembly, providers, and the repair loop.

Prompts are assembled from four inputs: the dataset itself (as a compact
textual digest of its schema and level 1-3 facts), the natural-language
dataset description, the analytical goal, and the narrative-tree format
instructions with the level-assignment rules. Assembly is pure: the same
session state and packet always produce the identical message list, which is
what lets the mock provider key canned responses on a request digest.

Provider output is never trusted: every response is parsed and validated
against the dataset, and failures are fed back verbatim for a bounded number
of repair turns before the generation is abandoned.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Protocol, Sequence

import httpx

from .analysis import DEFAULT_Z_THRESHOLD, cluster, correlation, detect_outliers, trend
from .dataset import Dataset, compute_statistic, describe_l1, format_number, iter_numeric_pairs
from .errors import LlmFailure, MissingFixture, StrataError, TransportError
from .levels import LEVEL_ROLES, SemanticLevel
from .narrative import (
    NarrativeDocument,
    ValidationIssue,
    collect_tree_errors,
)
from .packets import DragPacket

if TYPE_CHECKING:  # pragma: no cover - typing only, avoids a session import cycle
    from .session import Session

DEFAULT_MAX_RETRIES = 2

Message = dict[str, str]


# --- prompt assembly ---------------------------------------------------------

def format_instructions() -> str:
    """The narrative JSON contract plus the level-assignment rules.

    Includes each level's role verbatim so the model tags text with the same
    vocabulary the engine validates against.
    """
    level_lines = "\n".join(
        f"  L{int(level)} (layer {int(level)}): {role}"
        for level, role in LEVEL_ROLES.items()
    )
    return (
        "You are a data-analysis narrator. Respond with a single JSON object and "
        "no other text. The object encodes narrative text as a tree:\n"
        '{"paragraphs": [{"id": "<unique id>", "sentences": [{"items": [\n'
        '  {"kind": "leaf", "id": "<unique id>", "text": "<text fragment>", "layer": 1,\n'
        '   "fields": ["<field name>"],\n'
        '   "values": [{"field": "<field name>", "value": 123, "stat": "mean"}]}\n'
        "]}]}]}\n"
        "Rules:\n"
        "- Every paragraph and leaf id must be new and globally unique; never reuse "
        "an id from an earlier turn.\n"
        "- Concatenating leaf texts in order must read as natural prose.\n"
        "- Tag each leaf with the semantic level of what it says:\n"
        f"{level_lines}\n"
        "- A layer 1-2 leaf that states a number must name the field in \"fields\" and "
        "record the claim in \"values\"; \"stat\" names the statistic (mean, stdev, min, "
        "max, median, count) and layer 1 claims also include a value entry for the key "
        "field naming the row.\n"
        "- Reference only fields that exist in the dataset digest.\n"
        "- Keep fields and values empty for leaves that state no specific datum.\n"
    )


def dataset_digest(dataset: Dataset) -> str:
    """Compact rendering of the schema and level 1-3 facts for the prompt.

    Mentions every field name, so a model that stays inside the digest can
    only reference real fields. Relationship facts that are undefined for the
    given table (constant columns, too few rows) are silently omitted.
    """
    lines = [f"Dataset: {dataset.name}"]
    lines.append(
        "Fields: "
        + ", ".join(f"{f.name} ({f.kind.value})" for f in dataset.schema)
    )
    lines.append("Base data (L1):")
    lines.extend(f"  {fact.label}" for fact in describe_l1(dataset))

    lines.append("Statistics (L2):")
    for f in dataset.numeric_fields:
        parts = [
            f"{stat}={format_number(compute_statistic(dataset, f.name, stat))}"
            for stat in ("mean", "stdev", "min", "max", "median")
        ]
        lines.append(f"  {f.name}: " + ", ".join(parts))

    relationship_lines: list[str] = []
    best_pair: tuple[float, str, str] | None = None
    for a, b in iter_numeric_pairs(dataset):
        try:
            fact = correlation(dataset, a, b)
        except StrataError:
            continue
        relationship_lines.append(f"  {fact.label}")
        if best_pair is None or abs(fact.value) > best_pair[0]:
            best_pair = (abs(fact.value), a, b)
    for f in dataset.numeric_fields:
        try:
            facts = detect_outliers(dataset, f.name, DEFAULT_Z_THRESHOLD)
        except StrataError:
            continue
        relationship_lines.extend(f"  {fact.label}" for fact in facts)
    if best_pair is not None:
        try:
            relationship_lines.append(f"  {trend(dataset, best_pair[1], best_pair[2]).label}")
        except StrataError:
            pass
    numeric_names = [f.name for f in dataset.numeric_fields]
    if len(numeric_names) >= 2 and dataset.row_count >= 3:
        try:
            for fact in cluster(dataset, numeric_names[:2], k=3):
                relationship_lines.append(f"  {fact.label}")
        except StrataError:
            pass
    if relationship_lines:
        lines.append("Relationships (L3):")
        lines.extend(relationship_lines)
    return "\n".join(lines)


@dataclass(frozen=True)
class PromptBundle:
    """Everything one generation request is built from."""

    dataset_digest: str
    dataset_description: str
    goal: str
    format_instructions: str
    history: tuple[Message, ...] = ()
    directive: str | None = None

    def initial_request(self) -> str:
        return (
            f"Dataset description: {self.dataset_description}\n\n"
            f"{self.dataset_digest}\n\n"
            f"Analytical goal: {self.goal}\n\n"
            "Write the opening narrative for this exploration: a short paragraph "
            "introducing the dataset through the lens of the goal, mixing levels."
        )

    def messages(self) -> list[Message]:
        out: list[Message] = [
            {"role": "system", "content": self.format_instructions},
            {"role": "user", "content": self.initial_request()},
        ]
        out.extend(dict(m) for m in self.history)
        if self.directive is not None:
            out.append({"role": "user", "content": self.directive})
        return out


def _history_messages(session: "Session") -> tuple[Message, ...]:
    history: list[Message] = []
    for turn in session.transcript:
        if turn.directive is not None:
            history.append({"role": "user", "content": turn.directive})
        history.append({"role": "assistant", "content": turn.raw_response})
    return tuple(history)


def build_init_prompt(session: "Session") -> PromptBundle:
    """Prompt for the opening narrative of a fresh session."""
    return PromptBundle(
        dataset_digest=dataset_digest(session.dataset),
        dataset_description=session.dataset.nl_description,
        goal=session.goal,
        format_instructions=format_instructions(),
    )


def _describe_packet(packet: DragPacket) -> str:
    parts = []
    if packet.text:
        parts.append(f'the dragged text "{packet.text}"')
    if packet.fields:
        parts.append("fields " + ", ".join(packet.fields))
    if packet.keys:
        parts.append("rows " + ", ".join(packet.keys))
    if packet.values:
        parts.append(
            "values "
            + ", ".join(f"{claim.field}={claim.value}" for claim in packet.values)
        )
    return "; ".join(parts)


def build_followup_prompt(
    session: "Session",
    packet: DragPacket,
    target_levels: Iterable[SemanticLevel],
) -> PromptBundle:
    """Prompt for a complementary follow-up about a dropped packet.

    The directive names the packet's fields, rows, and values, and constrains
    every new leaf to the requested (complementary) levels.
    """
    levels = sorted(target_levels)
    level_names = " and ".join(f"L{int(level)}" for level in levels)
    layer_numbers = " or ".join(str(int(level)) for level in levels)
    directive = (
        f"Discuss further: {_describe_packet(packet)}. "
        f"Respond with one new paragraph whose leaves are all tagged {level_names} "
        f"(layer {layer_numbers}), connecting this to the analytical goal. "
        "Use fresh unique ids."
    )
    return PromptBundle(
        dataset_digest=dataset_digest(session.dataset),
        dataset_description=session.dataset.nl_description,
        goal=session.goal,
        format_instructions=format_instructions(),
        history=_history_messages(session),
        directive=directive,
    )


# --- providers ---------------------------------------------------------------

def request_digest(messages: Sequence[Message]) -> str:
    """Stable digest identifying one provider request."""
    canonical = json.dumps(list(messages), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Provider(Protocol):
    kind: str

    def complete(self, messages: list[Message]) -> str: ...


@dataclass
class MockProvider:
    """Deterministic provider backed by a directory of recorded responses.

    Each fixture file is named ``<request digest>.json`` and contains the raw
    response text. Identical requests therefore yield byte-identical
    responses, and unknown requests fail loudly instead of hallucinating.
    """

    fixtures_dir: Path
    kind: str = "mock"

    def complete(self, messages: list[Message]) -> str:
        digest = request_digest(messages)
        path = Path(self.fixtures_dir) / f"{digest}.json"
        if not path.is_file():
            raise MissingFixture(digest)
        return path.read_text(encoding="utf-8")


@dataclass
class ScriptedProvider:
    """Returns canned responses in order; exception entries are raised.

    The workhorse for repair-loop and failure-injection tests.
    """

    responses: list[str | Exception]
    kind: str = "mock"
    calls: int = 0

    def complete(self, messages: list[Message]) -> str:
        if self.calls >= len(self.responses):
            raise MissingFixture(f"scripted provider exhausted after {self.calls} calls")
        item = self.responses[self.calls]
        self.calls += 1
        if isinstance(item, Exception):
            raise item
        return item


@dataclass
class RecordingProvider:
    """Wraps a provider and records (digest, response) pairs as they happen.

    Used to materialize fixture directories for MockProvider: replay a
    scenario once through a scripted provider and write what was recorded.
    """

    inner: Provider
    recorded: list[tuple[str, str]] = field(default_factory=list)

    @property
    def kind(self) -> str:
        return self.inner.kind

    def complete(self, messages: list[Message]) -> str:
        digest = request_digest(messages)
        response = self.inner.complete(messages)
        self.recorded.append((digest, response))
        return response

    def write_fixtures(self, directory: Path) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for digest, response in self.recorded:
            (directory / f"{digest}.json").write_text(response, encoding="utf-8")


API_KEY_ENV_VAR = "STRATA_API_KEY"


@dataclass
class RemoteProvider:
    """Thin client for an OpenAI-compatible chat-completions endpoint.

    The API key is read from the environment at call time and never stored on
    the instance, so it cannot leak into session files or logs.
    """

    endpoint: str
    model: str
    timeout: float = 120.0
    kind: str = "remote"

    def complete(self, messages: list[Message]) -> str:
        api_key = os.environ.get(API_KEY_ENV_VAR, "")
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        try:
            response = httpx.post(
                self.endpoint.rstrip("/") + "/chat/completions",
                json={"model": self.model, "messages": messages},
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            payload = response.json()
            return payload["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise TransportError(f"provider request failed: {exc}") from exc
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed provider response: {exc}") from exc


# --- generation with repair --------------------------------------------------

def extract_json(raw: str) -> object | None:
    """Parse the outermost JSON object, tolerating surrounding prose."""
    start = raw.find("{")
    end = raw.rfind("}")
    if start == -1 or end <= start:
        return None
    try:
        return json.loads(raw[start : end + 1])
    except json.JSONDecodeError:
        return None


def _repair_message(issues: list[ValidationIssue]) -> Message:
    listing = "\n".join(f"- {issue}" for issue in issues)
    return {
        "role": "user",
        "content": (
            "Your previous response failed validation:\n"
            f"{listing}\n"
            "Re-emit the complete corrected JSON object, and nothing else."
        ),
    }


@dataclass(frozen=True)
class GenerationResult:
    document: NarrativeDocument
    raw_text: str
    attempts: int
    provider_kind: str
    request_digest: str


def generate(
    bundle: PromptBundle,
    provider: Provider,
    dataset: Dataset,
    max_retries: int = DEFAULT_MAX_RETRIES,
    reserved_ids: Iterable[str] = (),
) -> GenerationResult:
    """Run one generation with bounded validate-and-repair.

    Each failed attempt appends the model's raw output and the validation
    errors to the conversation and retries, up to ``max_retries`` extra
    turns. Transport-level failures are configuration problems and propagate
    immediately without burning retries.
    """
    reserved = set(reserved_ids)
    messages = bundle.messages()
    first_digest = request_digest(messages)
    issues: list[ValidationIssue] = []
    raw = ""
    attempts = 0
    for attempts in range(1, max_retries + 2):
        raw = provider.complete(messages)
        parsed = extract_json(raw)
        if parsed is None:
            issues = [ValidationIssue("$", "response is not a JSON object")]
        else:
            document, issues = collect_tree_errors(parsed, dataset, reserved_ids=reserved)
            if document is not None:
                return GenerationResult(
                    document=document,
                    raw_text=raw,
                    attempts=attempts,
                    provider_kind=provider.kind,
                    request_digest=first_digest,
                )
        messages = messages + [{"role": "assistant", "content": raw}, _repair_message(issues)]
    raise LlmFailure(
        f"generation failed after {attempts} attempts",
        errors=issues,
        attempts=attempts,
    )


# re-exported for callers assembling digests by hand
__all__ = [
    "API_KEY_ENV_VAR",
    "DEFAULT_MAX_RETRIES",
    "GenerationResult",
    "MockProvider",
    "PromptBundle",
    "Provider",
    "RecordingProvider",
    "RemoteProvider",
    "ScriptedProvider",
    "build_followup_prompt",
    "build_init_prompt",
    "dataset_digest",
    "extract_json",
    "format_instructions",
    "generate",
    "request_digest",
]
