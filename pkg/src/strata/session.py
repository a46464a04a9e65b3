"""Session lifecycle: creation, drop application, persistence, and replay.

A session binds one dataset to one analytical goal and accumulates the
narrative document, the synthesized charts, and the provider transcript. All
mutation goes through :func:`apply_drop`, which is atomic: if anything fails
mid-step (a provider outage, a bad packet), the session is rolled back to
exactly its prior state.

Persistence is one JSON file per session with a ``schema_version`` marker.
Provider credentials are never part of a session, so they can never be
written out.
"""

from __future__ import annotations

import copy
import json
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from .charts import ChartSpec
from .dataset import Dataset, load_dataset
from .errors import (
    CorruptSessionFile,
    FileUnreadable,
    InvalidGoal,
    SchemaVersionMismatch,
    StrataError,
    UnknownChart,
    UnknownSession,
)
from .interaction import DropEffect, DropTarget, route_drop
from .llm import DEFAULT_MAX_RETRIES, Provider, build_init_prompt, generate
from .narrative import NarrativeDocument, renumber_chart_refs, validate_tree
from .packets import DragPacket

SCHEMA_VERSION = 1


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class TranscriptTurn:
    """One completed provider exchange. ``directive`` is None for the opener."""

    directive: str | None
    raw_response: str
    attempts: int
    provider_kind: str

    def to_json(self) -> dict:
        return {
            "directive": self.directive,
            "raw_response": self.raw_response,
            "attempts": self.attempts,
            "provider_kind": self.provider_kind,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "TranscriptTurn":
        return cls(
            directive=obj.get("directive"),
            raw_response=obj["raw_response"],
            attempts=int(obj["attempts"]),
            provider_kind=obj["provider_kind"],
        )


@dataclass
class Session:
    """One exploration: dataset binding, goal, document, charts, transcript."""

    id: str
    dataset: Dataset
    goal: str
    document: NarrativeDocument = field(default_factory=NarrativeDocument)
    charts: list[ChartSpec] = field(default_factory=list)
    chart_numbers: dict[str, int] = field(default_factory=dict)
    transcript: list[TranscriptTurn] = field(default_factory=list)
    chart_seq: int = 0
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)

    def next_chart_id(self) -> str:
        self.chart_seq += 1
        return f"chart-{self.chart_seq}"

    def record_turn(
        self, directive: str | None, raw_response: str, attempts: int, provider_kind: str
    ) -> None:
        self.transcript.append(
            TranscriptTurn(
                directive=directive,
                raw_response=raw_response,
                attempts=attempts,
                provider_kind=provider_kind,
            )
        )

    def chart_by_id(self, chart_id: str) -> ChartSpec:
        for spec in self.charts:
            if spec.id == chart_id:
                return spec
        raise UnknownChart(chart_id)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "goal": self.goal,
            "dataset": self.dataset.to_json(),
            "document": self.document.to_json(),
            "charts": [c.to_json() for c in self.charts],
            "chart_numbers": dict(self.chart_numbers),
            "chart_seq": self.chart_seq,
            "transcript": [t.to_json() for t in self.transcript],
            "created_at": self.created_at,
            "updated_at": self.updated_at,
        }


def create_session(
    dataset: Dataset,
    goal: str,
    provider: Provider,
    max_retries: int = DEFAULT_MAX_RETRIES,
    session_id: str | None = None,
) -> Session:
    """Create a session and generate its opening narrative.

    Fails atomically: if the provider call or validation fails, no session
    exists afterwards.
    """
    if not goal or not goal.strip():
        raise InvalidGoal("the analytical goal must be a non-empty string")
    session = Session(
        id=session_id or f"s-{uuid.uuid4().hex[:12]}",
        dataset=dataset,
        goal=goal,
    )
    bundle = build_init_prompt(session)
    result = generate(bundle, provider, dataset, max_retries=max_retries)
    session.document = result.document
    session.record_turn(
        directive=None,
        raw_response=result.raw_text,
        attempts=result.attempts,
        provider_kind=result.provider_kind,
    )
    return session


def apply_drop(
    session: Session,
    packet: DragPacket,
    target: DropTarget,
    provider: Provider,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> DropEffect:
    """Route one drop, rolling the session back wholesale on any failure."""
    snapshot = copy.deepcopy(
        (
            session.document,
            session.charts,
            session.chart_numbers,
            session.transcript,
            session.chart_seq,
            session.updated_at,
        )
    )
    try:
        effect = route_drop(session, packet, target, provider, max_retries=max_retries)
    except Exception:
        (
            session.document,
            session.charts,
            session.chart_numbers,
            session.transcript,
            session.chart_seq,
            session.updated_at,
        ) = snapshot
        raise
    session.updated_at = _now()
    return effect


class SessionStore:
    """In-memory session registry with one mutation lock per session."""

    def __init__(self) -> None:
        self._sessions: dict[str, Session] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._registry_lock:
            self._sessions[session.id] = session
            self._locks[session.id] = threading.RLock()

    def get(self, session_id: str) -> Session:
        with self._registry_lock:
            try:
                return self._sessions[session_id]
            except KeyError:
                raise UnknownSession(session_id) from None

    def ids(self) -> list[str]:
        with self._registry_lock:
            return list(self._sessions)

    def __len__(self) -> int:
        with self._registry_lock:
            return len(self._sessions)

    def drop(
        self,
        session_id: str,
        packet: DragPacket,
        target: DropTarget,
        provider: Provider,
        max_retries: int = DEFAULT_MAX_RETRIES,
    ) -> DropEffect:
        """Apply a drop under the session's exclusive lock (drops serialize)."""
        session = self.get(session_id)
        with self._locks[session_id]:
            return apply_drop(session, packet, target, provider, max_retries=max_retries)


# --- persistence ---------------------------------------------------------------

def serialize_session(session: Session) -> str:
    """Canonical JSON text for a session file; stable byte-for-byte."""
    payload = {"schema_version": SCHEMA_VERSION, "session": session.to_json()}
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def save_session(session: Session, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(serialize_session(session), encoding="utf-8")
    return path


def session_from_json(obj: Mapping) -> Session:
    dataset = Dataset.from_json(obj["dataset"])
    document = validate_tree(obj["document"], dataset, allow_chart_refs=True)
    charts = [ChartSpec.from_json(c) for c in obj.get("charts", ())]
    chart_ids = {c.id for c in charts}
    for token in document.tokens():
        if token.chart_id not in chart_ids:
            raise UnknownChart(token.chart_id)
    session = Session(
        id=obj["id"],
        dataset=dataset,
        goal=obj["goal"],
        document=document,
        charts=charts,
        transcript=[TranscriptTurn.from_json(t) for t in obj.get("transcript", ())],
        chart_seq=int(obj.get("chart_seq", len(charts))),
        created_at=obj["created_at"],
        updated_at=obj["updated_at"],
    )
    session.chart_numbers = renumber_chart_refs(document)
    return session


def load_session(path: str | Path) -> Session:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptSessionFile(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("schema_version") != SCHEMA_VERSION:
        found = payload.get("schema_version") if isinstance(payload, dict) else None
        raise SchemaVersionMismatch(found, SCHEMA_VERSION)
    try:
        return session_from_json(payload["session"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptSessionFile(f"{path} is missing session data: {exc}") from exc


# --- replay ----------------------------------------------------------------------

@dataclass(frozen=True)
class ReplayStep:
    packet: DragPacket
    target: DropTarget

    def to_json(self) -> dict:
        return {"packet": self.packet.to_json(), "target": self.target.to_json()}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ReplayStep":
        return cls(
            packet=DragPacket.from_json(obj["packet"]),
            target=DropTarget.from_json(obj["target"]),
        )


@dataclass(frozen=True)
class ReplayScript:
    """A recorded interaction sequence, runnable headlessly."""

    dataset: Dataset
    goal: str
    steps: tuple[ReplayStep, ...]

    def to_json(self) -> dict:
        return {
            "dataset": self.dataset.to_json(),
            "goal": self.goal,
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, obj: Mapping, base_dir: Path | None = None) -> "ReplayScript":
        raw_dataset = obj["dataset"]
        if "path" in raw_dataset:
            path = Path(raw_dataset["path"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            dataset = load_dataset(
                path,
                name=raw_dataset.get("name", path.stem),
                nl_description=raw_dataset.get("nl_description", ""),
                key_field=raw_dataset["key_field"],
                units=raw_dataset.get("units"),
                descriptions=raw_dataset.get("descriptions"),
            )
        else:
            dataset = Dataset.from_json(raw_dataset)
        return cls(
            dataset=dataset,
            goal=obj["goal"],
            steps=tuple(ReplayStep.from_json(s) for s in obj.get("steps", ())),
        )


class ReplayStepError(StrataError):
    code = "replay_step_failed"

    def __init__(self, step_index: int, cause: Exception, log: list[dict]):
        super().__init__(f"replay aborted at step {step_index}: {cause}", step=step_index)
        self.step_index = step_index
        self.cause = cause
        self.log = log


def replay(
    script: ReplayScript,
    provider: Provider,
    max_retries: int = DEFAULT_MAX_RETRIES,
    session_id: str | None = None,
) -> tuple[Session, list[dict]]:
    """Run a script end to end, returning the final session and a step log.

    A failing step aborts the run; the partial log rides on the raised
    :class:`ReplayStepError`. Thanks to drop atomicity the session still
    reflects every step before the failing one.
    """
    session = create_session(
        script.dataset, script.goal, provider, max_retries=max_retries, session_id=session_id
    )
    log: list[dict] = []
    for index, step in enumerate(script.steps):
        try:
            effect = apply_drop(session, step.packet, step.target, provider, max_retries)
        except Exception as exc:
            raise ReplayStepError(index, exc, log) from exc
        log.append({"step": index, "effect": effect.to_json()})
    return session, log
