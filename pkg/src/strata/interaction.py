"""Drop routing: the bidirectional flow between text and charts.

Any packet can be dropped on any target, independent of where it came from.
The Tell Me More target asks the provider for text on the *complementary*
side of the level hierarchy (high-level analysis for low-level data and vice
versa); Show Me More synthesizes a chart from the packet; dropping onto an
existing chart updates it in place. All three paths leave the session's
document and chart invariants intact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

from .charts import ChartSpec, synthesize_chart, update_chart
from .errors import EmptySelection, UnknownChart, UnknownField, UnknownMark
from .levels import HIGH_LEVELS, LOW_LEVELS, SemanticLevel
from .llm import DEFAULT_MAX_RETRIES, Provider, build_followup_prompt, generate
from .narrative import ChartRefToken, Paragraph, Sentence, renumber_chart_refs
from .packets import DragPacket, PacketSource, validate_packet

if TYPE_CHECKING:  # pragma: no cover
    from .session import Session


def complement_levels(packet: DragPacket) -> frozenset[SemanticLevel]:
    """The levels on the other side of the L2/L3 boundary from the packet."""
    return HIGH_LEVELS if packet.level.is_low else LOW_LEVELS


def packet_from_chart(
    chart: ChartSpec,
    dataset,
    keys: Sequence[str] = (),
    fields: Sequence[str] = (),
) -> DragPacket:
    """Build a packet from a chart selection (marks, axes, or both).

    Chart data is pinned to level 2: richer than raw rows, poorer than
    insight. Selecting marks without naming axes implies all of the chart's
    displayed fields.
    """
    keys = tuple(str(k) for k in keys)
    fields = tuple(fields)
    if not keys and not fields:
        raise EmptySelection("chart selection names no marks or axes")
    for key in keys:
        if not dataset.has_key(key):
            raise UnknownMark(f"key {key!r} is not a mark on this chart")
    for name in fields:
        if name not in chart.displayed_fields:
            raise UnknownField(name)
    if not fields:
        fields = chart.displayed_fields

    if keys:
        text = f"{', '.join(keys)} on {chart.title}"
    else:
        text = chart.title
    return DragPacket(
        source=PacketSource.CHART,
        level=SemanticLevel.L2,
        fields=fields,
        keys=keys,
        text=text,
    )


class TargetKind(str, enum.Enum):
    TELL_ME_MORE = "tell_me_more"
    SHOW_ME_MORE = "show_me_more"
    CHART = "chart"


@dataclass(frozen=True)
class DropTarget:
    kind: TargetKind
    chart_id: str | None = None

    @classmethod
    def tell_me_more(cls) -> "DropTarget":
        return cls(TargetKind.TELL_ME_MORE)

    @classmethod
    def show_me_more(cls) -> "DropTarget":
        return cls(TargetKind.SHOW_ME_MORE)

    @classmethod
    def chart(cls, chart_id: str) -> "DropTarget":
        return cls(TargetKind.CHART, chart_id=chart_id)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value}
        if self.chart_id is not None:
            out["chart_id"] = self.chart_id
        return out

    @classmethod
    def from_json(cls, obj) -> "DropTarget":
        kind = TargetKind(obj["kind"])
        if kind is TargetKind.CHART:
            return cls(kind, chart_id=obj["chart_id"])
        return cls(kind)


class EffectKind(str, enum.Enum):
    NEW_PARAGRAPH = "new_paragraph"
    NEW_CHART = "new_chart"
    UPDATED_CHART = "updated_chart"


@dataclass(frozen=True)
class DropEffect:
    """The delta one drop produced; clients patch incrementally from this."""

    kind: EffectKind
    paragraphs: tuple[Paragraph, ...] = ()
    chart: ChartSpec | None = None
    chart_ref_paragraph_id: str | None = None
    chart_numbers: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "chart_numbers": dict(self.chart_numbers)}
        if self.paragraphs:
            out["paragraphs"] = [p.to_json() for p in self.paragraphs]
        if self.chart is not None:
            out["chart"] = self.chart.to_json()
        if self.chart_ref_paragraph_id is not None:
            out["chart_ref_paragraph_id"] = self.chart_ref_paragraph_id
        return out


def _anchor_paragraph(session: "Session", packet: DragPacket) -> Paragraph:
    # Text packets anchor the chart reference in their paragraph of origin;
    # chart packets (no origin) anchor at the document end.
    if packet.origin_paragraph_id is not None:
        paragraph = session.document.find_paragraph(packet.origin_paragraph_id)
        if paragraph is not None:
            return paragraph
    if not session.document.paragraphs:
        paragraph = Paragraph(id=f"{session.id}-charts")
        session.document.paragraphs.append(paragraph)
        return paragraph
    return session.document.paragraphs[-1]


def route_drop(
    session: "Session",
    packet: DragPacket,
    target: DropTarget,
    provider: Provider,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> DropEffect:
    """Apply one drop to the session and return what changed.

    Must run under the session's exclusive mutation lock. The dataset is
    never touched; only the document and the chart list change. Chart
    reference numbers are recomputed after any chart change.
    """
    validate_packet(packet, session.dataset)

    if target.kind is TargetKind.TELL_ME_MORE:
        levels = complement_levels(packet)
        bundle = build_followup_prompt(session, packet, levels)
        result = generate(
            bundle,
            provider,
            session.dataset,
            max_retries=max_retries,
            reserved_ids=session.document.ids(),
        )
        session.document.paragraphs.extend(result.document.paragraphs)
        session.record_turn(
            directive=bundle.directive,
            raw_response=result.raw_text,
            attempts=result.attempts,
            provider_kind=result.provider_kind,
        )
        return DropEffect(
            kind=EffectKind.NEW_PARAGRAPH,
            paragraphs=tuple(result.document.paragraphs),
            chart_numbers=dict(session.chart_numbers),
        )

    if target.kind is TargetKind.SHOW_ME_MORE:
        chart = synthesize_chart(packet, session.dataset, session.next_chart_id())
        session.charts.append(chart)
        anchor = _anchor_paragraph(session, packet)
        if not anchor.sentences:
            anchor.sentences.append(Sentence())
        anchor.sentences[-1].items.append(ChartRefToken(chart_id=chart.id))
        numbers = renumber_chart_refs(session.document)
        session.chart_numbers = numbers
        return DropEffect(
            kind=EffectKind.NEW_CHART,
            chart=chart,
            chart_ref_paragraph_id=anchor.id,
            chart_numbers=dict(numbers),
        )

    # target.kind is CHART
    assert target.chart_id is not None
    for i, spec in enumerate(session.charts):
        if spec.id == target.chart_id:
            updated = update_chart(spec, packet, session.dataset)
            session.charts[i] = updated
            numbers = renumber_chart_refs(session.document)
            session.chart_numbers = numbers
            return DropEffect(
                kind=EffectKind.UPDATED_CHART,
                chart=updated,
                chart_numbers=dict(numbers),
            )
    raise UnknownChart(target.chart_id)
