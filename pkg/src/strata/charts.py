"""Rule-based chart synthesis and update from drag packets.

The mapping is deliberately small and predictable: one numeric field makes a
bar chart keyed by the row identifier, two make a scatter plot, literal
values become reference lines on the matching axis, and row keys highlight
their marks. Dropping a packet onto an existing chart applies the same rules
additively, which can upgrade a bar chart to a scatter plot when it brings a
new field. Specs are declarative: they name fields and keys, never cache row
data, so any renderer can draw them straight from the dataset.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, replace
from typing import Mapping

from .dataset import Dataset, FieldKind
from .errors import NoFields, NonNumericField
from .packets import DragPacket

logger = logging.getLogger(__name__)


class ChartKind(str, enum.Enum):
    BAR = "bar"
    SCATTER = "scatter"


@dataclass(frozen=True)
class ReferenceLine:
    field: str
    value: float

    def to_json(self) -> dict:
        return {"field": self.field, "value": self.value}


@dataclass(frozen=True)
class ChartSpec:
    """Declarative chart description.

    For a bar chart the x axis is the dataset key and ``x_field`` is the
    measured value per key; for a scatter plot each key contributes the point
    (x_field, y_field).
    """

    id: str
    kind: ChartKind
    x_field: str
    y_field: str | None
    title: str
    reference_lines: tuple[ReferenceLine, ...] = ()
    highlights: tuple[str, ...] = ()

    @property
    def displayed_fields(self) -> tuple[str, ...]:
        if self.kind is ChartKind.SCATTER and self.y_field:
            return (self.x_field, self.y_field)
        return (self.x_field,)

    def to_json(self) -> dict:
        out: dict = {
            "id": self.id,
            "kind": self.kind.value,
            "x_field": self.x_field,
            "title": self.title,
            "reference_lines": [line.to_json() for line in self.reference_lines],
            "highlights": list(self.highlights),
        }
        if self.y_field is not None:
            out["y_field"] = self.y_field
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ChartSpec":
        return cls(
            id=obj["id"],
            kind=ChartKind(obj["kind"]),
            x_field=obj["x_field"],
            y_field=obj.get("y_field"),
            title=obj["title"],
            reference_lines=tuple(
                ReferenceLine(field=line["field"], value=float(line["value"]))
                for line in obj.get("reference_lines", ())
            ),
            highlights=tuple(str(k) for k in obj.get("highlights", ())),
        )


def chart_title(kind: ChartKind, x_field: str, y_field: str | None, dataset: Dataset) -> str:
    """Bar charts take the measure's display name; scatters are "X by Y"."""
    x_name = dataset.field(x_field).display_name
    if kind is ChartKind.SCATTER and y_field:
        return f"{x_name} by {dataset.field(y_field).display_name}"
    return x_name


def _usable_fields(packet: DragPacket, dataset: Dataset) -> list[str]:
    usable = []
    for name in packet.fields:
        if dataset.field(name).kind is not FieldKind.NUMERIC:
            raise NonNumericField(name)
        if name not in usable:
            usable.append(name)
    return usable


def _reference_lines(
    packet: DragPacket, displayed: tuple[str, ...], existing: tuple[ReferenceLine, ...]
) -> tuple[ReferenceLine, ...]:
    lines = list(existing)
    for claim in packet.values:
        if claim.field not in displayed:
            logger.warning(
                "dropping reference value for %r: field not displayed on this chart",
                claim.field,
            )
            continue
        try:
            line = ReferenceLine(field=claim.field, value=float(claim.value))
        except (TypeError, ValueError):
            logger.warning("dropping non-numeric reference value %r", claim.value)
            continue
        if line not in lines:
            lines.append(line)
    return tuple(lines)


def _merge_keys(existing: tuple[str, ...], new: tuple[str, ...]) -> tuple[str, ...]:
    merged = list(existing)
    for key in new:
        if key not in merged:
            merged.append(key)
    return tuple(merged)


def synthesize_chart(packet: DragPacket, dataset: Dataset, chart_id: str) -> ChartSpec:
    """Build a new chart from a packet by the field-count rule.

    One usable field -> bar, two -> scatter in packet order (first is x).
    More than two: the first two win and the rest are logged as dropped. A
    packet with keys or values but no fields has nothing to chart.
    """
    usable = _usable_fields(packet, dataset)
    if not usable:
        raise NoFields("packet has no fields to chart")
    if len(usable) > 2:
        logger.warning("packet has %d fields; charting the first two only", len(usable))

    if len(usable) == 1:
        kind, x_field, y_field = ChartKind.BAR, usable[0], None
    else:
        kind, x_field, y_field = ChartKind.SCATTER, usable[0], usable[1]

    displayed = (x_field,) if y_field is None else (x_field, y_field)
    return ChartSpec(
        id=chart_id,
        kind=kind,
        x_field=x_field,
        y_field=y_field,
        title=chart_title(kind, x_field, y_field, dataset),
        reference_lines=_reference_lines(packet, displayed, ()),
        highlights=_merge_keys((), packet.keys),
    )


def update_chart(spec: ChartSpec, packet: DragPacket, dataset: Dataset) -> ChartSpec:
    """Apply a packet to an existing chart, returning the updated spec.

    A new numeric field upgrades a bar chart to a scatter plot (old field
    stays on x); fields already displayed are a no-op; a scatter plot ignores
    further fields. Keys and values are appended set-wise, so replaying the
    same packet is idempotent and updates never remove anything.
    """
    usable = _usable_fields(packet, dataset)
    new_fields = [f for f in usable if f not in spec.displayed_fields]

    kind, x_field, y_field = spec.kind, spec.x_field, spec.y_field
    if new_fields:
        if kind is ChartKind.BAR:
            kind = ChartKind.SCATTER
            y_field = new_fields[0]
            if len(new_fields) > 1:
                logger.warning(
                    "packet adds %d new fields; using %r for the y axis",
                    len(new_fields),
                    y_field,
                )
        else:
            logger.warning(
                "chart already shows two fields; ignoring new fields %s", new_fields
            )

    axes_changed = (kind, x_field, y_field) != (spec.kind, spec.x_field, spec.y_field)
    displayed = (x_field,) if y_field is None else (x_field, y_field)
    return replace(
        spec,
        kind=kind,
        x_field=x_field,
        y_field=y_field,
        title=chart_title(kind, x_field, y_field, dataset) if axes_changed else spec.title,
        reference_lines=_reference_lines(packet, displayed, spec.reference_lines),
        highlights=_merge_keys(spec.highlights, packet.keys),
    )
