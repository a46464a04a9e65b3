"""The source-agnostic drag packet: the one payload every interaction carries.

A packet is a self-contained value object (fields, literal values, row keys,
a level, a text snippet). Nothing in it points back into live document or
chart state, which is what lets a recorded packet be replayed from a script
file and dropped "anywhere, independent of where it came from".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

from .dataset import Dataset, FieldKind
from .errors import InvalidPacket, UnknownField, UnknownKey
from .levels import SemanticLevel


class PacketSource(str, enum.Enum):
    TEXT = "text"
    CHART = "chart"


@dataclass(frozen=True)
class ValueClaim:
    """A (field, literal) pair; narrative leaves may also name the statistic.

    ``stat`` identifies which statistic an L2 claim asserts ("mean", "stdev",
    ...). It stays internal to the narrative: packet wire format carries only
    field and value.
    """

    field: str
    value: float | str
    stat: str | None = None

    def to_json(self, with_stat: bool = True) -> dict:
        out: dict = {"field": self.field, "value": self.value}
        if with_stat and self.stat is not None:
            out["stat"] = self.stat
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "ValueClaim":
        return cls(field=obj["field"], value=obj["value"], stat=obj.get("stat"))


@dataclass(frozen=True)
class DragPacket:
    """Payload of one drag gesture, from either a text span or a chart mark.

    ``origin_paragraph_id`` is optional provenance (a plain id, not a live
    reference): for text-sourced packets it names the paragraph the dragged
    leaves came from, so a synthesized chart's inline reference can be
    anchored there. Chart-sourced packets leave it unset.
    """

    source: PacketSource
    level: SemanticLevel
    fields: tuple[str, ...] = ()
    values: tuple[ValueClaim, ...] = ()
    keys: tuple[str, ...] = ()
    text: str = ""
    origin_paragraph_id: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.fields or self.values or self.keys):
            raise InvalidPacket("packet carries no fields, values, or keys")
        if self.source is PacketSource.CHART and self.level is not SemanticLevel.L2:
            raise InvalidPacket("chart-sourced packets are always level 2")

    def to_json(self) -> dict:
        out: dict = {
            "source": self.source.value,
            "fields": list(self.fields),
            "values": [v.to_json(with_stat=False) for v in self.values],
            "keys": list(self.keys),
            "layer": int(self.level),
            "text": self.text,
        }
        if self.origin_paragraph_id is not None:
            out["origin_paragraph_id"] = self.origin_paragraph_id
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "DragPacket":
        try:
            level = SemanticLevel(int(obj["layer"]))
        except (KeyError, ValueError) as exc:
            raise InvalidPacket(f"bad packet layer: {obj.get('layer')!r}") from exc
        return cls(
            source=PacketSource(obj["source"]),
            level=level,
            fields=tuple(obj.get("fields", ())),
            values=tuple(ValueClaim.from_json(v) for v in obj.get("values", ())),
            keys=tuple(str(k) for k in obj.get("keys", ())),
            text=obj.get("text", ""),
            origin_paragraph_id=obj.get("origin_paragraph_id"),
        )


def validate_packet(packet: DragPacket, dataset: Dataset) -> None:
    """Check every field and key the packet names against the dataset.

    Raises UnknownField / UnknownKey / InvalidPacket; returns None when the
    packet is usable against this dataset.
    """
    for name in packet.fields:
        dataset.field(name)
    for claim in packet.values:
        descriptor = dataset.field(claim.field)
        if descriptor.kind is FieldKind.NUMERIC:
            try:
                float(claim.value)
            except (TypeError, ValueError):
                raise InvalidPacket(
                    f"value {claim.value!r} does not parse for numeric field {claim.field!r}"
                ) from None
    for key in packet.keys:
        if not dataset.has_key(key):
            raise UnknownKey(key)
