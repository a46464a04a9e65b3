"""The four-level semantic hierarchy and its color encoding.

Everything in the engine is tagged with one of four levels, ordered from raw
data up to domain insight. Levels 1-2 are the "low" side (data and statistics,
where charts excel); levels 3-4 are the "high" side (relationships and
insights, where text excels). The boundary between L2 and L3 drives the
complementary-response routing in :mod:`strata.interaction`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class SemanticLevel(enum.IntEnum):
    """Level tag carried by every text fragment and drag packet.

    Total order: L1 < L2 < L3 < L4.
    """

    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4

    @property
    def role(self) -> str:
        return LEVEL_ROLES[self]

    @property
    def is_low(self) -> bool:
        """True for the data-centric side (L1/L2) of the hierarchy."""
        return self <= SemanticLevel.L2


LEVEL_ROLES: dict[SemanticLevel, str] = {
    SemanticLevel.L1: "Base Data",
    SemanticLevel.L2: "Statistics",
    SemanticLevel.L3: "Relationships among data & statistics",
    SemanticLevel.L4: "Insights and Integration of Domain Knowledge",
}


@dataclass(frozen=True)
class LevelColor:
    name: str
    hex: str


# One fixed color per level, used by every renderer. The hex values are a
# design constant; only the color families are contractual.
LEVEL_COLORS: dict[SemanticLevel, LevelColor] = {
    SemanticLevel.L1: LevelColor("pink", "#E91E8C"),
    SemanticLevel.L2: LevelColor("green", "#1E9E50"),
    SemanticLevel.L3: LevelColor("yellow", "#D9A400"),
    SemanticLevel.L4: LevelColor("blue", "#1A4FD6"),
}

LOW_LEVELS = frozenset({SemanticLevel.L1, SemanticLevel.L2})
HIGH_LEVELS = frozenset({SemanticLevel.L3, SemanticLevel.L4})


def color_for(level: SemanticLevel) -> LevelColor:
    """Stable, bijective level -> color mapping."""
    return LEVEL_COLORS[SemanticLevel(level)]
