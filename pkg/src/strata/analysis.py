"""Level-3 relationship facts: correlations, outliers, trends, and clusters.

These feed two places: the dataset digest embedded in prompts (so generated
text can make relationship claims that are actually true) and grounding
checks on level-3 narrative. Everything here is deterministic; the clustering
uses a fixed quantile-based initialization instead of random restarts so the
same table always yields the same partition.
"""

from __future__ import annotations

import enum
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from .dataset import Dataset, FieldKind, format_number
from .errors import DegenerateVariance, NonNumericField, TooFewRows, UnknownField

CORRELATION_STRONG = 0.7
CORRELATION_MODERATE = 0.4
TREND_FLAT_BAND = 0.05
DEFAULT_Z_THRESHOLD = 2.0
KMEANS_MAX_ITERATIONS = 100


class FactKind(str, enum.Enum):
    CORRELATION = "correlation"
    OUTLIER = "outlier"
    TREND = "trend"
    CLUSTER = "cluster"


@dataclass(frozen=True)
class RelationshipFact:
    """A single relationship observation, with a prompt-ready label.

    ``value`` holds the fact's magnitude: r for correlations, the signed
    z-score for outliers, the least-squares slope for trends, and the cluster
    index for cluster membership facts.
    """

    kind: FactKind
    fields: tuple[str, ...]
    keys: tuple[str, ...]
    value: float
    label: str

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "fields": list(self.fields),
            "keys": list(self.keys),
            "value": self.value,
            "label": self.label,
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "RelationshipFact":
        return cls(
            kind=FactKind(obj["kind"]),
            fields=tuple(obj["fields"]),
            keys=tuple(obj["keys"]),
            value=float(obj["value"]),
            label=obj["label"],
        )


def _numeric_column(dataset: Dataset, name: str) -> tuple[float, ...]:
    descriptor = dataset.field(name)
    if descriptor.kind is not FieldKind.NUMERIC:
        raise NonNumericField(name)
    return dataset.column(name)


def correlation(dataset: Dataset, f1: str, f2: str) -> RelationshipFact:
    """Pearson correlation between two numeric fields over all rows."""
    if f1 == f2:
        raise ValueError("correlation requires two distinct fields")
    xs = _numeric_column(dataset, f1)
    ys = _numeric_column(dataset, f2)
    if len(xs) < 2:
        raise TooFewRows("correlation requires at least 2 rows")
    if statistics.pstdev(xs) == 0.0:
        raise DegenerateVariance(f"field {f1!r} is constant; correlation undefined")
    if statistics.pstdev(ys) == 0.0:
        raise DegenerateVariance(f"field {f2!r} is constant; correlation undefined")
    r = statistics.correlation(xs, ys)
    r = max(-1.0, min(1.0, r))

    magnitude = abs(r)
    if magnitude >= CORRELATION_STRONG:
        strength = "strongly"
    elif magnitude >= CORRELATION_MODERATE:
        strength = "moderately"
    else:
        strength = "weakly"
    direction = "positively" if r >= 0 else "negatively"
    label = f"{f1} and {f2} are {strength} {direction} correlated (r={r:.2f})"
    return RelationshipFact(
        kind=FactKind.CORRELATION, fields=(f1, f2), keys=(), value=r, label=label
    )


def detect_outliers(
    dataset: Dataset, field_name: str, z_threshold: float = DEFAULT_Z_THRESHOLD
) -> list[RelationshipFact]:
    """Rows whose |z-score| on one field meets the threshold, largest first."""
    values = _numeric_column(dataset, field_name)
    if len(values) < 3:
        raise TooFewRows("outlier detection requires at least 3 rows")
    mean = statistics.fmean(values)
    stdev = statistics.pstdev(values)
    if stdev == 0.0:
        raise DegenerateVariance(f"field {field_name!r} is constant; z-scores undefined")

    facts = []
    for key, value in zip(dataset.keys, values):
        z = (value - mean) / stdev
        if abs(z) >= z_threshold:
            facts.append(
                RelationshipFact(
                    kind=FactKind.OUTLIER,
                    fields=(field_name,),
                    keys=(key,),
                    value=z,
                    label=(
                        f"{key} is an outlier on {field_name} "
                        f"({field_name}={format_number(value)}, z={z:+.2f})"
                    ),
                )
            )
    facts.sort(key=lambda fact: abs(fact.value), reverse=True)
    return facts


def trend(dataset: Dataset, x: str, y: str) -> RelationshipFact:
    """Least-squares slope of y on x, labeled increasing/decreasing/flat.

    "Flat" uses a scale-free band: the slope rescaled by the ratio of the two
    fields' ranges must stay below ``TREND_FLAT_BAND``, so the verdict does
    not depend on the units either field happens to use.
    """
    xs = _numeric_column(dataset, x)
    ys = _numeric_column(dataset, y)
    x_range = max(xs) - min(xs)
    y_range = max(ys) - min(ys)
    if x_range == 0.0:
        raise DegenerateVariance(f"field {x!r} is constant; slope undefined")

    mean_x = statistics.fmean(xs)
    mean_y = statistics.fmean(ys)
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in zip(xs, ys))
    sxx = sum((a - mean_x) ** 2 for a in xs)
    slope = sxy / sxx

    if y_range == 0.0 or abs(slope) * (x_range / y_range) < TREND_FLAT_BAND:
        word = "flat"
    elif slope > 0:
        word = "increasing"
    else:
        word = "decreasing"
    label = f"{y} is {word} in {x} (slope={format_number(slope)})"
    return RelationshipFact(kind=FactKind.TREND, fields=(x, y), keys=(), value=slope, label=label)


def _min_max_normalize(values: Sequence[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def cluster(dataset: Dataset, fields: Sequence[str], k: int = 3) -> list[RelationshipFact]:
    """Deterministic k-means over 1 or 2 numeric fields.

    Coordinates are min-max normalized per field. Initial centroids are the k
    rows sitting at evenly spaced quantiles of the first field, which makes
    the whole procedure reproducible without any RNG. One fact per cluster,
    listing member keys in row order.
    """
    if not 1 <= len(fields) <= 2:
        raise ValueError("cluster expects 1 or 2 fields")
    n = dataset.row_count
    if k < 2 or k > n:
        raise TooFewRows(f"k={k} must be between 2 and the row count ({n})")
    columns = [_min_max_normalize(_numeric_column(dataset, f)) for f in fields]
    points = list(zip(*columns))

    order = sorted(range(n), key=lambda i: (columns[0][i], dataset.keys[i]))
    init_indices = [order[round(i * (n - 1) / (k - 1))] for i in range(k)]
    centroids = [points[i] for i in init_indices]

    def nearest(point: tuple[float, ...]) -> int:
        return min(
            range(k),
            key=lambda c: sum((a - b) ** 2 for a, b in zip(point, centroids[c])),
        )

    assignment = [-1] * n
    for _ in range(KMEANS_MAX_ITERATIONS):
        new_assignment = [nearest(p) for p in points]
        if new_assignment == assignment:
            break
        assignment = new_assignment
        for c in range(k):
            members = [points[i] for i in range(n) if assignment[i] == c]
            if members:  # empty clusters keep their previous centroid
                centroids[c] = tuple(
                    statistics.fmean(m[d] for m in members) for d in range(len(fields))
                )

    facts = []
    field_list = ", ".join(fields)
    for c in range(k):
        member_keys = tuple(dataset.keys[i] for i in range(n) if assignment[i] == c)
        preview = ", ".join(member_keys[:6]) + (", ..." if len(member_keys) > 6 else "")
        facts.append(
            RelationshipFact(
                kind=FactKind.CLUSTER,
                fields=tuple(fields),
                keys=member_keys,
                value=float(c),
                label=(
                    f"cluster {c + 1} of {k} on {field_list}: "
                    f"{len(member_keys)} rows ({preview})"
                ),
            )
        )
    return facts
