"""Tabular dataset loading, base-data description, and column statistics.

A dataset is a small in-memory table with exactly one key column (the row
identifier, e.g. a zip code) and any mix of numeric and categorical columns.
Datasets are immutable after load and safe to share across threads.

This module covers the two lowest levels of the semantic hierarchy: raw rows
(level 1) and single-column statistics (level 2).
"""

from __future__ import annotations

import csv
import enum
import json
import math
import statistics
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

from .errors import (
    DuplicateKey,
    EmptyCell,
    EmptyDataset,
    FileUnreadable,
    NonNumericField,
    RaggedRow,
    UnknownField,
    UnparseableNumeric,
)

Cell = float | str
Row = dict[str, Cell]


class FieldKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    KEY = "key"


class StatisticKind(str, enum.Enum):
    MEAN = "mean"
    STDEV = "stdev"
    MIN = "min"
    MAX = "max"
    MEDIAN = "median"
    COUNT = "count"


@dataclass(frozen=True)
class FieldDescriptor:
    """Schema entry for one column.

    ``description`` doubles as the display name in chart titles; when absent,
    a snake_case -> Title Case fallback is used.
    """

    name: str
    kind: FieldKind
    unit: str | None = None
    description: str | None = None

    def __post_init__(self):
        if not self.name or not self.name.strip():
            raise ValueError("field name must be non-empty")

    @property
    def display_name(self) -> str:
        if self.description:
            return self.description
        return " ".join(part.capitalize() for part in self.name.split("_"))

    def to_json(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind.value}
        if self.unit is not None:
            out["unit"] = self.unit
        if self.description is not None:
            out["description"] = self.description
        return out

    @classmethod
    def from_json(cls, obj: Mapping) -> "FieldDescriptor":
        return cls(
            name=obj["name"],
            kind=FieldKind(obj["kind"]),
            unit=obj.get("unit"),
            description=obj.get("description"),
        )


@dataclass(frozen=True)
class Dataset:
    """Immutable rectangular table with a unique string key per row."""

    name: str
    nl_description: str
    schema: tuple[FieldDescriptor, ...]
    rows: tuple[Row, ...] = field(repr=False)

    def __post_init__(self):
        keys = [f for f in self.schema if f.kind is FieldKind.KEY]
        if len(keys) != 1:
            raise ValueError(f"schema must have exactly one key field, found {len(keys)}")
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise ValueError("field names must be unique")
        for i, row in enumerate(self.rows):
            for f in self.schema:
                if f.name not in row:
                    raise RaggedRow(i, len(self.schema), len(row))

    @cached_property
    def key_field(self) -> FieldDescriptor:
        return next(f for f in self.schema if f.kind is FieldKind.KEY)

    @cached_property
    def fields_by_name(self) -> Mapping[str, FieldDescriptor]:
        return {f.name: f for f in self.schema}

    @cached_property
    def keys(self) -> tuple[str, ...]:
        return tuple(str(row[self.key_field.name]) for row in self.rows)

    @cached_property
    def _row_by_key(self) -> Mapping[str, Row]:
        return {key: row for key, row in zip(self.keys, self.rows)}

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def numeric_fields(self) -> tuple[FieldDescriptor, ...]:
        return tuple(f for f in self.schema if f.kind is FieldKind.NUMERIC)

    def field(self, name: str) -> FieldDescriptor:
        try:
            return self.fields_by_name[name]
        except KeyError:
            raise UnknownField(name) from None

    def has_field(self, name: str) -> bool:
        return name in self.fields_by_name

    def has_key(self, key: str) -> bool:
        return key in self._row_by_key

    def column(self, name: str) -> tuple[float, ...]:
        """All values of a numeric field, in row order."""
        f = self.field(name)
        if f.kind is not FieldKind.NUMERIC:
            raise NonNumericField(name)
        return tuple(float(row[name]) for row in self.rows)

    def value(self, key: str, field_name: str) -> Cell:
        self.field(field_name)
        try:
            return self._row_by_key[key][field_name]
        except KeyError:
            from .errors import UnknownKey

            raise UnknownKey(key) from None

    def to_json(self) -> dict:
        key_name = self.key_field.name
        return {
            "name": self.name,
            "nl_description": self.nl_description,
            "schema": [f.to_json() for f in self.schema],
            "rows": [
                {"key": str(row[key_name])}
                | {k: v for k, v in row.items() if k != key_name}
                for row in self.rows
            ],
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Dataset":
        schema = tuple(FieldDescriptor.from_json(f) for f in obj["schema"])
        key_name = next(f.name for f in schema if f.kind is FieldKind.KEY)
        rows = []
        for raw in obj["rows"]:
            row: Row = {key_name: str(raw["key"])}
            for f in schema:
                if f.kind is FieldKind.KEY:
                    continue
                value = raw[f.name]
                row[f.name] = float(value) if f.kind is FieldKind.NUMERIC else str(value)
            rows.append(row)
        ds = cls(
            name=obj["name"],
            nl_description=obj["nl_description"],
            schema=schema,
            rows=tuple(rows),
        )
        seen: set[str] = set()
        for key in ds.keys:
            if key in seen:
                raise DuplicateKey(key)
            seen.add(key)
        return ds


def _parse_numeric(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_dataset(
    path: str | Path,
    name: str,
    nl_description: str,
    key_field: str,
    units: Mapping[str, str] | None = None,
    descriptions: Mapping[str, str] | None = None,
) -> Dataset:
    """Load a CSV file (UTF-8, RFC-4180, header row) into a Dataset.

    Column kinds are inferred: the named ``key_field`` becomes the key, a
    column whose every cell parses as a finite number becomes numeric, and
    anything else is categorical. Key values are kept as strings so
    identifiers like zip codes retain leading zeros. Missing cells are a load
    error, never imputed.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise EmptyDataset(f"{path} has no header row") from None
            raw_rows = [row for row in reader]
    except OSError as exc:
        raise FileUnreadable(f"cannot read {path}: {exc}") from exc

    if not raw_rows:
        raise EmptyDataset(f"{path} has a header but no data rows")
    if key_field not in header:
        raise UnknownField(key_field)

    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise RaggedRow(i, len(header), len(row))

    columns = {col: [row[j] for row in raw_rows] for j, col in enumerate(header)}

    kinds: dict[str, FieldKind] = {}
    for col, cells in columns.items():
        if col == key_field:
            kinds[col] = FieldKind.KEY
        elif all(_parse_numeric(c) is not None for c in cells):
            kinds[col] = FieldKind.NUMERIC
        else:
            kinds[col] = FieldKind.CATEGORICAL

    units = units or {}
    descriptions = descriptions or {}
    schema = tuple(
        FieldDescriptor(
            name=col,
            kind=kinds[col],
            unit=units.get(col),
            description=descriptions.get(col),
        )
        for col in header
    )

    rows: list[Row] = []
    seen_keys: set[str] = set()
    for i, raw in enumerate(raw_rows):
        row: Row = {}
        for j, col in enumerate(header):
            cell = raw[j]
            kind = kinds[col]
            if kind is FieldKind.NUMERIC:
                value = _parse_numeric(cell)
                if value is None:
                    raise UnparseableNumeric(col, i, cell)
                row[col] = value
            else:
                if not cell.strip():
                    raise EmptyCell(col, i)
                row[col] = cell
        key = str(row[key_field])
        if key in seen_keys:
            raise DuplicateKey(key)
        seen_keys.add(key)
        rows.append(row)

    return Dataset(name=name, nl_description=nl_description, schema=schema, rows=tuple(rows))


def format_number(x: float) -> str:
    """Compact, deterministic rendering for labels and prompt digests."""
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return f"{x:.6g}"


@dataclass(frozen=True)
class DatasetFact:
    """One base-data (level 1) fact about a dataset."""

    field: str | None  # None for the row-count fact
    kind: str
    label: str
    minimum: float | None = None
    maximum: float | None = None
    distinct: int | None = None
    count: int | None = None


def describe_l1(dataset: Dataset) -> list[DatasetFact]:
    """One fact per field plus a row-count fact, with exact min/max ranges."""
    facts: list[DatasetFact] = []
    for f in dataset.schema:
        if f.kind is FieldKind.NUMERIC:
            values = dataset.column(f.name)
            lo, hi = min(values), max(values)
            facts.append(
                DatasetFact(
                    field=f.name,
                    kind=f.kind.value,
                    label=f"{f.name}: numeric, range {format_number(lo)}–{format_number(hi)}",
                    minimum=lo,
                    maximum=hi,
                )
            )
        else:
            distinct = len({str(row[f.name]) for row in dataset.rows})
            facts.append(
                DatasetFact(
                    field=f.name,
                    kind=f.kind.value,
                    label=f"{f.name}: {f.kind.value}, {distinct} distinct values",
                    distinct=distinct,
                )
            )
    facts.append(
        DatasetFact(
            field=None,
            kind="rows",
            label=f"{dataset.row_count} rows",
            count=dataset.row_count,
        )
    )
    return facts


def compute_statistic(dataset: Dataset, field_name: str, stat: StatisticKind | str) -> float:
    """Exact value of a statistic over all rows of one column.

    ``count`` is allowed on any field; the rest require a numeric field.
    Standard deviation is the population form (divide by n), so a single-row
    or constant column yields 0 rather than an error.
    """
    stat = StatisticKind(stat)
    descriptor = dataset.field(field_name)
    if stat is StatisticKind.COUNT:
        return float(dataset.row_count)
    if descriptor.kind is not FieldKind.NUMERIC:
        raise NonNumericField(field_name)
    values = dataset.column(field_name)
    if stat is StatisticKind.MEAN:
        return statistics.fmean(values)
    if stat is StatisticKind.STDEV:
        return statistics.pstdev(values) if len(values) >= 2 else 0.0
    if stat is StatisticKind.MIN:
        return min(values)
    if stat is StatisticKind.MAX:
        return max(values)
    if stat is StatisticKind.MEDIAN:
        return float(statistics.median(values))
    raise ValueError(f"unhandled statistic {stat}")


def dataset_to_json_str(dataset: Dataset) -> str:
    return json.dumps(dataset.to_json(), sort_keys=True)


def iter_numeric_pairs(dataset: Dataset) -> Iterable[tuple[str, str]]:
    names = [f.name for f in dataset.numeric_fields]
    for i, a in enumerate(names):
        for b in names[i + 1 :]:
            yield a, b
