"""Level-tagged narrative tree: validation, grounding, and chart references.

The generated text lives in a fixed three-deep tree (paragraph -> sentence ->
leaf), where every leaf carries the metadata that makes it draggable: the
data fields it talks about, any literal values it claims, and its semantic
level. Raw provider output enters through :func:`validate_tree`, which either
yields a fully-checked document or reports every violation with a JSON path;
nothing is ever partially accepted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .dataset import Dataset, FieldKind, StatisticKind, compute_statistic
from .errors import EmptySelection, StrataError, UnknownLeaf
from .levels import SemanticLevel, color_for  # noqa: F401  (color_for re-exported)
from .packets import DragPacket, PacketSource, ValueClaim


@dataclass
class SentenceLeaf:
    """One draggable span of text plus the metadata behind it."""

    id: str
    text: str
    level: SemanticLevel
    fields: tuple[str, ...] = ()
    values: tuple[ValueClaim, ...] = ()

    def to_json(self) -> dict:
        return {
            "kind": "leaf",
            "id": self.id,
            "text": self.text,
            "layer": int(self.level),
            "fields": list(self.fields),
            "values": [v.to_json() for v in self.values],
        }


@dataclass
class ChartRefToken:
    """Inline numbered link to a chart; numbers come from renumbering."""

    chart_id: str
    display_number: int | None = None

    def to_json(self) -> dict:
        return {"kind": "chart_ref", "chart_id": self.chart_id}


SentenceItem = SentenceLeaf | ChartRefToken


@dataclass
class Sentence:
    items: list[SentenceItem] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"items": [item.to_json() for item in self.items]}


@dataclass
class Paragraph:
    id: str
    sentences: list[Sentence] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"id": self.id, "sentences": [s.to_json() for s in self.sentences]}

    def leaves(self) -> Iterator[SentenceLeaf]:
        for sentence in self.sentences:
            for item in sentence.items:
                if isinstance(item, SentenceLeaf):
                    yield item


@dataclass
class NarrativeDocument:
    paragraphs: list[Paragraph] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"paragraphs": [p.to_json() for p in self.paragraphs]}

    def leaves(self) -> Iterator[SentenceLeaf]:
        for paragraph in self.paragraphs:
            yield from paragraph.leaves()

    def tokens(self) -> Iterator[ChartRefToken]:
        for paragraph in self.paragraphs:
            for sentence in paragraph.sentences:
                for item in sentence.items:
                    if isinstance(item, ChartRefToken):
                        yield item

    def ids(self) -> set[str]:
        """Every paragraph and leaf id in the document (one shared namespace)."""
        out = {p.id for p in self.paragraphs}
        out.update(leaf.id for leaf in self.leaves())
        return out

    def find_paragraph(self, paragraph_id: str) -> Paragraph | None:
        for paragraph in self.paragraphs:
            if paragraph.id == paragraph_id:
                return paragraph
        return None


# --- validation --------------------------------------------------------------

@dataclass(frozen=True)
class ValidationIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"

    def to_json(self) -> dict:
        return {"path": self.path, "message": self.message}


class NarrativeValidationError(StrataError):
    """Raised when a raw tree violates the narrative contract."""

    code = "invalid_narrative"

    def __init__(self, issues: list[ValidationIssue]):
        summary = "; ".join(str(issue) for issue in issues[:5])
        if len(issues) > 5:
            summary += f"; ... {len(issues) - 5} more"
        super().__init__(f"narrative failed validation: {summary}")
        self.issues = issues


_STAT_NAMES = {s.value for s in StatisticKind}


def _check_leaf(
    obj: Mapping, path: str, dataset: Dataset, issues: list[ValidationIssue]
) -> SentenceLeaf | None:
    ok = True
    for forbidden in ("items", "sentences", "paragraphs"):
        if forbidden in obj:
            issues.append(ValidationIssue(path, f"wrong nesting depth: leaf contains {forbidden!r}"))
            ok = False

    leaf_id = obj.get("id")
    if not isinstance(leaf_id, str) or not leaf_id:
        issues.append(ValidationIssue(f"{path}.id", "leaf id must be a non-empty string"))
        ok = False

    text = obj.get("text")
    if not isinstance(text, str) or not text.strip():
        issues.append(ValidationIssue(f"{path}.text", "leaf text must be non-empty"))
        ok = False

    layer = obj.get("layer")
    level: SemanticLevel | None = None
    if isinstance(layer, bool) or not isinstance(layer, int) or not 1 <= layer <= 4:
        issues.append(
            ValidationIssue(f"{path}.layer", f"level out of range: {layer!r} (expected 1-4)")
        )
        ok = False
    else:
        level = SemanticLevel(layer)

    raw_fields = obj.get("fields", [])
    fields: list[str] = []
    if not isinstance(raw_fields, list):
        issues.append(ValidationIssue(f"{path}.fields", "fields must be a list"))
        ok = False
    else:
        for i, name in enumerate(raw_fields):
            if not isinstance(name, str) or not dataset.has_field(name):
                issues.append(
                    ValidationIssue(f"{path}.fields[{i}]", f"unknown field {name!r}")
                )
                ok = False
            else:
                fields.append(name)

    raw_values = obj.get("values", [])
    claims: list[ValueClaim] = []
    if not isinstance(raw_values, list):
        issues.append(ValidationIssue(f"{path}.values", "values must be a list"))
        ok = False
    else:
        for i, raw in enumerate(raw_values):
            vpath = f"{path}.values[{i}]"
            if not isinstance(raw, Mapping) or "field" not in raw or "value" not in raw:
                issues.append(
                    ValidationIssue(vpath, "value entries need a field and a value")
                )
                ok = False
                continue
            fname = raw["field"]
            if not isinstance(fname, str) or not dataset.has_field(fname):
                issues.append(ValidationIssue(f"{vpath}.field", f"unknown field {fname!r}"))
                ok = False
                continue
            literal = raw["value"]
            descriptor = dataset.field(fname)
            if descriptor.kind is FieldKind.NUMERIC:
                try:
                    literal = float(literal)
                except (TypeError, ValueError):
                    issues.append(
                        ValidationIssue(
                            f"{vpath}.value",
                            f"malformed value literal {raw['value']!r} for numeric field {fname!r}",
                        )
                    )
                    ok = False
                    continue
            else:
                if not isinstance(literal, str) or not literal:
                    issues.append(
                        ValidationIssue(
                            f"{vpath}.value",
                            f"value for {descriptor.kind.value} field {fname!r} must be a non-empty string",
                        )
                    )
                    ok = False
                    continue
            stat = raw.get("stat")
            if stat is not None and stat not in _STAT_NAMES:
                issues.append(ValidationIssue(f"{vpath}.stat", f"unknown statistic {stat!r}"))
                ok = False
                continue
            claims.append(ValueClaim(field=fname, value=literal, stat=stat))

    # Data-referencing low-level leaves must say which field they reference.
    if level is not None and level.is_low and claims and not fields:
        issues.append(
            ValidationIssue(
                f"{path}.fields",
                "level 1-2 leaf claims values but lists no fields",
            )
        )
        ok = False

    if not ok or level is None:
        return None
    return SentenceLeaf(
        id=leaf_id, text=text, level=level, fields=tuple(fields), values=tuple(claims)
    )


def collect_tree_errors(
    raw: object,
    dataset: Dataset,
    reserved_ids: Iterable[str] = (),
    allow_chart_refs: bool = False,
) -> tuple[NarrativeDocument | None, list[ValidationIssue]]:
    """Parse an untyped tree, reporting every contract violation with its path.

    Returns (document, []) on success or (None, issues) on any failure. The
    provider never emits chart references, so they are rejected unless the
    caller is re-validating an engine-produced document.
    """
    issues: list[ValidationIssue] = []
    if not isinstance(raw, Mapping):
        return None, [ValidationIssue("$", "response must be a JSON object")]
    raw_paragraphs = raw.get("paragraphs")
    if not isinstance(raw_paragraphs, list) or not raw_paragraphs:
        return None, [
            ValidationIssue("paragraphs", "document must contain a non-empty paragraph list")
        ]

    seen_ids: set[str] = set(reserved_ids)
    paragraphs: list[Paragraph] = []
    for pi, raw_paragraph in enumerate(raw_paragraphs):
        ppath = f"paragraphs[{pi}]"
        if not isinstance(raw_paragraph, Mapping):
            issues.append(ValidationIssue(ppath, "paragraph must be an object"))
            continue
        if "items" in raw_paragraph:
            issues.append(
                ValidationIssue(ppath, "wrong nesting depth: paragraph holds items directly")
            )
            continue
        paragraph_id = raw_paragraph.get("id")
        if not isinstance(paragraph_id, str) or not paragraph_id:
            issues.append(ValidationIssue(f"{ppath}.id", "paragraph id must be a non-empty string"))
            paragraph_id = None
        elif paragraph_id in seen_ids:
            issues.append(ValidationIssue(f"{ppath}.id", f"duplicate id {paragraph_id!r}"))
            paragraph_id = None
        else:
            seen_ids.add(paragraph_id)

        raw_sentences = raw_paragraph.get("sentences")
        if not isinstance(raw_sentences, list):
            issues.append(ValidationIssue(f"{ppath}.sentences", "sentences must be a list"))
            continue
        sentences: list[Sentence] = []
        for si, raw_sentence in enumerate(raw_sentences):
            spath = f"{ppath}.sentences[{si}]"
            if not isinstance(raw_sentence, Mapping):
                issues.append(ValidationIssue(spath, "sentence must be an object"))
                continue
            for forbidden in ("sentences", "paragraphs"):
                if forbidden in raw_sentence:
                    issues.append(
                        ValidationIssue(
                            spath, f"wrong nesting depth: sentence contains {forbidden!r}"
                        )
                    )
            raw_items = raw_sentence.get("items")
            if not isinstance(raw_items, list):
                issues.append(ValidationIssue(f"{spath}.items", "items must be a list"))
                continue
            items: list[SentenceItem] = []
            for ii, raw_item in enumerate(raw_items):
                ipath = f"{spath}.items[{ii}]"
                if not isinstance(raw_item, Mapping):
                    issues.append(ValidationIssue(ipath, "item must be an object"))
                    continue
                kind = raw_item.get("kind", "leaf")
                if kind == "chart_ref":
                    if not allow_chart_refs:
                        issues.append(
                            ValidationIssue(ipath, "generated text may not invent chart references")
                        )
                        continue
                    chart_id = raw_item.get("chart_id")
                    if not isinstance(chart_id, str) or not chart_id:
                        issues.append(
                            ValidationIssue(f"{ipath}.chart_id", "chart_id must be a non-empty string")
                        )
                        continue
                    items.append(ChartRefToken(chart_id=chart_id))
                elif kind == "leaf":
                    leaf = _check_leaf(raw_item, ipath, dataset, issues)
                    if leaf is not None:
                        if leaf.id in seen_ids:
                            issues.append(
                                ValidationIssue(f"{ipath}.id", f"duplicate id {leaf.id!r}")
                            )
                        else:
                            seen_ids.add(leaf.id)
                            items.append(leaf)
                else:
                    issues.append(ValidationIssue(f"{ipath}.kind", f"unknown item kind {kind!r}"))
            sentences.append(Sentence(items=items))
        if paragraph_id is not None:
            paragraphs.append(Paragraph(id=paragraph_id, sentences=sentences))

    if issues:
        return None, issues
    return NarrativeDocument(paragraphs=paragraphs), []


def validate_tree(
    raw: object,
    dataset: Dataset,
    reserved_ids: Iterable[str] = (),
    allow_chart_refs: bool = False,
) -> NarrativeDocument:
    """All-or-nothing parse of a raw tree; raises with the full issue list."""
    document, issues = collect_tree_errors(raw, dataset, reserved_ids, allow_chart_refs)
    if document is None:
        raise NarrativeValidationError(issues)
    return document


# --- grounding ----------------------------------------------------------------

DEFAULT_GROUNDING_TOLERANCE = 0.01


@dataclass(frozen=True)
class GroundingMismatch:
    leaf_id: str
    field: str
    claimed: float
    actual: float
    relative_error: float

    def to_json(self) -> dict:
        return {
            "leaf_id": self.leaf_id,
            "field": self.field,
            "claimed": self.claimed,
            "actual": self.actual,
            "relative_error": self.relative_error,
        }


@dataclass(frozen=True)
class GroundingReport:
    checked: int
    skipped: int
    mismatches: tuple[GroundingMismatch, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_json(self) -> dict:
        return {
            "checked": self.checked,
            "skipped": self.skipped,
            "mismatches": [m.to_json() for m in self.mismatches],
        }


def _relative_error(claimed: float, actual: float) -> float:
    if actual == 0.0:
        return 0.0 if claimed == 0.0 else float("inf")
    return abs(claimed - actual) / abs(actual)


def ground_check(
    document: NarrativeDocument,
    dataset: Dataset,
    tolerance: float = DEFAULT_GROUNDING_TOLERANCE,
) -> GroundingReport:
    """Verify every numeric claim in low-level leaves against the dataset.

    L1 leaves are checked against the row their key anchor names (the value
    claim on the key field); L2 leaves against the statistic the claim names
    (mean when unnamed). Claims that cannot be resolved to a reference value
    are skipped, not failed. High-level (L3/L4) numeric claims are outside
    the check and count as skipped.
    """
    key_name = dataset.key_field.name
    checked = 0
    skipped = 0
    mismatches: list[GroundingMismatch] = []

    for leaf in document.leaves():
        numeric_claims = [
            c for c in leaf.values if dataset.field(c.field).kind is FieldKind.NUMERIC
        ]
        if not numeric_claims:
            continue
        if not leaf.level.is_low:
            skipped += len(numeric_claims)
            continue

        anchor_key: str | None = None
        if leaf.level is SemanticLevel.L1:
            anchor = next((c for c in leaf.values if c.field == key_name), None)
            if anchor is not None and dataset.has_key(str(anchor.value)):
                anchor_key = str(anchor.value)

        for claim in numeric_claims:
            claimed = float(claim.value)
            if leaf.level is SemanticLevel.L1:
                if anchor_key is None:
                    skipped += 1
                    continue
                actual = float(dataset.value(anchor_key, claim.field))
            else:
                stat = claim.stat or StatisticKind.MEAN.value
                actual = compute_statistic(dataset, claim.field, stat)
            checked += 1
            rel = _relative_error(claimed, actual)
            if rel > tolerance:
                mismatches.append(
                    GroundingMismatch(
                        leaf_id=leaf.id,
                        field=claim.field,
                        claimed=claimed,
                        actual=actual,
                        relative_error=rel,
                    )
                )

    return GroundingReport(checked=checked, skipped=skipped, mismatches=tuple(mismatches))


# --- chart reference numbering -------------------------------------------------

def renumber_chart_refs(document: NarrativeDocument) -> dict[str, int]:
    """Number charts 1..n by first token appearance in document order.

    Updates every token in place (all tokens of one chart share a number) and
    returns the chart_id -> display_number mapping. Idempotent.
    """
    numbers: dict[str, int] = {}
    for token in document.tokens():
        if token.chart_id not in numbers:
            numbers[token.chart_id] = len(numbers) + 1
        token.display_number = numbers[token.chart_id]
    return numbers


# --- packet construction ---------------------------------------------------------

def packet_from_text(
    document: NarrativeDocument, leaf_ids: Iterable[str], dataset: Dataset
) -> DragPacket:
    """Recover the metadata under a text selection as a drag packet.

    The packet unions the selected leaves' fields and values in document
    order; value claims on the key field become packet keys (dragging the
    words "98101" means dragging that row). The packet level is the maximum
    leaf level, the most conservative height for a mixed selection. The
    dataset is consulted only for the key field's name.
    """
    wanted = list(leaf_ids)
    if not wanted:
        raise EmptySelection("no leaves selected")
    wanted_set = set(wanted)
    known_ids = {leaf.id for leaf in document.leaves()}
    for leaf_id in wanted:
        if leaf_id not in known_ids:
            raise UnknownLeaf(leaf_id)

    selected: list[tuple[Paragraph, SentenceLeaf]] = []
    for paragraph in document.paragraphs:
        for leaf in paragraph.leaves():
            if leaf.id in wanted_set:
                selected.append((paragraph, leaf))

    key_name = dataset.key_field.name
    fields: list[str] = []
    values: list[ValueClaim] = []
    keys: list[str] = []
    texts: list[str] = []
    for _, leaf in selected:
        texts.append(leaf.text)
        for name in leaf.fields:
            if name != key_name and name not in fields:
                fields.append(name)
        for claim in leaf.values:
            if claim.field == key_name:
                key = str(claim.value)
                if key not in keys:
                    keys.append(key)
            elif claim not in values:
                values.append(claim)

    return DragPacket(
        source=PacketSource.TEXT,
        level=max(leaf.level for _, leaf in selected),
        fields=tuple(fields),
        values=tuple(values),
        keys=tuple(keys),
        text=" ".join(texts),
        origin_paragraph_id=selected[0][0].id,
    )
