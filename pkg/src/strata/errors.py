"""Exception hierarchy shared across the engine.

Every error carries a stable machine-readable ``code`` so the HTTP layer and
the CLI can surface failures without string-matching messages.
"""

from __future__ import annotations


class StrataError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, **details: object):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_json(self) -> dict:
        return {"code": self.code, "message": self.message, **self.details}


# --- dataset loading -------------------------------------------------------

class FileUnreadable(StrataError):
    code = "file_unreadable"


class EmptyDataset(StrataError):
    code = "empty_dataset"


class DuplicateKey(StrataError):
    code = "duplicate_key"

    def __init__(self, key: str):
        super().__init__(f"duplicate key value {key!r}", key=key)
        self.key = key


class RaggedRow(StrataError):
    code = "ragged_row"

    def __init__(self, row: int, expected: int, got: int):
        super().__init__(
            f"row {row} has {got} cells, expected {expected}", row=row
        )
        self.row = row


class UnparseableNumeric(StrataError):
    code = "unparseable_numeric"

    def __init__(self, field: str, row: int, cell: str):
        super().__init__(
            f"cell {cell!r} in numeric field {field!r} (row {row}) is not a finite number",
            field=field,
            row=row,
        )
        self.field = field
        self.row = row


class EmptyCell(StrataError):
    """Missing cells are a load error; they are never imputed."""

    code = "empty_cell"

    def __init__(self, field: str, row: int):
        super().__init__(f"empty cell in field {field!r} (row {row})", field=field, row=row)


# --- field / key lookups ---------------------------------------------------

class UnknownField(StrataError):
    code = "unknown_field"

    def __init__(self, field: str):
        super().__init__(f"unknown field {field!r}", field=field)
        self.field = field


class UnknownKey(StrataError):
    code = "unknown_key"

    def __init__(self, key: str):
        super().__init__(f"unknown row key {key!r}", key=key)
        self.key = key


class NonNumericField(StrataError):
    code = "non_numeric_field"

    def __init__(self, field: str):
        super().__init__(f"field {field!r} is not numeric", field=field)
        self.field = field


class DegenerateVariance(StrataError):
    code = "degenerate_variance"


class TooFewRows(StrataError):
    code = "too_few_rows"


# --- narrative / packets ---------------------------------------------------

class UnknownLeaf(StrataError):
    code = "unknown_leaf"

    def __init__(self, leaf_id: str):
        super().__init__(f"no leaf with id {leaf_id!r}", leaf_id=leaf_id)


class EmptySelection(StrataError):
    code = "empty_selection"


class UnknownMark(StrataError):
    code = "unknown_mark"


class InvalidPacket(StrataError):
    code = "invalid_packet"


# --- chart synthesis -------------------------------------------------------

class ChartSynthesisError(StrataError):
    code = "chart_synthesis_error"


class NoFields(ChartSynthesisError):
    """Packet carries keys or values but no field: nothing to chart."""

    code = "no_fields"


class UnknownChart(StrataError):
    code = "unknown_chart"

    def __init__(self, chart_id: str):
        super().__init__(f"no chart with id {chart_id!r}", chart_id=chart_id)


# --- provider / generation -------------------------------------------------

class LlmFailure(StrataError):
    """Generation gave up: every attempt failed validation."""

    code = "llm_failure"

    def __init__(self, message: str, errors: list | None = None, attempts: int = 0):
        super().__init__(message, attempts=attempts)
        self.errors = errors or []
        self.attempts = attempts


class TransportError(StrataError):
    """Network or auth failure reaching the provider; distinct from validation."""

    code = "transport_error"


class MissingFixture(StrataError):
    code = "missing_fixture"

    def __init__(self, digest: str):
        super().__init__(f"no fixture recorded for request digest {digest}", digest=digest)
        self.digest = digest


# --- sessions --------------------------------------------------------------

class UnknownSession(StrataError):
    code = "unknown_session"

    def __init__(self, session_id: str):
        super().__init__(f"no session with id {session_id!r}", session_id=session_id)


class InvalidGoal(StrataError):
    code = "invalid_goal"


class SchemaVersionMismatch(StrataError):
    code = "schema_version_mismatch"

    def __init__(self, found: object, expected: int):
        super().__init__(
            f"session file schema_version {found!r} unsupported (expected {expected})",
            found=found,
            expected=expected,
        )


class CorruptSessionFile(StrataError):
    code = "corrupt_session_file"
