"""Exception hierarchy for the engine.

Every error raised on a user-visible path derives from EngineError so the
CLI can map it to exit code 1; anything else escaping is an internal bug
(exit code 2).
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all user-facing engine errors."""


# ---------------------------------------------------------------- storage

class DuplicateTable(EngineError):
    pass


class DuplicateColumn(EngineError):
    pass


class UnknownTable(EngineError):
    pass


class UnknownColumn(EngineError):
    pass


class CsvParseError(EngineError):
    """A CSV record could not be converted to the table's column types."""

    def __init__(self, line: int, column: str, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class ArityMismatch(EngineError):
    """A CSV record has the wrong number of fields."""

    def __init__(self, line: int, expected: int, got: int):
        super().__init__(f"line {line}: expected {expected} fields, got {got}")
        self.line = line
        self.expected = expected
        self.got = got


class ZoneOutOfRange(EngineError):
    pass


class TableSealed(EngineError):
    """Rows may not be added once a table participates in a predefined join."""


# ----------------------------------------------------------------- ridmat

class NotAKey(EngineError):
    """The referenced columns are not unique; carries a duplicate witness."""

    def __init__(self, table: str, columns: tuple[str, ...], witness):
        super().__init__(
            f"{table}({', '.join(columns)}) is not a key: duplicate value {witness!r}"
        )
        self.table = table
        self.columns = columns
        self.witness = witness


class DanglingForeignKey(EngineError):
    """A referencing row has no match; carries the first offending RID."""

    def __init__(self, table: str, rid: int):
        super().__init__(f"{table} row {rid} has no matching referenced row")
        self.table = table
        self.rid = rid


class AlreadyPredefined(EngineError):
    pass


# --------------------------------------------------------------- ridindex

class AlreadyIndexed(EngineError):
    pass


class JoinsOnDifferentTables(EngineError):
    pass


class RidOutOfRange(EngineError):
    pass


# --------------------------------------------------------------- sqlfront

class SqlSyntaxError(EngineError):
    """Syntax error with the character offset and the expected token set."""

    def __init__(self, position: int, expected: tuple[str, ...], found: str):
        super().__init__(
            f"at offset {position}: expected {' or '.join(expected)}, found {found}"
        )
        self.position = position
        self.expected = expected
        self.found = found


class ResolutionError(EngineError):
    """Unknown table, column, or alias in a parsed statement."""


class UnsupportedFeature(EngineError):
    """Recognized but deliberately unsupported SQL construct."""

    def __init__(self, feature: str, position: int = -1):
        super().__init__(f"unsupported: {feature}")
        self.feature = feature
        self.position = position


# ---------------------------------------------------------------- planner

class DisconnectedJoinGraph(EngineError):
    pass


class CardinalityUnavailable(EngineError):
    """A user-supplied cardinality file is missing a required subquery key."""
