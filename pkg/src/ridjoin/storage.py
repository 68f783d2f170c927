"""Columnar in-memory tables with positional row identifiers.

A table is a set of equal-length column vectors. The row identifier (RID) of
a row is simply its 0-based position, so RIDs are dense, never persisted,
and survive nothing: loading appends rows and must finish before queries
run. Rows are grouped into fixed-size zones; zone k covers RIDs
[k*zone_size, (k+1)*zone_size) and the last zone may be short.

Column data lives in numpy arrays: int64 for INT64 and DATE (days since
1970-01-01), object dtype for STR. Scans hand out array slices, so nothing
here copies column data.
"""

from __future__ import annotations

import csv
import datetime
import enum
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    CsvParseError,
    DuplicateColumn,
    DuplicateTable,
    TableSealed,
    UnknownColumn,
    UnknownTable,
    ZoneOutOfRange,
)

_EPOCH_ORDINAL = datetime.date(1970, 1, 1).toordinal()

DEFAULT_ZONE_SIZE = 1024


class ColumnType(enum.Enum):
    INT64 = "INT64"
    STR = "STR"
    DATE = "DATE"


def date_to_days(text: str) -> int:
    """ISO-8601 date string to days since 1970-01-01."""
    return datetime.date.fromisoformat(text).toordinal() - _EPOCH_ORDINAL


def days_to_date(days: int) -> str:
    return datetime.date.fromordinal(int(days) + _EPOCH_ORDINAL).isoformat()


def zone_count(row_count: int, zone_size: int) -> int:
    return -(-row_count // zone_size)


@dataclass
class ZoneConfig:
    """Run-time scan granularity; one vector/chunk spans one zone."""

    zone_size: int = DEFAULT_ZONE_SIZE

    def __post_init__(self):
        if self.zone_size < 1:
            raise ValueError("zone_size must be positive")


@dataclass
class Column:
    name: str
    ctype: ColumnType
    visibility: str = "user"  # "user" | "hidden-rid"
    data: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    def __post_init__(self):
        if len(self.data) == 0:
            dtype = object if self.ctype is ColumnType.STR else np.int64
            self.data = np.empty(0, dtype=dtype)


class Table:
    """Named collection of columns; all user columns share one length."""

    def __init__(self, name: str, schema: Sequence[tuple[str, ColumnType]]):
        self.name = name
        self.columns: list[Column] = []
        self._by_name: dict[str, Column] = {}
        self.sealed = False
        for col_name, ctype in schema:
            self._add_column(Column(col_name, ctype))

    def _add_column(self, col: Column) -> None:
        if col.name in self._by_name:
            raise DuplicateColumn(f"{self.name}.{col.name}")
        self.columns.append(col)
        self._by_name[col.name] = col

    @property
    def row_count(self) -> int:
        return len(self.columns[0].data) if self.columns else 0

    @property
    def user_columns(self) -> list[Column]:
        return [c for c in self.columns if c.visibility == "user"]

    def column(self, name: str) -> Column:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownColumn(f"{self.name}.{name}") from None

    def has_column(self, name: str) -> bool:
        return name in self._by_name

    def add_hidden_column(self, name: str, data: np.ndarray) -> Column:
        """Attach an engine-managed int64 column (used for materialized RIDs)."""
        if len(data) != self.row_count:
            raise ValueError("hidden column length mismatch")
        col = Column(name, ColumnType.INT64, visibility="hidden-rid",
                     data=np.ascontiguousarray(data, dtype=np.int64))
        self._add_column(col)
        return col

    def extend(self, column_values: Sequence[Sequence]) -> int:
        """Append rows given one value sequence per user column, in order.

        Returns the number of rows appended. Tables referenced by a
        predefined join are sealed: their RID columns and key checks would
        go stale on append.
        """
        if self.sealed:
            raise TableSealed(self.name)
        cols = self.user_columns
        if len(column_values) != len(cols):
            raise ArityMismatch(0, len(cols), len(column_values))
        lengths = {len(v) for v in column_values}
        if len(lengths) > 1:
            raise ValueError("ragged column data")
        for col, values in zip(cols, column_values):
            dtype = object if col.ctype is ColumnType.STR else np.int64
            arr = np.asarray(values, dtype=dtype)
            col.data = arr if len(col.data) == 0 else np.concatenate([col.data, arr])
        return len(column_values[0]) if column_values else 0

    def zone_count(self, zone_size: int) -> int:
        return zone_count(self.row_count, zone_size)


@dataclass
class ZoneChunk:
    """One zone's worth of values plus the matching virtual RID vector."""

    values: dict[str, np.ndarray]
    rids: np.ndarray

    def __len__(self) -> int:
        return len(self.rids)


def scan_zone(table: Table, zone_index: int, zone_size: int,
              columns: Sequence[str]) -> ZoneChunk:
    """Slice out zone `zone_index` of the requested columns.

    The RID vector is arithmetic (np.arange); asking for zero columns still
    yields RIDs and performs no column reads.
    """
    n_zones = table.zone_count(zone_size)
    if not 0 <= zone_index < n_zones:
        raise ZoneOutOfRange(f"{table.name} zone {zone_index} of {n_zones}")
    lo = zone_index * zone_size
    hi = min(table.row_count, lo + zone_size)
    values = {name: table.column(name).data[lo:hi] for name in columns}
    return ZoneChunk(values=values, rids=np.arange(lo, hi, dtype=np.int64))


def _convert_field(text: str, ctype: ColumnType):
    if ctype is ColumnType.INT64:
        return int(text)
    if ctype is ColumnType.DATE:
        return date_to_days(text)
    return text


def load_csv(table: Table, source: io.TextIOBase | str, header: bool = False) -> int:
    """Append RFC-4180 CSV records to `table`; returns rows appended.

    Each record must carry exactly one field per user column. Conversion
    failures raise CsvParseError with the 1-based source line.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    if table.sealed:
        raise TableSealed(table.name)
    reader = csv.reader(source)
    cols = table.user_columns
    staged: list[list] = [[] for _ in cols]
    first = True
    for record in reader:
        if first and header:
            first = False
            continue
        first = False
        if not record:
            continue
        if len(record) != len(cols):
            raise ArityMismatch(reader.line_num, len(cols), len(record))
        for col, val, bucket in zip(cols, record, staged):
            try:
                bucket.append(_convert_field(val, col.ctype))
            except ValueError as exc:
                raise CsvParseError(reader.line_num, col.name, str(exc)) from None
    if staged and staged[0]:
        return table.extend(staged)
    return 0


def write_csv(table: Table, out: io.TextIOBase, header: bool = True) -> None:
    """Dump user columns as CSV; DATE renders back to ISO form."""
    writer = csv.writer(out, lineterminator="\n")
    cols = table.user_columns
    if header:
        writer.writerow([c.name for c in cols])
    renderers = [
        (lambda v: days_to_date(v)) if c.ctype is ColumnType.DATE else (lambda v: v)
        for c in cols
    ]
    for i in range(table.row_count):
        writer.writerow([r(c.data[i]) for c, r in zip(cols, renderers)])


class Catalog:
    """All tables plus the predefined-join and RID-index registries."""

    def __init__(self):
        self.tables: dict[str, Table] = {}
        self.predefined_joins: list = []
        self.rid_indices: list = []
        self.extended_rid_indices: list = []

    def create_table(self, name: str, schema: Sequence[tuple[str, ColumnType]]) -> Table:
        if name in self.tables:
            raise DuplicateTable(name)
        table = Table(name, schema)
        self.tables[name] = table
        return table

    def table(self, name: str) -> Table:
        try:
            return self.tables[name]
        except KeyError:
            raise UnknownTable(name) from None
