"""Predefined joins: FK registration plus RID materialization.

Registering a join F(from_cols) -> P(to_cols) checks that to_cols is a key
of P and that every F row matches exactly one P row, then stores that match
as a hidden int64 column on F holding the P RID per row. Plans later join
on this pointer column instead of re-evaluating the value equality.

Both tables are sealed on registration; appending rows afterwards would
silently invalidate the materialized pointers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlreadyPredefined,
    DanglingForeignKey,
    EngineError,
    NotAKey,
)
from .storage import Catalog, ColumnType, Table


@dataclass(frozen=True)
class PredefinedJoin:
    """A registered FK equality join plus the name of its pointer column."""

    from_table: str
    from_cols: tuple[str, ...]
    to_table: str
    to_cols: tuple[str, ...]
    rid_column: str

    def describe(self) -> str:
        return (f"{self.from_table}({', '.join(self.from_cols)}) -> "
                f"{self.to_table}({', '.join(self.to_cols)})")


def _rid_column_name(table: Table, from_cols: tuple[str, ...]) -> str:
    base = "_rid_" + "_".join(from_cols)
    name = base
    ordinal = 2
    while table.has_column(name):
        name = f"{base}_{ordinal}"
        ordinal += 1
    return name


def _map_single_int(f_vals: np.ndarray, p_vals: np.ndarray,
                    p_table: str, f_table: str,
                    to_cols: tuple[str, ...]) -> np.ndarray:
    order = np.argsort(p_vals, kind="stable")
    keys = p_vals[order]
    dup = np.nonzero(keys[1:] == keys[:-1])[0]
    if len(dup):
        raise NotAKey(p_table, to_cols, int(keys[dup[0]]))
    pos = np.searchsorted(keys, f_vals)
    ok = (pos < len(keys))
    safe = np.minimum(pos, max(len(keys) - 1, 0))
    if len(keys):
        ok &= keys[safe] == f_vals
    else:
        ok = np.zeros(len(f_vals), dtype=bool)
    if not ok.all():
        raise DanglingForeignKey(f_table, int(np.nonzero(~ok)[0][0]))
    return order[pos].astype(np.int64) if len(f_vals) else np.empty(0, dtype=np.int64)


def _map_generic(f_rows, p_rows, p_table: str, f_table: str,
                 to_cols: tuple[str, ...]) -> np.ndarray:
    mapping: dict = {}
    for rid, key in enumerate(p_rows):
        if key in mapping:
            raise NotAKey(p_table, to_cols, key if len(to_cols) > 1 else key[0])
        mapping[key] = rid
    out = np.empty(len(f_rows), dtype=np.int64)
    for rid, key in enumerate(f_rows):
        try:
            out[rid] = mapping[key]
        except KeyError:
            raise DanglingForeignKey(f_table, rid) from None
    return out


def predefine_join(catalog: Catalog, from_table: str, from_cols,
                   to_table: str, to_cols) -> PredefinedJoin:
    """Register the join and materialize the pointer column on `from_table`."""
    from_cols = tuple(from_cols)
    to_cols = tuple(to_cols)
    f = catalog.table(from_table)
    p = catalog.table(to_table)
    if len(from_cols) != len(to_cols) or not from_cols:
        raise EngineError("column lists must be non-empty and of equal length")
    f_columns = [f.column(c) for c in from_cols]
    p_columns = [p.column(c) for c in to_cols]
    for fc, pc in zip(f_columns, p_columns):
        if fc.ctype is not pc.ctype:
            raise EngineError(
                f"type mismatch: {from_table}.{fc.name} vs {to_table}.{pc.name}")
    for pj in catalog.predefined_joins:
        if (pj.from_table, pj.from_cols, pj.to_table, pj.to_cols) == (
                from_table, from_cols, to_table, to_cols):
            raise AlreadyPredefined(pj.describe())

    if len(from_cols) == 1 and f_columns[0].ctype is not ColumnType.STR:
        rids = _map_single_int(f_columns[0].data, p_columns[0].data,
                               to_table, from_table, to_cols)
    else:
        f_rows = list(zip(*(c.data for c in f_columns)))
        p_rows = list(zip(*(c.data for c in p_columns)))
        rids = _map_generic(f_rows, p_rows, to_table, from_table, to_cols)

    name = _rid_column_name(f, from_cols)
    f.add_hidden_column(name, rids)
    f.sealed = True
    p.sealed = True
    join = PredefinedJoin(from_table, from_cols, to_table, to_cols, name)
    catalog.predefined_joins.append(join)
    return join


def rid_column_of(catalog: Catalog, join: PredefinedJoin) -> np.ndarray:
    """The materialized pointer column: F row i holds the RID of its P match."""
    return catalog.table(join.from_table).column(join.rid_column).data


def find_predefined(catalog: Catalog, from_table: str, from_cols,
                    to_table: str) -> PredefinedJoin | None:
    from_cols = tuple(from_cols)
    for pj in catalog.predefined_joins:
        if (pj.from_table, pj.from_cols, pj.to_table) == (from_table, from_cols, to_table):
            return pj
    return None
