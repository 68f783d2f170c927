"""CSR adjacency indices over materialized RID columns.

A RID index inverts one predefined join: for each P RID it lists, in
ascending order, the F RIDs whose pointer column equals it. An extended
index chains two predefined joins sharing the same F table: keyed by the
near-side P1 RID, each entry carries the (F RID, far-side P2 RID) pair, so
a plan can hop P1 -> P2 without ever scanning F.

Both are plain offset/value array pairs (offsets has one slot per P RID
plus a terminator), built in one argsort pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AlreadyIndexed, JoinsOnDifferentTables, RidOutOfRange
from .ridmat import PredefinedJoin, rid_column_of
from .storage import Catalog


@dataclass(frozen=True)
class RidIndex:
    join: PredefinedJoin
    offsets: np.ndarray  # len = P.row_count + 1
    values: np.ndarray   # F RIDs grouped by P RID, ascending within a group


@dataclass(frozen=True)
class ExtendedRidIndex:
    join_near: PredefinedJoin
    join_far: PredefinedJoin
    offsets: np.ndarray   # len = near P.row_count + 1
    f_rids: np.ndarray    # entry component 1, ascending within a group
    far_rids: np.ndarray  # entry component 2, parallel to f_rids


def build_rid_index(catalog: Catalog, join: PredefinedJoin) -> RidIndex:
    if find_rid_index(catalog, join) is not None:
        raise AlreadyIndexed(join.describe())
    rid_col = rid_column_of(catalog, join)
    p_rows = catalog.table(join.to_table).row_count
    values = np.argsort(rid_col, kind="stable").astype(np.int64)
    counts = np.bincount(rid_col, minlength=p_rows)
    offsets = np.zeros(p_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    index = RidIndex(join=join, offsets=offsets, values=values)
    catalog.rid_indices.append(index)
    return index


def build_extended_rid_index(catalog: Catalog, join_near: PredefinedJoin,
                             join_far: PredefinedJoin) -> ExtendedRidIndex:
    if join_near.from_table != join_far.from_table:
        raise JoinsOnDifferentTables(
            f"{join_near.from_table} vs {join_far.from_table}")
    if find_extended_index(catalog, join_near, join_far) is not None:
        raise AlreadyIndexed(f"{join_near.describe()} / {join_far.describe()}")
    near = rid_column_of(catalog, join_near)
    far = rid_column_of(catalog, join_far)
    p_rows = catalog.table(join_near.to_table).row_count
    order = np.argsort(near, kind="stable").astype(np.int64)
    counts = np.bincount(near, minlength=p_rows)
    offsets = np.zeros(p_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    index = ExtendedRidIndex(join_near=join_near, join_far=join_far,
                             offsets=offsets, f_rids=order,
                             far_rids=far[order])
    catalog.extended_rid_indices.append(index)
    return index


def neighbors(index: RidIndex, p_rid: int) -> np.ndarray:
    """All F RIDs pointing at `p_rid` (ascending); empty array if none."""
    if not 0 <= p_rid < len(index.offsets) - 1:
        raise RidOutOfRange(f"{index.join.to_table} RID {p_rid}")
    return index.values[index.offsets[p_rid]:index.offsets[p_rid + 1]]


def extended_neighbors(index: ExtendedRidIndex, p_rid: int) -> tuple[np.ndarray, np.ndarray]:
    """(F RIDs, far P RIDs) for near RID `p_rid`; parallel arrays."""
    if not 0 <= p_rid < len(index.offsets) - 1:
        raise RidOutOfRange(f"{index.join_near.to_table} RID {p_rid}")
    lo, hi = index.offsets[p_rid], index.offsets[p_rid + 1]
    return index.f_rids[lo:hi], index.far_rids[lo:hi]


def find_rid_index(catalog: Catalog, join: PredefinedJoin) -> RidIndex | None:
    for idx in catalog.rid_indices:
        if idx.join == join:
            return idx
    return None


def find_extended_index(catalog: Catalog, join_near: PredefinedJoin,
                        join_far: PredefinedJoin) -> ExtendedRidIndex | None:
    for idx in catalog.extended_rid_indices:
        if idx.join_near == join_near and idx.join_far == join_far:
            return idx
    return None
