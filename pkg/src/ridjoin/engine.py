"""Vectorized pull-based execution with sideways information passing.

Every operator produces DataChunks at most one zone wide. A join fully
drains its build child, builds an associative table on the build keys, and
only then pulls probe chunks, so by the time any probe-side scan starts,
every sip filter aimed at it has been registered.

Sip filters are exact bitmasks, never approximations: the row bitmask marks
exactly the RIDs present on the build side (directly, via a RID index, or
via an extended index), and the zone bitmask has bit z set iff some marked
row lives in zone z. A semijoin scan intersects all registered filters,
skips zones whose combined zone bit is 0 without touching column data, and
applies the combined row bits as its selection vector.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ._match import KeyIndex, encode_keys, expand_ranges
from .errors import RidOutOfRange
from .plans import (
    AggregateNode,
    JoinNode,
    PlanNode,
    ProjectNode,
    ScanNode,
    rid_slot,
)
from .ridindex import ExtendedRidIndex, RidIndex
from .sqlfront import ColRef
from .storage import Catalog, Table, ZoneConfig, zone_count


# ------------------------------------------------------------- sip filters

@dataclass(frozen=True)
class SipFilter:
    """Exact row/zone bitmask pair aimed at one scan alias."""

    target_alias: str
    zone_bits: np.ndarray
    row_bits: np.ndarray


def _zones_from_rows(row_bits: np.ndarray, zone_size: int) -> np.ndarray:
    """Zone bits derived from row bits in one vectorized pass."""
    n = len(row_bits)
    zones = zone_count(n, zone_size)
    if zones * zone_size == n:
        return row_bits.reshape(zones, zone_size).any(axis=1)
    padded = np.zeros(zones * zone_size, dtype=bool)
    padded[:n] = row_bits
    return padded.reshape(zones, zone_size).any(axis=1)


def _mask_pair(rids: np.ndarray, table_size: int,
               zone_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Masks from pre-validated rids. Zone bits come from the rids directly
    when they are sparse, else from one pass over the row bits (cheaper than
    dividing millions of rids when most zones are hit anyway)."""
    row_bits = np.zeros(table_size, dtype=bool)
    row_bits[rids] = True
    if len(rids) * 4 < table_size:
        zone_bits = np.zeros(zone_count(table_size, zone_size), dtype=bool)
        zone_bits[rids // zone_size] = True
        return zone_bits, row_bits
    return _zones_from_rows(row_bits, zone_size), row_bits


def build_sip_filters(rids: np.ndarray, table_size: int,
                      zone_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Bitmasks marking exactly `rids` (duplicates are harmless).

    Returns (zone_bits, row_bits); zone bit z is set iff some marked row
    falls in zone z.
    """
    rids = np.asarray(rids, dtype=np.int64)
    if len(rids) and (rids.min() < 0 or rids.max() >= table_size):
        bad = rids[(rids < 0) | (rids >= table_size)][0]
        raise RidOutOfRange(f"RID {bad} outside table of {table_size} rows")
    return _mask_pair(rids, table_size, zone_size)


def build_reverse_sip_filters(build_rids: np.ndarray, index: RidIndex,
                              zone_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Bitmasks over the referencing table: mark every F row whose pointer
    lands in `build_rids` (P-side RIDs), found through the RID index."""
    build_rids = np.asarray(build_rids, dtype=np.int64)
    p_rows = len(index.offsets) - 1
    f_rows = len(index.values)
    if len(build_rids) and (build_rids.min() < 0 or build_rids.max() >= p_rows):
        bad = build_rids[(build_rids < 0) | (build_rids >= p_rows)][0]
        raise RidOutOfRange(f"RID {bad} outside table of {p_rows} rows")
    marked = np.zeros(p_rows, dtype=bool)
    marked[build_rids] = True
    if 2 * int(marked.sum()) > p_rows:
        # The per-key lists partition the F rids (each F row points at
        # exactly one P row), so with a dense build side it is cheaper to
        # expand the complement and negate than to expand the build side.
        comp = np.nonzero(~marked)[0]
        starts = index.offsets[comp]
        counts = index.offsets[comp + 1] - starts
        row_bits = np.ones(f_rows, dtype=bool)
        row_bits[index.values[expand_ranges(starts, counts)]] = False
        return _zones_from_rows(row_bits, zone_size), row_bits
    distinct = np.nonzero(marked)[0]
    starts = index.offsets[distinct]
    counts = index.offsets[distinct + 1] - starts
    f_rids = index.values[expand_ranges(starts, counts)]
    # index values are F rids by construction; skip revalidation
    return _mask_pair(f_rids, f_rows, zone_size)


def expand_merged_build(p1_rids: np.ndarray, index: ExtendedRidIndex,
                        p2_size: int, zone_size: int):
    """Expand build-side near RIDs through an extended index.

    Returns (build_positions, f_rids, p2_rids, (zone_bits, row_bits)):
    one entry per (build row, index pair) match, preserving F multiplicity,
    plus the sip masks over the far table.
    """
    p1_rids = np.asarray(p1_rids, dtype=np.int64)
    p1_rows = len(index.offsets) - 1
    if len(p1_rids) and (p1_rids.min() < 0 or p1_rids.max() >= p1_rows):
        bad = p1_rids[(p1_rids < 0) | (p1_rids >= p1_rows)][0]
        raise RidOutOfRange(f"RID {bad} outside table of {p1_rows} rows")
    starts = index.offsets[p1_rids]
    counts = index.offsets[p1_rids + 1] - starts
    gather = expand_ranges(starts, counts)
    positions = np.repeat(np.arange(len(p1_rids), dtype=np.int64), counts)
    f_rids = index.f_rids[gather]
    p2_rids = index.far_rids[gather]
    # far rids were validated when the index was built
    masks = _mask_pair(p2_rids, p2_size, zone_size)
    return positions, f_rids, p2_rids, masks


# ------------------------------------------------------------------ chunks

@dataclass
class DataChunk:
    """Column slices keyed by (alias, column) slot plus a selection mask."""

    columns: dict[ColRef, np.ndarray]
    length: int
    sel: Optional[np.ndarray] = None  # bool mask; None = all rows selected

    def compact(self) -> "DataChunk":
        if self.sel is None:
            return self
        cols = {slot: arr[self.sel] for slot, arr in self.columns.items()}
        n = int(self.sel.sum())
        return DataChunk(columns=cols, length=n, sel=None)


# ------------------------------------------------------------------- stats

@dataclass
class OperatorStats:
    op_id: int
    kind: str
    detail: str
    counters: dict = field(default_factory=dict)

    def bump(self, name: str, by: int = 1) -> None:
        self.counters[name] = self.counters.get(name, 0) + int(by)


@dataclass
class ExecStats:
    wall_ms: float = 0.0
    operators: list[OperatorStats] = field(default_factory=list)

    def new_operator(self, kind: str, detail: str) -> OperatorStats:
        op = OperatorStats(op_id=len(self.operators), kind=kind, detail=detail)
        self.operators.append(op)
        return op

    def scans(self) -> list[OperatorStats]:
        return [o for o in self.operators if o.kind in ("Scan", "ScanSJ")]

    def total(self, counter: str) -> int:
        return sum(o.counters.get(counter, 0) for o in self.operators)

    def to_json(self) -> dict:
        out: dict = {"wall_ms": self.wall_ms}
        for op in self.operators:
            out[str(op.op_id)] = {"kind": op.kind, "detail": op.detail,
                                  **op.counters}
        return out


# --------------------------------------------------------------- operators

_CMP = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


class _ScanExec:
    def __init__(self, node: ScanNode, table: Table, zone_size: int,
                 stats: OperatorStats):
        self.node = node
        self.table = table
        self.zone_size = zone_size
        self.stats = stats
        self.sip_filters: list[SipFilter] = []
        self.slots: list[ColRef] = []
        self._readers: list[tuple[ColRef, np.ndarray]] = []
        for name in node.columns + node.rid_cols:
            slot = ColRef(node.alias, name)
            self.slots.append(slot)
            self._readers.append((slot, table.column(name).data))
        if node.emit_rid:
            self.slots.append(rid_slot(node.alias))
        self._filters = [
            (table.column(p.col.column).data, _CMP[p.op], p.value.value)
            for p in node.filters
        ]

    def add_filter(self, filt: SipFilter) -> None:
        self.sip_filters.append(filt)

    def chunks(self) -> Iterator[DataChunk]:
        zs = self.zone_size
        rows = self.table.row_count
        n_zones = zone_count(rows, zs)
        zone_bits = row_bits = None
        if self.node.sj and self.sip_filters:
            zone_bits = self.sip_filters[0].zone_bits
            row_bits = self.sip_filters[0].row_bits
            for f in self.sip_filters[1:]:
                zone_bits = zone_bits & f.zone_bits
                row_bits = row_bits & f.row_bits
        for z in range(n_zones):
            if zone_bits is not None and not zone_bits[z]:
                continue
            lo = z * zs
            hi = min(rows, lo + zs)
            n = hi - lo
            self.stats.bump("zones_visited")
            self.stats.bump("tuples_materialized", n)
            sel = None
            if row_bits is not None:
                sel = row_bits[lo:hi].copy()
            for data, op, const in self._filters:
                mask = op(data[lo:hi], const)
                sel = mask if sel is None else (sel & mask)
            emitted = n if sel is None else int(sel.sum())
            self.stats.bump("tuples_emitted", emitted)
            if emitted == 0:
                continue
            cols = {slot: data[lo:hi] for slot, data in self._readers}
            if self.node.emit_rid:
                cols[rid_slot(self.node.alias)] = np.arange(lo, hi, dtype=np.int64)
            yield DataChunk(columns=cols, length=n, sel=sel)


class _JoinExec:
    def __init__(self, node: JoinNode, build, probe, catalog: Catalog,
                 zone_size: int, stats: OperatorStats):
        self.node = node
        self.build = build
        self.probe = probe
        self.catalog = catalog
        self.zone_size = zone_size
        self.stats = stats
        self.slots = list(build.slots) + list(probe.slots)
        self.build_slots = set(build.slots)
        self._sip_targets: list[_ScanExec] = []
        self._dtypes = {}

    def set_sip_targets(self, targets: list["_ScanExec"]) -> None:
        self._sip_targets = targets

    def _drain_build(self) -> tuple[dict[ColRef, np.ndarray], int]:
        parts = [c.compact() for c in self.build.chunks()]
        parts = [c for c in parts if c.length]
        cols: dict[ColRef, np.ndarray] = {}
        for slot in self.build.slots:
            if parts:
                cols[slot] = np.concatenate([c.columns[slot] for c in parts])
            else:
                cols[slot] = np.empty(0, dtype=np.int64)
        n = len(next(iter(cols.values()))) if cols else 0
        return cols, n

    def _register(self, zone_bits: np.ndarray, row_bits: np.ndarray,
                  alias: str) -> None:
        filt = SipFilter(target_alias=alias, zone_bits=zone_bits,
                         row_bits=row_bits)
        for scan in self._sip_targets:
            scan.add_filter(filt)

    def chunks(self) -> Iterator[DataChunk]:
        node = self.node
        build_cols, build_n = self._drain_build()
        self.stats.bump("build_rows", build_n)
        zs = self.zone_size

        if node.kind == "SJoinIdxM":
            index: ExtendedRidIndex = node.index
            p2_table = self.catalog.table(index.join_far.to_table)
            p1_rids = build_cols[node.keys[0][0]]
            positions, _f_rids, p2_rids, masks = expand_merged_build(
                p1_rids, index, p2_table.row_count, zs)
            payload = {slot: arr[positions] for slot, arr in build_cols.items()}
            table = KeyIndex(p2_rids)
            entries = payload
            if node.sip_target:
                self._register(*masks, node.sip_target)
        else:
            build_keys = encode_keys([build_cols[b] for b, _ in node.keys])
            table = KeyIndex(build_keys)
            entries = build_cols
            if node.kind == "SJoin" and node.sip_target:
                p_table = self.catalog.table(node.predefined.to_table)
                rids = build_cols[node.keys[0][0]]
                self._register(*build_sip_filters(rids, p_table.row_count, zs),
                               node.sip_target)
            elif node.kind == "SJoinIdxR" and node.sip_target:
                rids = build_cols[node.keys[0][0]]
                self._register(
                    *build_reverse_sip_filters(rids, node.index, zs),
                    node.sip_target)

        residual = [
            (pred.left if ColRef(pred.left.alias, pred.left.column) in self.build_slots
             else pred.right,
             pred.right if ColRef(pred.left.alias, pred.left.column) in self.build_slots
             else pred.left)
            for pred in node.residual
        ]

        for pchunk in self.probe.chunks():
            pc = pchunk.compact()
            if pc.length == 0:
                continue
            self.stats.bump("probe_rows", pc.length)
            probe_keys = encode_keys([pc.columns[p] for _, p in node.keys])
            pi, bi = table.lookup(probe_keys)
            if len(pi) and residual:
                mask = np.ones(len(pi), dtype=bool)
                for bslot, pslot in residual:
                    mask &= entries[bslot][bi] == pc.columns[pslot][pi]
                pi, bi = pi[mask], bi[mask]
            if len(pi) == 0:
                continue
            out = {slot: arr[bi] for slot, arr in entries.items()}
            for slot in self.probe.slots:
                out[slot] = pc.columns[slot][pi]
            self.stats.bump("output_rows", len(pi))
            yield DataChunk(columns=out, length=len(pi), sel=None)


class _ProjectExec:
    def __init__(self, node: ProjectNode, child, stats: OperatorStats):
        self.node = node
        self.child = child
        self.stats = stats
        self.slots = list(node.columns)

    def rows(self) -> list[tuple]:
        out: list[tuple] = []
        for chunk in self.child.chunks():
            c = chunk.compact()
            if c.length == 0:
                continue
            self.stats.bump("output_rows", c.length)
            cols = [c.columns[slot].tolist() for slot in self.node.columns]
            if cols:
                out.extend(zip(*cols))
            else:
                out.extend(() for _ in range(c.length))
        return out


class _AggregateExec:
    def __init__(self, node: AggregateNode, child, stats: OperatorStats):
        self.node = node
        self.child = child
        self.stats = stats

    def rows(self) -> list[tuple]:
        func = self.node.func
        if func == "count":
            total = 0
            for chunk in self.child.chunks():
                c = chunk.compact()
                total += c.length
            self.stats.bump("output_rows")
            return [(total,)]
        best = None
        for chunk in self.child.chunks():
            c = chunk.compact()
            if c.length == 0:
                continue
            arr = c.columns[self.node.col]
            local = arr.min() if func == "min" else arr.max()
            if best is None:
                best = local
            else:
                best = min(best, local) if func == "min" else max(best, local)
        if best is None:
            return []
        self.stats.bump("output_rows")
        if isinstance(best, np.generic):
            best = best.item()
        return [(best,)]


# ---------------------------------------------------------------- executor

def _build_exec(node: PlanNode, catalog: Catalog, zone_size: int,
                stats: ExecStats):
    if isinstance(node, ScanNode):
        op = stats.new_operator(node.kind, node.alias)
        return _ScanExec(node, catalog.table(node.table), zone_size, op)
    if isinstance(node, JoinNode):
        op = stats.new_operator(node.kind, "")
        build = _build_exec(node.build, catalog, zone_size, stats)
        probe = _build_exec(node.probe, catalog, zone_size, stats)
        ex = _JoinExec(node, build, probe, catalog, zone_size, op)
        if node.sip_target:
            ex.set_sip_targets(_spine_scans(probe, node.sip_target))
        return ex
    if isinstance(node, ProjectNode):
        op = stats.new_operator("Project", "")
        child = _build_exec(node.child, catalog, zone_size, stats)
        return _ProjectExec(node, child, op)
    if isinstance(node, AggregateNode):
        op = stats.new_operator("Aggregate", node.func)
        child = _build_exec(node.child, catalog, zone_size, stats)
        return _AggregateExec(node, child, op)
    raise TypeError(repr(node))


def _spine_scans(probe_exec, alias: str) -> list[_ScanExec]:
    """Scan operators for `alias` on the probe spine (build sides of nested
    joins are out of reach by design)."""
    out: list[_ScanExec] = []
    cursor = probe_exec
    while True:
        if isinstance(cursor, _ScanExec):
            if cursor.node.alias == alias:
                out.append(cursor)
            return out
        if isinstance(cursor, _JoinExec):
            cursor = cursor.probe
            continue
        if isinstance(cursor, (_ProjectExec, _AggregateExec)):
            cursor = cursor.child
            continue
        return out


def execute(plan: PlanNode, catalog: Catalog,
            zone_config: Optional[ZoneConfig] = None) -> tuple[list[tuple], ExecStats]:
    """Run a plan to completion; returns (result rows, stats).

    The result is a multiset: row order is deterministic but carries no
    semantic meaning.
    """
    zone_config = zone_config or ZoneConfig()
    stats = ExecStats()
    started = time.perf_counter()
    root = _build_exec(plan, catalog, zone_config.zone_size, stats)
    if isinstance(root, (_ProjectExec, _AggregateExec)):
        rows = root.rows()
    else:
        sink_node = ProjectNode(child=plan, columns=tuple(root.slots))
        stats.operators.clear()
        root = _build_exec(sink_node, catalog, zone_config.zone_size, stats)
        rows = root.rows()
    stats.wall_ms = (time.perf_counter() - started) * 1000.0
    return rows, stats
