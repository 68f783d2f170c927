"""Join ordering, pointer-join rewriting, and plan enumeration.

plan_baseline builds a conventional hash-join plan: dynamic programming
over connected alias subsets minimizing the summed intermediate
cardinality, bushy trees allowed, filters pushed into scans, and the
smaller estimated input always on the build side.

rewrite_predefined then rewrites that plan bottom-up wherever a join
predicate matches a registered predefined join F -> P:

  * F on the build side: the join becomes an SJoin keyed on F's pointer
    column against P's virtual RID, and P's scan becomes a semijoin scan
    fed by the SJoin's sip filter.
  * F on the probe side: the predicate is replaced by the same RID
    equality; with a RID index present (and the flag on) the join becomes
    an SJoinIdxR that filters F's scan through the index.
  * Two consecutive rewritten joins P1 -> F <- P2 where F contributes
    nothing else collapse into an SJoinIdxM over an extended index and F's
    scan disappears.

The rewrite only touches predicates, scanned columns, and operator kinds;
join order and build/probe sides are never changed, which keeps rewritten
plans counter-comparable with their baselines.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._match import KeyIndex, encode_keys
from .errors import CardinalityUnavailable, DisconnectedJoinGraph
from .plans import (
    RID,
    AggregateNode,
    JoinNode,
    PlanNode,
    ProjectNode,
    ScanNode,
    rid_slot,
    scan_nodes,
    walk,
)
from .ridindex import find_extended_index, find_rid_index
from .sqlfront import ColRef, FilterPred, JoinPred, QuerySpec
from .storage import Catalog


# ------------------------------------------------------------------- flags

@dataclass(frozen=True)
class AblationFlags:
    """Which pointer-join rewrites are allowed.

    Reverse semijoins need materialized pointers, and merging needs
    reverse-semijoin bookkeeping, so the flags imply each other downward.
    """

    enable_rid_materialization: bool = True
    enable_reverse_semijoin: bool = True
    enable_join_merging: bool = True

    def __post_init__(self):
        if self.enable_join_merging and not self.enable_reverse_semijoin:
            raise ValueError("join merging requires reverse semijoins")
        if self.enable_reverse_semijoin and not self.enable_rid_materialization:
            raise ValueError("reverse semijoins require RID materialization")

    @classmethod
    def vanilla(cls) -> "AblationFlags":
        return cls(False, False, False)

    @classmethod
    def pointers_only(cls) -> "AblationFlags":
        return cls(True, False, False)

    @classmethod
    def no_merging(cls) -> "AblationFlags":
        return cls(True, True, False)

    @classmethod
    def full(cls) -> "AblationFlags":
        return cls(True, True, True)


ABLATION_CONFIGS: tuple[tuple[str, AblationFlags], ...] = (
    ("vanilla", AblationFlags.vanilla()),
    ("ridmat", AblationFlags.pointers_only()),
    ("ridmat+rsj", AblationFlags.no_merging()),
    ("full", AblationFlags.full()),
)


# ----------------------------------------------------------- cardinalities

def canonical_subquery_key(query: QuerySpec, aliases: frozenset[str]) -> str:
    """Stable text key for the subquery induced by `aliases` (used by the
    user-supplied cardinality file)."""
    names = ",".join(sorted(aliases))
    joins = "; ".join(sorted(
        p.render() for p in query.join_preds
        if p.left.alias in aliases and p.right.alias in aliases))
    filters = "; ".join(sorted(
        f.render() for f in query.filters if f.col.alias in aliases))
    return f"{names}|{joins}|{filters}"


class CardinalitySource:
    """Subquery cardinalities for the DP planner.

    mode "exact" materializes RID tables per connected subset (memoized) so
    every number equals the true count; "estimate" is the classic
    independence model over exact per-column distinct counts; "user" looks
    up canonical_subquery_key in a caller-supplied mapping.
    """

    def __init__(self, catalog: Catalog, query: QuerySpec, mode: str = "exact",
                 user_cards: dict | None = None):
        if mode not in ("exact", "estimate", "user"):
            raise ValueError(f"unknown cardinality mode {mode!r}")
        self.catalog = catalog
        self.query = query
        self.mode = mode
        self.user_cards = user_cards or {}
        self._alias_table = {a: t for t, a in query.relations}
        self._filters: dict[str, list[FilterPred]] = {}
        for f in query.filters:
            self._filters.setdefault(f.col.alias, []).append(f)
        self._memo: dict[frozenset, float] = {}
        self._rid_tables: dict[frozenset, dict[str, np.ndarray]] = {}
        self._base: dict[str, np.ndarray] = {}
        self._ndv: dict[tuple[str, str], int] = {}

    # --- shared helpers ---

    def _data(self, alias: str, column: str) -> np.ndarray:
        return self.catalog.table(self._alias_table[alias]).column(column).data

    def _base_rids(self, alias: str) -> np.ndarray:
        if alias not in self._base:
            table = self.catalog.table(self._alias_table[alias])
            sel = np.ones(table.row_count, dtype=bool)
            for f in self._filters.get(alias, ()):
                data = table.column(f.col.column).data
                sel &= _CMP_FUNCS[f.op](data, f.value.value)
            self._base[alias] = np.nonzero(sel)[0].astype(np.int64)
        return self._base[alias]

    def cardinality(self, aliases: frozenset) -> float:
        aliases = frozenset(aliases)
        if aliases in self._memo:
            return self._memo[aliases]
        if self.mode == "exact":
            card: float = len(next(iter(self._rid_table(aliases).values()))) \
                if aliases else 0
        elif self.mode == "user":
            key = canonical_subquery_key(self.query, aliases)
            if key not in self.user_cards:
                raise CardinalityUnavailable(key)
            card = float(self.user_cards[key])
        else:
            card = self._estimate(aliases)
        self._memo[aliases] = card
        return card

    # --- exact mode ---

    def _rid_table(self, aliases: frozenset) -> dict[str, np.ndarray]:
        if aliases in self._rid_tables:
            return self._rid_tables[aliases]
        names = sorted(aliases)
        if len(names) == 1:
            table = {names[0]: self._base_rids(names[0])}
            self._rid_tables[aliases] = table
            return table
        preds_for = lambda t, rest: [
            p for p in self.query.join_preds
            if (p.left.alias == t and p.right.alias in rest)
            or (p.right.alias == t and p.left.alias in rest)]
        chosen = None
        for t in names:
            rest = aliases - {t}
            if _aliases_connected(rest, self.query.join_preds) and preds_for(t, rest):
                chosen = t
                break
        if chosen is None:
            raise DisconnectedJoinGraph(",".join(names))
        rest = aliases - {chosen}
        rt = self._rid_table(rest)
        preds = preds_for(chosen, rest)
        first, extra = preds[0], preds[1:]
        if first.left.alias == chosen:
            tcol, oref = first.left.column, first.right
        else:
            tcol, oref = first.right.column, first.left
        cand = self._base_rids(chosen)
        left_vals = self._data(oref.alias, oref.column)[rt[oref.alias]]
        right_vals = self._data(chosen, tcol)[cand]
        pi, bi = KeyIndex(encode_keys([right_vals])).lookup(
            encode_keys([left_vals]))
        joined = {a: rids[pi] for a, rids in rt.items()}
        joined[chosen] = cand[bi]
        if extra and len(pi):
            mask = np.ones(len(pi), dtype=bool)
            for p in extra:
                lv = self._data(p.left.alias, p.left.column)[joined[p.left.alias]]
                rv = self._data(p.right.alias, p.right.column)[joined[p.right.alias]]
                mask &= lv == rv
            joined = {a: rids[mask] for a, rids in joined.items()}
        self._rid_tables[aliases] = joined
        return joined

    # --- estimate mode ---

    def _distinct(self, alias: str, column: str) -> int:
        key = (self._alias_table[alias], column)
        if key not in self._ndv:
            data = self._data(alias, column)
            self._ndv[key] = len(np.unique(data)) if len(data) else 0
        return self._ndv[key]

    def _estimate(self, aliases: frozenset) -> float:
        card = 1.0
        for a in aliases:
            rows = float(self.catalog.table(self._alias_table[a]).row_count)
            for f in self._filters.get(a, ()):
                ndv = self._distinct(a, f.col.column)
                if ndv == 0:
                    rows = 0.0
                elif f.op == "=":
                    rows /= ndv
                elif f.op == "<>":
                    rows *= 1.0 - 1.0 / ndv
                else:
                    rows /= 3.0
            card *= rows
        for p in self.query.join_preds:
            if p.left.alias in aliases and p.right.alias in aliases:
                ndv = max(self._distinct(p.left.alias, p.left.column),
                          self._distinct(p.right.alias, p.right.column), 1)
                card /= ndv
        return card


_CMP_FUNCS = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def exact_cardinality(catalog: Catalog, query: QuerySpec, aliases=None) -> int:
    """True cardinality of the (sub)query; memoization lives in the source."""
    source = CardinalitySource(catalog, query, mode="exact")
    if aliases is None:
        aliases = frozenset(a for _, a in query.relations)
    return int(source.cardinality(frozenset(aliases)))


def _aliases_connected(aliases: frozenset, preds) -> bool:
    names = set(aliases)
    if len(names) <= 1:
        return True
    adj: dict[str, set[str]] = {a: set() for a in names}
    for p in preds:
        la, ra = p.left.alias, p.right.alias
        if la in names and ra in names:
            adj[la].add(ra)
            adj[ra].add(la)
    seen = set()
    stack = [next(iter(names))]
    while stack:
        a = stack.pop()
        if a in seen:
            continue
        seen.add(a)
        stack.extend(adj[a] - seen)
    return seen == names


# ------------------------------------------------------- baseline planning

def _check_resolved(query: QuerySpec) -> None:
    if query.projection is None and query.aggregate is None:
        raise ValueError("query must be resolved before planning")


def _leaf_scan(query: QuerySpec, catalog: Catalog, alias: str) -> ScanNode:
    table = query.alias_table(alias)
    filters = tuple(f for f in query.filters if f.col.alias == alias)
    return ScanNode(alias=alias, table=table, filters=filters)


def _crossing_preds(query: QuerySpec, left: frozenset, right: frozenset):
    out = []
    for p in query.join_preds:
        if p.left.alias in left and p.right.alias in right:
            out.append((p.left, p.right))
        elif p.right.alias in left and p.left.alias in right:
            out.append((p.right, p.left))
    return tuple(out)


def _root_wrap(query: QuerySpec, child: PlanNode) -> PlanNode:
    if query.aggregate is not None:
        return AggregateNode(child=child, func=query.aggregate.func,
                             col=query.aggregate.col)
    return ProjectNode(child=child, columns=query.projection)


def plan_baseline(query: QuerySpec, catalog: Catalog,
                  cards: CardinalitySource | None = None) -> PlanNode:
    """DP-optimal hash-join plan (cost: summed intermediate cardinality)."""
    _check_resolved(query)
    cards = cards or CardinalitySource(catalog, query, mode="exact")
    aliases = [a for _, a in query.relations]
    n = len(aliases)
    bit = {a: 1 << i for i, a in enumerate(aliases)}

    def subset(mask: int) -> frozenset:
        return frozenset(a for a in aliases if mask & bit[a])

    if n > 1 and not _aliases_connected(frozenset(aliases), query.join_preds):
        raise DisconnectedJoinGraph(",".join(aliases))

    # (cost, cardinality, plan) per connected subset mask
    table: dict[int, tuple[float, float, PlanNode]] = {}
    for a in aliases:
        table[bit[a]] = (0.0, cards.cardinality(frozenset([a])),
                         _leaf_scan(query, catalog, a))

    full = (1 << n) - 1
    for mask in range(1, full + 1):
        if mask in table or bin(mask).count("1") < 2:
            continue
        names = subset(mask)
        if not _aliases_connected(names, query.join_preds):
            continue
        best = None
        lowest = mask & -mask
        sub = (mask - 1) & mask
        while sub:
            other = mask ^ sub
            # visit each unordered partition once
            if (sub & lowest) and other and sub in table and other in table:
                crossing = _crossing_preds(query, subset(sub), subset(other))
                if crossing:
                    cost = table[sub][0] + table[other][0]
                    if best is None or cost < best[0]:
                        best = (cost, sub, other)
            sub = (sub - 1) & mask
        if best is None:
            continue
        card = cards.cardinality(names)
        cost, sub, other = best
        sub_card, other_card = table[sub][1], table[other][1]
        if (sub_card, tuple(sorted(subset(sub)))) <= (
                other_card, tuple(sorted(subset(other)))):
            bmask, pmask = sub, other
        else:
            bmask, pmask = other, sub
        keys = _crossing_preds(query, subset(bmask), subset(pmask))
        node = JoinNode(kind="HashJoin", build=table[bmask][2],
                        probe=table[pmask][2], keys=keys)
        table[mask] = (cost + card, card, node)

    if full not in table:
        raise DisconnectedJoinGraph(",".join(aliases))
    plan = _root_wrap(query, table[full][2])
    return _finalize_scans(plan, catalog, frozenset())


# -------------------------------------------------------------- finalizing

def _referenced_slots(root: PlanNode) -> set[ColRef]:
    slots: set[ColRef] = set()
    for node in walk(root):
        if isinstance(node, ProjectNode):
            slots.update(node.columns)
        elif isinstance(node, AggregateNode):
            if node.col is not None:
                slots.add(node.col)
        elif isinstance(node, JoinNode):
            for b, p in node.keys:
                slots.add(b)
                slots.add(p)
            for r in node.residual:
                slots.add(r.left)
                slots.add(r.right)
        elif isinstance(node, ScanNode):
            for f in node.filters:
                slots.add(f.col)
    return slots


def _finalize_scans(root: PlanNode, catalog: Catalog,
                    sj_aliases: frozenset) -> PlanNode:
    """Recompute every scan's column set from the slots the tree actually
    references, and mark semijoin scans."""
    slots = _referenced_slots(root)
    by_alias: dict[str, set[str]] = {}
    for slot in slots:
        by_alias.setdefault(slot.alias, set()).add(slot.column)

    def rebuild(node: PlanNode) -> PlanNode:
        if isinstance(node, ScanNode):
            table = catalog.table(node.table)
            wanted = by_alias.get(node.alias, set())
            columns = []
            rid_cols = []
            emit_rid = False
            for name in sorted(wanted):
                if name == RID:
                    emit_rid = True
                elif table.column(name).visibility == "user":
                    columns.append(name)
                else:
                    rid_cols.append(name)
            return replace(node, columns=tuple(columns),
                           rid_cols=tuple(rid_cols), emit_rid=emit_rid,
                           sj=node.alias in sj_aliases)
        if isinstance(node, JoinNode):
            return replace(node, build=rebuild(node.build),
                           probe=rebuild(node.probe))
        if isinstance(node, (ProjectNode, AggregateNode)):
            return replace(node, child=rebuild(node.child))
        raise TypeError(repr(node))

    return rebuild(root)


# ---------------------------------------------------------------- rewrites

def _alias_census(root: PlanNode):
    """How often each alias is touched outside its own scan: join-key
    touches, residual touches, and projection/aggregate references."""
    key_joins: dict[str, int] = {}
    residual_refs: dict[str, int] = {}
    output_aliases: set[str] = set()
    filter_aliases: set[str] = set()
    for node in walk(root):
        if isinstance(node, JoinNode):
            touched = {s.alias for b, p in node.keys for s in (b, p)}
            for a in touched:
                key_joins[a] = key_joins.get(a, 0) + 1
            for r in node.residual:
                for s in (r.left, r.right):
                    residual_refs[s.alias] = residual_refs.get(s.alias, 0) + 1
        elif isinstance(node, ProjectNode):
            output_aliases.update(c.alias for c in node.columns)
        elif isinstance(node, AggregateNode):
            if node.col is not None:
                output_aliases.add(node.col.alias)
        elif isinstance(node, ScanNode):
            if node.filters:
                filter_aliases.add(node.alias)
    return key_joins, residual_refs, output_aliases, filter_aliases


def _match_predefined(node: JoinNode, catalog: Catalog,
                      alias_table: dict[str, str]):
    """First registered predefined join whose column pairs all appear among
    this node's equality keys; returns (join, f_alias, p_alias, f_on_build,
    matched key pairs) or None."""
    by_pair: dict[tuple[str, str], set[tuple[str, str]]] = {}
    for b, p in node.keys:
        by_pair.setdefault((b.alias, p.alias), set()).add((b.column, p.column))
    for pj in catalog.predefined_joins:
        for (ba, pa), cols in by_pair.items():
            if (alias_table.get(ba), alias_table.get(pa)) == (
                    pj.from_table, pj.to_table):
                wanted = set(zip(pj.from_cols, pj.to_cols))
                if wanted <= cols:
                    return pj, ba, pa, True, {
                        (ColRef(ba, fc), ColRef(pa, tc)) for fc, tc in wanted}
            if (alias_table.get(pa), alias_table.get(ba)) == (
                    pj.from_table, pj.to_table):
                wanted = set(zip(pj.to_cols, pj.from_cols))
                if wanted <= cols:
                    return pj, pa, ba, False, {
                        (ColRef(ba, tc), ColRef(pa, fc)) for tc, fc in wanted}
    return None


def _apply_case(node: JoinNode, match, catalog: Catalog,
                flags: AblationFlags) -> JoinNode:
    pj, fa, pa, f_on_build, matched = match
    leftovers = tuple(
        JoinPred(b, p) for b, p in node.keys if (b, p) not in matched)
    residual = node.residual + leftovers
    pointer = ColRef(fa, pj.rid_column)
    if f_on_build:
        return replace(node, kind="SJoin", keys=((pointer, rid_slot(pa)),),
                       residual=residual, predefined=pj, f_alias=fa,
                       p_alias=pa, sip_target=pa)
    keys = ((rid_slot(pa), pointer),)
    index = find_rid_index(catalog, pj)
    if flags.enable_reverse_semijoin and index is not None:
        return replace(node, kind="SJoinIdxR", keys=keys, residual=residual,
                       predefined=pj, f_alias=fa, p_alias=pa, sip_target=fa,
                       index=index)
    return replace(node, kind="HashJoin", keys=keys, residual=residual,
                   predefined=pj, f_alias=fa, p_alias=pa)


def _try_merge(node: JoinNode, catalog: Catalog, census) -> JoinNode:
    """Collapse SJoin(J1(P1, Scan F), ScanSJ P2) into one SJoinIdxM when F
    contributes nothing beyond the two pointer hops."""
    key_joins, residual_refs, output_aliases, filter_aliases = census
    if node.kind != "SJoin" or node.predefined is None:
        return node
    j1 = node.build
    if not isinstance(j1, JoinNode) or j1.predefined is None:
        return node
    fa = node.f_alias
    if j1.f_alias != fa or j1.kind not in ("HashJoin", "SJoinIdxR"):
        return node
    probe_scan = j1.probe
    if not isinstance(probe_scan, ScanNode) or probe_scan.alias != fa:
        return node
    if probe_scan.filters or fa in filter_aliases or fa in output_aliases:
        return node
    if key_joins.get(fa, 0) != 2 or residual_refs.get(fa, 0) != 0:
        return node
    if any(s.alias == fa for r in node.residual for s in (r.left, r.right)):
        return node
    index = find_extended_index(catalog, j1.predefined, node.predefined)
    if index is None:
        return node
    return JoinNode(kind="SJoinIdxM", build=j1.build, probe=node.probe,
                    keys=((rid_slot(j1.p_alias), rid_slot(node.p_alias)),),
                    residual=node.residual, predefined=None,
                    sip_target=node.p_alias, index=index, merged_alias=fa)


def _sip_marks(root: PlanNode) -> frozenset:
    """Aliases whose scans sit on some sip-passing join's probe spine."""
    marks: set[str] = set()
    for node in walk(root):
        if isinstance(node, JoinNode) and node.sip_target:
            cursor = node.probe
            while True:
                if isinstance(cursor, ScanNode):
                    if cursor.alias == node.sip_target:
                        marks.add(cursor.alias)
                    break
                if isinstance(cursor, JoinNode):
                    cursor = cursor.probe
                    continue
                if isinstance(cursor, (ProjectNode, AggregateNode)):
                    cursor = cursor.child
                    continue
                break
    return frozenset(marks)


def rewrite_predefined(plan: PlanNode, catalog: Catalog,
                       flags: AblationFlags) -> PlanNode:
    """Apply the pointer-join rewrites the flags allow; identity when RID
    materialization is disabled."""
    if not flags.enable_rid_materialization:
        return plan
    alias_table = {s.alias: s.table for s in scan_nodes(plan)}
    census = _alias_census(plan)

    def rw(node: PlanNode) -> PlanNode:
        if isinstance(node, JoinNode):
            node = replace(node, build=rw(node.build), probe=rw(node.probe))
            if node.kind == "HashJoin" and node.predefined is None:
                match = _match_predefined(node, catalog, alias_table)
                if match is not None:
                    node = _apply_case(node, match, catalog, flags)
            if flags.enable_join_merging:
                node = _try_merge(node, catalog, census)
            return node
        if isinstance(node, (ProjectNode, AggregateNode)):
            return replace(node, child=rw(node.child))
        return node

    rewritten = rw(plan)
    return _finalize_scans(rewritten, catalog, _sip_marks(rewritten))


# -------------------------------------------------------------- enumerator

def enumerate_plans(query: QuerySpec, catalog: Catalog,
                    cap: int | None = None) -> list[PlanNode]:
    """Every cross-product-free binary join tree over the query, with both
    build/probe assignments, in a deterministic order; `cap` truncates."""
    _check_resolved(query)
    aliases = [a for _, a in query.relations]
    n = len(aliases)
    bit = {a: 1 << i for i, a in enumerate(aliases)}

    def subset(mask: int) -> frozenset:
        return frozenset(a for a in aliases if mask & bit[a])

    if n > 1 and not _aliases_connected(frozenset(aliases), query.join_preds):
        raise DisconnectedJoinGraph(",".join(aliases))

    connected: dict[int, bool] = {}

    def is_connected(mask: int) -> bool:
        if mask not in connected:
            connected[mask] = _aliases_connected(subset(mask), query.join_preds)
        return connected[mask]

    memo: dict[int, list[PlanNode]] = {}

    def plans(mask: int) -> list[PlanNode]:
        if mask in memo:
            return memo[mask]
        if bin(mask).count("1") == 1:
            alias = next(a for a in aliases if bit[a] == mask)
            memo[mask] = [_leaf_scan(query, catalog, alias)]
            return memo[mask]
        out: list[PlanNode] = []
        sub = (mask - 1) & mask
        while sub:
            other = mask ^ sub
            if is_connected(sub) and is_connected(other):
                keys = _crossing_preds(query, subset(sub), subset(other))
                if keys:
                    for b in plans(sub):
                        for p in plans(other):
                            out.append(JoinNode(kind="HashJoin", build=b,
                                                probe=p, keys=keys))
            sub = (sub - 1) & mask
        memo[mask] = out
        return out

    full = (1 << n) - 1
    trees = plans(full)
    if cap is not None:
        trees = trees[:cap]
    return [_finalize_scans(_root_wrap(query, t), catalog, frozenset())
            for t in trees]
