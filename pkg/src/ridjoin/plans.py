"""Logical plan nodes and the explain renderer.

Plans are immutable trees. Joins reference columns through (alias, column)
slots; the pseudo-column "@rid" stands for a table's virtual RID vector and
hidden pointer columns appear under their storage names, so a slot is
always directly readable by a scan.

By convention the build child of a join comes first (and is printed first
by explain); a join's build side is fully consumed before its probe side
produces anything.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional, Union

from .sqlfront import ColRef, FilterPred, JoinPred

RID = "@rid"


def rid_slot(alias: str) -> ColRef:
    return ColRef(alias, RID)


@dataclass(frozen=True)
class ScanNode:
    alias: str
    table: str
    columns: tuple[str, ...] = ()       # user columns to read
    rid_cols: tuple[str, ...] = ()      # hidden pointer columns to read
    emit_rid: bool = False
    filters: tuple[FilterPred, ...] = ()
    sj: bool = False                    # semijoin scan (honors sip filters)

    @property
    def kind(self) -> str:
        return "ScanSJ" if self.sj else "Scan"


@dataclass(frozen=True)
class JoinNode:
    kind: str  # "HashJoin" | "SJoin" | "SJoinIdxR" | "SJoinIdxM"
    build: "PlanNode"
    probe: "PlanNode"
    keys: tuple[tuple[ColRef, ColRef], ...]   # (build slot, probe slot)
    residual: tuple[JoinPred, ...] = ()
    predefined: object = None       # PredefinedJoin when keys are pointer-based
    f_alias: Optional[str] = None   # referencing-side alias of that join
    p_alias: Optional[str] = None   # referenced-side alias of that join
    sip_target: Optional[str] = None  # alias receiving this join's sip filter
    index: object = None            # RidIndex | ExtendedRidIndex
    merged_alias: Optional[str] = None  # alias eliminated by a merged join


@dataclass(frozen=True)
class ProjectNode:
    child: "PlanNode"
    columns: tuple[ColRef, ...]


@dataclass(frozen=True)
class AggregateNode:
    child: "PlanNode"
    func: str  # "count" | "min" | "max"
    col: Optional[ColRef]


PlanNode = Union[ScanNode, JoinNode, ProjectNode, AggregateNode]


def children(node: PlanNode) -> tuple[PlanNode, ...]:
    if isinstance(node, JoinNode):
        return (node.build, node.probe)
    if isinstance(node, (ProjectNode, AggregateNode)):
        return (node.child,)
    return ()


def walk(node: PlanNode) -> Iterator[PlanNode]:
    """Preorder traversal; build children before probe children."""
    yield node
    for child in children(node):
        yield from walk(child)


def scan_nodes(node: PlanNode) -> list[ScanNode]:
    return [n for n in walk(node) if isinstance(n, ScanNode)]


def scan_aliases(node: PlanNode) -> set[str]:
    return {s.alias for s in scan_nodes(node)}


def probe_spine_scans(join: JoinNode) -> list[ScanNode]:
    """Scans reachable from the probe child without crossing into any
    nested join's build side; these are the legal sip-filter targets."""
    out: list[ScanNode] = []
    node = join.probe
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, ScanNode):
            out.append(n)
        elif isinstance(n, JoinNode):
            stack.append(n.probe)
        elif isinstance(n, (ProjectNode, AggregateNode)):
            stack.append(n.child)
    return out


def _label(node: PlanNode) -> str:
    if isinstance(node, ScanNode):
        text = f"{node.kind} {node.alias}"
        if node.filters:
            text += " [" + ", ".join(p.render() for p in node.filters) + "]"
        return text
    if isinstance(node, JoinNode):
        if node.kind == "SJoinIdxM":
            b, p = node.keys[0]
            text = f"SJoinIdxM [{b} -> {p} via {node.merged_alias}]"
        else:
            text = node.kind + " [" + ", ".join(f"{b} = {p}" for b, p in node.keys) + "]"
        if node.residual:
            text += " residual [" + ", ".join(r.render() for r in node.residual) + "]"
        return text
    if isinstance(node, ProjectNode):
        return "Project [" + ", ".join(str(c) for c in node.columns) + "]"
    if isinstance(node, AggregateNode):
        if node.func == "count":
            return "Aggregate [COUNT(*)]"
        return f"Aggregate [{node.func.upper()}({node.col})]"
    raise TypeError(repr(node))


def explain(node: PlanNode) -> str:
    """Indented one-node-per-line rendering; stable for golden tests."""
    lines: list[str] = []

    def rec(n: PlanNode, depth: int) -> None:
        lines.append("  " * depth + _label(n))
        for child in children(n):
            rec(child, depth + 1)

    rec(node, 0)
    return "\n".join(lines)


def replace_node(node: PlanNode, **changes) -> PlanNode:
    return replace(node, **changes)
