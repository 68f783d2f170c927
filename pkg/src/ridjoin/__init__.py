"""In-memory columnar query engine with predefined pointer-based joins.

The library form of the engine: build a Catalog, load tables, register
predefined joins and RID indices, then plan, rewrite, and execute SQL.

    from ridjoin import Catalog, ColumnType, load_csv, predefine_join
    from ridjoin import parse, resolve, plan_baseline, rewrite_predefined
    from ridjoin import AblationFlags, execute

Benchmark protocols and plotting live in ridjoin.bench; the command-line
front end in ridjoin.cli.
"""

from .engine import (
    DataChunk,
    ExecStats,
    SipFilter,
    build_reverse_sip_filters,
    build_sip_filters,
    execute,
)
from .errors import EngineError
from .planner import (
    ABLATION_CONFIGS,
    AblationFlags,
    CardinalitySource,
    canonical_subquery_key,
    enumerate_plans,
    exact_cardinality,
    plan_baseline,
    rewrite_predefined,
)
from .plans import (
    AggregateNode,
    JoinNode,
    ProjectNode,
    ScanNode,
    explain,
)
from .ridindex import (
    ExtendedRidIndex,
    RidIndex,
    build_extended_rid_index,
    build_rid_index,
    extended_neighbors,
    neighbors,
)
from .ridmat import PredefinedJoin, find_predefined, predefine_join
from .sqlfront import QuerySpec, parse, parse_script, render, resolve
from .storage import (
    Catalog,
    Column,
    ColumnType,
    Table,
    ZoneConfig,
    date_to_days,
    days_to_date,
    load_csv,
    write_csv,
    zone_count,
)

__version__ = "0.1.0"

__all__ = [
    "ABLATION_CONFIGS",
    "AblationFlags",
    "AggregateNode",
    "CardinalitySource",
    "Catalog",
    "Column",
    "ColumnType",
    "DataChunk",
    "EngineError",
    "ExecStats",
    "ExtendedRidIndex",
    "JoinNode",
    "PredefinedJoin",
    "ProjectNode",
    "QuerySpec",
    "RidIndex",
    "ScanNode",
    "SipFilter",
    "Table",
    "ZoneConfig",
    "build_extended_rid_index",
    "build_reverse_sip_filters",
    "build_rid_index",
    "build_sip_filters",
    "canonical_subquery_key",
    "date_to_days",
    "days_to_date",
    "enumerate_plans",
    "exact_cardinality",
    "execute",
    "explain",
    "extended_neighbors",
    "find_predefined",
    "load_csv",
    "neighbors",
    "parse",
    "parse_script",
    "plan_baseline",
    "predefine_join",
    "render",
    "resolve",
    "rewrite_predefined",
    "write_csv",
    "zone_count",
]
