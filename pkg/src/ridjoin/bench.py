"""Synthetic social-graph data plus the three measurement protocols.

The generator builds Person(id, name, country), Knows(id1, id2,
creationDate), and Comment(id, creatorId, creationDate, content) as a pure
function of SocialDbConfig. Out-degrees follow a clipped, mean-rescaled
Zipf distribution (relationship tables dwarf entity tables in the source
workloads, so the skew matters); Knows rows are laid out in id1 order,
giving each person a contiguous edge range the way a loader clustered by
source key would. creationDate columns hold a seeded permutation of
consecutive days, so every empirical quantile is exact and threshold
predicates realize their target selectivity to the row.

Three protocols, all strictly serial, all asserting result equality across
variants before recording any timing:

  run_micro     one-hop Person-Knows-Person count, sweeping a threshold on
                one side while the other stays fixed at 0.999.
  run_ablation  a fixed 10-query suite executed under the four optimization
                configurations.
  run_spectrum  every join order of a 4-relation query, baseline and
                rewritten, with cumulative cost-distribution rows.

Timing is the median of 5 runs after one warm-up, except the spectrum,
where each variant runs once (the protocol already multiplies executions
by the plan count).
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .engine import ExecStats, execute
from .errors import EngineError
from .planner import (
    ABLATION_CONFIGS,
    AblationFlags,
    CardinalitySource,
    enumerate_plans,
    plan_baseline,
    rewrite_predefined,
)
from .plans import PlanNode
from .ridindex import build_extended_rid_index, build_rid_index
from .ridmat import predefine_join
from .sqlfront import parse, resolve
from .storage import (
    Catalog,
    ColumnType,
    ZoneConfig,
    date_to_days,
    days_to_date,
    write_csv,
)

_NAMES = ("Alice", "Bob", "Carmen", "Dan", "Erin", "Farid", "Grace", "Hiro",
          "Ines", "Jonas", "Karim", "Lena", "Mateo", "Nadia", "Olga", "Piotr",
          "Rosa", "Sven", "Tara", "Zhang")
_COUNTRIES = ("AR", "BR", "CA", "DE", "FR", "IN", "JP", "KE", "NZ", "US")
_DATE_BASE = date_to_days("2010-01-01")


@dataclass(frozen=True)
class SocialDbConfig:
    n_person: int = 2000
    avg_degree: float = 10.0
    n_comment_per_person: int = 2
    seed: int = 42
    zipf_exponent: float = 1.2

    def __post_init__(self):
        if self.n_person < 0 or self.n_comment_per_person < 0:
            raise ValueError("counts must be non-negative")
        if self.avg_degree <= 0:
            raise ValueError("avg_degree must be positive")
        if self.zipf_exponent <= 1.0:
            raise ValueError("zipf exponent must exceed 1")


@dataclass(frozen=True)
class MicroSpec:
    which: str = "MICRO-P"
    fixed_selectivity: float = 0.999
    swept_selectivities: tuple[float, ...] = (0.0001, 0.001, 0.01, 0.1, 1.0)

    def __post_init__(self):
        if self.which not in ("MICRO-P", "MICRO-K"):
            raise ValueError(f"unknown micro benchmark {self.which!r}")
        for s in (self.fixed_selectivity, *self.swept_selectivities):
            if not 0 < s <= 1:
                raise ValueError(f"selectivity {s} outside (0, 1]")


def sample_degrees(config: SocialDbConfig) -> np.ndarray:
    """Per-person out-degree: Zipf(exponent) draws clipped at 10x the mean,
    then rescaled so the total is round(n_person * avg_degree) exactly.

    Standalone so |Knows| can be re-derived by replaying the seed.
    """
    rng = np.random.default_rng(config.seed)
    n = config.n_person
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    raw = rng.zipf(config.zipf_exponent, n).astype(np.float64)
    raw = np.minimum(raw, max(1.0, 10.0 * config.avg_degree))
    target = int(round(n * config.avg_degree))
    scaled = raw * (target / raw.sum())
    degrees = np.floor(scaled).astype(np.int64)
    short = target - int(degrees.sum())
    if short > 0:
        # largest fractional parts win the leftover edges; ties by index
        order = np.lexsort((np.arange(n), degrees - scaled))
        degrees[order[:short]] += 1
    elif short < 0:
        order = np.lexsort((np.arange(n), scaled - degrees))
        for i in order:
            if short == 0:
                break
            if degrees[i] > 0:
                degrees[i] -= 1
                short += 1
    return degrees


def generate_social(config: SocialDbConfig) -> Catalog:
    """Deterministic three-table catalog; no pointers registered yet."""
    degrees = sample_degrees(config)
    rng = np.random.default_rng((config.seed, 1))
    catalog = Catalog()
    n = config.n_person

    person = catalog.create_table("Person", (
        ("id", ColumnType.INT64), ("name", ColumnType.STR),
        ("country", ColumnType.STR)))
    ids = np.arange(n, dtype=np.int64)
    names = rng.choice(np.array(_NAMES, dtype=object), size=n)
    countries = rng.choice(np.array(_COUNTRIES, dtype=object), size=n)
    person.extend((ids, names, countries))

    knows = catalog.create_table("Knows", (
        ("id1", ColumnType.INT64), ("id2", ColumnType.INT64),
        ("creationDate", ColumnType.DATE)))
    m = int(degrees.sum())
    id1 = np.repeat(ids, degrees)
    id2 = rng.integers(0, n, size=m) if n else np.zeros(0, dtype=np.int64)
    kdates = _DATE_BASE + rng.permutation(m)
    knows.extend((id1, id2, kdates))

    comment = catalog.create_table("Comment", (
        ("id", ColumnType.INT64), ("creatorId", ColumnType.INT64),
        ("creationDate", ColumnType.DATE), ("content", ColumnType.STR)))
    c = n * config.n_comment_per_person
    creators = np.sort(rng.integers(0, n, size=c)) if n else np.zeros(0, np.int64)
    cdates = _DATE_BASE + rng.permutation(c)
    content = np.array([f"note-{i}" for i in range(c)], dtype=object)
    comment.extend((np.arange(c, dtype=np.int64), creators, cdates, content))
    return catalog


def attach_pointers(catalog: Catalog) -> None:
    """Predefine every foreign key of the social schema and build all RID
    indices, including both extended orientations over Knows."""
    src = predefine_join(catalog, "Knows", ("id1",), "Person", ("id",))
    dst = predefine_join(catalog, "Knows", ("id2",), "Person", ("id",))
    creator = predefine_join(catalog, "Comment", ("creatorId",), "Person", ("id",))
    for pj in (src, dst, creator):
        build_rid_index(catalog, pj)
    build_extended_rid_index(catalog, src, dst)
    build_extended_rid_index(catalog, dst, src)


def social_catalog(config: SocialDbConfig) -> Catalog:
    catalog = generate_social(config)
    attach_pointers(catalog)
    return catalog


def quantile_threshold(values: np.ndarray, fraction: float) -> int:
    """Largest value v such that count(values <= v) = round(fraction * n)
    when values are distinct (the generator guarantees they are)."""
    n = len(values)
    if n == 0:
        raise ValueError("empty column")
    k = min(n, max(1, int(round(fraction * n))))
    return int(np.partition(np.asarray(values), k - 1)[k - 1])


# ---------------------------------------------------------------- reporting

@dataclass
class Report:
    header: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)

    def render_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(self.header)
        writer.writerows(self.rows)
        return out.getvalue()

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [row[i] for row in self.rows]


@dataclass
class SpectrumReport:
    plans: Report
    cdf: Report

    def render_csv(self) -> str:
        return self.plans.render_csv() + "\n" + self.cdf.render_csv()

    def costs(self, variant: str) -> list[int]:
        return [r[3] for r in self.plans.rows if r[1] == variant]


MICRO_HEADER = ("selectivity", "mode", "wall_ms", "knows_tuples_materialized",
                "person_tuples_materialized")
ABLATION_HEADER = ("query", "config", "wall_ms", "tuples_materialized",
                   "tuples_emitted", "output_rows", "n_scan_operators")
SPECTRUM_PLAN_HEADER = ("plan_id", "variant", "wall_ms", "tuples_materialized")
SPECTRUM_CDF_HEADER = ("variant", "threshold", "plans_within")


# --------------------------------------------------------------- execution

def _run(plan: PlanNode, catalog: Catalog, zc: ZoneConfig):
    return execute(plan, catalog, zc)


def _median_wall(plan: PlanNode, catalog: Catalog, zc: ZoneConfig,
                 runs: int = 5) -> float:
    walls = sorted(_run(plan, catalog, zc)[1].wall_ms for _ in range(runs))
    return walls[len(walls) // 2]


def _assert_same_result(reference: list, got: list, context: str) -> None:
    if Counter(reference) != Counter(got):
        raise AssertionError(f"result mismatch in {context}: "
                             f"{len(reference)} vs {len(got)} rows")


def scan_materialized(stats: ExecStats, aliases) -> int:
    names = set(aliases)
    return sum(op.counters.get("tuples_materialized", 0)
               for op in stats.scans() if op.detail in names)


def _plan_pair(sql: str, catalog: Catalog, flags: AblationFlags):
    query = resolve(parse(sql), catalog)
    base = plan_baseline(query, catalog,
                         CardinalitySource(catalog, query, mode="exact"))
    return base, rewrite_predefined(base, catalog, flags)


# ------------------------------------------------------------------- micro

MICRO_CONFIG = SocialDbConfig(n_person=10000, avg_degree=50.0,
                              n_comment_per_person=0, seed=42)

_MICRO_SQL = ("SELECT COUNT(*) FROM Person P1, Knows K, Person P2 "
              "WHERE P1.id = K.id1 AND K.id2 = P2.id "
              "AND P1.id <= {tp} AND K.creationDate <= DATE '{tk}'")


def run_micro(spec: MicroSpec | None = None,
              config: SocialDbConfig | None = None,
              zone_size: int = 1024,
              catalog: Catalog | None = None) -> Report:
    """One-hop selectivity sweep; returns rows per (selectivity, mode)."""
    spec = spec or MicroSpec()
    if catalog is None:
        catalog = social_catalog(config or MICRO_CONFIG)
    person_ids = catalog.table("Person").column("id").data
    kdates = catalog.table("Knows").column("creationDate").data
    zc = ZoneConfig(zone_size)
    report = Report(MICRO_HEADER)
    for s in spec.swept_selectivities:
        p_sel, k_sel = ((s, spec.fixed_selectivity) if spec.which == "MICRO-P"
                        else (spec.fixed_selectivity, s))
        sql = _MICRO_SQL.format(tp=quantile_threshold(person_ids, p_sel),
                                tk=days_to_date(quantile_threshold(kdates, k_sel)))
        base, rewritten = _plan_pair(sql, catalog, AblationFlags.full())
        vrows, vstats = _run(base, catalog, zc)
        prows, pstats = _run(rewritten, catalog, zc)
        _assert_same_result(vrows, prows, f"{spec.which} s={s}")
        for mode, plan, stats in (("vanilla", base, vstats),
                                  ("predefined", rewritten, pstats)):
            report.rows.append((
                s, mode, _median_wall(plan, catalog, zc),
                scan_materialized(stats, ("K",)),
                scan_materialized(stats, ("P1", "P2"))))
    return report


# ---------------------------------------------------------------- ablation

ABLATION_CONFIG = SocialDbConfig(n_person=2000, avg_degree=10.0,
                                 n_comment_per_person=2, seed=42)

ABLATION_SUITE: tuple[tuple[str, str], ...] = (
    ("hop1-src", "SELECT COUNT(*) FROM Person P1, Knows K, Person P2 "
     "WHERE P1.id = K.id1 AND K.id2 = P2.id AND P1.id <= 1"),
    ("hop1-dst", "SELECT COUNT(*) FROM Person P1, Knows K, Person P2 "
     "WHERE P1.id = K.id1 AND K.id2 = P2.id AND P2.id <= 1"),
    ("hop2-src", "SELECT COUNT(*) FROM Person P1, Knows K1, Person P2, "
     "Knows K2, Person P3 WHERE P1.id = K1.id1 AND K1.id2 = P2.id "
     "AND P2.id = K2.id1 AND K2.id2 = P3.id AND P1.id <= 1"),
    ("hop2-both", "SELECT COUNT(*) FROM Person P1, Knows K1, Person P2, "
     "Knows K2, Person P3 WHERE P1.id = K1.id1 AND K1.id2 = P2.id "
     "AND P2.id = K2.id1 AND K2.id2 = P3.id AND P1.id <= 40 AND P3.id <= 40"),
    ("hop3-src", "SELECT COUNT(*) FROM Person P1, Knows K1, Person P2, "
     "Knows K2, Person P3, Knows K3, Person P4 WHERE P1.id = K1.id1 "
     "AND K1.id2 = P2.id AND P2.id = K2.id1 AND K2.id2 = P3.id "
     "AND P3.id = K3.id1 AND K3.id2 = P4.id AND P1.id <= 0"),
    ("hop1-edgecols", "SELECT K.creationDate FROM Person P1, Knows K, "
     "Person P2 WHERE P1.id = K.id1 AND K.id2 = P2.id AND P1.id <= 1"),
    ("comments", "SELECT COUNT(*) FROM Person P, Comment C "
     "WHERE P.id = C.creatorId AND P.id <= 1"),
    ("hop1-comments", "SELECT COUNT(*) FROM Person P1, Knows K, Person P2, "
     "Comment C WHERE P1.id = K.id1 AND K.id2 = P2.id "
     "AND P2.id = C.creatorId AND P1.id <= 1"),
    ("hop1-min", "SELECT MIN(P2.name) FROM Person P1, Knows K, Person P2 "
     "WHERE P1.id = K.id1 AND K.id2 = P2.id AND P1.id <= 5"),
    ("hop2-dst", "SELECT COUNT(*) FROM Person P1, Knows K1, Person P2, "
     "Knows K2, Person P3 WHERE P1.id = K1.id1 AND K1.id2 = P2.id "
     "AND P2.id = K2.id1 AND K2.id2 = P3.id AND P3.id <= 1"),
)


def run_ablation(suite=None, config: SocialDbConfig | None = None,
                 zone_size: int = 64,
                 catalog: Catalog | None = None) -> Report:
    """Each suite query under all four flag configurations."""
    suite = suite or ABLATION_SUITE
    if catalog is None:
        catalog = social_catalog(config or ABLATION_CONFIG)
    zc = ZoneConfig(zone_size)
    report = Report(ABLATION_HEADER)
    for name, sql in suite:
        query = resolve(parse(sql), catalog)
        base = plan_baseline(query, catalog,
                             CardinalitySource(catalog, query, mode="exact"))
        reference = None
        for label, flags in ABLATION_CONFIGS:
            plan = rewrite_predefined(base, catalog, flags)
            rows, stats = _run(plan, catalog, zc)
            if reference is None:
                reference = rows
            else:
                _assert_same_result(reference, rows, f"{name} [{label}]")
            report.rows.append((
                name, label, _median_wall(plan, catalog, zc),
                stats.total("tuples_materialized"),
                stats.total("tuples_emitted"), len(rows),
                len(stats.scans())))
    return report


# ---------------------------------------------------------------- spectrum

SPECTRUM_QUERIES: tuple[tuple[str, str], ...] = (
    ("chain-knows", "SELECT COUNT(*) FROM Person P1, Knows K1, Person P2, "
     "Knows K2 WHERE P1.id = K1.id1 AND K1.id2 = P2.id AND P2.id = K2.id1 "
     "AND P1.id <= 0"),
    ("chain-comment", "SELECT COUNT(*) FROM Person P1, Knows K, Person P2, "
     "Comment C WHERE P1.id = K.id1 AND K.id2 = P2.id "
     "AND P2.id = C.creatorId AND P1.id <= 0"),
    ("chain-reverse", "SELECT COUNT(*) FROM Comment C, Person P1, Knows K, "
     "Person P2 WHERE C.creatorId = P1.id AND P1.id = K.id1 "
     "AND K.id2 = P2.id AND P2.id <= 0"),
)


def _default_thresholds(costs: list[int]) -> list[int]:
    hi = max(max(costs), 1)
    lo = max(min(costs), 1)
    if lo >= hi:
        return [hi]
    raw = np.geomspace(lo, hi, num=8)
    return sorted({int(round(t)) for t in raw})


def run_spectrum(sql: str, config: SocialDbConfig | None = None,
                 cap: int | None = None, zone_size: int = 64,
                 thresholds=None,
                 catalog: Catalog | None = None) -> SpectrumReport:
    """Execute every enumerated join order, baseline and fully rewritten,
    once each; CDF counts use tuples_materialized as the cost (wall time is
    reported per plan but too noisy to threshold at this scale)."""
    if catalog is None:
        catalog = social_catalog(config or ABLATION_CONFIG)
    zc = ZoneConfig(zone_size)
    query = resolve(parse(sql), catalog)
    plans = enumerate_plans(query, catalog, cap)
    plan_report = Report(SPECTRUM_PLAN_HEADER)
    for pid, base in enumerate(plans):
        rewritten = rewrite_predefined(base, catalog, AblationFlags.full())
        vrows, vstats = _run(base, catalog, zc)
        prows, pstats = _run(rewritten, catalog, zc)
        _assert_same_result(vrows, prows, f"plan {pid}")
        plan_report.rows.append((pid, "baseline", vstats.wall_ms,
                                 vstats.total("tuples_materialized")))
        plan_report.rows.append((pid, "rewritten", pstats.wall_ms,
                                 pstats.total("tuples_materialized")))
    cdf = Report(SPECTRUM_CDF_HEADER)
    spectrum = SpectrumReport(plan_report, cdf)
    all_costs = [r[3] for r in plan_report.rows]
    if all_costs:
        if thresholds is None:
            thresholds = _default_thresholds(all_costs)
        for variant in ("baseline", "rewritten"):
            costs = spectrum.costs(variant)
            for t in thresholds:
                cdf.rows.append((variant, int(t), sum(c <= t for c in costs)))
    return spectrum


# ------------------------------------------------------------------- plots

def _pyplot():
    try:
        import matplotlib
    except ImportError:
        raise EngineError(
            "plotting requires matplotlib; install the [plot] extra") from None
    matplotlib.use("Agg", force=True)
    matplotlib.rcParams["svg.hashsalt"] = "ridjoin"
    from matplotlib import pyplot
    return pyplot


def _save(fig, path: str) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def save_micro_plot(report: Report, path: str) -> None:
    plt = _pyplot()
    fig, (ax_wall, ax_mat) = plt.subplots(1, 2, figsize=(9, 3.5))
    for mode in ("vanilla", "predefined"):
        rows = [r for r in report.rows if r[1] == mode]
        xs = [r[0] for r in rows]
        ax_wall.plot(xs, [r[2] for r in rows], marker="o", label=mode)
        ax_mat.plot(xs, [r[3] for r in rows], marker="o", label=mode)
    for ax, title in ((ax_wall, "wall_ms"), (ax_mat, "knows tuples scanned")):
        ax.set_xscale("log")
        ax.set_xlabel("selectivity")
        ax.set_title(title)
        ax.legend()
    ax_mat.set_yscale("symlog")
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def save_ablation_plot(report: Report, path: str) -> None:
    plt = _pyplot()
    queries = list(dict.fromkeys(r[0] for r in report.rows))
    labels = list(dict.fromkeys(r[1] for r in report.rows))
    fig, ax = plt.subplots(figsize=(10, 3.5))
    width = 0.8 / max(len(labels), 1)
    for i, label in enumerate(labels):
        ys = [next(r[3] for r in report.rows if r[0] == q and r[1] == label)
              for q in queries]
        ax.bar([j + i * width for j in range(len(queries))], ys, width,
               label=label)
    ax.set_yscale("log")
    ax.set_xticks([j + 0.4 for j in range(len(queries))], queries,
                  rotation=30, ha="right")
    ax.set_ylabel("tuples materialized")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def save_spectrum_plot(report: SpectrumReport, path: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for variant in ("baseline", "rewritten"):
        rows = [r for r in report.cdf.rows if r[0] == variant]
        ax.step([r[1] for r in rows], [r[2] for r in rows], where="post",
                marker="o", label=variant)
    ax.set_xscale("log")
    ax.set_xlabel("tuples materialized")
    ax.set_ylabel("plans within threshold")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


# ---------------------------------------------------------------- gen-data

def dump_social(catalog: Catalog, out_dir: str) -> list[str]:
    """Write person.csv / knows.csv / comment.csv under out_dir."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in ("Person", "Knows", "Comment"):
        path = os.path.join(out_dir, f"{name.lower()}.csv")
        with open(path, "w", newline="") as fp:
            write_csv(catalog.table(name), fp, header=True)
        written.append(path)
    return written
