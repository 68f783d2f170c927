"""Command-line entry point.

One command per invocation:

  run             execute a ';'-separated statement script, results as CSV
                  on stdout, per-query stats as JSON behind --stats
  explain         print each query's plan tree before and after rewrite
  bench-micro     selectivity microbenchmark (MICRO-P / MICRO-K)
  bench-ablation  the shipped suite under all four flag configurations
  bench-spectrum  every join order of one query, baseline vs rewritten
  gen-data        write the synthetic social tables as CSV files

Exit codes: 0 success, 1 user error (bad SQL, missing file, bad flags),
2 internal invariant failure. Nothing is written to stdout on error.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import replace

from .bench import (
    ABLATION_CONFIG,
    MICRO_CONFIG,
    SPECTRUM_QUERIES,
    MicroSpec,
    SocialDbConfig,
    dump_social,
    generate_social,
    run_ablation,
    run_micro,
    run_spectrum,
    save_ablation_plot,
    save_micro_plot,
    save_spectrum_plot,
)
from .engine import execute
from .errors import EngineError
from .planner import (
    AblationFlags,
    CardinalitySource,
    plan_baseline,
    rewrite_predefined,
)
from .plans import explain
from .ridindex import build_extended_rid_index, build_rid_index
from .ridmat import find_predefined, predefine_join
from .sqlfront import (
    CopyCsvStmt,
    CreateExtendedRidIndexStmt,
    CreateRidIndexStmt,
    CreateTableStmt,
    PredefineJoinStmt,
    QuerySpec,
    parse_script,
    render,
    resolve,
)
from .storage import Catalog, ColumnType, ZoneConfig, days_to_date, load_csv


def _add_script_args(cmd: argparse.ArgumentParser) -> None:
    src = cmd.add_mutually_exclusive_group(required=True)
    src.add_argument("--script", metavar="PATH", help="statement script file")
    src.add_argument("--sql", metavar="TEXT", help="inline statements")
    cmd.add_argument("--zone-size", type=int, default=1024, metavar="N")
    cmd.add_argument("--cards", default="exact", metavar="MODE",
                     help="exact, estimate, or file=PATH")
    cmd.add_argument("--no-rid-mat", action="store_true",
                     help="disable all pointer-join rewrites")
    cmd.add_argument("--no-rsj", action="store_true",
                     help="disable reverse semijoins (and merging)")
    cmd.add_argument("--no-jm", action="store_true",
                     help="disable join merging")


def _flags(args) -> AblationFlags:
    rid = not args.no_rid_mat
    rsj = rid and not args.no_rsj
    jm = rsj and not args.no_jm
    return AblationFlags(rid, rsj, jm)


def _cards_source(args, catalog: Catalog, query: QuerySpec) -> CardinalitySource:
    if args.cards in ("exact", "estimate"):
        return CardinalitySource(catalog, query, mode=args.cards)
    if args.cards.startswith("file="):
        with open(args.cards[len("file="):]) as fp:
            table = json.load(fp)
        return CardinalitySource(catalog, query, mode="user", user_cards=table)
    raise EngineError(f"bad --cards value {args.cards!r}")


def _script_text(args) -> tuple[str, str]:
    """Statement text plus the directory COPY paths resolve against."""
    if args.sql is not None:
        return args.sql, os.getcwd()
    with open(args.script) as fp:
        return fp.read(), os.path.dirname(os.path.abspath(args.script))


def _apply_ddl(stmt, catalog: Catalog, base_dir: str) -> None:
    if isinstance(stmt, CreateTableStmt):
        catalog.create_table(stmt.name, stmt.columns)
    elif isinstance(stmt, CopyCsvStmt):
        path = stmt.path if os.path.isabs(stmt.path) \
            else os.path.join(base_dir, stmt.path)
        with open(path, newline="") as fp:
            load_csv(catalog.table(stmt.table), fp, header=stmt.header)
    elif isinstance(stmt, PredefineJoinStmt):
        predefine_join(catalog, stmt.from_table, stmt.from_cols,
                       stmt.to_table, stmt.to_cols)
    elif isinstance(stmt, CreateRidIndexStmt):
        pj = find_predefined(catalog, stmt.from_table, stmt.from_cols,
                             stmt.to_table)
        if pj is None:
            raise EngineError(
                f"no predefined join {stmt.from_table} -> {stmt.to_table} "
                f"on ({', '.join(stmt.from_cols)})")
        build_rid_index(catalog, pj)
    elif isinstance(stmt, CreateExtendedRidIndexStmt):
        near = find_predefined(catalog, stmt.table, stmt.near_cols,
                               stmt.near_table)
        far = find_predefined(catalog, stmt.table, stmt.far_cols,
                              stmt.far_table)
        if near is None or far is None:
            raise EngineError(
                f"extended index on {stmt.table} needs both predefined joins")
        build_extended_rid_index(catalog, near, far)
    else:
        raise TypeError(f"not a DDL statement: {stmt!r}")


def _output_columns(query: QuerySpec, catalog: Catalog):
    """(label, type) per output column of a resolved query."""
    if query.aggregate is not None:
        agg = query.aggregate
        if agg.func == "count":
            return [(agg.render(), ColumnType.INT64)]
        table = catalog.table(query.alias_table(agg.col.alias))
        return [(agg.render(), table.column(agg.col.column).ctype)]
    out = []
    for col in query.projection:
        table = catalog.table(query.alias_table(col.alias))
        out.append((str(col), table.column(col.column).ctype))
    return out


def _render_value(value, ctype: ColumnType):
    if ctype is ColumnType.DATE and value is not None:
        return days_to_date(value)
    return value


def _write_result(out, rows, columns, fmt: str) -> None:
    import csv as _csv

    labels = [label for label, _ in columns]
    types = [t for _, t in columns]
    rendered = [tuple(_render_value(v, t) for v, t in zip(row, types))
                for row in rows]
    if fmt == "json":
        json.dump({"columns": labels, "rows": [list(r) for r in rendered]},
                  out, default=str)
        out.write("\n")
    else:
        writer = _csv.writer(out, lineterminator="\n")
        writer.writerow(labels)
        writer.writerows(rendered)


def _cmd_run(args) -> int:
    catalog = Catalog()
    flags = _flags(args)
    zc = ZoneConfig(args.zone_size)
    out = io.StringIO()
    stats_log = []
    first = True
    text, base_dir = _script_text(args)
    for stmt in parse_script(text):
        if not isinstance(stmt, QuerySpec):
            _apply_ddl(stmt, catalog, base_dir)
            continue
        query = resolve(stmt, catalog)
        cards = _cards_source(args, catalog, query)
        plan = rewrite_predefined(plan_baseline(query, catalog, cards),
                                  catalog, flags)
        rows, stats = execute(plan, catalog, zc)
        if not first:
            out.write("\n")
        first = False
        _write_result(out, rows, _output_columns(query, catalog), args.format)
        stats_log.append(stats.to_json())
    sys.stdout.write(out.getvalue())
    if args.stats:
        with open(args.stats, "w") as fp:
            json.dump(stats_log, fp, indent=2)
            fp.write("\n")
    return 0


def _cmd_explain(args) -> int:
    catalog = Catalog()
    flags = _flags(args)
    out = io.StringIO()
    first = True
    text, base_dir = _script_text(args)
    for stmt in parse_script(text):
        if not isinstance(stmt, QuerySpec):
            _apply_ddl(stmt, catalog, base_dir)
            continue
        query = resolve(stmt, catalog)
        cards = _cards_source(args, catalog, query)
        base = plan_baseline(query, catalog, cards)
        rewritten = rewrite_predefined(base, catalog, flags)
        if not first:
            out.write("\n")
        first = False
        out.write(f"-- {render(stmt)}\n")
        out.write("baseline:\n")
        out.write(explain(base) + "\n")
        out.write("rewritten:\n")
        out.write(explain(rewritten) + "\n")
    sys.stdout.write(out.getvalue())
    return 0


def _emit_report(text: str, path: str | None) -> None:
    if path:
        with open(path, "w") as fp:
            fp.write(text)
    else:
        sys.stdout.write(text)


def _cmd_bench_micro(args) -> int:
    config = replace(MICRO_CONFIG, seed=args.seed)
    report = run_micro(MicroSpec(which=args.which), config,
                       zone_size=args.zone_size)
    _emit_report(report.render_csv(), args.out)
    if args.plot:
        save_micro_plot(report, args.plot)
    return 0


def _cmd_bench_ablation(args) -> int:
    config = replace(ABLATION_CONFIG, seed=args.seed)
    report = run_ablation(config=config, zone_size=args.zone_size)
    _emit_report(report.render_csv(), args.out)
    if args.plot:
        save_ablation_plot(report, args.plot)
    return 0


def _cmd_bench_spectrum(args) -> int:
    named = dict(SPECTRUM_QUERIES)
    if args.sql:
        sql = args.sql
    elif args.query in named:
        sql = named[args.query]
    else:
        raise EngineError(f"unknown spectrum query {args.query!r}; "
                          f"shipped: {', '.join(named)}")
    config = replace(ABLATION_CONFIG, seed=args.seed)
    report = run_spectrum(sql, config, cap=args.cap,
                          zone_size=args.zone_size)
    _emit_report(report.render_csv(), args.out)
    if args.plot:
        save_spectrum_plot(report, args.plot)
    return 0


def _cmd_gen_data(args) -> int:
    config = SocialDbConfig(n_person=args.n_person,
                            avg_degree=args.avg_degree,
                            n_comment_per_person=args.comments_per_person,
                            seed=args.seed)
    for path in dump_social(generate_social(config), args.out):
        print(path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ridjoin",
        description="columnar query engine with predefined pointer joins")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a statement script")
    _add_script_args(run)
    run.add_argument("--stats", metavar="PATH", help="write stats JSON here")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.set_defaults(func=_cmd_run)

    exp = sub.add_parser("explain", help="show plans before/after rewrite")
    _add_script_args(exp)
    exp.set_defaults(func=_cmd_explain)

    micro = sub.add_parser("bench-micro", help="selectivity microbenchmark")
    micro.add_argument("--which", choices=("MICRO-P", "MICRO-K"),
                       default="MICRO-P")
    micro.add_argument("--seed", type=int, default=MICRO_CONFIG.seed)
    micro.add_argument("--zone-size", type=int, default=1024)
    micro.add_argument("--out", metavar="PATH")
    micro.add_argument("--plot", metavar="SVG")
    micro.set_defaults(func=_cmd_bench_micro)

    abl = sub.add_parser("bench-ablation", help="flag-configuration suite")
    abl.add_argument("--seed", type=int, default=ABLATION_CONFIG.seed)
    abl.add_argument("--zone-size", type=int, default=64)
    abl.add_argument("--out", metavar="PATH")
    abl.add_argument("--plot", metavar="SVG")
    abl.set_defaults(func=_cmd_bench_ablation)

    spec = sub.add_parser("bench-spectrum", help="all join orders, one query")
    spec.add_argument("--query", default="chain-knows",
                      help="shipped query name")
    spec.add_argument("--sql", metavar="TEXT", help="custom query text")
    spec.add_argument("--cap", type=int, default=None)
    spec.add_argument("--seed", type=int, default=ABLATION_CONFIG.seed)
    spec.add_argument("--zone-size", type=int, default=64)
    spec.add_argument("--out", metavar="PATH")
    spec.add_argument("--plot", metavar="SVG")
    spec.set_defaults(func=_cmd_bench_spectrum)

    gen = sub.add_parser("gen-data", help="write synthetic social CSVs")
    gen.add_argument("--out", metavar="DIR", required=True)
    gen.add_argument("--seed", type=int, default=42)
    gen.add_argument("--n-person", type=int, default=2000)
    gen.add_argument("--avg-degree", type=float, default=10.0)
    gen.add_argument("--comments-per-person", type=int, default=2)
    gen.set_defaults(func=_cmd_gen_data)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are user errors here
        return 1 if exc.code == 2 else (exc.code or 0)
    try:
        return args.func(args)
    except (EngineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
