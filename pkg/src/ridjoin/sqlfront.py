"""SQL front end for the conjunctive select-project-join subset plus DDL.

parse() is syntax-only and yields plain statement dataclasses; resolve()
checks a query against a catalog (aliases, columns, predicate types) and
expands SELECT *. render() is the canonical inverse of parse: for any
statement s, parse(render(s)) == s.

Supported statements:

    SELECT (* | COUNT(*) | MIN(a.c) | MAX(a.c) | a.c, ...)
        FROM t1 [a1], t2 [a2], ... [WHERE pred AND pred ...]
    PREDEFINE JOIN F(c, ...) REFERENCES P(c, ...)
    CREATE RID INDEX ON F REFERENCES P(c, ...)
    CREATE EXTENDED RID INDEX ON F FROM P1(c, ...) TO P2(c, ...)
    CREATE TABLE t (col TYPE, ...)
    COPY t FROM 'path' [HEADER]

Predicates are alias.col CMP (alias.col | constant) with CMP one of
=, <>, <, <=, >, >=. Everything else that looks like SQL (OR, GROUP BY,
subqueries, arithmetic, explicit JOIN) raises UnsupportedFeature rather
than a confusing syntax error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

from .errors import ResolutionError, SqlSyntaxError, UnsupportedFeature
from .storage import Catalog, ColumnType, date_to_days, days_to_date

KEYWORDS = {
    "SELECT", "FROM", "WHERE", "AND", "COUNT", "MIN", "MAX",
    "PREDEFINE", "JOIN", "REFERENCES", "CREATE", "EXTENDED", "RID",
    "INDEX", "ON", "TABLE", "COPY", "HEADER", "DATE", "TO",
    # recognized only to reject clearly
    "OR", "GROUP", "ORDER", "BY", "LIMIT", "HAVING", "DISTINCT", "NOT",
    # type names
    "INT64", "INT", "BIGINT", "STRING", "TEXT", "VARCHAR",
}

_TYPE_NAMES = {
    "INT64": ColumnType.INT64, "INT": ColumnType.INT64, "BIGINT": ColumnType.INT64,
    "STRING": ColumnType.STR, "TEXT": ColumnType.STR, "VARCHAR": ColumnType.STR,
    "DATE": ColumnType.DATE,
}

_CMP_OPS = ("=", "<>", "<=", ">=", "<", ">")
_ARITH = ("+", "-", "/", "%")

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>\d+)"
    r"|(?P<string>'(?:[^']|'')*')"
    r"|(?P<symbol><>|<=|>=|[=<>(),;.*+\-/%])"
    r")")


@dataclass(frozen=True)
class Token:
    kind: str   # IDENT | INT | STRING | SYMBOL | EOF
    text: str
    pos: int

    def keyword(self) -> Optional[str]:
        if self.kind == "IDENT" and self.text.upper() in KEYWORDS:
            return self.text.upper()
        return None


def _tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise SqlSyntaxError(at, ("token",), stripped[0])
        pos = m.end()
        for kind in ("ident", "int", "string", "symbol"):
            val = m.group(kind)
            if val is not None:
                tokens.append(Token(kind.upper() if kind != "ident" else "IDENT",
                                    val, m.start(kind)))
                break
    tokens.append(Token("EOF", "", len(text)))
    return tokens


# --------------------------------------------------------------- AST types

@dataclass(frozen=True)
class ColRef:
    alias: str
    column: str

    def __str__(self) -> str:
        return f"{self.alias}.{self.column}"


@dataclass(frozen=True)
class Const:
    kind: str  # "int" | "str" | "date"
    value: Union[int, str]  # dates normalized to day counts

    def render(self) -> str:
        if self.kind == "int":
            return str(self.value)
        if self.kind == "date":
            return f"DATE '{days_to_date(self.value)}'"
        return "'" + str(self.value).replace("'", "''") + "'"


@dataclass(frozen=True)
class FilterPred:
    col: ColRef
    op: str
    value: Const

    def render(self) -> str:
        return f"{self.col} {self.op} {self.value.render()}"


@dataclass(frozen=True)
class JoinPred:
    left: ColRef
    right: ColRef

    def render(self) -> str:
        return f"{self.left} = {self.right}"

    def aliases(self) -> tuple[str, str]:
        return self.left.alias, self.right.alias


@dataclass(frozen=True)
class Aggregate:
    func: str  # "count" | "min" | "max"
    col: Optional[ColRef]

    def render(self) -> str:
        if self.func == "count":
            return "COUNT(*)"
        return f"{self.func.upper()}({self.col})"


@dataclass(frozen=True)
class QuerySpec:
    relations: tuple[tuple[str, str], ...]          # (table, alias)
    projection: Optional[tuple[ColRef, ...]]        # None = unexpanded *
    aggregate: Optional[Aggregate]
    join_preds: tuple[JoinPred, ...]
    filters: tuple[FilterPred, ...]

    def alias_table(self, alias: str) -> Optional[str]:
        for table, a in self.relations:
            if a == alias:
                return table
        return None


@dataclass(frozen=True)
class PredefineJoinStmt:
    from_table: str
    from_cols: tuple[str, ...]
    to_table: str
    to_cols: tuple[str, ...]


@dataclass(frozen=True)
class CreateRidIndexStmt:
    from_table: str
    to_table: str
    from_cols: tuple[str, ...]


@dataclass(frozen=True)
class CreateExtendedRidIndexStmt:
    table: str
    near_table: str
    near_cols: tuple[str, ...]
    far_table: str
    far_cols: tuple[str, ...]


@dataclass(frozen=True)
class CreateTableStmt:
    name: str
    columns: tuple[tuple[str, ColumnType], ...]


@dataclass(frozen=True)
class CopyCsvStmt:
    table: str
    path: str
    header: bool


Statement = Union[QuerySpec, PredefineJoinStmt, CreateRidIndexStmt,
                  CreateExtendedRidIndexStmt, CreateTableStmt, CopyCsvStmt]


# ------------------------------------------------------------------ parser

class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def error(self, expected: tuple[str, ...]) -> SqlSyntaxError:
        tok = self.peek()
        found = tok.text if tok.kind != "EOF" else "end of input"
        return SqlSyntaxError(tok.pos, expected, found)

    def at_keyword(self, *words: str) -> bool:
        return self.peek().keyword() in words

    def expect_keyword(self, *words: str) -> str:
        kw = self.peek().keyword()
        if kw not in words:
            raise self.error(words)
        self.advance()
        return kw

    def expect_symbol(self, sym: str) -> None:
        tok = self.peek()
        if tok.kind != "SYMBOL" or tok.text != sym:
            raise self.error((f"'{sym}'",))
        self.advance()

    def at_symbol(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "SYMBOL" and tok.text == sym

    def expect_ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.keyword() is not None:
            raise self.error((what,))
        self.advance()
        return tok.text

    def reject_arith(self) -> None:
        tok = self.peek()
        if tok.kind == "SYMBOL" and tok.text in _ARITH + ("*",):
            raise UnsupportedFeature("arithmetic expressions", tok.pos)

    # --- pieces ---

    def colref(self) -> ColRef:
        alias = self.expect_ident("alias")
        self.expect_symbol(".")
        column = self.expect_ident("column")
        return ColRef(alias, column)

    def ident_list(self) -> tuple[str, ...]:
        self.expect_symbol("(")
        names = [self.expect_ident("column")]
        while self.at_symbol(","):
            self.advance()
            names.append(self.expect_ident("column"))
        self.expect_symbol(")")
        return tuple(names)

    def constant(self) -> Const:
        tok = self.peek()
        if tok.keyword() == "DATE":
            self.advance()
            lit = self.peek()
            if lit.kind != "STRING":
                raise self.error(("date string",))
            self.advance()
            try:
                days = date_to_days(lit.text[1:-1])
            except ValueError:
                raise SqlSyntaxError(lit.pos, ("ISO-8601 date",), lit.text) from None
            return Const("date", days)
        if tok.kind == "INT":
            self.advance()
            return Const("int", int(tok.text))
        if tok.kind == "SYMBOL" and tok.text == "-":
            self.advance()
            lit = self.peek()
            if lit.kind != "INT":
                raise self.error(("integer",))
            self.advance()
            return Const("int", -int(lit.text))
        if tok.kind == "STRING":
            self.advance()
            return Const("str", tok.text[1:-1].replace("''", "'"))
        raise self.error(("constant",))

    def predicate(self) -> Union[JoinPred, FilterPred]:
        if self.at_symbol("("):
            raise UnsupportedFeature("nested expressions", self.peek().pos)
        left = self.colref()
        self.reject_arith()
        tok = self.peek()
        if tok.kind != "SYMBOL" or tok.text not in _CMP_OPS:
            raise self.error(_CMP_OPS)
        op = tok.text
        self.advance()
        nxt = self.peek()
        if nxt.keyword() == "SELECT":
            raise UnsupportedFeature("subqueries", nxt.pos)
        if nxt.kind == "IDENT" and nxt.keyword() is None:
            right = self.colref()
            self.reject_arith()
            if op != "=":
                raise UnsupportedFeature(f"non-equality join ({op})", tok.pos)
            return JoinPred(left, right)
        value = self.constant()
        self.reject_arith()
        return FilterPred(left, op, value)

    def where_clause(self) -> tuple[tuple[JoinPred, ...], tuple[FilterPred, ...]]:
        joins: list[JoinPred] = []
        filters: list[FilterPred] = []
        while True:
            pred = self.predicate()
            if isinstance(pred, JoinPred):
                joins.append(pred)
            else:
                filters.append(pred)
            if self.at_keyword("AND"):
                self.advance()
                continue
            if self.at_keyword("OR"):
                raise UnsupportedFeature("OR", self.peek().pos)
            break
        return tuple(joins), tuple(filters)

    # --- statements ---

    def query(self) -> QuerySpec:
        self.expect_keyword("SELECT")
        if self.at_keyword("DISTINCT"):
            raise UnsupportedFeature("DISTINCT", self.peek().pos)
        projection: Optional[tuple[ColRef, ...]] = None
        aggregate: Optional[Aggregate] = None
        if self.at_symbol("*"):
            self.advance()
        elif self.at_keyword("COUNT"):
            self.advance()
            self.expect_symbol("(")
            self.expect_symbol("*")
            self.expect_symbol(")")
            projection = ()
            aggregate = Aggregate("count", None)
        elif self.at_keyword("MIN", "MAX"):
            func = self.expect_keyword("MIN", "MAX").lower()
            self.expect_symbol("(")
            col = self.colref()
            self.expect_symbol(")")
            projection = ()
            aggregate = Aggregate(func, col)
        else:
            cols = [self.colref()]
            self.reject_arith()
            while self.at_symbol(","):
                self.advance()
                cols.append(self.colref())
                self.reject_arith()
            projection = tuple(cols)
        self.expect_keyword("FROM")
        relations = [self.relation()]
        while True:
            if self.at_symbol(","):
                self.advance()
                relations.append(self.relation())
                continue
            if self.at_keyword("JOIN"):
                raise UnsupportedFeature("explicit JOIN syntax", self.peek().pos)
            break
        joins: tuple[JoinPred, ...] = ()
        filters: tuple[FilterPred, ...] = ()
        if self.at_keyword("WHERE"):
            self.advance()
            joins, filters = self.where_clause()
        for kw in ("GROUP", "ORDER", "LIMIT", "HAVING"):
            if self.at_keyword(kw):
                raise UnsupportedFeature(kw, self.peek().pos)
        return QuerySpec(relations=tuple(relations), projection=projection,
                         aggregate=aggregate, join_preds=joins, filters=filters)

    def relation(self) -> tuple[str, str]:
        table = self.expect_ident("table")
        tok = self.peek()
        if tok.kind == "IDENT" and tok.keyword() is None:
            self.advance()
            return (table, tok.text)
        return (table, table)

    def predefine(self) -> PredefineJoinStmt:
        self.expect_keyword("PREDEFINE")
        self.expect_keyword("JOIN")
        from_table = self.expect_ident("table")
        from_cols = self.ident_list()
        self.expect_keyword("REFERENCES")
        to_table = self.expect_ident("table")
        to_cols = self.ident_list()
        return PredefineJoinStmt(from_table, from_cols, to_table, to_cols)

    def create(self) -> Statement:
        self.expect_keyword("CREATE")
        if self.at_keyword("TABLE"):
            self.advance()
            name = self.expect_ident("table")
            self.expect_symbol("(")
            cols = [self.column_def()]
            while self.at_symbol(","):
                self.advance()
                cols.append(self.column_def())
            self.expect_symbol(")")
            return CreateTableStmt(name, tuple(cols))
        extended = False
        if self.at_keyword("EXTENDED"):
            self.advance()
            extended = True
        self.expect_keyword("RID")
        self.expect_keyword("INDEX")
        self.expect_keyword("ON")
        table = self.expect_ident("table")
        if extended:
            self.expect_keyword("FROM")
            near_table = self.expect_ident("table")
            near_cols = self.ident_list()
            self.expect_keyword("TO")
            far_table = self.expect_ident("table")
            far_cols = self.ident_list()
            return CreateExtendedRidIndexStmt(table, near_table, near_cols,
                                              far_table, far_cols)
        self.expect_keyword("REFERENCES")
        to_table = self.expect_ident("table")
        from_cols = self.ident_list()
        return CreateRidIndexStmt(table, to_table, from_cols)

    def column_def(self) -> tuple[str, ColumnType]:
        name = self.expect_ident("column")
        kw = self.peek().keyword()
        if kw not in _TYPE_NAMES:
            raise self.error(tuple(sorted(_TYPE_NAMES)))
        self.advance()
        return (name, _TYPE_NAMES[kw])

    def copy(self) -> CopyCsvStmt:
        self.expect_keyword("COPY")
        table = self.expect_ident("table")
        self.expect_keyword("FROM")
        tok = self.peek()
        if tok.kind != "STRING":
            raise self.error(("file path string",))
        self.advance()
        path = tok.text[1:-1].replace("''", "'")
        header = False
        if self.at_keyword("HEADER"):
            self.advance()
            header = True
        return CopyCsvStmt(table, path, header)

    def statement(self) -> Statement:
        kw = self.peek().keyword()
        if kw == "SELECT":
            return self.query()
        if kw == "PREDEFINE":
            return self.predefine()
        if kw == "CREATE":
            return self.create()
        if kw == "COPY":
            return self.copy()
        raise self.error(("SELECT", "PREDEFINE", "CREATE", "COPY"))

    def end_statement(self) -> None:
        if self.at_symbol(";"):
            self.advance()


def parse(text: str) -> Statement:
    """Parse exactly one statement (optionally ';'-terminated)."""
    parser = _Parser(_tokenize(text))
    stmt = parser.statement()
    parser.end_statement()
    if parser.peek().kind != "EOF":
        raise parser.error(("end of statement",))
    return stmt


def parse_script(text: str) -> list[Statement]:
    """Parse a ';'-separated sequence of statements."""
    parser = _Parser(_tokenize(text))
    out: list[Statement] = []
    while parser.peek().kind != "EOF":
        out.append(parser.statement())
        if parser.peek().kind != "EOF":
            parser.expect_symbol(";")
    return out


# ---------------------------------------------------------------- renderer

def render(stmt: Statement) -> str:
    """Canonical SQL text; parse(render(s)) == s for every statement."""
    if isinstance(stmt, QuerySpec):
        if stmt.aggregate is not None:
            head = stmt.aggregate.render()
        elif stmt.projection is None:
            head = "*"
        else:
            head = ", ".join(str(c) for c in stmt.projection)
        rels = ", ".join(t if t == a else f"{t} {a}" for t, a in stmt.relations)
        sql = f"SELECT {head} FROM {rels}"
        preds = [p.render() for p in stmt.join_preds]
        preds += [p.render() for p in stmt.filters]
        if preds:
            sql += " WHERE " + " AND ".join(preds)
        return sql
    if isinstance(stmt, PredefineJoinStmt):
        return (f"PREDEFINE JOIN {stmt.from_table}({', '.join(stmt.from_cols)}) "
                f"REFERENCES {stmt.to_table}({', '.join(stmt.to_cols)})")
    if isinstance(stmt, CreateRidIndexStmt):
        return (f"CREATE RID INDEX ON {stmt.from_table} "
                f"REFERENCES {stmt.to_table}({', '.join(stmt.from_cols)})")
    if isinstance(stmt, CreateExtendedRidIndexStmt):
        return (f"CREATE EXTENDED RID INDEX ON {stmt.table} "
                f"FROM {stmt.near_table}({', '.join(stmt.near_cols)}) "
                f"TO {stmt.far_table}({', '.join(stmt.far_cols)})")
    if isinstance(stmt, CreateTableStmt):
        names = {ColumnType.INT64: "INT64", ColumnType.STR: "STRING",
                 ColumnType.DATE: "DATE"}
        cols = ", ".join(f"{n} {names[t]}" for n, t in stmt.columns)
        return f"CREATE TABLE {stmt.name} ({cols})"
    if isinstance(stmt, CopyCsvStmt):
        path = stmt.path.replace("'", "''")
        sql = f"COPY {stmt.table} FROM '{path}'"
        if stmt.header:
            sql += " HEADER"
        return sql
    raise TypeError(f"not a statement: {stmt!r}")


# ---------------------------------------------------------------- resolver

_CONST_FOR_TYPE = {
    ColumnType.INT64: "int",
    ColumnType.STR: "str",
    ColumnType.DATE: "date",
}


def resolve(query: QuerySpec, catalog: Catalog) -> QuerySpec:
    """Validate names and types against `catalog` and expand SELECT *.

    Returns a new QuerySpec whose projection is always explicit (possibly
    empty when aggregating). Only user-visible columns resolve; the hidden
    pointer columns are engine-internal.
    """
    seen: dict[str, str] = {}
    for table, alias in query.relations:
        if alias in seen:
            raise ResolutionError(f"duplicate alias {alias}")
        if table not in catalog.tables:
            raise ResolutionError(f"unknown table {table}")
        seen[alias] = table

    def check_col(ref: ColRef) -> ColumnType:
        if ref.alias not in seen:
            raise ResolutionError(f"unknown alias {ref.alias}")
        table = catalog.table(seen[ref.alias])
        if not table.has_column(ref.column):
            raise ResolutionError(f"unknown column {ref}")
        col = table.column(ref.column)
        if col.visibility != "user":
            raise ResolutionError(f"unknown column {ref}")
        return col.ctype

    projection = query.projection
    if projection is None and query.aggregate is None:
        expanded = []
        for table, alias in query.relations:
            for col in catalog.table(table).user_columns:
                expanded.append(ColRef(alias, col.name))
        projection = tuple(expanded)
    if projection:
        for ref in projection:
            check_col(ref)
    if query.aggregate is not None and query.aggregate.col is not None:
        check_col(query.aggregate.col)
    for pred in query.join_preds:
        lt = check_col(pred.left)
        rt = check_col(pred.right)
        if lt is not rt:
            raise ResolutionError(f"type mismatch in {pred.render()}")
    for pred in query.filters:
        ct = check_col(pred.col)
        if _CONST_FOR_TYPE[ct] != pred.value.kind:
            raise ResolutionError(f"type mismatch in {pred.render()}")
    return QuerySpec(relations=query.relations, projection=projection,
                     aggregate=query.aggregate, join_preds=query.join_preds,
                     filters=query.filters)
