"""Seeded random databases and queries for the property suites.

One seed fully determines a case: a small social-style catalog (Person,
Knows, Comment) with a varying subset of predefined joins and RID indices,
plus one connected conjunctive query of 2 to 4 relations. Tables stay at
or under 64 rows so the reference evaluator stays fast.
"""

from dataclasses import dataclass

import numpy as np

from ridjoin.ridindex import build_extended_rid_index, build_rid_index
from ridjoin.ridmat import predefine_join
from ridjoin.sqlfront import (
    Aggregate,
    ColRef,
    Const,
    FilterPred,
    JoinPred,
    QuerySpec,
    parse,
    render,
    resolve,
)
from ridjoin.storage import Catalog, ColumnType

TAGS = ("ash", "birch", "cedar", "drift")


@dataclass
class Case:
    seed: int
    catalog: Catalog
    query: QuerySpec  # resolved
    sql: str


def random_catalog(rng) -> Catalog:
    catalog = Catalog()
    n_person = int(rng.integers(1, 65))
    ids = np.sort(rng.choice(128, size=n_person, replace=False)).astype(np.int64)
    person = catalog.create_table("Person", [("id", ColumnType.INT64),
                                             ("age", ColumnType.INT64),
                                             ("tag", ColumnType.STR)])
    person.extend([ids, rng.integers(0, 9, n_person),
                   [TAGS[i] for i in rng.integers(0, len(TAGS), n_person)]])

    n_knows = int(rng.integers(0, 65))
    knows = catalog.create_table("Knows", [("src", ColumnType.INT64),
                                           ("dst", ColumnType.INT64),
                                           ("year", ColumnType.INT64)])
    knows.extend([rng.choice(ids, n_knows), rng.choice(ids, n_knows),
                  rng.integers(2000, 2009, n_knows)])

    n_comment = int(rng.integers(0, 65))
    comment = catalog.create_table("Comment", [("owner", ColumnType.INT64),
                                               ("score", ColumnType.INT64)])
    comment.extend([rng.choice(ids, n_comment),
                    rng.integers(0, 9, n_comment)])

    j_src = predefine_join(catalog, "Knows", ("src",), "Person", ("id",))
    j_dst = predefine_join(catalog, "Knows", ("dst",), "Person", ("id",))
    if rng.random() < 0.75:
        j_own = predefine_join(catalog, "Comment", ("owner",), "Person", ("id",))
        if rng.random() < 0.7:
            build_rid_index(catalog, j_own)
    if rng.random() < 0.7:
        build_rid_index(catalog, j_src)
    if rng.random() < 0.7:
        build_rid_index(catalog, j_dst)
    if rng.random() < 0.5:
        build_extended_rid_index(catalog, j_src, j_dst)
    if rng.random() < 0.3:
        build_extended_rid_index(catalog, j_dst, j_src)
    return catalog


_INT_COLS = {"Person": ("id", "age"), "Knows": ("src", "dst", "year"),
             "Comment": ("owner", "score")}
_INT_OPS = ("=", "<", "<=", ">", ">=", "<>")


def _rand_filter(rng, alias: str, table: str) -> FilterPred:
    if table == "Person" and rng.random() < 0.25:
        value = TAGS[int(rng.integers(0, len(TAGS)))] if rng.random() < 0.8 else "zz"
        op = "=" if rng.random() < 0.6 else "<>"
        return FilterPred(ColRef(alias, "tag"), op, Const("str", value))
    col = _INT_COLS[table][int(rng.integers(0, len(_INT_COLS[table])))]
    if col in ("id", "src", "dst", "owner"):
        value = int(rng.integers(-2, 131))
    elif col == "year":
        value = int(rng.integers(1999, 2010))
    else:
        value = int(rng.integers(-1, 10))
    return FilterPred(ColRef(alias, col), _INT_OPS[int(rng.integers(0, 6))],
                      Const("int", value))


def _pred(rng, left: ColRef, right: ColRef) -> JoinPred:
    if rng.random() < 0.5:
        left, right = right, left
    return JoinPred(left, right)


_SHAPES = 9


def _shape(rng, shape: int):
    P = ColRef
    if shape == 0:
        return ((("Person", "P1"), ("Knows", "K1")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),))
    if shape == 1:
        return ((("Person", "P1"), ("Knows", "K1")),
                (_pred(rng, P("P1", "id"), P("K1", "dst")),))
    if shape == 2:
        return ((("Person", "P1"), ("Knows", "K1"), ("Person", "P2")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),
                 _pred(rng, P("K1", "dst"), P("P2", "id"))))
    if shape == 3:
        return ((("Person", "P1"), ("Knows", "K1"), ("Comment", "C1")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),
                 _pred(rng, P("C1", "owner"), P("P1", "id"))))
    if shape == 4:
        return ((("Person", "P1"), ("Knows", "K1"), ("Person", "P2"),
                 ("Knows", "K2")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),
                 _pred(rng, P("K1", "dst"), P("P2", "id")),
                 _pred(rng, P("P2", "id"), P("K2", "src"))))
    if shape == 5:
        return ((("Person", "P1"), ("Knows", "K1"), ("Person", "P2"),
                 ("Comment", "C1")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),
                 _pred(rng, P("K1", "dst"), P("P2", "id")),
                 _pred(rng, P("C1", "owner"), P("P2", "id"))))
    if shape == 6:
        return ((("Knows", "K1"), ("Knows", "K2")),
                (_pred(rng, P("K1", "year"), P("K2", "year")),))
    if shape == 7:
        # both endpoints on the same person; second equality stays residual
        return ((("Person", "P1"), ("Knows", "K1")),
                (_pred(rng, P("P1", "id"), P("K1", "src")),
                 _pred(rng, P("P1", "id"), P("K1", "dst"))))
    # 4-cycle
    return ((("Person", "P1"), ("Knows", "K1"), ("Person", "P2"),
             ("Knows", "K2")),
            (_pred(rng, P("P1", "id"), P("K1", "src")),
             _pred(rng, P("K1", "dst"), P("P2", "id")),
             _pred(rng, P("P2", "id"), P("K2", "src")),
             _pred(rng, P("K2", "dst"), P("P1", "id"))))


def random_query(rng, catalog: Catalog) -> QuerySpec:
    relations, join_preds = _shape(rng, int(rng.integers(0, _SHAPES)))
    filters = []
    for table, alias in relations:
        if rng.random() < 0.55:
            for _ in range(int(rng.integers(1, 3))):
                filters.append(_rand_filter(rng, alias, table))

    roll = rng.random()
    projection = None
    aggregate = None
    if roll < 0.30:
        aggregate = Aggregate("count", None)
        projection = ()
    elif roll < 0.45:
        table, alias = relations[int(rng.integers(0, len(relations)))]
        col = _INT_COLS[table][int(rng.integers(0, len(_INT_COLS[table])))]
        aggregate = Aggregate("min" if roll < 0.375 else "max",
                              ColRef(alias, col))
        projection = ()
    elif roll < 0.78:
        pool = [ColRef(a, c) for t, a in relations for c in _INT_COLS[t]]
        take = int(rng.integers(1, min(4, len(pool)) + 1))
        picks = rng.choice(len(pool), size=take, replace=False)
        projection = tuple(pool[i] for i in sorted(picks))
    # else SELECT * (projection None)

    spec = QuerySpec(relations=relations, projection=projection,
                     aggregate=aggregate, join_preds=tuple(join_preds),
                     filters=tuple(filters))
    return resolve(spec, catalog)


def make_case(seed: int) -> Case:
    rng = np.random.default_rng(seed)
    catalog = random_catalog(rng)
    query = random_query(rng, catalog)
    sql = render(query)
    # renderer round-trip doubles as a free parser property
    assert resolve(parse(sql), catalog) == query
    return Case(seed, catalog, query, sql)


# ------------------------------------------------------ running example

PERSON_ROWS = ((101, "Mahinda"), (202, "Karim"), (303, "Carmen"),
               (404, "Zhang"))
FOLLOWS_ROWS = ((101, 202, 2021), (303, 404, 2019), (101, 303, 2021),
                (202, 303, 2020), (101, 404, 2021))


def running_example(predefine: bool = True, indices: bool = False,
                    extended: bool = False) -> Catalog:
    """Four people, five Follows edges; the worked example everywhere."""
    catalog = Catalog()
    person = catalog.create_table("Person", [("ID", ColumnType.INT64),
                                             ("name", ColumnType.STR)])
    person.extend([[r[0] for r in PERSON_ROWS], [r[1] for r in PERSON_ROWS]])
    follows = catalog.create_table("Follows", [("ID1", ColumnType.INT64),
                                               ("ID2", ColumnType.INT64),
                                               ("year", ColumnType.INT64)])
    follows.extend([[r[0] for r in FOLLOWS_ROWS],
                    [r[1] for r in FOLLOWS_ROWS],
                    [r[2] for r in FOLLOWS_ROWS]])
    if not predefine:
        return catalog
    j1 = predefine_join(catalog, "Follows", ("ID1",), "Person", ("ID",))
    j2 = predefine_join(catalog, "Follows", ("ID2",), "Person", ("ID",))
    if indices:
        build_rid_index(catalog, j1)
        build_rid_index(catalog, j2)
    if extended:
        build_extended_rid_index(catalog, j1, j2)
        build_extended_rid_index(catalog, j2, j1)
    return catalog


TWO_HOP_SQL = ("SELECT * FROM Person P1, Follows F1, Person P2, Follows F2, "
               "Person P3 WHERE P1.ID = F1.ID1 AND F1.ID2 = P2.ID "
               "AND P2.ID = F2.ID1 AND F2.ID2 = P3.ID AND P1.name = 'Karim'")

TWO_HOP_TUPLE = (202, "Karim", 202, 303, 2020, 303, "Carmen",
                 303, 404, 2019, 404, "Zhang")
