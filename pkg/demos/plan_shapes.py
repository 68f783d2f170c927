"""How the registered pointer machinery reshapes one query's plan.

The same two-hop query is planned against three catalogs that differ only
in what was registered up front: pointers alone, pointers plus CSR
indices, and the extended indices that let the optimizer drop the edge
table from the plan entirely (possible only when no edge columns survive
into the output, so the projected variant keeps its scans).

Run:  python3 demos/plan_shapes.py
"""

from ridjoin.planner import AblationFlags, plan_baseline, rewrite_predefined
from ridjoin.plans import explain
from ridjoin.ridindex import build_extended_rid_index, build_rid_index
from ridjoin.ridmat import predefine_join
from ridjoin.sqlfront import parse, resolve
from ridjoin.storage import Catalog, ColumnType

TWO_HOP = ("SELECT {what} FROM Person P1, Follows F1, Person P2, Follows F2, "
           "Person P3 WHERE P1.ID = F1.ID1 AND F1.ID2 = P2.ID "
           "AND P2.ID = F2.ID1 AND F2.ID2 = P3.ID AND P1.name = 'Karim'")


def fresh_catalog(indices=False, extended=False):
    catalog = Catalog()
    person = catalog.create_table("Person", [("ID", ColumnType.INT64),
                                             ("name", ColumnType.STR)])
    person.extend([[101, 202, 303, 404],
                   ["Mahinda", "Karim", "Carmen", "Zhang"]])
    follows = catalog.create_table("Follows", [("ID1", ColumnType.INT64),
                                               ("ID2", ColumnType.INT64),
                                               ("year", ColumnType.INT64)])
    follows.extend([[101, 303, 101, 202, 101],
                    [202, 404, 303, 303, 404],
                    [2021, 2019, 2021, 2020, 2021]])
    j1 = predefine_join(catalog, "Follows", ("ID1",), "Person", ("ID",))
    j2 = predefine_join(catalog, "Follows", ("ID2",), "Person", ("ID",))
    if indices:
        build_rid_index(catalog, j1)
        build_rid_index(catalog, j2)
    if extended:
        build_extended_rid_index(catalog, j1, j2)
    return catalog


def show(title, catalog, sql):
    query = resolve(parse(sql), catalog)
    plan = rewrite_predefined(plan_baseline(query, catalog), catalog,
                              AblationFlags.full())
    print(f"-- {title}")
    print(explain(plan))
    print()


show("pointers only: forward rid passing",
     fresh_catalog(), TWO_HOP.format(what="*"))
show("with CSR indices: semijoins also run in reverse",
     fresh_catalog(indices=True), TWO_HOP.format(what="*"))
show("extended indices + COUNT(*): the Follows scans disappear",
     fresh_catalog(indices=True, extended=True),
     TWO_HOP.format(what="COUNT(*)"))
show("extended indices but edge columns projected: no merge",
     fresh_catalog(indices=True, extended=True),
     TWO_HOP.format(what="F1.year"))
