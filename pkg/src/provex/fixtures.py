"""Built-in fixture corpus: the order-quantity running example, the two
pruning illustrations, and a set of small programs that each exercise one
retrieval behaviour (covered targets, key lookups, predicate dropping and
forcing, view recursion, self-joins, aggregate-only heads, constant
equalities).  Used by the benchmark harness, the demo datasets of the service
and the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .engine import Database, RelationInstance
from .ir import Catalog, CatalogEntry, Program
from .parser import parse_program


@dataclass
class Fixture:
    name: str
    description: str
    catalog: Catalog
    program_text: str
    tables: dict[str, list[tuple]]
    prunable: bool  # O1 retains strictly fewer atoms than W for some occurrence

    def program(self) -> Program:
        return parse_program(self.program_text, self.catalog)

    def database(self) -> Database:
        db: Database = {}
        for name, rows in self.tables.items():
            entry = self.catalog.get(name)
            db[name] = RelationInstance(entry, frozenset(tuple(r) for r in rows))
        return db


def _catalog(entries, fds=()) -> Catalog:
    cat = Catalog()
    for name, attrs, key, kinds in entries:
        cat.add(
            CatalogEntry(
                name,
                tuple(attrs),
                frozenset(key) if key else None,
                "base",
                tuple(kinds) if kinds else None,
            )
        )
    for relation, det, dep in fds:
        cat.add_fd(relation, frozenset(det), dep)
    return cat


Q18_PROGRAM = """\
% total quantity per order
Q18_tmp(o_key, sum(qty) as t_sum_qty) :- Lineitem@2.
% orders above the quantity threshold, with customer data
R(c_name, c_key, o_key, o_date, sum(qty) as tot_qty) :- Customers, Orders, Lineitem, Q18_tmp, t_sum_qty > 300.
"""

_Q18_BASE_ROWS = {
    "Customers": [("c1", "n1", "a1")],
    "Lineitem": [("o1", "l1", 200), ("o1", "l2", 150), ("o2", "l1", 100), ("o2", "l2", 160)],
}


def q18_worked_example() -> Fixture:
    """The simplified order-quantity query over the exact sample tables; every
    worked provenance set in the tests comes from here."""
    cat = _catalog(
        [
            ("Customers", ("c_key", "c_name", "c_address"), {"c_key"}, ("text", "text", "text")),
            ("Orders", ("o_key", "c_key", "o_date"), {"o_key"}, ("text", "text", "date")),
            ("Lineitem", ("o_key", "linenum", "qty"), {"o_key", "linenum"}, ("text", "text", "int")),
        ]
    )
    tables = dict(_Q18_BASE_ROWS)
    tables["Orders"] = [("o1", "c1", "d1"), ("o2", "c1", "d2")]
    return Fixture(
        name="q18_table1",
        description="order-quantity query, minimal sample data",
        catalog=cat,
        program_text=Q18_PROGRAM,
        tables=tables,
        prunable=True,
    )


def q18_canonical() -> Fixture:
    """Same program over the fuller schema: Orders carries a total-price column
    the query head does not project, as in the real benchmark schema."""
    cat = _catalog(
        [
            ("Customers", ("c_key", "c_name", "c_address"), {"c_key"}, ("text", "text", "text")),
            ("Orders", ("o_key", "c_key", "o_date", "o_totalprice"), {"o_key"},
             ("text", "text", "date", "decimal")),
            ("Lineitem", ("o_key", "linenum", "qty"), {"o_key", "linenum"}, ("text", "text", "int")),
        ]
    )
    tables = dict(_Q18_BASE_ROWS)
    tables["Orders"] = [
        ("o1", "c1", "d1", Decimal("173665.47")),
        ("o2", "c1", "d2", Decimal("46929.18")),
    ]
    return Fixture(
        name="q18",
        description="order-quantity query, orders keep an unprojected column",
        catalog=cat,
        program_text=Q18_PROGRAM,
        tables=tables,
        prunable=True,
    )


def pruning_illustration() -> Fixture:
    """Six-table join with one declared dependency; shows a covered target, a
    single-join target, and a target that drags half the body back in."""
    cat = _catalog(
        [
            ("T1", ("A", "B", "C", "D"), None, ("int",) * 4),
            ("T2", ("B",), None, ("int",)),
            ("T3", ("C", "Z"), None, ("int", "int")),
            ("T4", ("D", "E"), None, ("int", "int")),
            ("T5", ("E", "Y"), None, ("int", "int")),
            ("T6", ("A",), None, ("int",)),
        ],
        fds=[("T4", {"D"}, "E")],
    )
    return Fixture(
        name="illus1",
        description="six-way join with one declared dependency",
        catalog=cat,
        program_text="R(A, C) :- T1, T2, T3, T4, T5, T6.\n",
        tables={
            "T1": [(1, 2, 3, 4)],
            "T2": [(2,)],
            "T3": [(3, 9)],
            "T4": [(4, 5)],
            "T5": [(5, 7)],
            "T6": [(1,)],
        },
        prunable=True,
    )


def _synthetics() -> list[Fixture]:
    out = []
    out.append(
        Fixture(
            name="covered_projection",
            description="target fully covered by the result needs no join",
            catalog=_catalog(
                [
                    ("T", ("a", "b", "c"), None, ("int",) * 3),
                    ("S", ("a",), None, ("int",)),
                ]
            ),
            program_text="R(a, b) :- T, S.\n",
            tables={"T": [(1, 10, 100), (1, 11, 101), (2, 20, 200)], "S": [(1,), (2,)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="key_lookup",
            description="key in the result pins the target row",
            catalog=_catalog(
                [
                    ("T", ("k", "v"), {"k"}, ("int", "int")),
                    ("U", ("x", "v"), None, ("int", "int")),
                ]
            ),
            program_text="R(k, x) :- T, U.\n",
            tables={"T": [(1, 5), (2, 6)], "U": [(10, 5), (11, 5), (12, 6)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="pred_drop",
            description="selected rows vouch for a filter on a key-determined column",
            catalog=_catalog(
                [
                    ("T", ("k", "v"), {"k"}, ("int", "int")),
                    ("U", ("v",), None, ("int",)),
                ]
            ),
            program_text="R(k) :- T, U, v > 5.\n",
            tables={"T": [(1, 8), (2, 3)], "U": [(8,), (3,), (9,)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="pred_force",
            description="a kept filter pulls its table back into the query",
            catalog=_catalog(
                [
                    ("T", ("a", "b"), None, ("int", "int")),
                    ("U", ("b", "c"), None, ("int", "int")),
                    ("V", ("a",), None, ("int",)),
                ]
            ),
            program_text="R(a) :- T, U, V, c > 0.\n",
            tables={"T": [(1, 2), (4, 5)], "U": [(2, 3), (5, -1)], "V": [(1,), (4,)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="avg_two_step",
            description="group average in a view, filtered join on top",
            catalog=_catalog(
                [
                    ("T", ("g", "x"), {"g", "x"}, ("int", "int")),
                    ("U", ("g", "y"), {"g"}, ("int", "int")),
                ]
            ),
            program_text="V(g, avg(x) as ax) :- T.\nR(g, ax) :- V, U, y < 100.\n",
            tables={"T": [(1, 10), (1, 20), (2, 30)], "U": [(1, 50), (2, 500)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="spj_view_keys",
            description="plain view; key columns bubble through it when materialized",
            catalog=_catalog(
                [
                    ("T", ("a", "b", "c"), {"a", "b"}, ("int",) * 3),
                    ("U", ("a", "d"), {"a"}, ("int", "int")),
                ]
            ),
            program_text="V(a, b) :- T, c = 1.\nR(a) :- V, U.\n",
            tables={"T": [(1, 2, 1), (1, 3, 0), (2, 4, 1)], "U": [(1, 9), (2, 8)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="selfjoin",
            description="same table twice; aliases keep the copies apart",
            catalog=_catalog([("T", ("a", "b"), None, ("int", "int"))]),
            program_text="R(a, b2) :- T, T@2(a, b as b2).\n",
            tables={"T": [(1, 5), (1, 6), (2, 7)]},
            prunable=True,
        )
    )
    out.append(
        Fixture(
            name="agg_only",
            description="aggregate-only head: one group, nothing prunable",
            catalog=_catalog([("T", ("g", "x"), None, ("int", "int"))]),
            program_text="R(sum(x) as s) :- T.\n",
            tables={"T": [(1, 10), (2, 20)]},
            prunable=False,
        )
    )
    out.append(
        Fixture(
            name="const_eq",
            description="constant equality pins a join column",
            catalog=_catalog(
                [
                    ("T", ("a", "b"), None, ("int", "int")),
                    ("U", ("b", "c"), None, ("int", "int")),
                ]
            ),
            program_text="R(a) :- T, U, b = 7.\n",
            tables={"T": [(1, 7), (2, 7), (3, 5)], "U": [(7, 100), (7, 200), (5, 300)]},
            prunable=True,
        )
    )
    return out


def corpus() -> list[Fixture]:
    return [q18_worked_example(), q18_canonical(), pruning_illustration()] + _synthetics()


def fixture(name: str) -> Fixture:
    for f in corpus():
        if f.name == name:
            return f
    raise KeyError(f"no fixture named {name}")
