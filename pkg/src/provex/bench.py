"""Benchmark harness: deterministic mini order-data generation, timed runs of
all four strategies, and report emission.

Every strategy's provenance rows are cross-checked against the naive
definition before any timing is reported; a mismatch aborts the run, because
it means a bug, not a slow query.
"""
from __future__ import annotations

import json
import random
import statistics
import time
from dataclasses import asdict, dataclass, field
from decimal import Decimal
from pathlib import Path

from . import hybrid
from .engine import Database, RelationInstance, eval_program
from .ir import Catalog, CatalogEntry, Program, ProvexError
from .provgen import ProvResult, Selection, provenance, recursive_naive


class OracleMismatch(ProvexError):
    """A strategy disagreed with the naive provenance definition."""


MINI_TPCH_CATALOG_ENTRIES = (
    ("Customers", ("c_key", "c_name", "c_address"), ("text", "text", "text"), ("c_key",)),
    ("Orders", ("o_key", "c_key", "o_date", "o_totalprice"),
     ("text", "text", "date", "decimal"), ("o_key",)),
    ("Lineitem", ("o_key", "linenum", "qty"), ("text", "text", "int"), ("o_key", "linenum")),
)


def mini_tpch_catalog() -> Catalog:
    cat = Catalog()
    for name, attrs, kinds, key in MINI_TPCH_CATALOG_ENTRIES:
        cat.add(CatalogEntry(name, attrs, frozenset(key), "base", kinds))
    return cat


def gen_minitpch(
    rows_customers: int, rows_orders: int, rows_lineitem: int, seed: int
) -> tuple[Catalog, Database]:
    """Foreign-key-consistent Customers/Orders/Lineitem at the requested sizes.
    Same seed, same database."""
    if min(rows_customers, rows_orders, rows_lineitem) < 1:
        raise ProvexError("row counts must be at least 1")
    rng = random.Random(seed)
    catalog = mini_tpch_catalog()
    customers = {
        (f"c{i}", f"n{i}", f"a{i}") for i in range(1, rows_customers + 1)
    }
    orders = set()
    order_keys = []
    for j in range(1, rows_orders + 1):
        c = rng.randint(1, rows_customers)
        date = f"{rng.randint(1992, 1998)}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}"
        price = Decimal(rng.randint(100, 50_000_000)) / Decimal(100)
        orders.add((f"o{j}", f"c{c}", date, price))
        order_keys.append(f"o{j}")
    lineitem = set()
    per_order_count: dict[str, int] = {}
    for _ in range(rows_lineitem):
        o = order_keys[rng.randrange(len(order_keys))]
        n = per_order_count.get(o, 0) + 1
        per_order_count[o] = n
        lineitem.add((o, f"l{n}", rng.randint(1, 200)))
    db = {
        "Customers": RelationInstance(catalog.get("Customers"), frozenset(customers)),
        "Orders": RelationInstance(catalog.get("Orders"), frozenset(orders)),
        "Lineitem": RelationInstance(catalog.get("Lineitem"), frozenset(lineitem)),
    }
    return catalog, db


@dataclass
class BenchCell:
    query: str
    strategy: str
    oq_us: int
    rows_r: int
    rows_rk: int
    prov_us: dict[str, int] = field(default_factory=dict)
    join_counts: dict[str, int] = field(default_factory=dict)

    @property
    def ap_us(self) -> float:
        """Mean provenance time over the base-table occurrences."""
        return statistics.fmean(self.prov_us.values()) if self.prov_us else 0.0

    @property
    def mp_us(self) -> float:
        return min(self.prov_us.values()) if self.prov_us else 0.0


@dataclass
class BenchReport:
    cells: list[BenchCell] = field(default_factory=list)

    def cell(self, query: str, strategy: str) -> BenchCell:
        for c in self.cells:
            if c.query == query and c.strategy == strategy:
                return c
        raise KeyError((query, strategy))

    def to_json(self) -> str:
        payload = []
        for c in self.cells:
            d = asdict(c)
            d["ap_us"] = c.ap_us
            d["mp_us"] = c.mp_us
            payload.append(d)
        return json.dumps({"cells": payload}, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "BenchReport":
        data = json.loads(text)
        cells = []
        for d in data["cells"]:
            cells.append(
                BenchCell(
                    query=d["query"],
                    strategy=d["strategy"],
                    oq_us=d["oq_us"],
                    rows_r=d["rows_r"],
                    rows_rk=d["rows_rk"],
                    prov_us=dict(d["prov_us"]),
                    join_counts=dict(d["join_counts"]),
                )
            )
        return BenchReport(cells)

    def to_csv(self) -> str:
        lines = ["query,strategy,metric,occurrence,value"]
        for c in sorted(self.cells, key=lambda c: (c.query, c.strategy)):
            rows: list[tuple[str, str, object]] = [
                ("oq_us", "", c.oq_us),
                ("ap_us", "", c.ap_us),
                ("mp_us", "", c.mp_us),
                ("rows_r", "", c.rows_r),
                ("rows_rk", "", c.rows_rk),
            ]
            rows += [("prov_us", occ, v) for occ, v in sorted(c.prov_us.items())]
            rows += [("join_count", occ, v) for occ, v in sorted(c.join_counts.items())]
            for metric, occ, value in rows:
                lines.append(f"{c.query},{c.strategy},{metric},{occ},{value}")
        return "\n".join(lines) + "\n"


def _median_time(run, repetitions: int) -> tuple[int, object]:
    """Median elapsed microseconds over repetitions; returns the last value."""
    times = []
    value = None
    for _ in range(repetitions):
        t0 = time.perf_counter_ns()
        value = run()
        times.append((time.perf_counter_ns() - t0) // 1000)
    return int(statistics.median(times)), value


def default_selection(program: Program, evaluated: Database) -> Selection:
    """The exploration driver: the first result row in canonical order."""
    result = evaluated[program.result_name]
    rows = result.sorted_rows()
    if not rows:
        raise ProvexError(f"program {program.result_name} produced no rows to explore")
    return Selection.of(program.result_name, [rows[0]])


def run_suite(
    db: Database,
    programs: dict[str, Program],
    strategies=("W", "O1", "G", "O2"),
    repetitions: int = 3,
    plan_mode: str = "auto",
    selections: dict[str, Selection] | None = None,
) -> BenchReport:
    """Time original-query execution and per-occurrence provenance for every
    (program, strategy) pair, checking all rows against the oracle first."""
    if repetitions < 1:
        raise ProvexError("repetitions must be at least 1")
    report = BenchReport()
    for name, program in programs.items():
        evaluated = eval_program(program, db)
        selection = (selections or {}).get(name) or default_selection(program, evaluated)
        occurrences = program.occurrences()
        oracle = {
            occ.path: recursive_naive(program, occ, selection, evaluated).rows
            for occ in occurrences
        }
        for strategy in strategies:
            plan = None
            store = None
            prepared_db = evaluated
            if strategy == "O2":
                if plan_mode == "auto":
                    plan = hybrid.select_plan(program, db)
                elif plan_mode == "none":
                    plan = hybrid.build_plan(program, ())
                else:
                    plan = hybrid.build_plan(program, [p for p in plan_mode.split("+") if p])
                oq_us, prepared = _median_time(
                    lambda: hybrid.materialize(plan, program, db), repetitions
                )
                prepared_db = prepared.database
                rows_rk = len(prepared.rk)
            elif strategy == "G":
                oq_us, store = _median_time(
                    lambda: hybrid.eager_materialize(program, db), repetitions
                )
                rows_rk = len(store.views[program.result_name])
            else:
                oq_us, out = _median_time(lambda: eval_program(program, db), repetitions)
                rows_rk = len(out[program.result_name])
            cell = BenchCell(
                query=name,
                strategy=strategy,
                oq_us=oq_us,
                rows_r=len(evaluated[program.result_name]),
                rows_rk=rows_rk,
            )
            for occ in occurrences:
                def compute() -> ProvResult:
                    if strategy == "G":
                        return hybrid.eager_retrieval(store, occ, selection)
                    if strategy == "O2":
                        return hybrid.hybrid_provenance(
                            plan, program, occ, selection, prepared_db
                        )
                    return provenance(program, occ.path, selection, strategy, evaluated)
                elapsed, result = _median_time(compute, repetitions)
                if result.rows.rows != oracle[occ.path]:
                    raise OracleMismatch(
                        f"{name}/{strategy}/{occ.path}: rows differ from the naive definition"
                    )
                cell.prov_us[occ.path] = elapsed
                cell.join_counts[occ.path] = result.stats.chain_join_count
            report.cells.append(cell)
    return report


def emit_report(report: BenchReport, fmt: str, path: str | Path) -> Path:
    if fmt not in ("csv", "json"):
        raise ProvexError(f"unknown report format {fmt!r}")
    path = Path(path)
    text = report.to_csv() if fmt == "csv" else report.to_json()
    path.write_text(text)
    return path
