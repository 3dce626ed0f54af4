"""Deterministic set-semantics evaluator: natural join, filtering, projection,
group-by aggregation, and semijoin.

Rows are stored as value tuples aligned with their schema's attribute order;
all operators are pure and results never contain duplicate rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal

from .ir import (
    Catalog,
    CatalogEntry,
    Const,
    Program,
    ProvexError,
    Rule,
    Value,
    compare_values,
    head_entry,
)

Row = dict[str, Value]

_AVG_QUANTUM = Decimal("0.000001")


class EvalError(ProvexError):
    pass


@dataclass(frozen=True)
class RelationInstance:
    """A schema plus a set of rows (tuples in schema attribute order)."""

    schema: CatalogEntry
    rows: frozenset[tuple[Value, ...]]

    def __post_init__(self) -> None:
        width = len(self.schema.attributes)
        for row in self.rows:
            if len(row) != width:
                raise EvalError(
                    f"row of width {len(row)} does not fit {self.schema.name}({width} columns)"
                )
        if self.schema.key is not None:
            seen: set[tuple] = set()
            idx = [self.schema.attributes.index(a) for a in sorted(self.schema.key)]
            for row in self.rows:
                k = tuple(row[i] for i in idx)
                if k in seen:
                    raise EvalError(f"key violation in {self.schema.name}: {k}")
                seen.add(k)

    @property
    def attributes(self) -> tuple[str, ...]:
        return self.schema.attributes

    def __len__(self) -> int:
        return len(self.rows)

    def dicts(self) -> list[Row]:
        return [dict(zip(self.schema.attributes, row)) for row in self.rows]

    def sorted_rows(self) -> list[tuple[Value, ...]]:
        return sorted(self.rows, key=_row_sort_key)

    def row_set(self) -> frozenset[tuple[Value, ...]]:
        return self.rows


Database = dict[str, RelationInstance]


def _row_sort_key(row: tuple[Value, ...]) -> tuple:
    return tuple((0, v) if isinstance(v, (int, Decimal)) else (1, v) for v in row)


def instance(
    name: str,
    attributes: tuple[str, ...] | list[str],
    rows,
    key: frozenset[str] | set[str] | None = None,
    kind: str = "base",
    attr_kinds: tuple[str, ...] | None = None,
) -> RelationInstance:
    entry = CatalogEntry(
        name,
        tuple(attributes),
        frozenset(key) if key is not None else None,
        kind,
        attr_kinds,
    )
    return RelationInstance(entry, frozenset(tuple(r) for r in rows))


def catalog_of(db: Database) -> Catalog:
    return Catalog({name: inst.schema for name, inst in db.items()})


@dataclass
class Table:
    """Intermediate working relation during rule evaluation."""

    attrs: tuple[str, ...]
    rows: set[tuple[Value, ...]]

    def index(self, attr: str) -> int:
        return self.attrs.index(attr)


def atom_table(rule_atom, inst: RelationInstance) -> Table:
    positions = []
    for src, _ in rule_atom.renamings:
        if src not in inst.schema.attributes:
            raise EvalError(f"{inst.schema.name} has no attribute {src}")
        positions.append(inst.schema.attributes.index(src))
    exposed = rule_atom.exposed
    rows = {tuple(row[i] for i in positions) for row in inst.rows}
    return Table(exposed, rows)


def join_tables(left: Table, right: Table) -> Table:
    shared = [a for a in left.attrs if a in right.attrs]
    right_extra = [a for a in right.attrs if a not in left.attrs]
    out_attrs = left.attrs + tuple(right_extra)
    if not shared:
        rows = {lr + rr for lr in left.rows for rr in right.rows}
        return Table(out_attrs, rows)
    # hash join: build on the smaller side
    build_left = len(left.rows) <= len(right.rows)
    build, probe = (left, right) if build_left else (right, left)
    bkey = [build.index(a) for a in shared]
    pkey = [probe.index(a) for a in shared]
    table: dict[tuple, list[tuple]] = {}
    for row in build.rows:
        table.setdefault(tuple(row[i] for i in bkey), []).append(row)
    extra_idx = [right.index(a) for a in right_extra]
    rows = set()
    for prow in probe.rows:
        matches = table.get(tuple(prow[i] for i in pkey))
        if not matches:
            continue
        for brow in matches:
            lrow, rrow = (brow, prow) if build_left else (prow, brow)
            rows.add(lrow + tuple(rrow[i] for i in extra_idx))
    return Table(out_attrs, rows)


def apply_predicates(table: Table, predicates) -> Table:
    if not predicates:
        return table

    def operand_getter(side):
        if isinstance(side, Const):
            return lambda row: side.value
        idx = table.index(side)
        return lambda row: row[idx]

    getters = [(operand_getter(p.left), p.op, operand_getter(p.right)) for p in predicates]
    rows = {
        row
        for row in table.rows
        if all(compare_values(gl(row), op, gr(row)) for gl, op, gr in getters)
    }
    return Table(table.attrs, rows)


def _aggregate(fn: str, values: list[Value]) -> Value:
    if fn == "count":
        return len(values)
    if fn in ("sum", "avg") and any(isinstance(v, str) for v in values):
        raise EvalError(f"{fn} over text values")
    if fn == "sum":
        total = sum(values)  # int stays int; Decimal stays exact
        return total
    if fn == "avg":
        total = sum((Decimal(v) if isinstance(v, int) else v) for v in values)
        return (total / len(values)).quantize(_AVG_QUANTUM, rounding=ROUND_HALF_EVEN)
    if fn == "min":
        return min(values)
    if fn == "max":
        return max(values)
    raise EvalError(f"unknown aggregate {fn}")


def eval_body(rule: Rule, db: Database, overrides: dict[str, RelationInstance] | None = None) -> Table:
    """Join all body atoms (with renamings applied) and filter by the predicates."""
    table: Table | None = None
    for atom in rule.body_atoms:
        if overrides and atom.occurrence in overrides:
            inst = overrides[atom.occurrence]
        else:
            if atom.relation not in db:
                raise EvalError(f"relation {atom.relation} not present in database")
            inst = db[atom.relation]
        atom_tab = atom_table(atom, inst)
        table = atom_tab if table is None else join_tables(table, atom_tab)
    assert table is not None
    return apply_predicates(table, rule.body_predicates)


def eval_rule(
    rule: Rule,
    db: Database,
    overrides: dict[str, RelationInstance] | None = None,
) -> RelationInstance:
    """Evaluate one rule against the database.

    SPJ heads project and deduplicate; SPJA heads group by the plain head
    columns and apply the aggregates.  ``overrides`` substitutes the instance
    seen by individual occurrences (keyed by alias), which supports replaying a
    rule over provenance subsets.
    """
    body = eval_body(rule, db, overrides)
    entry = head_entry(rule, catalog_of(db))
    if rule.kind == "SPJ":
        idx = [body.index(c.source) for c in rule.head_columns]
        rows = {tuple(row[i] for i in idx) for row in body.rows}
        return RelationInstance(entry, frozenset(rows))
    plain = [c for c in rule.head_columns if c.is_plain]
    aggs = [c for c in rule.head_columns if not c.is_plain]
    gidx = [body.index(c.source) for c in plain]
    aidx = [body.index(c.source) for c in aggs]
    groups: dict[tuple, list[tuple]] = {}
    for row in body.rows:
        groups.setdefault(tuple(row[i] for i in gidx), []).append(row)
    out_rows = set()
    for gkey, members in groups.items():
        values = {c.output: v for c, v in zip(plain, gkey)}
        for col, i in zip(aggs, aidx):
            values[col.output] = _aggregate(col.agg, [m[i] for m in members])
        out_rows.add(tuple(values[c.output] for c in rule.head_columns))
    return RelationInstance(entry, frozenset(out_rows))


def eval_program(program: Program, db: Database) -> Database:
    """Evaluate all rules in order; returns the database extended with every
    rule's head instance (the final entry is the query result)."""
    out = dict(db)
    for rule in program.rules:
        out[rule.head_name] = eval_rule(rule, out)
    return out


def semijoin(rel: RelationInstance, probe: RelationInstance) -> RelationInstance:
    """Rows of ``rel`` that agree with some probe row on all shared attributes.

    With no shared attributes this is an existence check: a nonempty probe
    keeps everything, an empty probe keeps nothing.
    """
    shared = [a for a in rel.schema.attributes if a in probe.schema.attributes]
    if not shared:
        rows = rel.rows if probe.rows else frozenset()
        return RelationInstance(rel.schema, rows)
    ridx = [rel.schema.attributes.index(a) for a in shared]
    pidx = [probe.schema.attributes.index(a) for a in shared]
    keys = {tuple(row[i] for i in pidx) for row in probe.rows}
    rows = frozenset(row for row in rel.rows if tuple(row[i] for i in ridx) in keys)
    return RelationInstance(rel.schema, rows)


def project(
    inst: RelationInstance,
    columns: list[tuple[str, str]],
    name: str,
    key: frozenset[str] | None = None,
    kind: str = "view",
) -> RelationInstance:
    """Project ``columns`` as (source, output) pairs, deduplicating rows."""
    idx = [inst.schema.attributes.index(src) for src, _ in columns]
    kinds = None
    if inst.schema.attr_kinds is not None:
        kinds = tuple(inst.schema.attr_kinds[i] for i in idx)
    entry = CatalogEntry(name, tuple(out for _, out in columns), key, kind, kinds)
    rows = frozenset(tuple(row[i] for i in idx) for row in inst.rows)
    return RelationInstance(entry, rows)
