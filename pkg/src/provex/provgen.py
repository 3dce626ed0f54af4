"""Provenance computation for selected result rows.

Three entry points matter here:

* ``naive_provenance`` joins the full rule body with the result and restricts
  by the selection; it is the semantic definition and the oracle every other
  strategy is checked against.
* ``baseline_retrieval`` (strategy W) keeps the full body in the generated
  retrieval query.
* ``optimized_retrieval`` (strategy O1) prunes body atoms whose join
  conditions are already guaranteed by the selected rows: an atom stays only
  if it shares a column with the retained set that the result attributes do
  not functionally determine.  Predicates whose columns are all determined by
  the result attributes are dropped for the same reason.

Occurrences inside views are handled by first computing the provenance of the
view occurrence, then retrieving within the view's defining rule using that
result as the new selection.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from .constraints import body_dependencies, program_view_keys
from .engine import (
    Database,
    RelationInstance,
    Table,
    apply_predicates,
    atom_table,
    join_tables,
)
from .ir import (
    CatalogEntry,
    Occurrence,
    Predicate,
    Program,
    ProvexError,
    Rule,
    TableAtom,
    Value,
)

STRATEGIES = ("W", "O1", "G", "O2")


class DependencyViolation(ProvexError):
    """The selection is not a subset of the relation it claims to select from."""


@dataclass(frozen=True)
class Selection:
    """User-picked rows of a rule head, stored in head attribute order."""

    relation: str
    rows: frozenset[tuple[Value, ...]]

    @staticmethod
    def of(relation: str, rows) -> "Selection":
        return Selection(relation, frozenset(tuple(r) for r in rows))

    def is_empty(self) -> bool:
        return not self.rows


def validate_selection(selection: Selection, db: Database) -> None:
    if selection.relation not in db:
        raise DependencyViolation(f"selection targets unknown relation {selection.relation}")
    extra = selection.rows - db[selection.relation].rows
    if extra:
        sample = sorted(extra)[0]
        raise DependencyViolation(
            f"selection row {sample} is not in {selection.relation}"
            f" ({len(extra)} offending row(s))"
        )


@dataclass(frozen=True)
class ProvQuery:
    """A generated retrieval query: driving selection plus retained body parts.

    ``selection_columns`` lists (selection column, exposed-as) pairs projected
    from the driving selection before joining; for ordinary rule-level queries
    these are the plain head columns exposed under their body source names.
    """

    target: Occurrence
    selection_source: str
    selection_columns: tuple[tuple[str, str], ...]
    retained_atoms: tuple[TableAtom, ...]
    retained_predicates: tuple[Predicate, ...]
    case: int | None = None

    @property
    def join_count(self) -> int:
        return len(self.retained_atoms)

    def canonical_body(self) -> tuple:
        atoms = tuple(sorted((a.relation, a.occurrence) for a in self.retained_atoms))
        return (self.selection_source,) + atoms

    def format(self) -> str:
        parts = [self.selection_source]
        parts += [a.format() for a in self.retained_atoms]
        parts += [p.format() for p in self.retained_predicates]
        return f"P[{self.target.path}] :- {', '.join(parts)}."


def join_count(query: ProvQuery) -> int:
    """Retained relation references including the selection atom, minus one."""
    return query.join_count


def chain_join_count(queries: list[ProvQuery]) -> int:
    """Join count of a multi-step retrieval: total relation references minus one."""
    if not queries:
        return 0
    return sum(q.join_count + 1 for q in queries) - 1


@dataclass(frozen=True)
class ProvStats:
    strategy: str
    occurrence: str
    join_count: int
    chain_join_count: int
    query_count: int
    rows: int
    elapsed_us: int
    case: int | None = None


@dataclass(frozen=True)
class ProvResult:
    rows: RelationInstance
    stats: ProvStats
    queries: tuple[ProvQuery, ...] = ()


def _anchor_columns(rule: Rule) -> tuple[tuple[str, str], ...]:
    """(head output, exposed body name) pairs for the plain head columns."""
    return tuple((c.output, c.source) for c in rule.head_columns if c.is_plain)


def _target_schema(program: Program, occurrence: Occurrence) -> CatalogEntry:
    entry = program.catalog.get(occurrence.relation)
    name = f"P{occurrence.relation}"
    if occurrence.alias != occurrence.relation:
        name = f"P{occurrence.relation}_{occurrence.alias}"
    return CatalogEntry(name, entry.attributes, entry.key, entry.kind, entry.attr_kinds)


def _selection_instance(selection: Selection, program: Program) -> RelationInstance:
    entry = program.catalog.get(selection.relation)
    return RelationInstance(
        CatalogEntry(selection.relation, entry.attributes, None, "view", entry.attr_kinds),
        selection.rows,
    )


def naive_provenance(
    program: Program,
    rule_of: str,
    occurrence: str,
    selection: Selection,
    db: Database,
) -> RelationInstance:
    """Rows of the named occurrence that participate in a derivation of some
    selected row: full body join, restricted by the selection, projected onto
    the occurrence's columns.  This is the oracle for every strategy."""
    rule = program.rule_for(rule_of)
    if selection.relation != rule_of:
        raise DependencyViolation(
            f"selection over {selection.relation} cannot drive rule {rule_of}"
        )
    validate_selection(selection, db)
    atom = rule.atom(occurrence)
    body: Table | None = None
    for a in rule.body_atoms:
        tab = atom_table(a, db[a.relation])
        body = tab if body is None else join_tables(body, tab)
    assert body is not None
    body = apply_predicates(body, rule.body_predicates)
    anchor = _anchor_columns(rule)
    sel_inst = _selection_instance(selection, program)
    sel_cols = [sel_inst.schema.attributes.index(out) for out, _ in anchor]
    keys = {tuple(row[i] for i in sel_cols) for row in sel_inst.rows}
    bidx = [body.index(src) for _, src in anchor]
    surviving = {row for row in body.rows if tuple(row[i] for i in bidx) in keys}
    tidx = [body.index(e) for _, e in atom.renamings]
    schema = _target_schema(program, Occurrence(rule_of, occurrence, atom.relation,
                                                program.is_view(atom.relation)))
    rows = frozenset(tuple(row[i] for i in tidx) for row in surviving)
    return RelationInstance(schema, rows)


def baseline_retrieval(rule: Rule, occurrence: str, selection_source: str | None = None) -> ProvQuery:
    """Strategy W: retain the full body (every atom, every predicate)."""
    rule.atom(occurrence)  # raises on unknown occurrence
    target = Occurrence(rule.head_name, occurrence, rule.atom(occurrence).relation, False)
    return ProvQuery(
        target=target,
        selection_source=selection_source or f"{rule.head_name}'",
        selection_columns=_anchor_columns(rule),
        retained_atoms=rule.body_atoms,
        retained_predicates=rule.body_predicates,
    )


def prune_body(
    body_atoms: tuple[TableAtom, ...],
    predicates: tuple[Predicate, ...],
    anchor: frozenset[str],
    keep_aliases: set[str],
    deps,
) -> tuple[tuple[TableAtom, ...], tuple[Predicate, ...]]:
    """Shared pruning fixpoint over a rule body.

    Starting from the atoms in ``keep_aliases``, repeatedly pull back any
    removed atom that shares a column with the retained side unless the anchor
    attributes determine that column.  Determination only counts dependencies
    whose carrier is still in the query: intrinsic FDs of retained atoms and
    equalities of retained predicates — a pruned atom cannot enforce anything.

    A predicate is dropped when each of its columns is either determined or
    invisible to the retained atoms (then the selected rows' original
    derivations already vouch for it); otherwise it stays, and any removed
    atom exposing one of its columns is pulled back so the query can evaluate.
    """
    from .constraints import closure, predicate_fds

    retained = {a.occurrence: a for a in body_atoms if a.occurrence in keep_aliases}
    removed = {a.occurrence: a for a in body_atoms if a.occurrence not in keep_aliases}
    kept_preds: tuple[Predicate, ...] = predicates
    for _ in range(len(body_atoms) + len(predicates) + 1):
        intrinsic = deps.for_atoms(retained)
        exposed_ret: set[str] = set()
        for a in retained.values():
            exposed_ret.update(a.exposed)
        det_drop = closure(anchor, intrinsic)
        kept_preds = tuple(
            p
            for p in predicates
            if any(x in exposed_ret and x not in det_drop for x in p.attributes())
        )
        det = closure(anchor, intrinsic | predicate_fds(kept_preds))
        pred_cols = set()
        for p in kept_preds:
            pred_cols |= p.attributes()
        needed = {c for c in exposed_ret if c in _exposed_any(removed) and c not in det}
        needed |= {x for x in pred_cols if x not in exposed_ret and x not in anchor}
        pulled = [alias for alias, a in removed.items() if any(c in needed for c in a.exposed)]
        if not pulled:
            break
        for alias in pulled:
            retained[alias] = removed.pop(alias)
    ordered = tuple(a for a in body_atoms if a.occurrence in retained)
    return ordered, kept_preds


def _exposed_any(atoms: dict[str, TableAtom]) -> set[str]:
    out: set[str] = set()
    for a in atoms.values():
        out.update(a.exposed)
    return out


def optimized_retrieval(
    rule: Rule,
    occurrence: str,
    deps,
    selection_source: str | None = None,
) -> ProvQuery:
    """Strategy O1: prune the retrieval query using the body dependencies.

    A target whose exposed columns all appear in the result needs no join at
    all: its rows are a projection of the selection.  Otherwise the target atom
    is retained and the pruning fixpoint decides the rest of the body.
    ``deps`` comes from ``constraints.body_dependencies``.
    """
    atom = rule.atom(occurrence)
    target = Occurrence(rule.head_name, occurrence, atom.relation, False)
    label = selection_source or f"{rule.head_name}'"
    anchor = rule.anchor_attrs

    if set(atom.exposed) <= anchor:
        return ProvQuery(
            target=target,
            selection_source=label,
            selection_columns=_anchor_columns(rule),
            retained_atoms=(),
            retained_predicates=(),
        )

    atoms, preds = prune_body(rule.body_atoms, rule.body_predicates, anchor, {occurrence}, deps)
    return ProvQuery(
        target=target,
        selection_source=label,
        selection_columns=_anchor_columns(rule),
        retained_atoms=atoms,
        retained_predicates=preds,
    )


def eval_prov_query(
    query: ProvQuery,
    selection_rel: RelationInstance,
    db: Database,
    program: Program,
) -> RelationInstance:
    """Execute a retrieval query and return rows over the target's own columns."""
    sel_idx = [selection_rel.schema.attributes.index(c) for c, _ in query.selection_columns]
    exposed = tuple(e for _, e in query.selection_columns)
    table = Table(exposed, {tuple(row[i] for i in sel_idx) for row in selection_rel.rows})
    for atom in query.retained_atoms:
        table = join_tables(table, atom_table(atom, db[atom.relation]))
    table = apply_predicates(table, query.retained_predicates)
    target = query.target
    if query.retained_atoms and any(a.occurrence == target.alias for a in query.retained_atoms):
        atom = next(a for a in query.retained_atoms if a.occurrence == target.alias)
        pairs = [(e, s) for s, e in atom.renamings]
    else:
        # no-join projection: target columns come from the selection itself
        rule = program.rule_for(target.rule_head)
        atom = rule.atom(target.alias)
        pairs = [(e, s) for s, e in atom.renamings]
    idx = [table.index(e) for e, _ in pairs]
    schema = _target_schema(program, target)
    rows = frozenset(tuple(row[i] for i in idx) for row in table.rows)
    return RelationInstance(schema, rows)


def rule_dependencies(program: Program, rule: Rule):
    return body_dependencies(rule, program.catalog, program_view_keys(program))


def make_rule_query(
    program: Program, rule: Rule, occurrence: str, strategy: str, selection_source: str
) -> ProvQuery:
    if strategy == "W":
        return baseline_retrieval(rule, occurrence, selection_source)
    if strategy == "O1":
        return optimized_retrieval(
            rule, occurrence, rule_dependencies(program, rule), selection_source
        )
    raise ProvexError(f"no rule-level retrieval for strategy {strategy}")


def collect_chain(
    program: Program, occurrence: Occurrence, selection_root: str
) -> list[tuple[Rule, str]] | None:
    """The (rule, alias) retrieval targets needed to explain ``occurrence``
    under a selection on ``selection_root``; None when the occurrence cannot
    contribute to that head at all."""
    memo: dict[str, list[tuple[Rule, str]] | None] = {}

    def head_targets(head: str) -> list[tuple[Rule, str]] | None:
        if head == selection_root:
            return []
        if head in memo:
            return memo[head]
        memo[head] = None  # cycle guard; programs are acyclic by construction
        found = False
        targets: list[tuple[Rule, str]] = []
        for rule in program.rules:
            for atom in rule.body_atoms:
                if atom.relation != head:
                    continue
                upper = head_targets(rule.head_name)
                if upper is None:
                    continue
                found = True
                targets += upper + [(rule, atom.occurrence)]
        memo[head] = targets if found else None
        return memo[head]

    upper = head_targets(occurrence.rule_head)
    if upper is None:
        return None
    rule = program.rule_for(occurrence.rule_head)
    out: list[tuple[Rule, str]] = []
    seen = set()
    for item in upper + [(rule, occurrence.alias)]:
        key = (item[0].head_name, item[1])
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def lazy_provenance(
    program: Program,
    occurrence: Occurrence,
    selection: Selection,
    strategy: str,
    db: Database,
) -> ProvResult:
    """Strategies W and O1, recursing through view occurrences."""
    t0 = time.perf_counter_ns()
    validate_selection(selection, db)
    queries: list[ProvQuery] = []
    memo: dict[str, RelationInstance | None] = {}

    def head_selection(head: str) -> RelationInstance | None:
        if head == selection.relation:
            return _selection_instance(selection, program)
        if head in memo:
            return memo[head]
        memo[head] = None
        combined: set[tuple] = set()
        schema: CatalogEntry | None = None
        found = False
        for rule in program.rules:
            for atom in rule.body_atoms:
                if atom.relation != head:
                    continue
                upper = head_selection(rule.head_name)
                if upper is None:
                    continue
                found = True
                inst = run_query(rule, atom.occurrence, upper)
                schema = inst.schema
                combined |= inst.rows
        if not found:
            return None
        assert schema is not None
        memo[head] = RelationInstance(
            CatalogEntry(head, schema.attributes, None, "view", schema.attr_kinds),
            frozenset(combined),
        )
        return memo[head]

    def run_query(rule: Rule, alias: str, driving: RelationInstance) -> RelationInstance:
        label = (
            f"{rule.head_name}'"
            if rule.head_name == selection.relation
            else f"P{rule.head_name}'"
        )
        query = make_rule_query(program, rule, alias, strategy, label)
        queries.append(query)
        return eval_prov_query(query, driving, db, program)

    driving = head_selection(occurrence.rule_head)
    if driving is None:
        schema = _target_schema(program, occurrence)
        result = RelationInstance(schema, frozenset())
        final_query = None
    else:
        rule = program.rule_for(occurrence.rule_head)
        result = run_query(rule, occurrence.alias, driving)
        final_query = queries[-1]
    elapsed = (time.perf_counter_ns() - t0) // 1000
    stats = ProvStats(
        strategy=strategy,
        occurrence=occurrence.path,
        join_count=final_query.join_count if final_query else 0,
        chain_join_count=chain_join_count(queries),
        query_count=len(queries),
        rows=len(result),
        elapsed_us=elapsed,
    )
    return ProvResult(result, stats, tuple(queries))


def recursive_naive(
    program: Program, occurrence: Occurrence, selection: Selection, db: Database
) -> RelationInstance:
    """Oracle for occurrences at any depth: apply the naive definition rule by
    rule, unioning over every occurrence of a view on the way down."""
    validate_selection(selection, db)
    memo: dict[str, frozenset | None] = {}

    def head_rows(head: str) -> frozenset | None:
        if head == selection.relation:
            return selection.rows
        if head in memo:
            return memo[head]
        memo[head] = None
        combined: set[tuple] = set()
        found = False
        for rule in program.rules:
            for atom in rule.body_atoms:
                if atom.relation != head:
                    continue
                upper = head_rows(rule.head_name)
                if upper is None:
                    continue
                found = True
                sel = Selection(rule.head_name, upper)
                combined |= naive_provenance(
                    program, rule.head_name, atom.occurrence, sel, db
                ).rows
        memo[head] = frozenset(combined) if found else None
        return memo[head]

    driving = head_rows(occurrence.rule_head)
    schema = _target_schema(program, occurrence)
    if driving is None:
        return RelationInstance(schema, frozenset())
    sel = Selection(occurrence.rule_head, driving)
    return naive_provenance(program, occurrence.rule_head, occurrence.alias, sel, db)


def provenance(
    program: Program,
    occurrence_ref: str,
    selection: Selection,
    strategy: str,
    db: Database,
    plan=None,
) -> ProvResult:
    """Front door: compute provenance of one occurrence under any strategy."""
    if strategy not in STRATEGIES:
        raise ProvexError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    occurrence = program.occurrence(occurrence_ref)
    if strategy in ("W", "O1"):
        return lazy_provenance(program, occurrence, selection, strategy, db)
    from . import hybrid  # strategies with materialized state live there

    if strategy == "G":
        store = hybrid.eager_materialize(program, db)
        return hybrid.eager_retrieval(store, occurrence, selection)
    plan = plan if plan is not None else hybrid.build_plan(program, ())
    prepared = hybrid.materialize(plan, program, db)
    return hybrid.hybrid_provenance(plan, program, occurrence, selection, prepared.database)


def replay_rule(
    program: Program, selection: Selection, db: Database, strategy: str = "O1"
) -> RelationInstance:
    """Re-evaluate the selection's defining rule with every body occurrence
    replaced by its provenance; used to check replay completeness."""
    from .engine import eval_rule

    rule = program.rule_for(selection.relation)
    overrides = {}
    for atom in rule.body_atoms:
        occ = Occurrence(rule.head_name, atom.occurrence, atom.relation,
                         program.is_view(atom.relation))
        result = lazy_provenance(program, occ, selection, strategy, db)
        overrides[atom.occurrence] = result.rows
    return eval_rule(rule, db, overrides)
