"""Materialization strategies.

Strategy G materializes, per rule, the full join of the head with its body
(every contributing column), so provenance becomes a lookup.  Strategy O2
materializes far less: the result relation augmented with the key columns of
selected base-table occurrences (relation ``RK``).  Key columns that a view
head does not expose are bubbled up through generated helper views (``VK``),
renamed with the occurrence alias to keep natural joins honest.

Retrieval under O2 has two cases per occurrence: when the occurrence's key is
covered by the RK columns, provenance is a single join of the restricted RK
with the target table; otherwise retrieval recurses through the view's
provenance exactly like the pruned lazy strategy.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction

from .constraints import body_dependencies, program_view_keys
from .engine import (
    Database,
    RelationInstance,
    Table,
    apply_predicates,
    atom_table,
    eval_program,
    eval_rule,
    join_tables,
    project,
    semijoin,
)
from .ir import (
    Catalog,
    CatalogEntry,
    HeadColumn,
    Occurrence,
    Program,
    ProvexError,
    Rule,
    TableAtom,
)
from .provgen import (
    ProvQuery,
    ProvResult,
    ProvStats,
    Selection,
    chain_join_count,
    collect_chain,
    eval_prov_query,
    make_rule_query,
    optimized_retrieval,
    prune_body,
    validate_selection,
    _target_schema,
)


class PlanError(ProvexError):
    pass


MAX_ENUMERATED_OCCURRENCES = 12


@dataclass
class MaterializationPlan:
    """Which base-table occurrences get their keys folded into RK, plus the
    generated rules that build and answer from it."""

    chosen: tuple[str, ...]  # occurrence paths, sorted
    rk_name: str
    rk_rule: Rule
    rk_schema: tuple[str, ...]
    vk_rules: tuple[Rule, ...]  # in evaluation order, never stored
    oq_rule: Rule
    key_map: dict[str, dict[str, str]]  # occurrence path -> source attr -> RK column
    added_columns: tuple[str, ...]
    catalog: Catalog  # program catalog extended with VK/RK entries

    def describe(self) -> dict:
        return {
            "chosen": list(self.chosen),
            "rk_columns": list(self.rk_schema),
            "added_columns": list(self.added_columns),
            "rk_rule": self.rk_rule.format(),
            "vk_rules": [r.format() for r in self.vk_rules],
            "oq_rule": self.oq_rule.format(),
        }


@dataclass(frozen=True)
class PlanStats:
    rows_r: int
    rows_rk: int
    joins_without: int
    joins_with: int

    def __post_init__(self) -> None:
        if self.rows_rk < self.rows_r:
            raise PlanError("RK cannot have fewer rows than the result")
        if self.joins_with > self.joins_without:
            raise PlanError("materialization may not increase retrieval joins")


@dataclass
class Materialization:
    database: Database
    rk: RelationInstance
    eval_us: int  # evaluating the original program
    build_us: int  # building VK/RK on top of it

    @property
    def oq_us(self) -> int:
        return self.eval_us + self.build_us


def _vk_name(view: str, taken: set[str]) -> str:
    name = f"{view}K"
    while name in taken:
        name += "_"
    return name


def _unique_parent(program: Program, head: str) -> tuple[Rule, TableAtom]:
    parents = [
        (rule, atom)
        for rule in program.rules
        for atom in rule.body_atoms
        if atom.relation == head
    ]
    if len(parents) != 1:
        raise PlanError(
            f"view {head} is used {len(parents)} times; key materialization"
            " requires a single-use view chain"
        )
    return parents[0]


def _chain_to_result(program: Program, occurrence: Occurrence) -> list[str]:
    """Heads from the occurrence's rule up to the result; PlanError if the
    chain does not reach the result through single-use views."""
    chain = [occurrence.rule_head]
    head = occurrence.rule_head
    while head != program.result_name:
        rule, _ = _unique_parent(program, head)
        head = rule.head_name
        chain.append(head)
    return chain


def materializable_occurrences(program: Program) -> list[Occurrence]:
    """Base occurrences whose keys can be folded into RK: the relation has a
    declared key and the occurrence sits under a single-use view chain."""
    out = []
    for occ in program.base_occurrences():
        entry = program.catalog.get(occ.relation)
        if entry.key is None:
            continue
        try:
            build_plan(program, [occ.path])
        except PlanError:
            continue
        out.append(occ)
    return out


def build_plan(program: Program, subset) -> MaterializationPlan:
    """Construct the VK/RK rules for the chosen base-table occurrences.

    A key column already exposed by the result is reused, not duplicated; a
    missing one is added under ``<exposed name><occurrence alias>`` and bubbled
    up through one generated VK view per affected step.  Both the VK rules and
    the RK rule are then pruned with the same dependency argument used for
    lazy retrieval.
    """
    final = program.final_rule
    chosen: list[Occurrence] = []
    for ref in subset:
        occ = program.occurrence(ref if isinstance(ref, str) else ref.path)
        if occ.is_view:
            raise PlanError(f"{occ.path} is a view occurrence; choose base tables")
        chosen.append(occ)
    chosen.sort(key=lambda o: o.path)

    taken_names: set[str] = set()
    for entry in program.catalog.entries.values():
        taken_names.update(entry.attributes)
        taken_names.add(entry.name)
    adds: dict[str, list[tuple[HeadColumn, str]]] = {}  # head -> [(col, source alias)]
    key_map: dict[str, dict[str, str]] = {}

    def ensure_column(occ: Occurrence, src: str) -> str:
        rule = program.rule_for(occ.rule_head)
        name = rule.atom(occ.alias).exposed_of(src)
        carrier_alias = occ.alias
        head = occ.rule_head
        invented = False
        while True:
            rule = program.rule_for(head)
            carried = None
            if not invented:
                for col in rule.head_columns:
                    if col.is_plain and col.source == name:
                        carried = col.output
                        break
            existing = next(
                (col.output for col, _ in adds.get(head, []) if col.source == name), None
            )
            if carried is not None:
                out = carried
            elif existing is not None:
                out = existing
                invented = True
            else:
                if invented:
                    out = name  # bubbling an already-renamed column up a step
                else:
                    out = f"{name}{occ.alias}"
                    if out in final.head_attrs:
                        raise PlanError(
                            f"added key column {out} for {occ.path} collides with a"
                            " result column"
                        )
                    k = 2
                    while out in taken_names:
                        out = f"{name}{occ.alias}_{k}"
                        k += 1
                    taken_names.add(out)
                adds.setdefault(head, []).append((HeadColumn(out, name), carrier_alias))
                invented = True
            if head == program.result_name:
                return out
            parent_rule, parent_atom = _unique_parent(program, head)
            name = out if invented else parent_atom.exposed_of(out)
            carrier_alias = parent_atom.occurrence
            head = parent_rule.head_name
        raise AssertionError("unreachable")

    for occ in chosen:
        entry = program.catalog.get(occ.relation)
        if entry.key is None:
            raise PlanError(f"{occ.relation} has no declared key; cannot materialize {occ.path}")
        _chain_to_result(program, occ)
        key_map[occ.path] = {k: ensure_column(occ, k) for k in sorted(entry.key)}

    plan_catalog = program.catalog.copy()
    view_keys = program_view_keys(program)
    vk_names: dict[str, str] = {}
    vk_rules: list[Rule] = []

    def body_with_vks(rule: Rule) -> tuple[TableAtom, ...]:
        atoms = []
        for atom in rule.body_atoms:
            if atom.relation in vk_names:
                child = vk_names[atom.relation]
                added = [c.output for c, _ in adds[atom.relation]]
                renamings = atom.renamings + tuple((c, c) for c in added)
                atoms.append(TableAtom(child, atom.occurrence, renamings))
            else:
                atoms.append(atom)
        return tuple(atoms)

    # one VK per view that contributes added columns, built innermost-first
    for rule in program.rules[:-1]:
        head = rule.head_name
        if head not in adds:
            continue
        vk = _vk_name(head, taken_names | set(plan_catalog.entries))
        anchor_atom = TableAtom(head, head, tuple((a, a) for a in rule.head_attrs))
        body = (anchor_atom,) + body_with_vks(rule)
        head_cols = tuple(HeadColumn(a, a) for a in rule.head_attrs) + tuple(
            c for c, _ in adds[head]
        )
        keep = {head} | {alias for _, alias in adds[head]}
        pruned_atoms, pruned_preds = prune_body(
            body, rule.body_predicates, frozenset(rule.head_attrs), keep,
            _planning_deps(plan_catalog, body, rule.body_predicates, view_keys),
        )
        vk_rule = Rule(vk, head_cols, pruned_atoms, pruned_preds)
        vk_rules.append(vk_rule)
        vk_names[head] = vk
        entry = CatalogEntry(vk, vk_rule.head_attrs, None, "view")
        plan_catalog.add(entry)
        # rows of VK still determine the original view columns through its key
        inferred = next((k.key for k in view_keys if k.relation == head), None)
        if inferred is not None:
            for attr in rule.head_attrs:
                if attr not in inferred:
                    plan_catalog.add_fd(vk, inferred, attr)

    rk_name = _vk_name("RK", taken_names | set(plan_catalog.entries)) if (
        "RK" in plan_catalog.entries or "RK" in taken_names
    ) else "RK"
    anchor_atom = TableAtom(final.head_name, final.head_name,
                            tuple((a, a) for a in final.head_attrs))
    rk_body = (anchor_atom,) + body_with_vks(final)
    rk_head = tuple(HeadColumn(a, a) for a in final.head_attrs) + tuple(
        c for c, _ in adds.get(final.head_name, [])
    )
    keep = {final.head_name} | {alias for _, alias in adds.get(final.head_name, [])}
    keep |= {atom.occurrence for atom in rk_body if atom.relation in vk_names.values()}
    pruned_atoms, pruned_preds = prune_body(
        rk_body, final.body_predicates, frozenset(final.head_attrs), keep,
        _planning_deps(plan_catalog, rk_body, final.body_predicates, view_keys),
    )
    rk_rule = Rule(rk_name, rk_head, pruned_atoms, pruned_preds)
    rk_schema = rk_rule.head_attrs
    plan_catalog.add(CatalogEntry(rk_name, rk_schema, None, "view"))
    oq_rule = Rule(
        "OQ",
        tuple(HeadColumn(a, a) for a in final.head_attrs),
        (TableAtom(rk_name, rk_name, tuple((a, a) for a in rk_schema)),),
        (),
    )
    return MaterializationPlan(
        chosen=tuple(o.path for o in chosen),
        rk_name=rk_name,
        rk_rule=rk_rule,
        rk_schema=rk_schema,
        vk_rules=tuple(vk_rules),
        oq_rule=oq_rule,
        key_map=key_map,
        added_columns=tuple(a for a in rk_schema if a not in final.head_attrs),
        catalog=plan_catalog,
    )


def _planning_deps(catalog: Catalog, body_atoms, predicates, view_keys):
    synthetic = Rule("__plan", tuple(HeadColumn(a, a) for a in body_atoms[0].exposed),
                     tuple(body_atoms), tuple(predicates))
    return body_dependencies(synthetic, catalog, view_keys)


def materialize(plan: MaterializationPlan, program: Program, db: Database) -> Materialization:
    """Run the original program, then build RK during that same execution.
    VK views are evaluated inline and never stored."""
    t0 = time.perf_counter_ns()
    evaluated = eval_program(program, db)
    t1 = time.perf_counter_ns()
    scratch = dict(evaluated)
    for vk_rule in plan.vk_rules:
        scratch[vk_rule.head_name] = eval_rule(vk_rule, scratch)
    rk = eval_rule(plan.rk_rule, scratch)
    t2 = time.perf_counter_ns()
    out = dict(evaluated)
    out[plan.rk_name] = rk
    return Materialization(out, rk, (t1 - t0) // 1000, (t2 - t1) // 1000)


def answer_from_rk(plan: MaterializationPlan, rk: RelationInstance) -> RelationInstance:
    """The original answer is a projection of RK; no base tables touched."""
    cols = [(c.source, c.output) for c in plan.oq_rule.head_columns]
    return project(rk, cols, plan.oq_rule.head_name, kind="view")


def rk_restrict(selection: Selection, rk: RelationInstance) -> RelationInstance:
    """RK rows that correspond to the selected result rows (semijoin on the
    shared result columns)."""
    probe = RelationInstance(
        CatalogEntry(selection.relation, _result_attrs(rk, selection), None, "view"),
        selection.rows,
    )
    return semijoin(rk, probe)


def _result_attrs(rk: RelationInstance, selection: Selection) -> tuple[str, ...]:
    # the selection is over the result head; RK's schema starts with those columns
    width = len(next(iter(selection.rows), ())) or len(rk.schema.attributes)
    return rk.schema.attributes[:width]


def rk_key_mapping(
    program: Program, plan: MaterializationPlan, occurrence: Occurrence
) -> dict[str, str] | None:
    """Map the occurrence's key attributes to RK columns, or None when the key
    is not covered.  Chosen occurrences are covered by construction; others may
    be covered for free when their exposed key survives into the result."""
    if occurrence.path in plan.key_map:
        return plan.key_map[occurrence.path]
    key = program.catalog.get(occurrence.relation).key
    if key is None:
        return None
    mapping: dict[str, str] = {}
    for src in sorted(key):
        col = _trace_to_rk(program, plan, occurrence, src)
        if col is None:
            return None
        mapping[src] = col
    return mapping


def _trace_to_rk(
    program: Program, plan: MaterializationPlan, occurrence: Occurrence, src: str
) -> str | None:
    rule = program.rule_for(occurrence.rule_head)
    name = rule.atom(occurrence.alias).exposed_of(src)
    head = occurrence.rule_head
    while True:
        rule = program.rule_for(head)
        carried = next(
            (c.output for c in rule.head_columns if c.is_plain and c.source == name), None
        )
        if head == program.result_name:
            if carried is not None and carried in plan.rk_schema:
                return carried
            return None
        if carried is None:
            return None
        try:
            parent_rule, parent_atom = _unique_parent(program, head)
        except PlanError:
            return None
        name = parent_atom.exposed_of(carried)
        head = parent_rule.head_name


def hybrid_retrieval(
    plan: MaterializationPlan, program: Program, occurrence_ref: str
) -> ProvQuery:
    """The retrieval query O2 uses for one occurrence.

    Covered key: one join of the restricted RK (key columns renamed back to
    their source names) with the target table.  Uncovered: the pruned lazy
    query, driven by the restricted RK at the top step or by the enclosing
    view's provenance below it.
    """
    occurrence = program.occurrence(occurrence_ref)
    mapping = rk_key_mapping(program, plan, occurrence)
    if mapping is not None:
        entry = program.catalog.get(occurrence.relation)
        sel_cols = tuple((mapping[k], k) for k in sorted(mapping))
        atom = TableAtom(
            occurrence.relation,
            occurrence.alias,
            tuple((a, a) for a in entry.attributes),
        )
        return ProvQuery(
            target=occurrence,
            selection_source=f"{plan.rk_name}'",
            selection_columns=sel_cols,
            retained_atoms=(atom,),
            retained_predicates=(),
            case=1,
        )
    rule = program.rule_for(occurrence.rule_head)
    deps = body_dependencies(rule, program.catalog, program_view_keys(program))
    if occurrence.rule_head == program.result_name:
        query = optimized_retrieval(rule, occurrence.alias, deps, f"{plan.rk_name}'")
    else:
        query = optimized_retrieval(rule, occurrence.alias, deps, f"P{occurrence.rule_head}'")
    return ProvQuery(
        target=query.target,
        selection_source=query.selection_source,
        selection_columns=query.selection_columns,
        retained_atoms=query.retained_atoms,
        retained_predicates=query.retained_predicates,
        case=2,
    )


def hybrid_chain_queries(
    plan: MaterializationPlan, program: Program, occurrence_ref: str
) -> list[ProvQuery]:
    """All queries O2 runs to explain one occurrence (covered keys need one)."""
    occurrence = program.occurrence(occurrence_ref)
    query = hybrid_retrieval(plan, program, occurrence.path)
    if query.case == 1 or occurrence.rule_head == program.result_name:
        return [query]
    out: list[ProvQuery] = []
    seen: set[str] = set()
    for parent in program.occurrences():
        if parent.relation != occurrence.rule_head or parent.path in seen:
            continue
        seen.add(parent.path)
        out.extend(hybrid_chain_queries(plan, program, parent.path))
    return out + [query]


def hybrid_provenance(
    plan: MaterializationPlan,
    program: Program,
    occurrence: Occurrence,
    selection: Selection,
    db: Database,
) -> ProvResult:
    """Strategy O2 against a database that already holds the materialized RK."""
    t0 = time.perf_counter_ns()
    validate_selection(selection, db)
    if selection.relation != program.result_name:
        # a selection below the result cannot use RK; fall back to pruned lazy
        from .provgen import lazy_provenance

        result = lazy_provenance(program, occurrence, selection, "O1", db)
        stats = ProvStats(
            strategy="O2",
            occurrence=occurrence.path,
            join_count=result.stats.join_count,
            chain_join_count=result.stats.chain_join_count,
            query_count=result.stats.query_count,
            rows=result.stats.rows,
            elapsed_us=result.stats.elapsed_us,
            case=2,
        )
        return ProvResult(result.rows, stats, result.queries)
    rk_restricted = rk_restrict(selection, db[plan.rk_name])
    queries: list[ProvQuery] = []
    memo: dict[str, RelationInstance] = {}

    def explain(occ: Occurrence) -> RelationInstance:
        query = hybrid_retrieval(plan, program, occ.path)
        if query.case == 1:
            queries.append(query)
            return eval_prov_query(query, rk_restricted, db, program)
        if occ.rule_head == program.result_name:
            queries.append(query)
            return eval_prov_query(query, rk_restricted, db, program)
        driving = view_rows(occ.rule_head)
        queries.append(query)
        return eval_prov_query(query, driving, db, program)

    def view_rows(head: str) -> RelationInstance:
        if head in memo:
            return memo[head]
        combined: set[tuple] = set()
        schema = None
        for parent in program.occurrences():
            if parent.relation != head:
                continue
            inst = explain(parent)
            schema = inst.schema
            combined |= inst.rows
        if schema is None:
            entry = program.catalog.get(head)
            schema = CatalogEntry(head, entry.attributes, None, "view", entry.attr_kinds)
        memo[head] = RelationInstance(
            CatalogEntry(head, schema.attributes, None, "view", schema.attr_kinds),
            frozenset(combined),
        )
        return memo[head]

    result = explain(occurrence)
    final_query = queries[-1]
    elapsed = (time.perf_counter_ns() - t0) // 1000
    stats = ProvStats(
        strategy="O2",
        occurrence=occurrence.path,
        join_count=final_query.join_count,
        chain_join_count=chain_join_count(queries),
        query_count=len(queries),
        rows=len(result),
        elapsed_us=elapsed,
        case=final_query.case,
    )
    return ProvResult(result, stats, tuple(queries))


# --- eager strategy ---------------------------------------------------------


@dataclass
class EagerStore:
    """Per-rule materialized provenance views: head columns plus every exposed
    body column, chained across steps for nested retrieval."""

    program: Program
    views: dict[str, RelationInstance]
    eval_us: int
    build_us: int

    @property
    def oq_us(self) -> int:
        return self.eval_us + self.build_us


def _store_table(rule: Rule, db: Database) -> Table:
    body: Table | None = None
    for atom in rule.body_atoms:
        tab = atom_table(atom, db[atom.relation])
        body = tab if body is None else join_tables(body, tab)
    assert body is not None
    body = apply_predicates(body, rule.body_predicates)
    head_inst = db[rule.head_name]
    plain: dict[str, int] = {}
    for col in rule.head_columns:
        if col.is_plain and col.source not in plain:
            plain[col.source] = head_inst.schema.attributes.index(col.output)
    aggs = [
        (col.output, head_inst.schema.attributes.index(col.output))
        for col in rule.head_columns
        if not col.is_plain
    ]
    attrs = tuple(plain) + tuple(name for name, _ in aggs)
    idx = list(plain.values()) + [i for _, i in aggs]
    head_tab = Table(attrs, {tuple(row[i] for i in idx) for row in head_inst.rows})
    return join_tables(body, head_tab)


def eager_materialize(program: Program, db: Database) -> EagerStore:
    t0 = time.perf_counter_ns()
    evaluated = eval_program(program, db)
    t1 = time.perf_counter_ns()
    views: dict[str, RelationInstance] = {}
    for rule in program.rules:
        tab = _store_table(rule, evaluated)
        entry = CatalogEntry(f"{rule.head_name}__store", tab.attrs, None, "view")
        views[rule.head_name] = RelationInstance(entry, frozenset(tab.rows))
    t2 = time.perf_counter_ns()
    return EagerStore(program, views, (t1 - t0) // 1000, (t2 - t1) // 1000)


def _store_restrict(
    store: EagerStore, head: str, rows: frozenset, program: Program
) -> RelationInstance:
    rule = program.rule_for(head)
    view = store.views[head]
    anchor = [(c.output, c.source) for c in rule.head_columns if c.is_plain]
    head_attrs = rule.head_attrs
    sel_idx = [head_attrs.index(out) for out, _ in anchor]
    keys = {tuple(r[i] for i in sel_idx) for r in rows}
    vidx = [view.schema.attributes.index(src) for _, src in anchor]
    surviving = frozenset(r for r in view.rows if tuple(r[i] for i in vidx) in keys)
    return RelationInstance(view.schema, surviving)


def eager_retrieval(
    store: EagerStore, occurrence: Occurrence | str, selection: Selection
) -> ProvResult:
    """Provenance as lookups in the materialized per-rule stores."""
    t0 = time.perf_counter_ns()
    program = store.program
    if isinstance(occurrence, str):
        occurrence = program.occurrence(occurrence)
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
                restricted = _store_restrict(store, rule.head_name, upper, program)
                pairs = [(e, s) for s, e in atom.renamings]
                combined |= project(restricted, pairs, head).rows
        memo[head] = frozenset(combined) if found else None
        return memo[head]

    driving = head_rows(occurrence.rule_head)
    schema = _target_schema(program, occurrence)
    if driving is None:
        result = RelationInstance(schema, frozenset())
    else:
        restricted = _store_restrict(store, occurrence.rule_head, driving, program)
        atom = program.rule_for(occurrence.rule_head).atom(occurrence.alias)
        pairs = [(e, s) for s, e in atom.renamings]
        projected = project(restricted, pairs, schema.name)
        result = RelationInstance(schema, projected.rows)
    elapsed = (time.perf_counter_ns() - t0) // 1000
    stats = ProvStats(
        strategy="G",
        occurrence=occurrence.path,
        join_count=0,
        chain_join_count=0,
        query_count=0,
        rows=len(result),
        elapsed_us=elapsed,
    )
    return ProvResult(result, stats)


def eager_answer(store: EagerStore) -> RelationInstance:
    """Project the result columns out of the top-level store."""
    program = store.program
    rule = program.final_rule
    view = store.views[rule.head_name]
    cols = [(c.source if c.is_plain else c.output, c.output) for c in rule.head_columns]
    return project(view, cols, rule.head_name, kind="view")


# --- cost model and plan selection ------------------------------------------


def lazy_join_counts(program: Program) -> dict[str, int]:
    """Per base occurrence, the total join count of the pruned lazy retrieval
    chain (references across all steps, minus one)."""
    out: dict[str, int] = {}
    for occ in program.base_occurrences():
        chain = collect_chain(program, occ, program.result_name)
        if chain is None:
            out[occ.path] = 0
            continue
        queries = [
            make_rule_query(program, rule, alias, "O1", f"{rule.head_name}'")
            for rule, alias in chain
        ]
        out[occ.path] = chain_join_count(queries)
    return out


def plan_join_counts(
    plan: MaterializationPlan, program: Program, lazy: dict[str, int] | None = None
) -> dict[str, int]:
    """Per base occurrence, the joins O2 needs under this plan.  The system
    keeps the lazy query available, so an occurrence never costs more than its
    lazy chain."""
    lazy = lazy if lazy is not None else lazy_join_counts(program)
    out: dict[str, int] = {}
    for occ in program.base_occurrences():
        queries = hybrid_chain_queries(plan, program, occ.path)
        out[occ.path] = min(chain_join_count(queries), lazy[occ.path])
    return out


def compute_plan_stats(
    plan: MaterializationPlan,
    program: Program,
    db: Database,
    weights: dict[str, float] | None = None,
    exact: bool = True,
) -> PlanStats:
    """Exact mode materializes the candidate and counts rows; the estimation
    mode multiplies out average key multiplicities instead (cheaper, rougher)."""
    if exact:
        prepared = materialize(plan, program, db)
        rows_r = len(prepared.database[program.result_name])
        rows_rk = len(prepared.rk)
    else:
        evaluated = eval_program(program, db)
        rows_r = len(evaluated[program.result_name])
        rows_rk = estimate_rows_rk(plan, program, db)
    lazy = lazy_join_counts(program)
    with_plan = plan_join_counts(plan, program, lazy)
    w = weights or {}
    joins_without = sum(lazy[p] * w.get(p, 1) for p in lazy)
    joins_with = sum(with_plan[p] * w.get(p, 1) for p in with_plan)
    return PlanStats(rows_r, rows_rk, int(joins_without), int(joins_with))


def benefit_cost(stats: PlanStats) -> tuple[Fraction, Fraction]:
    benefit = Fraction(1 + stats.joins_without, 1 + stats.joins_with)
    cost = Fraction(stats.rows_rk, stats.rows_r) if stats.rows_r else Fraction(1)
    return benefit, cost


def score_plan(plan: MaterializationPlan, stats: PlanStats) -> Decimal:
    """Reported scalar: benefit over cost.  Ranking compares benefit first and
    uses cost only between equal-benefit plans (see select_plan)."""
    benefit, cost = benefit_cost(stats)
    ratio = benefit / cost
    return Decimal(ratio.numerator) / Decimal(ratio.denominator)


def estimate_rows_rk(plan: MaterializationPlan, program: Program, db: Database) -> int:
    """Crude estimate for larger inputs: result rows times the average key
    multiplicity each chosen occurrence contributes."""
    evaluated = eval_program(program, db)
    rows = len(evaluated[program.result_name])
    factor = 1.0
    for path in plan.chosen:
        occ = program.occurrence(path)
        head_rows = len(evaluated[occ.rule_head]) or 1
        base_rows = len(evaluated.get(occ.relation, db[occ.relation]))
        factor *= max(1.0, base_rows / head_rows)
    return max(rows, int(rows * factor))


@dataclass
class RankedPlan:
    plan: MaterializationPlan
    stats: PlanStats
    benefit: Fraction
    cost: Fraction
    score: Decimal


def enumerate_plans(
    program: Program,
    db: Database,
    weights: dict[str, float] | None = None,
    allow_large: bool = False,
    exact: bool = True,
) -> list[RankedPlan]:
    """Score every subset of the materializable occurrences (2^n candidates)."""
    candidates = sorted(materializable_occurrences(program), key=lambda o: o.path)
    if len(candidates) > MAX_ENUMERATED_OCCURRENCES and not allow_large:
        raise PlanError(
            f"{len(candidates)} materializable occurrences; pass allow_large to"
            f" enumerate more than {MAX_ENUMERATED_OCCURRENCES}"
        )
    ranked = []
    for r in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            plan = build_plan(program, [o.path for o in combo])
            stats = compute_plan_stats(plan, program, db, weights, exact)
            benefit, cost = benefit_cost(stats)
            ranked.append(RankedPlan(plan, stats, benefit, cost, score_plan(plan, stats)))
    ranked.sort(key=lambda rp: (-rp.benefit, rp.cost, len(rp.plan.chosen), rp.plan.chosen))
    return ranked


def select_plan(
    program: Program,
    db: Database,
    weights: dict[str, float] | None = None,
    allow_large: bool = False,
    exact: bool = True,
) -> MaterializationPlan:
    """Pick the best-ranked plan: highest benefit, then lowest cost, then the
    fewest chosen occurrences, then the lexicographically least set."""
    return enumerate_plans(program, db, weights, allow_large, exact)[0].plan
