import pytest

from provex.fixtures import pruning_illustration, q18_canonical, q18_worked_example
from provex.engine import eval_program
from provex.provgen import (
    DependencyViolation,
    Selection,
    baseline_retrieval,
    join_count,
    lazy_provenance,
    naive_provenance,
    optimized_retrieval,
    provenance,
    recursive_naive,
    replay_rule,
    rule_dependencies,
)

WORKED = q18_worked_example()
CANONICAL = q18_canonical()


@pytest.fixture(scope="module")
def worked():
    program = WORKED.program()
    db = eval_program(program, WORKED.database())
    selection = Selection.of("R", {("n1", "c1", "o1", "d1", 350)})
    return program, db, selection


@pytest.fixture(scope="module")
def canonical():
    program = CANONICAL.program()
    db = eval_program(program, CANONICAL.database())
    return program, db


class TestNaiveDefinition:
    def test_lineitem_of_selected_group(self, worked):
        program, db, _ = worked
        sel = Selection.of("Q18_tmp", {("o2", 260)})
        inst = naive_provenance(program, "Q18_tmp", "2", sel, db)
        assert inst.rows == {("o2", "l1", 100), ("o2", "l2", 160)}

    def test_orders_of_selected_result(self, worked):
        program, db, sel = worked
        inst = naive_provenance(program, "R", "Orders", sel, db)
        assert inst.rows == {("o1", "c1", "d1")}

    def test_empty_selection(self, worked):
        program, db, _ = worked
        sel = Selection.of("R", [])
        assert naive_provenance(program, "R", "Customers", sel, db).rows == frozenset()

    def test_selection_outside_result_rejected(self, worked):
        program, db, _ = worked
        bad = Selection.of("R", {("nX", "cX", "oX", "dX", 1)})
        with pytest.raises(DependencyViolation):
            naive_provenance(program, "R", "Customers", bad, db)


class TestBaselineQueries:
    def test_full_body_is_retained(self, worked):
        program, _, _ = worked
        q = baseline_retrieval(program.rules[1], "Customers")
        assert q.canonical_body() == (
            "R'",
            ("Customers", "Customers"),
            ("Lineitem", "Lineitem"),
            ("Orders", "Orders"),
            ("Q18_tmp", "Q18_tmp"),
        )
        assert len(q.retained_predicates) == 1
        assert join_count(q) == 4

    def test_single_atom_rule(self):
        from provex.parser import parse_program

        program = parse_program("R(A) :- T(A).")
        q = baseline_retrieval(program.rules[0], "T")
        assert q.canonical_body() == ("R'", ("T", "T"))

    def test_six_table_rule_keeps_all_atoms(self):
        program = pruning_illustration().program()
        q = baseline_retrieval(program.rules[0], "T3")
        assert join_count(q) == 6


class TestPrunedQueries:
    def pruned(self, program, rule_idx, alias):
        rule = program.rules[rule_idx]
        return optimized_retrieval(rule, alias, rule_dependencies(program, rule))

    def test_q18_single_join_bodies(self, canonical):
        program, _ = canonical
        for alias, relation in [
            ("Customers", "Customers"),
            ("Orders", "Orders"),
            ("Lineitem", "Lineitem"),
            ("Q18_tmp", "Q18_tmp"),
        ]:
            q = self.pruned(program, 1, alias)
            assert q.canonical_body() == ("R'", (relation, alias)), alias
            assert q.retained_predicates == ()  # filter already vouched for

    def test_six_table_rule(self):
        program = pruning_illustration().program()
        covered = self.pruned(program, 0, "T6")
        assert covered.canonical_body() == ("R'",)
        single = self.pruned(program, 0, "T3")
        assert single.canonical_body() == ("R'", ("T3", "T3"))
        dragged = self.pruned(program, 0, "T4")
        assert dragged.canonical_body() == (
            "R'", ("T1", "T1"), ("T2", "T2"), ("T4", "T4"), ("T5", "T5"),
        )

    def test_join_counts(self, canonical):
        program, _ = canonical
        assert join_count(self.pruned(program, 1, "Customers")) == 1
        assert join_count(baseline_retrieval(program.rules[1], "Customers")) == 4
        covered = self.pruned(pruning_illustration().program(), 0, "T6")
        assert join_count(covered) == 0

    def test_pruned_never_retains_more_than_baseline(self, canonical):
        program, _ = canonical
        for fixture_program in (program, pruning_illustration().program()):
            for rule in fixture_program.rules:
                deps = rule_dependencies(fixture_program, rule)
                for atom in rule.body_atoms:
                    o1 = optimized_retrieval(rule, atom.occurrence, deps)
                    w = baseline_retrieval(rule, atom.occurrence)
                    assert set(o1.retained_atoms) <= set(w.retained_atoms)
                    assert set(o1.retained_predicates) <= set(w.retained_predicates)


class TestProvenanceValues:
    def test_worked_example_all_occurrences(self, worked):
        program, db, sel = worked
        expected = {
            "R.Customers": {("c1", "n1", "a1")},
            "R.Orders": {("o1", "c1", "d1")},
            "R.Lineitem": {("o1", "l1", 200), ("o1", "l2", 150)},
            "R.Q18_tmp": {("o1", 350)},
            "Q18_tmp.2": {("o1", "l1", 200), ("o1", "l2", 150)},
        }
        for path, rows in expected.items():
            for strategy in ("W", "O1"):
                got = provenance(program, path, sel, strategy, db)
                assert got.rows.rows == rows, (path, strategy)

    def test_inner_chain_goes_through_the_view(self, worked):
        program, db, sel = worked
        res = provenance(program, "Q18_tmp.2", sel, "O1", db)
        assert res.stats.query_count == 2
        assert res.stats.chain_join_count == 3
        first, second = res.queries
        assert first.target.path == "R.Q18_tmp"
        assert second.selection_source == "PQ18_tmp'"

    def test_strategies_match_oracle_on_all_fixture_occurrences(self, worked):
        program, db, sel = worked
        for occ in program.occurrences():
            oracle = recursive_naive(program, occ, sel, db).rows
            for strategy in ("W", "O1"):
                assert provenance(program, occ.path, sel, strategy, db).rows.rows == oracle

    def test_soundness_subset_of_source(self, worked):
        program, db, sel = worked
        for occ in program.occurrences():
            rows = provenance(program, occ.path, sel, "O1", db).rows.rows
            assert rows <= db[occ.relation].rows

    def test_empty_selection_gives_empty_provenance(self, worked):
        program, db, _ = worked
        sel = Selection.of("R", [])
        res = provenance(program, "R.Customers", sel, "O1", db)
        assert res.rows.rows == frozenset()


def test_replay_reproduces_selected_rows(worked):
    program, db, sel = worked
    replayed = replay_rule(program, sel, db)
    assert sel.rows <= replayed.rows


def test_unknown_occurrence_is_an_error(worked):
    program, db, sel = worked
    with pytest.raises(Exception, match="occurrence"):
        provenance(program, "R.Nope", sel, "O1", db)


def test_selection_on_view_below_result(worked):
    program, db, _ = worked
    sel = Selection.of("Q18_tmp", {("o2", 260)})
    res = lazy_provenance(program, program.occurrence("Q18_tmp.2"), sel, "O1", db)
    assert res.rows.rows == {("o2", "l1", 100), ("o2", "l2", 160)}
