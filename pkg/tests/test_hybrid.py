import itertools
from fractions import Fraction

import pytest

from provex import hybrid
from provex.engine import eval_program
from provex.fixtures import fixture, q18_worked_example
from provex.provgen import Selection, optimized_retrieval, recursive_naive, rule_dependencies

WORKED = q18_worked_example()


@pytest.fixture(scope="module")
def worked():
    program = WORKED.program()
    base = WORKED.database()
    evaluated = eval_program(program, base)
    selection = Selection.of("R", {("n1", "c1", "o1", "d1", 350)})
    return program, base, evaluated, selection


@pytest.fixture(scope="module")
def inner_plan(worked):
    program, base, _, _ = worked
    plan = hybrid.build_plan(program, ["Q18_tmp.2"])
    prepared = hybrid.materialize(plan, program, base)
    return plan, prepared


class TestBuildPlan:
    def test_inner_lineitem_plan_structure(self, inner_plan):
        plan, _ = inner_plan
        assert plan.rk_schema == ("c_name", "c_key", "o_key", "o_date", "tot_qty", "linenum2")
        assert plan.added_columns == ("linenum2",)
        assert plan.key_map == {"Q18_tmp.2": {"linenum": "linenum2", "o_key": "o_key"}}
        # the builder prunes the materialization rule down to two references
        assert [a.relation for a in plan.rk_rule.body_atoms] == ["R", "Q18_tmpK"]
        assert plan.rk_rule.body_predicates == ()
        (vk,) = plan.vk_rules
        assert vk.head_attrs == ("o_key", "t_sum_qty", "linenum2")
        assert [a.relation for a in vk.body_atoms] == ["Q18_tmp", "Lineitem"]

    def test_empty_subset_plan_is_the_result_itself(self, worked):
        program, base, evaluated, _ = worked
        plan = hybrid.build_plan(program, ())
        prepared = hybrid.materialize(plan, program, base)
        assert prepared.rk.rows == evaluated["R"].rows

    def test_key_already_projected_is_a_noop(self, worked):
        program, base, evaluated, _ = worked
        plan = hybrid.build_plan(program, ["R.Customers"])
        assert tuple(plan.rk_schema) == evaluated["R"].schema.attributes
        prepared = hybrid.materialize(plan, program, base)
        assert prepared.rk.rows == evaluated["R"].rows

    def test_view_occurrence_cannot_be_chosen(self, worked):
        program, _, _, _ = worked
        with pytest.raises(hybrid.PlanError):
            hybrid.build_plan(program, ["R.Q18_tmp"])


class TestMaterialize:
    def test_rk_rows_match_worked_example(self, inner_plan):
        _, prepared = inner_plan
        assert prepared.rk.rows == {
            ("n1", "c1", "o1", "d1", 350, "l1"),
            ("n1", "c1", "o1", "d1", 350, "l2"),
        }

    def test_materialize_is_idempotent(self, worked, inner_plan):
        program, base, _, _ = worked
        plan, prepared = inner_plan
        again = hybrid.materialize(plan, program, base)
        assert again.rk.rows == prepared.rk.rows

    def test_answer_from_rk_equals_result(self, worked, inner_plan):
        program, _, evaluated, _ = worked
        plan, prepared = inner_plan
        assert hybrid.answer_from_rk(plan, prepared.rk).rows == evaluated["R"].rows


class TestRestrictAndRetrieve:
    def test_rk_restrict_keeps_both_rows(self, worked, inner_plan):
        _, _, _, selection = worked
        _, prepared = inner_plan
        restricted = hybrid.rk_restrict(selection, prepared.rk)
        assert restricted.rows == prepared.rk.rows

    def test_rk_restrict_empty_and_full(self, worked, inner_plan):
        program, _, evaluated, _ = worked
        _, prepared = inner_plan
        empty = hybrid.rk_restrict(Selection.of("R", []), prepared.rk)
        assert empty.rows == frozenset()
        everything = Selection.of("R", evaluated["R"].rows)
        assert hybrid.rk_restrict(everything, prepared.rk).rows == prepared.rk.rows

    def test_covered_key_queries_have_one_join(self, worked, inner_plan):
        program, _, _, _ = worked
        plan, _ = inner_plan
        for path in ["R.Customers", "R.Orders", "R.Lineitem", "Q18_tmp.2"]:
            q = hybrid.hybrid_retrieval(plan, program, path)
            assert q.join_count == 1, path
            assert q.selection_source == "RK'"
            assert len(q.retained_atoms) == 1

    def test_inner_lineitem_lookup_inverts_the_renamed_key(self, worked, inner_plan):
        program, _, _, selection = worked
        plan, prepared = inner_plan
        q = hybrid.hybrid_retrieval(plan, program, "Q18_tmp.2")
        assert q.case == 1
        assert ("linenum2", "linenum") in q.selection_columns
        res = hybrid.hybrid_provenance(
            plan, program, program.occurrence("Q18_tmp.2"), selection, prepared.database
        )
        assert res.rows.rows == {("o1", "l1", 200), ("o1", "l2", 150)}
        assert res.stats.case == 1

    def test_orders_lookup(self, worked, inner_plan):
        program, _, _, selection = worked
        plan, prepared = inner_plan
        res = hybrid.hybrid_provenance(
            plan, program, program.occurrence("R.Orders"), selection, prepared.database
        )
        assert res.rows.rows == {("o1", "c1", "d1")}

    def test_empty_plan_inner_query_matches_pruned_lazy(self, worked):
        program, _, _, _ = worked
        plan = hybrid.build_plan(program, ())
        q = hybrid.hybrid_retrieval(plan, program, "Q18_tmp.2")
        assert q.case == 2
        rule = program.rule_for("Q18_tmp")
        lazy = optimized_retrieval(rule, "2", rule_dependencies(program, rule), "PQ18_tmp'")
        assert q.retained_atoms == lazy.retained_atoms
        assert q.retained_predicates == lazy.retained_predicates
        assert q.selection_source == lazy.selection_source

    def test_all_plans_match_oracle(self, worked):
        program, base, evaluated, selection = worked
        candidates = [o.path for o in hybrid.materializable_occurrences(program)]
        for r in range(len(candidates) + 1):
            for combo in itertools.combinations(candidates, r):
                plan = hybrid.build_plan(program, combo)
                prepared = hybrid.materialize(plan, program, base)
                for occ in program.occurrences():
                    oracle = recursive_naive(program, occ, selection, evaluated).rows
                    got = hybrid.hybrid_provenance(
                        plan, program, occ, selection, prepared.database
                    )
                    assert got.rows.rows == oracle, (combo, occ.path)


class TestEager:
    def test_store_projects_back_to_the_result(self, worked):
        program, base, evaluated, _ = worked
        store = hybrid.eager_materialize(program, base)
        assert hybrid.eager_answer(store).rows == evaluated["R"].rows

    def test_lookups_match_oracle(self, worked):
        program, base, evaluated, selection = worked
        store = hybrid.eager_materialize(program, base)
        for occ in program.occurrences():
            oracle = recursive_naive(program, occ, selection, evaluated).rows
            assert hybrid.eager_retrieval(store, occ, selection).rows.rows == oracle

    def test_empty_selection(self, worked):
        program, base, _, _ = worked
        store = hybrid.eager_materialize(program, base)
        res = hybrid.eager_retrieval(store, "R.Customers", Selection.of("R", []))
        assert res.rows.rows == frozenset()

    def test_self_join_columns_stay_apart(self):
        f = fixture("selfjoin")
        program, base = f.program(), f.database()
        evaluated = eval_program(program, base)
        store = hybrid.eager_materialize(program, base)
        sel = Selection.of("R", {(1, 5)})
        first = hybrid.eager_retrieval(store, "R.T", sel).rows.rows
        second = hybrid.eager_retrieval(store, "R.2", sel).rows.rows
        assert first == {(1, 5), (1, 6)}
        assert second == {(1, 5)}


class TestCostModel:
    def test_join_counts_with_and_without(self, worked, inner_plan):
        program, _, _, _ = worked
        plan, _ = inner_plan
        lazy = hybrid.lazy_join_counts(program)
        assert lazy == {"R.Customers": 1, "R.Orders": 0, "R.Lineitem": 1, "Q18_tmp.2": 3}
        with_plan = hybrid.plan_join_counts(plan, program, lazy)
        assert with_plan["Q18_tmp.2"] == 1
        assert sum(with_plan.values()) <= sum(lazy.values())

    def test_stats_invariants(self, worked, inner_plan):
        program, base, _, _ = worked
        plan, _ = inner_plan
        stats = hybrid.compute_plan_stats(plan, program, base)
        assert stats.rows_rk >= stats.rows_r
        assert stats.joins_with <= stats.joins_without
        score = hybrid.score_plan(plan, stats)
        benefit, cost = hybrid.benefit_cost(stats)
        assert benefit == Fraction(1 + stats.joins_without, 1 + stats.joins_with)
        assert cost == Fraction(stats.rows_rk, stats.rows_r)

    def test_selection_is_deterministic(self, worked):
        program, base, _, _ = worked
        first = hybrid.select_plan(program, base)
        second = hybrid.select_plan(program, base)
        assert first.chosen == second.chosen == ("Q18_tmp.2",)

    def test_exhaustive_enumeration_oracle(self, worked):
        """Re-rank all subsets independently and confirm the selector's choice."""
        program, base, _, _ = worked
        candidates = [o.path for o in hybrid.materializable_occurrences(program)]
        scored = []
        for r in range(len(candidates) + 1):
            for combo in itertools.combinations(sorted(candidates), r):
                plan = hybrid.build_plan(program, combo)
                stats = hybrid.compute_plan_stats(plan, program, base)
                benefit, cost = hybrid.benefit_cost(stats)
                scored.append((-benefit, cost, len(combo), combo))
        scored.sort()
        best = scored[0]
        assert best[3] == ("Q18_tmp.2",)
        empty = next(s for s in scored if s[3] == ())
        assert best < empty  # strictly better than materializing nothing
        assert hybrid.select_plan(program, base).chosen == best[3]

    def test_weights_can_change_the_choice(self, worked):
        program, base, _, _ = worked
        # if nobody ever asks about the inner table, materializing it cannot pay
        weights = {"Q18_tmp.2": 0.0}
        plan = hybrid.select_plan(program, base, weights=weights)
        assert plan.chosen == ()

    def test_enumeration_guard(self, worked):
        program, base, _, _ = worked
        import provex.hybrid as h

        old = h.MAX_ENUMERATED_OCCURRENCES
        h.MAX_ENUMERATED_OCCURRENCES = 1
        try:
            with pytest.raises(hybrid.PlanError, match="allow_large"):
                hybrid.enumerate_plans(program, base)
            hybrid.enumerate_plans(program, base, allow_large=True)
        finally:
            h.MAX_ENUMERATED_OCCURRENCES = old


def test_deep_key_bubbling_through_plain_view():
    f = fixture("spj_view_keys")
    program, base = f.program(), f.database()
    evaluated = eval_program(program, base)
    plan = hybrid.build_plan(program, ["V.T"])
    assert "bT" in plan.rk_schema
    prepared = hybrid.materialize(plan, program, base)
    sel = Selection.of("R", {(1,)})
    q = hybrid.hybrid_retrieval(plan, program, "V.T")
    assert q.case == 1 and q.join_count == 1
    res = hybrid.hybrid_provenance(plan, program, program.occurrence("V.T"), sel, prepared.database)
    assert res.rows.rows == recursive_naive(program, program.occurrence("V.T"), sel, evaluated).rows


class TestFrontDoorDispatch:
    def test_eager_via_provenance(self, worked):
        from provex.provgen import provenance

        program, base, evaluated, selection = worked
        res = provenance(program, "R.Customers", selection, "G", base)
        assert res.rows.rows == {("c1", "n1", "a1")}
        assert res.stats.strategy == "G"

    def test_hybrid_via_provenance_defaults_to_empty_plan(self, worked):
        from provex.provgen import provenance

        program, base, evaluated, selection = worked
        res = provenance(program, "Q18_tmp.2", selection, "O2", base)
        assert res.rows.rows == {("o1", "l1", 200), ("o1", "l2", 150)}
        assert res.stats.case == 2  # nothing materialized, so no key lookup

    def test_unknown_strategy_rejected(self, worked):
        from provex.provgen import provenance

        program, base, _, selection = worked
        with pytest.raises(Exception, match="strategy"):
            provenance(program, "R.Customers", selection, "X9", base)


def test_estimation_mode_keeps_the_invariants(worked):
    program, base, _, _ = worked
    plan = hybrid.build_plan(program, ["Q18_tmp.2"])
    stats = hybrid.compute_plan_stats(plan, program, base, exact=False)
    assert stats.rows_rk >= stats.rows_r
    assert stats.joins_with <= stats.joins_without
