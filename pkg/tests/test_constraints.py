from hypothesis import given, strategies as st

from provex.constraints import (
    FunctionalDependency,
    KeyFact,
    closure,
    derive_body_fds,
    holds_fd,
    infer_view_key,
    program_view_keys,
)
from provex.fixtures import pruning_illustration, q18_worked_example
from provex.parser import parse_program

Q18 = q18_worked_example().program()
RESULT_RULE = Q18.rules[1]
VIEW_KEYS = program_view_keys(Q18)
BODY_FDS = derive_body_fds(RESULT_RULE, Q18.catalog, VIEW_KEYS)


def fd(det, dep):
    return FunctionalDependency(frozenset(det), dep)


def brute_closure(attrs, fds):
    """Independent fixpoint used as the oracle for closure results."""
    out = set(attrs)
    for _ in range(len(fds) + 1):
        for f in fds:
            if f.determinant <= out:
                out.add(f.dependent)
    return out


class TestDeriveBodyFds:
    def test_q18_result_rule_instantiates_keys_and_view_key(self):
        assert fd({"c_key"}, "c_name") in BODY_FDS
        assert fd({"c_key"}, "c_address") in BODY_FDS
        assert fd({"o_key"}, "o_date") in BODY_FDS
        assert fd({"o_key"}, "t_sum_qty") in BODY_FDS  # grouped view key
        assert fd({"o_key", "linenum"}, "qty") in BODY_FDS

    def test_keyless_atoms_contribute_nothing(self):
        program = parse_program("R(a) :- T(a, b).")
        assert derive_body_fds(program.rules[0], program.catalog) == set()

    def test_declared_dependency_is_instantiated(self):
        program = pruning_illustration().program()
        fds = derive_body_fds(program.rules[0], program.catalog)
        assert fds == {fd({"D"}, "E")}

    def test_output_only_mentions_exposed_names(self):
        exposed = RESULT_RULE.exposed_attrs()
        for f in BODY_FDS:
            assert f.determinant <= exposed
            assert f.dependent in exposed


class TestInferViewKey:
    def test_grouped_view_key_is_the_grouping_column(self):
        assert infer_view_key(Q18.rules[0]) == KeyFact("Q18_tmp", frozenset({"o_key"}))

    def test_aggregate_only_head_has_empty_key(self):
        program = parse_program("R(sum(x) as s) :- T(g, x).")
        assert infer_view_key(program.rules[0]) == KeyFact("R", frozenset())

    def test_plain_rule_has_no_key(self):
        program = parse_program("R(a) :- T(a, b).")
        assert infer_view_key(program.rules[0]) is None


class TestClosure:
    def test_q18_result_attributes_reach_address_and_total(self):
        start = {"c_name", "c_key", "o_key", "o_date", "total_qty"}
        got = closure(start, BODY_FDS)
        assert {"c_address", "t_sum_qty"} <= got
        assert got == brute_closure(start, BODY_FDS)

    def test_empty_fds_is_identity(self):
        assert closure({"a", "b"}, set()) == {"a", "b"}

    def test_single_step(self):
        assert closure({"D"}, {fd({"D"}, "E")}) == {"D", "E"}


class TestHoldsFd:
    def test_result_determines_projected_key(self):
        assert holds_fd(frozenset(RESULT_RULE.head_attrs), "c_key", BODY_FDS)

    def test_quantity_is_not_determined(self):
        anchor = frozenset(RESULT_RULE.head_attrs)
        assert not holds_fd(anchor, "qty", BODY_FDS)
        assert "qty" not in brute_closure(anchor, BODY_FDS)

    def test_reflexivity(self):
        assert holds_fd({"x"}, "x", set())


attr_names = st.sampled_from(list("abcdef"))
fd_sets = st.sets(
    st.builds(
        lambda det, dep: FunctionalDependency(frozenset(det), dep),
        st.sets(attr_names, max_size=3),
        attr_names,
    ),
    max_size=8,
)
attr_sets = st.sets(attr_names, max_size=6)


@given(attr_sets, fd_sets)
def test_closure_is_extensive_and_idempotent(attrs, fds):
    once = closure(attrs, fds)
    assert attrs <= once
    assert closure(once, fds) == once
    assert once == brute_closure(attrs, fds)


@given(attr_sets, attr_sets, fd_sets, fd_sets)
def test_closure_is_monotone(a, b, f, g):
    assert closure(a, f) <= closure(a | b, f)
    assert closure(a, f) <= closure(a, f | g)
