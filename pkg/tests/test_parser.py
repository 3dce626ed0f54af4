import pytest
from decimal import Decimal

from provex.fixtures import corpus, q18_worked_example
from provex.ir import Const
from provex.parser import ParseError, parse_program

Q18 = q18_worked_example()


def test_q18_program_parses_to_two_grouped_rules():
    program = parse_program(Q18.program_text, Q18.catalog)
    first, second = program.rules
    assert first.head_name == "Q18_tmp" and first.kind == "SPJA"
    assert [a.relation for a in first.body_atoms] == ["Lineitem"]
    assert first.head_columns[1].agg == "sum"
    assert second.kind == "SPJA"
    assert [a.relation for a in second.body_atoms] == [
        "Customers", "Orders", "Lineitem", "Q18_tmp",
    ]
    (pred,) = second.body_predicates
    assert pred.left == "t_sum_qty" and pred.op == ">" and pred.right == Const(300)


def test_identity_rule():
    program = parse_program("R(A) :- T(A).")
    rule = program.rules[0]
    assert rule.kind == "SPJ"
    assert rule.head_attrs == ("A",)
    assert len(rule.body_atoms) == 1 and not rule.body_predicates


def test_unsafe_rule_rejected():
    with pytest.raises(ParseError, match="unsafe"):
        parse_program("R(A) :- T(B).")


def test_syntax_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_program("R(A :- T(A).")
    assert err.value.line == 1 and err.value.col > 1


def test_duplicate_head_name():
    with pytest.raises(ParseError, match="duplicate head name"):
        parse_program("R(A) :- T(A).\nR(A) :- T(A).")


def test_forward_reference():
    with pytest.raises(ParseError, match="forward reference"):
        parse_program("R(A) :- V(A).\nV(A) :- T(A).")


def test_unknown_relation_without_columns():
    with pytest.raises(ParseError, match="unknown relation"):
        parse_program("R(A) :- T.")


def test_atom_must_list_all_columns():
    with pytest.raises(ParseError, match="all of its columns"):
        parse_program(Q18.program_text.replace("Lineitem@2", "Lineitem(o_key)"), Q18.catalog)


def test_aggregate_output_shadowing_body_name_rejected():
    with pytest.raises(ParseError, match="shadows"):
        parse_program("R(a, sum(b) as b) :- T(a, b).")


def test_comments_and_unicode_operators():
    program = parse_program("% heading\nR(a) :- T(a, b), b ≥ 2, a ≠ 4.")
    ops = sorted(p.op for p in program.rules[0].body_predicates)
    assert ops == ["!=", ">="]


def test_decimal_and_string_constants():
    program = parse_program("R(a) :- T(a, b, c), b > 1.25, c = 'x y'.")
    preds = program.rules[0].body_predicates
    assert preds[0].right == Const(Decimal("1.25"))
    assert preds[1].right == Const("x y")


@pytest.mark.parametrize("fixture", corpus(), ids=lambda f: f.name)
def test_format_parse_round_trip_is_fixed_point(fixture):
    program = fixture.program()
    printed = program.format()
    reparsed = parse_program(printed, fixture.catalog)
    assert reparsed.format() == printed
    assert [r.head_name for r in reparsed.rules] == [r.head_name for r in program.rules]
    for a, b in zip(reparsed.rules, program.rules):
        assert a == b


def test_self_join_requires_alias():
    with pytest.raises(ParseError, match="alias"):
        parse_program("R(a, b) :- T(a, b), T(a, b).")
    program = parse_program("R(a, b2) :- T(a, b), T@2(a, b as b2).")
    assert [a.occurrence for a in program.rules[0].body_atoms] == ["T", "2"]
