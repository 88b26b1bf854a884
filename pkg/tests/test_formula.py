import re

import pytest
from hypothesis import given

from conftest import formulas
from ckdecide.formula import (
    FALSE,
    TRUE,
    And,
    Common,
    Everyone,
    FormulaError,
    Not,
    Prop,
    esub,
    groups_of,
    length,
    parse,
    pretty,
    sub,
    sub_plus,
)
from ckdecide.setalgebra import Agent, Diff, GroupTable, IntervalSet, Name, Union

p, q = Prop("p"), Prop("q")


@pytest.fixture
def teams():
    return GroupTable({"TEAM1": IntervalSet([(0, 10)]), "TEAM2": IntervalSet((), 5), "G": IntervalSet([(1, 3)])})


# ---------------------------------------------------------------------------
# parse


def test_parse_core_connectives(teams):
    assert parse("p & ~p", teams) == And(p, Not(p))


def test_parse_disjunction_desugars(teams):
    assert parse("E[TEAM1] (p | q)", teams) == Everyone(Name("TEAM1"), Not(And(Not(p), Not(q))))


def test_parse_k_is_singleton_everyone(teams):
    assert parse("K[3] C[TEAM2] p", teams) == Everyone(Agent(3), Common(Name("TEAM2"), p))


def test_parse_implication_and_equivalence():
    assert parse("p -> q") == Not(And(p, Not(q)))
    assert parse("p <-> q") == And(Not(And(p, Not(q))), Not(And(q, Not(p))))


def test_implication_associates_right():
    r = Prop("r")
    imp = lambda a, b: Not(And(a, Not(b)))  # noqa: E731
    assert parse("p -> q -> r") == imp(p, imp(q, r))


def test_constants():
    assert parse("true") == TRUE
    assert parse("false") == FALSE
    assert parse("~false") == TRUE


def test_group_expressions(teams):
    f = parse("E[TEAM1 - (TEAM2 + G)] p", teams)
    assert f.group == Diff(Name("TEAM1"), Union(Name("TEAM2"), Name("G")))
    assert str(f.group) == "TEAM1 - (TEAM2 + G)"


@pytest.mark.parametrize(
    "text, where",
    [("p & ", "column 5"), ("p $ q", "column 3"), ("(p & q", "column 7"), ("E[] p", "column 3")],
)
def test_syntax_errors_carry_a_position(text, where):
    with pytest.raises(FormulaError, match=where):
        parse(text)


def test_undeclared_group_rejected(teams):
    with pytest.raises(FormulaError, match="undeclared group 'NOPE'"):
        parse("E[NOPE] p", teams)


def test_empty_group_rejected(teams):
    with pytest.raises(FormulaError, match="empty"):
        parse("E[G - TEAM1] p", teams)


def test_reserved_identifiers_rejected():
    with pytest.raises(FormulaError, match="may not start"):
        parse("_x & p")


# ---------------------------------------------------------------------------
# length


def test_length_examples(teams):
    assert length(parse("E[G] p", teams)) == 2
    assert length(parse("C[G] p", teams)) == 4
    assert length(parse("K[1] p & ~p")) == 5


def _printed_length(text: str) -> int:
    """Symbol count read off the printed form: C[..] weighs 3, other operators and letters 1."""
    text = re.sub(r"C\[[^\]]*\]", " CCC ", text)
    text = re.sub(r"[EK]\[[^\]]*\]", " M ", text)
    n = text.count("CCC") * 3 + text.count(" M ") + text.count("~") + text.count("&")
    return n + len(re.findall(r"\b[a-z]\w*\b", text))


@given(formulas())
def test_length_matches_printed_symbol_count(f):
    assert length(f) == _printed_length(pretty(f))


# ---------------------------------------------------------------------------
# closures


def test_sub_of_common_knowledge(teams):
    f = parse("C[G] p", teams)
    body = And(p, f)
    assert set(sub(f)) == {f, Everyone(Name("G"), body), body, p}
    assert len(sub(f)) == 4 <= length(f)


def test_sub_of_proposition():
    assert sub(p) == [p]


def test_sub_plain():
    f = parse("K[1] p & q")
    assert set(sub(f)) == {f, Everyone(Agent(1), p), p, q}


def test_sub_plus_identifies_double_negation():
    f = Not(Not(p))
    assert Not(Not(Not(p))) not in sub_plus(f)
    assert set(sub_plus(f)) == {p, Not(p), Not(Not(p))}


def test_esub_member_adds_k():
    f = Everyone(frozenset({1, 2}), p)
    assert set(esub(f, 1)) == set(sub(f)) | {Everyone(frozenset({1}), p)}


def test_esub_non_member_unchanged():
    f = Everyone(frozenset({1, 2}), p)
    assert esub(f, 3) == sub(f)


def test_esub_nested():
    g = frozenset({1, 2})
    inner = Everyone(g, p)
    f = Everyone(g, inner)
    k = lambda x: Everyone(frozenset({1}), x)  # noqa: E731
    assert set(esub(f, 1)) == {f, inner, p, k(inner), k(p)}


def test_groups_of_examples(teams):
    assert set(groups_of(parse("E[TEAM1] p & C[TEAM2] q", teams))) == {Name("TEAM1"), Name("TEAM2")}
    assert groups_of(parse("K[3] p")) == [Agent(3)]
    assert groups_of(parse("p & q")) == []


# ---------------------------------------------------------------------------
# properties


@given(formulas())
def test_closure_size_bounds(f):
    n = length(f)
    assert len(sub(f)) <= n
    assert len(sub_plus(f)) <= 2 * n
    assert len(groups_of(f)) <= n


@given(formulas(groups=(frozenset({0}), frozenset({1}), frozenset({0, 1}))))
def test_esub_at_most_doubles(f):
    for agent in (0, 1, 2):
        assert len(esub(f, agent)) <= 2 * len(sub(f))


@given(formulas())
def test_pretty_parse_round_trip(f):
    assert parse(pretty(f)) == f


@given(formulas())
def test_sub_contains_every_subterm_once(f):
    s = sub(f)
    assert len(s) == len(set(s))
    assert f in s
