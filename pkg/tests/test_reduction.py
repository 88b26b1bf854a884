import pytest

from oracles import d_closure, maximal_pairs, overlap_classes as overlap_oracle
from ckdecide.formula import Everyone, Not, Prop, conj, length, parse
from ckdecide.reduction import (
    TranslationError,
    closure_D,
    maximal_sets,
    overlap_classes,
    sigma1,
    sigma2,
    sigma3,
    sigma4,
    translate,
)
from ckdecide.setalgebra import GroupTable, IntervalSet, Name, Universe

p = Prop("p")


def ext(table, d):
    return frozenset(table.eval(d).elements())


def pairs_ext(table, pairs):
    return {(ext(table, pr.group), frozenset(ext(table, h) for h in pr.subtracted)) for pr in pairs}


def mentions(*names):
    """A formula whose group set is exactly ``names``."""
    return conj([Everyone(Name(n), p) for n in names])


@pytest.fixture
def overlap12():
    return GroupTable({"G1": IntervalSet.from_elements({1, 2}), "G2": IntervalSet.from_elements({2, 3})}, Universe(5))


@pytest.fixture
def abc():
    return GroupTable({"A": IntervalSet([(0, 4)]), "B": IntervalSet([(2, 6)]), "C": IntervalSet((), 0)})


# ---------------------------------------------------------------------------
# maximal sets


def test_maximal_sets_two_overlapping(overlap12):
    got = maximal_sets([Name("G1"), Name("G2")], overlap12)
    assert pairs_ext(overlap12, got) == maximal_pairs([{1, 2}, {2, 3}])
    assert {ext(overlap12, pr.atom()) for pr in got} == {frozenset({1}), frozenset({3})}


def test_maximal_sets_with_cofinite_member(abc):
    got = maximal_sets([Name("A"), Name("B"), Name("C")], abc)
    shape = {(pr.group.name, frozenset(h.name for h in pr.subtracted)) for pr in got}
    assert shape == {("A", frozenset("B")), ("B", frozenset("A")), ("C", frozenset("AB"))}
    atoms = {abc.eval(pr.atom()) for pr in got}
    assert atoms == {IntervalSet([(0, 2)]), IntervalSet([(4, 6)]), IntervalSet((), 6)}


def test_maximal_sets_singleton_family(abc):
    (pr,) = maximal_sets([Name("C")], abc)
    assert pr.group == Name("C") and pr.subtracted == frozenset()


def test_maximal_sets_query_budget(abc):
    fam = [Name("A"), Name("B"), Name("C")]
    abc.reset_counters()
    maximal_sets(fam, abc)
    assert abc.counters()["O0"] <= len(fam) * 2 ** (len(fam) - 1)


# ---------------------------------------------------------------------------
# closure


def test_closure_m0_adds_nothing(overlap12):
    clo = closure_D([Name("G1"), Name("G2")], 0, overlap12)
    assert clo.extra == [] and clo.iterations == 0


def test_closure_m1_reaches_the_middle_atom(overlap12):
    clo = closure_D([Name("G1"), Name("G2")], 1, overlap12)
    assert {ext(overlap12, d) for d in clo.extra} == {frozenset({1}), frozenset({2}), frozenset({3})}
    expected, rounds = d_closure([{1, 2}, {2, 3}], 1)
    assert {ext(overlap12, d) for d in clo.family} == expected
    assert clo.iterations == rounds == 2


def test_closure_full_universe_finds_every_atom():
    t = GroupTable({"X": IntervalSet([(0, 6)]), "Y": IntervalSet([(3, 9)]), "Z": IntervalSet([(5, 12)])}, Universe(12))
    clo = closure_D([Name("X"), Name("Y"), Name("Z")], 12, t)
    expected, _ = d_closure([range(0, 6), range(3, 9), range(5, 12)], 12)
    assert {ext(t, d) for d in clo.family} == expected


# ---------------------------------------------------------------------------
# sigma1


def test_sigma1_two_groups(overlap12):
    alpha, g = sigma1(mentions("G1", "G2"), overlap12)
    by_sub = {frozenset(h.name for h in a.subtracted): a.ident for a in alpha.agents}
    assert set(by_sub) == {frozenset({"G2"}), frozenset({"G1"})}
    assert alpha.sigma[Name("G1")] == {by_sub[frozenset({"G2"})]}
    assert alpha.sigma[Name("G2")] == {by_sub[frozenset({"G1"})]}
    assert ext(overlap12, alpha.tau[by_sub[frozenset({"G2"})]]) == {1, 2}
    assert ext(overlap12, alpha.tau[by_sub[frozenset({"G1"})]]) == {2, 3}
    assert length(g) == length(mentions("G1", "G2"))


def test_sigma1_single_group(abc):
    alpha, _ = sigma1(mentions("A"), abc)
    (a,) = alpha.agents
    assert a.subtracted == frozenset() and alpha.sigma[Name("A")] == {a.ident}


def test_sigma1_covering_group(abc):
    alpha, _ = sigma1(mentions("A", "B", "C"), abc)
    c = alpha.sigma[Name("C")]
    assert {frozenset(h.name for h in alpha.agents[i].subtracted) for i in c} == {
        frozenset("B"),
        frozenset("A"),
        frozenset("AB"),
    }
    union = IntervalSet()
    for i in c:
        union = union | abc.eval(alpha.tau[i])
    assert union == abc.eval(Name("C"))


def test_translation_length_preserved(abc):
    f = parse("C[A] E[B - A] p & ~K[3] E[C] q", abc)
    for logic in ("k", "t", "s4", "s5", "kd45"):
        _, g = translate(f, abc, logic)
        assert length(g) == length(f)


def test_unknown_logic(abc):
    with pytest.raises(TranslationError):
        translate(p, abc, "s7")


# ---------------------------------------------------------------------------
# sigma2


def test_sigma2_singleton_group_is_named():
    t = GroupTable({"G": IntervalSet([(4, 5)])})
    alpha, _ = sigma2(mentions("G"), t)
    assert len(alpha.a1) == 1 and not alpha.a2


def test_sigma2_large_group_is_a_class():
    t = GroupTable({"G": IntervalSet([(4, 6)])})
    alpha, _ = sigma2(mentions("G"), t)
    assert len(alpha.a2) == 1 and not alpha.a1


def test_sigma2_overlap_all_named(overlap12):
    alpha, _ = sigma2(mentions("G1", "G2"), overlap12)
    atoms = {ext(overlap12, alpha.agents[i].atom) for i in alpha.a1}
    assert atoms == {frozenset({1}), frozenset({2}), frozenset({3})}
    assert not alpha.a2
    assert alpha.stats["closure_iterations"] == 2


# ---------------------------------------------------------------------------
# sigma3 / sigma4


def test_sigma3_small_group_gets_fresh_agents():
    t = GroupTable({"G": IntervalSet([(7, 10)])})
    f = mentions("G") & Not(Everyone(Name("G"), Prop("q")))
    assert length(f) >= 3
    alpha, _ = sigma3(f, t)
    assert len(alpha.a1) == 3 and not alpha.a2
    assert alpha.sigma[Name("G")] == alpha.a1
    assert {a.kind for a in alpha.agents} == {"fresh"}


def test_sigma3_infinite_group_is_one_class():
    t = GroupTable({"G": IntervalSet((), 7)})
    alpha, _ = sigma3(mentions("G"), t)
    assert len(alpha.a2) == 1 and not alpha.a1


def test_sigma3_classes_are_large(abc):
    f = parse("E[A] p & ~E[B] p & C[C] q", abc)
    alpha, _ = sigma3(f, abc)
    n = length(f)
    assert all(abc.card_gt(alpha.agents[i].atom, n) for i in alpha.a2)
    assert all(not abc.card_gt(alpha.agents[i].atom, n) for i in alpha.a1)


def _kd45_instance(g1, g2, size=None):
    t = GroupTable({"G1": g1, "G2": g2}, Universe(size) if size else None)
    return t, parse("~p & E[G1] p & E[G2] p", t)


def test_sigma4_adds_overlap_class():
    t, f = _kd45_instance(IntervalSet([(0, 20)]), IntervalSet([(10, 30)]))
    alpha, _ = sigma4(f, t)
    (o,) = [a for a in alpha.agents if a.kind == "overlap"]
    assert o.ident in alpha.a1
    assert o.ident in alpha.sigma[Name("G1")] and o.ident in alpha.sigma[Name("G2")]
    assert t.eval(o.atom) == IntervalSet([(10, 20)])


def test_sigma4_disjoint_groups_add_nothing():
    t, f = _kd45_instance(IntervalSet([(0, 20)]), IntervalSet([(30, 50)]))
    alpha, _ = sigma4(f, t)
    assert alpha.stats["overlap_classes"] == 0
    assert set(overlap_classes([Name("G1"), Name("G2")], t)) == {(Name("G1"),), (Name("G2"),)}


def test_sigma4_single_group_adds_nothing():
    t = GroupTable({"G": IntervalSet([(0, 20)])})
    alpha, _ = sigma4(mentions("G"), t)
    assert alpha.stats["overlap_classes"] == 0


@pytest.mark.parametrize(
    "sets",
    [
        [range(0, 6), range(3, 9), range(5, 12)],
        [range(0, 3), range(3, 6), range(1, 5)],
        [range(0, 12), range(2, 4), range(8, 10)],
    ],
)
def test_overlap_classes_match_oracle(sets):
    t = GroupTable({f"G{i}": IntervalSet.from_elements(s) for i, s in enumerate(sets)}, Universe(12))
    fam = [Name(f"G{i}") for i in range(len(sets))]
    got = {frozenset(int(d.name[1:]) for d in cls) for cls in overlap_classes(fam, t)}
    assert got == overlap_oracle(sets)
