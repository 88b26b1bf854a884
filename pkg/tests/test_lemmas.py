"""Lemma-level properties of atoms, translations and closures.

Runnable on its own: ``pytest tests/test_lemmas.py``. Every check is
extensional, through ``GroupTable.eval`` or plain Python sets.
"""

from hypothesis import given
from hypothesis import strategies as st

from oracles import d_closure, j_closure, maximal_pairs, maximal_pairs_by_point
from ckdecide.formula import Everyone, Not, Prop, conj, length
from ckdecide.reduction import closure_D, maximal_sets, translate
from ckdecide.setalgebra import GroupTable, IntervalSet, Name, Universe

p = Prop("p")


@st.composite
def finite_families(draw, max_groups=4, max_universe=12):
    u = draw(st.integers(2, max_universe))
    n = draw(st.integers(1, max_groups))
    masks = draw(st.lists(st.integers(1, (1 << u) - 1), min_size=n, max_size=n))
    sets = [frozenset(x for x in range(u) if m >> x & 1) for m in masks]
    table = GroupTable({f"G{i}": IntervalSet.from_elements(s) for i, s in enumerate(sets)}, Universe(u))
    return table, [Name(f"G{i}") for i in range(n)], sets


@st.composite
def infinite_families(draw, max_groups=4):
    n = draw(st.integers(1, max_groups))
    groups = {}
    for i in range(n):
        pieces = draw(st.lists(st.tuples(st.integers(0, 30), st.integers(1, 8)), max_size=3))
        tail = draw(st.one_of(st.none(), st.integers(0, 40)))
        s = IntervalSet([(a, a + w) for a, w in pieces], tail)
        if s.is_empty():
            s = IntervalSet((), 35)
        groups[f"G{i}"] = s
    return GroupTable(groups), [Name(f"G{i}") for i in range(n)]


def formula_over(names, padding: int):
    """Mentions exactly ``names``; ``padding`` extra negations raise the length."""
    f = conj([Everyone(g, p) for g in names])
    for _ in range(padding):
        f = Not(Not(f))
    return f


def extensional(table, d):
    return table.eval(d)


# ---------------------------------------------------------------------------
# atoms


@given(finite_families(max_groups=5))
def test_maximal_sets_match_definition(fam):
    table, names, sets = fam
    got = {
        (frozenset(table.eval(pr.group).elements()), frozenset(frozenset(table.eval(h).elements()) for h in pr.subtracted))
        for pr in maximal_sets(names, table)
    }
    # names with equal extensions collapse to one member of the oracle's family
    assert got == maximal_pairs(sets) == maximal_pairs_by_point(sets)


@given(st.one_of(finite_families(max_groups=5).map(lambda t: t[:2]), infinite_families()))
def test_atoms_depend_only_on_the_subtracted_family(fam):
    table, names = fam
    pairs = maximal_sets(names, table)
    atom_of = {}
    for pr in pairs:
        a = extensional(table, pr.atom())
        assert not a.is_empty()
        assert atom_of.setdefault(pr.subtracted, a) == a
    atoms = list(atom_of.values())
    for i in range(len(atoms)):
        for j in range(i + 1, len(atoms)):
            assert (atoms[i] & atoms[j]).is_empty()


# ---------------------------------------------------------------------------
# translations


def _check_translation(table, names, f, logic):
    alpha, _ = translate(f, table, logic)
    for g in names:
        ids = alpha.sigma[g]
        assert ids, f"sigma({g}) is empty"
        union = IntervalSet()
        for i in ids:
            union = union | extensional(table, alpha.tau[i])
        assert union == extensional(table, g), f"union of tau over sigma({g})"
    for a in alpha.agents:
        tau = extensional(table, alpha.tau[a.ident])
        assert not tau.is_empty()
        assert (extensional(table, a.atom) - tau).is_empty()
    for g in names:
        for h in names:
            if alpha.sigma[g] == alpha.sigma[h]:
                assert extensional(table, g) == extensional(table, h)
    return alpha


@given(
    st.one_of(finite_families().map(lambda t: t[:2]), infinite_families()),
    st.sampled_from(["k", "t", "s4", "s5", "kd45"]),
    st.integers(0, 4),
)
def test_translation_covers_each_group_exactly(fam, logic, padding):
    table, names = fam
    _check_translation(table, names, formula_over(names, padding), logic)


@given(st.one_of(finite_families().map(lambda t: t[:2]), infinite_families()), st.integers(0, 6))
def test_class_agents_stand_for_large_atoms(fam, padding):
    table, names = fam
    f = formula_over(names, padding)
    n = length(f)
    for logic in ("s5", "kd45"):
        alpha, _ = translate(f, table, logic)
        for i in alpha.a2:
            assert table.card_gt(alpha.agents[i].atom, n)
        fresh = [a for a in alpha.agents if a.kind == "fresh"]
        for a in fresh:
            assert not table.card_gt(a.atom, n)
            size = table.eval(a.atom).card()
            assert sum(1 for b in fresh if b.subtracted == a.subtracted) == size


@given(st.one_of(finite_families().map(lambda t: t[:2]), infinite_families()))
def test_k_alphabet_query_and_size_budget(fam):
    table, names = fam
    f = formula_over(names, 0)
    n = length(f)
    table.reset_counters()
    alpha, _ = translate(f, table, "k")
    assert alpha.size <= 2**n
    assert alpha.stats["o0_maximal"] <= n * 2**n
    assert alpha.stats["o0_maximal"] <= len(names) * 2 ** (len(names) - 1)


# ---------------------------------------------------------------------------
# closures


@given(finite_families(max_groups=4, max_universe=12), st.integers(0, 3))
def test_closure_agrees_with_the_direct_definition(fam, m):
    table, names, sets = fam
    clo = closure_D(names, m, table)
    assert clo.iterations <= len(set(sets))
    ext = lambda d: frozenset(table.eval(d).elements())  # noqa: E731
    dfam = {ext(d) for d in clo.family}
    expected, rounds = d_closure(sets, m)
    assert dfam == expected
    assert clo.iterations == rounds
    ours = {(ext(pr.group), frozenset(ext(h) for h in pr.subtracted)) for pr in clo.pairs}
    assert ours == maximal_pairs_by_point(dfam)
    assert len({pr.subtracted for pr in clo.pairs}) <= 2 ** len(set(sets))


@given(finite_families(max_groups=4, max_universe=12), st.integers(0, 3))
def test_small_atom_closure_matches_the_full_closure(fam, m):
    """R over the small-atom closure is R over J^m restricted to it, with the same atoms."""
    table, names, sets = fam
    clo = closure_D(names, m, table)
    ext = lambda d: frozenset(table.eval(d).elements())  # noqa: E731
    dfam = {ext(d) for d in clo.family}
    jm = j_closure(sets, m) - {frozenset()}
    assert dfam <= jm
    r_d = maximal_pairs_by_point(dfam)
    r_j = maximal_pairs_by_point(jm)
    restricted = {(g, frozenset(h for h in hs if h in dfam)) for g, hs in r_j if g in dfam}
    assert restricted == r_d
    atoms = lambda r: {g - frozenset().union(*hs) for g, hs in r}  # noqa: E731
    assert atoms(r_d) == atoms(r_j)
