"""Independent reference implementations used as test oracles.

Everything here works on plain Python sets of integers and shares no code
with the package beyond the formula datatypes.
"""

from __future__ import annotations

from itertools import combinations

from ckdecide.formula import And, Common, Everyone, Formula, Not, Prop


def maximal_pairs(family) -> set[tuple[frozenset, frozenset]]:
    """R(family) by the literal definition, over every subfamily."""
    fam = list(dict.fromkeys(frozenset(g) for g in family))
    out = set()
    for g in fam:
        others = [h for h in fam if h != g]
        for r in range(len(others) + 1):
            for hs in combinations(others, r):
                rest = g - frozenset().union(*hs)
                if rest and all(not (rest - h) for h in others if h not in hs):
                    out.add((g, frozenset(hs)))
    return out


def maximal_pairs_by_point(family) -> set[tuple[frozenset, frozenset]]:
    """R(family) for large families.

    A G-maximal H is determined by any point x of its atom: H is exactly the
    members avoiding x. So the candidates {H : x not in H} for x in G are
    complete, and each is checked against the definition.
    """
    fam = list(dict.fromkeys(frozenset(g) for g in family))
    out = set()
    for g in fam:
        for x in g:
            hs = frozenset(h for h in fam if x not in h)
            rest = g - frozenset().union(*hs)
            if rest and all(not (rest - h) for h in fam if h not in hs and h != g):
                out.add((g, hs))
    return out


def _unions(family) -> set[frozenset]:
    out = {frozenset()}
    for h in family:
        out |= {u | h for u in out}
    return out


def j_closure(base, m: int) -> set[frozenset]:
    """J^m: J_{k+1} = J ∪ {G - ∪H : G in J, H ⊆ J_k, |G - ∪H| <= m}, to the fixpoint."""
    base = {frozenset(g) for g in base}
    cur = set(base)
    while True:
        nxt = set(base)
        for u in _unions(cur):
            for g in base:
                d = g - u
                if len(d) <= m:
                    nxt.add(d)
        assert cur <= nxt, "the J sequence must be increasing"
        if nxt == cur:
            return cur
        cur = nxt


def d_closure(base, m: int) -> tuple[set[frozenset], int]:
    """D^m: D_{i+1} = J ∪ {atoms of R(D_i) with at most m members}; returns (D^m, rounds that grew it)."""
    base = {frozenset(g) for g in base}
    cur = set(base)
    rounds = 0
    while True:
        atoms = {g - frozenset().union(*hs) for g, hs in maximal_pairs_by_point(cur)}
        nxt = base | {a for a in atoms if len(a) <= m}
        assert cur <= nxt, "the D sequence must be increasing"
        if nxt == cur:
            return cur, rounds
        cur = nxt
        rounds += 1


def overlap_classes(family) -> set[frozenset]:
    """Maximal subfamilies (as sets of indices) whose members share an element."""
    fam = [frozenset(g) for g in family]
    found = set()
    for r in range(1, len(fam) + 1):
        for idx in combinations(range(len(fam)), r):
            if frozenset.intersection(*[fam[i] for i in idx]):
                found.add(frozenset(idx))
    return {t for t in found if not any(t < u for u in found)}


def holds(model, s, f: Formula, members) -> bool:
    """Truth at ``s`` with C_G unfolded as the conjunction of E_G^k for k = 1..|S|.

    ``model`` is (states, valuation, relations); ``members(group)`` lists agents.
    """
    states, val, rel = model

    def ev(s, f):
        if isinstance(f, Prop):
            return f.name in val[s]
        if isinstance(f, Not):
            return not ev(s, f.child)
        if isinstance(f, And):
            return ev(s, f.left) and ev(s, f.right)
        if isinstance(f, Everyone):
            return all(ev(t, f.child) for a in members(f.group) for (u, t) in rel[a] if u == s)
        if isinstance(f, Common):
            g = f.child
            for _ in range(len(states)):
                g = Everyone(f.group, g)
                if not ev(s, g):
                    return False
            return True
        raise TypeError(f)

    return ev(s, f)
