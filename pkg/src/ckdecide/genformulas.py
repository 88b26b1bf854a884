"""Formula families whose satisfiability encodes questions about group sizes.

Each generator turns a group-size question into a formula of the language:

* ``phi_a``: is ``G0 - (G1 + ... + Gk)`` nonempty (every logic);
* ``phi_Gp`` / ``psi_G``: is a nested difference nonempty / of size at
  least two (S4, S5, KD45);
* ``psi_m`` / ``phi_m_Gp``: does a nested difference have more than ``m``
  members (S5, KD45);
* ``phi_d``: is an intersection of groups empty (KD45).

Nested differences are given as ``Nested`` trees, so the generator never has
to decide which subtracted sets are small. Fresh propositions come from a
``FreshPropPool`` and never repeat.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .formula import TRUE, Everyone, Formula, Not, Prop, conj, disj, iff, implies, pretty
from .setalgebra import GroupDesc, GroupTable, IntervalSet, Name, Universe, format_interval_set, minus_all


class NestingError(ValueError):
    """Malformed nesting annotation."""


class FreshPropPool:
    """Supply of propositions ``_g1, _g2, ...``; user propositions cannot start with an underscore."""

    def __init__(self, start: int = 1):
        if start < 1:
            raise ValueError("the pool starts after the reserved constant proposition")
        self._next = start
        self.issued: list[str] = []

    def fresh(self) -> Prop:
        name = f"_g{self._next}"
        self._next += 1
        self.issued.append(name)
        return Prop(name)

    def many(self, n: int) -> list[Prop]:
        return [self.fresh() for _ in range(n)]


@dataclass(frozen=True)
class Nested:
    """The group ``base - (minus[0] + minus[1] + ...)``.

    Entries of ``minus`` are plain descriptions or further ``Nested`` nodes.
    ``size`` is the declared cardinality of a nested node; ``phi_Gp`` needs
    nested members of size 1 and ``phi_m_Gp`` needs sizes between 1 and m.
    """

    base: GroupDesc
    minus: tuple = ()
    size: int | None = None

    def desc(self) -> GroupDesc:
        return minus_all(self.base, [m.desc() if isinstance(m, Nested) else m for m in self.minus])

    def depth(self) -> int:
        inner = [m.depth() for m in self.minus if isinstance(m, Nested)]
        return 1 + max(inner) if inner else 0

    def length(self) -> int:
        """Number of group names in the whole description."""
        return 1 + sum(m.length() if isinstance(m, Nested) else 1 for m in self.minus)


def _as_nested(g) -> Nested:
    if isinstance(g, Nested):
        return g
    if isinstance(g, GroupDesc):
        return Nested(g)
    raise NestingError(f"not a group or nesting annotation: {g!r}")


def _split(g: Nested) -> tuple[list[GroupDesc], list[Nested]]:
    if not isinstance(g.base, GroupDesc):
        raise NestingError(f"base of a nested group must be a group description, got {g.base!r}")
    plain, nested = [], []
    for m in g.minus:
        if isinstance(m, Nested):
            nested.append(m)
        elif isinstance(m, GroupDesc):
            plain.append(m)
        else:
            raise NestingError(f"subtracted entry is neither a group nor a nested node: {m!r}")
    return plain, nested


def phi_a(g0: GroupDesc, gs: Sequence[GroupDesc], pool: FreshPropPool | None = None) -> Formula:
    """¬E_{G0} p ∧ E_{G1} p ∧ ... ∧ E_{Gk} p; satisfiable iff G0 - ∪Gs is nonempty."""
    p = (pool or FreshPropPool()).fresh()
    return conj([Not(Everyone(g0, p))] + [Everyone(g, p) for g in gs])


def phi_Gp(g, pool: FreshPropPool, p: Prop | None = None) -> Formula:
    """Satisfiable (S4/S5/KD45) iff the nested difference ``g`` is nonempty.

    Nested members must have size 1; each gets its own fresh proposition and
    a disjoint recursive formula.
    """
    g = _as_nested(g)
    p = p if p is not None else pool.fresh()
    plain, nested = _split(g)
    if not nested:
        return conj([Not(Everyone(g.base, p))] + [Everyone(h, p) for h in plain])
    for h in nested:
        if h.size is not None and h.size != 1:
            raise NestingError("nested members of a nonemptiness instance must have size 1")
    inner = []
    outer = []
    for h in nested:
        pj = pool.fresh()
        inner.append(phi_Gp(h, pool, pj))
        outer.append(Everyone(h.base, pj))
    first = Not(Everyone(g.base, Not(conj([Not(p)] + inner))))
    return conj([first] + [Everyone(h, p) for h in plain] + outer)


def psi_G(g, pool: FreshPropPool) -> Formula:
    """φ_{G,p} ∧ E_{G'}(q ∧ (¬p ⇒ φ_{G,q})); satisfiable (S4/S5/KD45) iff |G| > 1."""
    g = _as_nested(g)
    p = pool.fresh()
    first = phi_Gp(g, pool, p)
    q = pool.fresh()
    second = phi_Gp(g, pool, q)
    return first & Everyone(g.base, q & implies(Not(p), second))


def psi_m(m: int, base: GroupDesc, gs: Sequence[GroupDesc], pool: FreshPropPool, p: Prop | None = None) -> Formula:
    """Satisfiable (S5/KD45) iff base - ∪gs has more than ``m`` members.

    The equivalence chain on the q's is taken exactly as displayed, ending
    with q_{m+1} ⇔ true.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    p = p if p is not None else pool.fresh()
    ps = pool.many(m + 2)
    qs = pool.many(m + 2)
    parts: list[Formula] = [Everyone(h, qs[0]) for h in gs]
    for i in range(1, m + 2):
        mark = conj([ps[i], qs[i]])
        parts.append(Not(Everyone(base, Not(conj([ps[0], mark, Everyone(base, implies(ps[0], mark))])))))
    chain: list[Formula] = [implies(ps[0], p & Not(qs[0]))]
    for i in range(1, m + 1):
        chain.append(iff(qs[i], Not(ps[i + 1]) & qs[i + 1]))
    chain.append(iff(qs[m + 1], TRUE))
    parts.append(Everyone(base, conj(chain)))
    return conj(parts)


def phi_m_Gp(m: int, g, pool: FreshPropPool, p: Prop | None = None) -> Formula:
    """Satisfiable (S5/KD45) iff the nested difference ``g`` has more than ``m`` members.

    A nested member of declared size ``m_j`` contributes φ_{m_j - 1, G_j, p},
    which makes every member of G_j consider p possible.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    g = _as_nested(g)
    p = p if p is not None else pool.fresh()
    plain, nested = _split(g)
    if not nested:
        return psi_m(m, g.base, plain, pool, p)
    for h in nested:
        if h.size is None or not 1 <= h.size <= max(m, 1):
            raise NestingError(f"nested member needs a declared size between 1 and {max(m, 1)}")
    p2 = pool.fresh()
    parts = [psi_m(m, g.base, plain, pool, p2)]
    parts += [phi_m_Gp(h.size - 1, h, pool, p) for h in nested]
    parts.append(Everyone(g.base, implies(p2, Everyone(g.base, Not(p)))))
    return conj(parts)


def phi_d(gs: Sequence[GroupDesc], pool: FreshPropPool | None = None) -> Formula:
    """E_{G1}p1 ∧ ... ∧ E_{G(k-1)}p(k-1) ∧ E_{Gk}(¬p1 ∨ ... ∨ ¬p(k-1)); KD45-satisfiable iff ∩Gs = ∅."""
    if len(gs) < 2:
        raise ValueError("need at least two groups")
    pool = pool or FreshPropPool()
    ps = pool.many(len(gs) - 1)
    return conj([Everyone(g, pi) for g, pi in zip(gs, ps)] + [Everyone(gs[-1], disj([Not(pi) for pi in ps]))])


# ---------------------------------------------------------------------------
# Random instances


def random_table(rng: random.Random, n_groups: int, universe: int, max_pieces: int = 2) -> GroupTable:
    """Groups ``G0, G1, ...`` made of random intervals inside ``[0, universe)``."""
    groups = {}
    for i in range(n_groups):
        s = IntervalSet()
        for _ in range(rng.randint(1, max_pieces)):
            lo = rng.randrange(universe)
            hi = rng.randint(lo + 1, min(universe, lo + max(2, universe // 2)))
            s = s | IntervalSet([(lo, hi)])
        groups[f"G{i}"] = s
    return GroupTable(groups, Universe(universe))


def random_nested(
    rng: random.Random,
    table: GroupTable,
    depth: int,
    inner_size: tuple[int, int] = (1, 1),
    max_minus: int = 2,
    tries: int = 200,
) -> Nested | None:
    """A random ``Nested`` tree over the table's names whose nested members have sizes in ``inner_size``.

    Returns None when no such tree turned up within ``tries`` attempts.
    """
    names = [Name(n) for n in table.names]
    lo, hi = inner_size

    def build(d: int) -> Nested:
        minus = []
        for _ in range(rng.randint(1 if d else 0, max_minus)):
            if d and rng.random() < 0.6:
                sub = attempt(d - 1)
                if sub is not None:
                    minus.append(sub)
                    continue
            minus.append(rng.choice(names))
        if d and not any(isinstance(m, Nested) for m in minus):
            sub = attempt(d - 1)
            if sub is None:
                raise _Retry
            minus.append(sub)
        return Nested(rng.choice(names), tuple(minus))

    def attempt(d: int) -> Nested | None:
        for _ in range(tries):
            try:
                h = build(d)
            except _Retry:
                continue
            size = table.eval(h.desc()).card()
            if lo <= size <= hi:
                return Nested(h.base, h.minus, size)
        return None

    for _ in range(tries):
        try:
            return build(depth)
        except _Retry:
            continue
    return None


class _Retry(Exception):
    pass


def problem_text(table: GroupTable, formulas: Sequence[tuple[str, Formula]]) -> str:
    """The instance in the problem-file format read by the command line."""
    u = table.universe
    lines = [f"universe {u}"]
    for name in table.names:
        lines.append(f"group {name} = {format_interval_set(table.group(name))}")
    for name, f in formulas:
        lines.append(f"formula {name}: {pretty(f)}")
    return "\n".join(lines) + "\n"
