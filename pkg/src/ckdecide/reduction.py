"""Maximal subfamilies, atoms, small-atom closures and the agent-alphabet translations.

Every map here replaces the groups of a formula by sets of synthesized agents
drawn from a finite alphabet, such that the translated formula is satisfiable
over the alphabet exactly when the original one is satisfiable over the real
(possibly infinite) universe. Set information is obtained only through the
table's oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

from .formula import Formula, groups_of, length, map_groups
from .setalgebra import GroupDesc, GroupTable, intersect_desc, minus_all

LOGICS = ("k", "t", "s4", "s5", "kd45")


class TranslationError(ValueError):
    pass


@dataclass(frozen=True)
class MaximalPair:
    """``group`` minus the union of ``subtracted`` is nonempty, and maximal so."""

    group: GroupDesc
    subtracted: frozenset[GroupDesc]

    def atom(self, order: Sequence[GroupDesc] | None = None) -> GroupDesc:
        hs = sorted(self.subtracted, key=_key) if order is None else [h for h in order if h in self.subtracted]
        return minus_all(self.group, hs)


def _key(d: GroupDesc) -> str:
    return str(d)


def canonical_family(ds: Iterable[GroupDesc]) -> list[GroupDesc]:
    out = []
    seen = set()
    for d in ds:
        if d not in seen:
            seen.add(d)
            out.append(d)
    return sorted(out, key=_key)


class _EmptinessMemo:
    """Memoized emptiness of ``family[g] - ∪{family[j] : j in mask}``."""

    def __init__(self, family: Sequence[GroupDesc], table: GroupTable):
        self.family = family
        self.table = table
        self.memo: dict[tuple[int, int], bool] = {}

    def nonempty(self, g: int, mask: int) -> bool:
        hit = self.memo.get((g, mask))
        if hit is None:
            hs = [self.family[j] for j in range(len(self.family)) if mask >> j & 1]
            hit = not self.table.is_empty(minus_all(self.family[g], hs))
            self.memo[(g, mask)] = hit
        return hit


def maximal_sets(family: Sequence[GroupDesc], table: GroupTable) -> list[MaximalPair]:
    """All pairs (G, H) with H a G-maximal subfamily.

    Subfamilies of ``family - {G}`` are explored depth first; emptiness is
    monotone under adding members, so supersets of an empty difference are
    never queried. At most |family|·2^(|family|-1) emptiness queries are made.
    """
    fam = canonical_family(family)
    n = len(fam)
    memo = _EmptinessMemo(fam, table)
    out: list[MaximalPair] = []
    for g in range(n):
        others = [j for j in range(n) if j != g]
        found: list[int] = []

        def grow(mask: int, start: int) -> None:
            # mask is known nonempty; try every extension, record if maximal
            maximal = True
            for pos, j in enumerate(others):
                if mask >> j & 1:
                    continue
                ext = mask | 1 << j
                if memo.nonempty(g, ext):
                    maximal = False
                    if pos >= start:
                        grow(ext, pos + 1)
            if maximal:
                found.append(mask)

        if memo.nonempty(g, 0):
            grow(0, 0)
        for mask in sorted(set(found)):
            hs = frozenset(fam[j] for j in range(n) if mask >> j & 1)
            out.append(MaximalPair(fam[g], hs))
    return out


def _distinct_subtracted(pairs: Sequence[MaximalPair]) -> list[frozenset[GroupDesc]]:
    seen: dict[frozenset[GroupDesc], None] = {}
    for p in pairs:
        seen.setdefault(p.subtracted, None)
    return list(seen)


# ---------------------------------------------------------------------------
# Small-atom closure


@dataclass
class Closure:
    """Fixpoint of adding every atom of size at most ``bound`` to the base family."""

    base: list[GroupDesc]
    extra: list[GroupDesc]
    bound: int
    iterations: int
    pairs: list[MaximalPair]

    @property
    def family(self) -> list[GroupDesc]:
        return self.base + self.extra


def _same_set(a: GroupDesc, b: GroupDesc, table: GroupTable) -> bool:
    return table.is_empty(minus_all(a, [b])) and table.is_empty(minus_all(b, [a]))


def closure_pairs(base: Sequence[GroupDesc], extra: Sequence[GroupDesc], table: GroupTable) -> list[MaximalPair]:
    """Maximal pairs of ``base + extra`` when ``extra`` consists of atoms over ``base``.

    Any maximal H then either contains all of ``extra`` (and G is in ``base``)
    or contains all of ``extra`` but one atom X, whose own maximal pair it is.
    So only 2^|base|·(|extra|+1) candidate subfamilies need checking.
    """
    family = list(base) + list(extra)
    nb = len(base)
    memo = _EmptinessMemo(family, table)
    full_extra = 0
    for j in range(nb, len(family)):
        full_extra |= 1 << j
    out: list[MaximalPair] = []
    seen: set[tuple[int, int]] = set()
    for x in [None, *range(nb, len(family))]:
        extra_mask = full_extra if x is None else full_extra & ~(1 << x)
        for bmask in range(1 << nb):
            h = bmask | extra_mask
            candidates = [g for g in range(nb) if not bmask >> g & 1]
            if x is not None:
                candidates.append(x)
            for g in candidates:
                if (g, h) in seen or h >> g & 1:
                    continue
                if not memo.nonempty(g, h):
                    continue
                if all(
                    not memo.nonempty(g, h | 1 << j)
                    for j in range(len(family))
                    if j != g and not h >> j & 1
                ):
                    seen.add((g, h))
                    hs = frozenset(family[j] for j in range(len(family)) if h >> j & 1)
                    out.append(MaximalPair(family[g], hs))
    order = {d: i for i, d in enumerate(family)}
    out.sort(key=lambda p: (order[p.group], sorted(order[d] for d in p.subtracted)))
    return out


def closure_D(base: Sequence[GroupDesc], m: int, table: GroupTable) -> Closure:
    """Iterate D_{i+1} = base ∪ {atoms of R(D_i) of size <= m} to its fixpoint."""
    base = canonical_family(base)
    extra: list[GroupDesc] = []
    iterations = 0
    while True:
        pairs = closure_pairs(base, extra, table)
        new_extra: list[GroupDesc] = list(extra)
        order = base + extra
        for p in pairs:
            a = p.atom(order)
            if table.card_gt(a, m):
                continue
            if any(_same_set(a, d, table) for d in base):
                continue
            # atoms over the base family are equal as soon as one contains the other
            if any(table.is_empty(minus_all(a, [d])) for d in new_extra):
                continue
            new_extra.append(a)
        if len(new_extra) == len(extra):
            return Closure(base, extra, m, iterations, pairs)
        extra = new_extra
        iterations += 1
        if iterations > len(base):
            raise TranslationError("closure did not stabilize within |base| rounds")


# ---------------------------------------------------------------------------
# Alphabets


@dataclass(frozen=True)
class AgentInfo:
    """A synthesized agent.

    ``kind`` is ``class`` for one agent standing for a whole atom, ``fresh``
    for one of the |atom| individual agents of a small atom, and ``overlap``
    for the KD45 classes of maximal overlapping subfamilies.
    """

    ident: int
    label: str
    kind: str
    subtracted: frozenset[GroupDesc]
    atom: GroupDesc
    index: int = 0


@dataclass
class TranslatedAlphabet:
    logic: str
    agents: list[AgentInfo]
    a1: frozenset[int]
    a2: frozenset[int]
    sigma: dict[GroupDesc, frozenset[int]]
    tau: dict[int, GroupDesc]
    family: list[GroupDesc]
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.agents)

    def translate(self, f: Formula) -> Formula:
        return map_groups(f, lambda g: self.sigma[g])

    def describe(self) -> list[str]:
        lines = [f"logic {self.logic}"]
        for a in self.agents:
            part = "A1" if a.ident in self.a1 else "A2" if a.ident in self.a2 else "-"
            lines.append(f"agent {a.ident} {part} {a.kind} {a.label} tau={self.tau[a.ident]}")
        for g in sorted(self.sigma, key=_key):
            ids = ",".join(str(i) for i in sorted(self.sigma[g]))
            lines.append(f"sigma {g} = {{{ids}}}")
        return lines


def _label(hs: frozenset[GroupDesc], order: Sequence[GroupDesc]) -> str:
    idx = [str(i) for i, d in enumerate(order) if d in hs]
    return "H{" + ",".join(idx) + "}"


def _intersection(ds: Sequence[GroupDesc]) -> GroupDesc:
    out = ds[0]
    for d in ds[1:]:
        out = intersect_desc(out, d)
    return out


def _class_alphabet(
    logic: str, family: list[GroupDesc], pairs: list[MaximalPair], targets: list[GroupDesc]
) -> tuple[list[AgentInfo], dict[GroupDesc, frozenset[int]], dict[int, GroupDesc]]:
    """One agent per distinct subtracted family; sigma(G) = classes whose family omits G."""
    agents: list[AgentInfo] = []
    tau: dict[int, GroupDesc] = {}
    first_pair: dict[frozenset[GroupDesc], MaximalPair] = {}
    for p in pairs:
        first_pair.setdefault(p.subtracted, p)
    for hs, p in first_pair.items():
        ident = len(agents)
        agents.append(AgentInfo(ident, _label(hs, family), "class", hs, p.atom(family)))
        tau[ident] = _intersection([d for d in family if d not in hs])
    sigma = {g: frozenset(a.ident for a in agents if g not in a.subtracted) for g in targets}
    return agents, sigma, tau


def sigma1(f: Formula, table: GroupTable) -> tuple[TranslatedAlphabet, Formula]:
    """Translation for K and T: one agent per atom of the formula's groups."""
    family = canonical_family(groups_of(f))
    before = table.counters()["O0"]
    pairs = maximal_sets(family, table)
    stats = {"o0_maximal": table.counters()["O0"] - before, "family": len(family)}
    agents, sigma, tau = _class_alphabet("k", family, pairs, family)
    alpha = TranslatedAlphabet("k", agents, frozenset(), frozenset(a.ident for a in agents), sigma, tau, family, stats)
    _check_sigma(alpha, family)
    return alpha, alpha.translate(f)


def sigma2(f: Formula, table: GroupTable) -> tuple[TranslatedAlphabet, Formula]:
    """Translation for S4: atoms of the size-1 closure; singleton atoms become A1 agents."""
    family = canonical_family(groups_of(f))
    clo = closure_D(family, 1, table)
    agents, sigma, tau = _class_alphabet("s4", clo.family, clo.pairs, family)
    a1 = frozenset(a.ident for a in agents if not table.card_gt(a.atom, 1))
    a2 = frozenset(a.ident for a in agents) - a1
    stats = {"family": len(family), "closure_iterations": clo.iterations, "closure_extra": len(clo.extra)}
    alpha = TranslatedAlphabet("s4", agents, a1, a2, sigma, tau, clo.family, stats)
    _check_sigma(alpha, family)
    return alpha, alpha.translate(f)


def _exact_small_size(atom: GroupDesc, bound: int, table: GroupTable) -> int:
    k = 1
    while k < bound and table.card_gt(atom, k):
        k += 1
    return k


def _fresh_alphabet(f: Formula, table: GroupTable, logic: str):
    family = canonical_family(groups_of(f))
    n = length(f)
    clo = closure_D(family, n, table)
    order = clo.family
    first_pair: dict[frozenset[GroupDesc], MaximalPair] = {}
    for p in clo.pairs:
        first_pair.setdefault(p.subtracted, p)
    agents: list[AgentInfo] = []
    tau: dict[int, GroupDesc] = {}
    a1: set[int] = set()
    a2: set[int] = set()
    for hs, p in first_pair.items():
        atom = p.atom(order)
        label = _label(hs, order)
        if table.card_gt(atom, n):
            ident = len(agents)
            agents.append(AgentInfo(ident, label, "class", hs, atom))
            tau[ident] = _intersection([d for d in order if d not in hs])
            a2.add(ident)
        else:
            for j in range(_exact_small_size(atom, n, table)):
                ident = len(agents)
                agents.append(AgentInfo(ident, f"{label}#{j}", "fresh", hs, atom, j))
                tau[ident] = atom
                a1.add(ident)
    sigma = {g: frozenset(a.ident for a in agents if g not in a.subtracted) for g in family}
    stats = {"family": len(family), "closure_iterations": clo.iterations, "closure_extra": len(clo.extra)}
    return family, order, agents, tau, a1, a2, sigma, stats, first_pair


def sigma3(f: Formula, table: GroupTable) -> tuple[TranslatedAlphabet, Formula]:
    """Translation for S5: small atoms split into individual fresh agents (A1), large ones kept whole (A2)."""
    family, order, agents, tau, a1, a2, sigma, stats, _ = _fresh_alphabet(f, table, "s5")
    alpha = TranslatedAlphabet("s5", agents, frozenset(a1), frozenset(a2), sigma, tau, order, stats)
    _check_sigma(alpha, family)
    return alpha, alpha.translate(f)


def overlap_classes(family: Sequence[GroupDesc], table: GroupTable) -> list[tuple[GroupDesc, ...]]:
    """Maximal subfamilies with a nonempty common intersection (intersection oracle only)."""
    fam = list(family)
    n = len(fam)
    nonempty: list[tuple[int, ...]] = []
    memo: dict[tuple[int, ...], bool] = {}

    def ok(idx: tuple[int, ...]) -> bool:
        if idx not in memo:
            memo[idx] = not table.intersection_empty([fam[i] for i in idx])
        return memo[idx]

    def grow(idx: tuple[int, ...]) -> None:
        nonempty.append(idx)
        for j in range((idx[-1] + 1) if idx else 0, n):
            ext = idx + (j,)
            if ok(ext):
                grow(ext)

    for j in range(n):
        if ok((j,)):
            grow((j,))
    sets = [frozenset(t) for t in nonempty]
    maximal = [t for t in sets if not any(t < u for u in sets)]
    return [tuple(fam[i] for i in sorted(t)) for t in sorted(maximal, key=lambda t: sorted(t))]


def sigma4(f: Formula, table: GroupTable) -> tuple[TranslatedAlphabet, Formula]:
    """Translation for KD45: the S5 alphabet plus one A1 agent per uncovered maximal overlap."""
    family, order, agents, tau, a1, a2, sigma, stats, first_pair = _fresh_alphabet(f, table, "kd45")
    atoms = [p.atom(order) for p in first_pair.values()]
    extra = 0
    for cls in overlap_classes(family, table):
        if all(table.intersection_empty([*cls, a]) for a in atoms):
            ident = len(agents)
            label = "T{" + ",".join(str(order.index(d)) for d in cls) + "}"
            common = _intersection(list(cls))
            agents.append(AgentInfo(ident, label, "overlap", frozenset(d for d in family if d not in cls), common))
            tau[ident] = common
            a1.add(ident)
            extra += 1
            for g in cls:
                sigma[g] = sigma[g] | {ident}
    stats["overlap_classes"] = extra
    alpha = TranslatedAlphabet("kd45", agents, frozenset(a1), frozenset(a2), sigma, tau, order, stats)
    _check_sigma(alpha, family)
    return alpha, alpha.translate(f)


def _check_sigma(alpha: TranslatedAlphabet, family: Sequence[GroupDesc]) -> None:
    for g in family:
        if not alpha.sigma[g]:
            raise TranslationError(f"group {g} has no agents in the translated alphabet")


def translate(f: Formula, table: GroupTable, logic: str) -> tuple[TranslatedAlphabet, Formula]:
    """Pick the translation matching ``logic``; T reuses the K alphabet."""
    if logic in ("k", "t"):
        alpha, g = sigma1(f, table)
        alpha.logic = logic
        return alpha, g
    if logic == "s4":
        return sigma2(f, table)
    if logic == "s5":
        return sigma3(f, table)
    if logic == "kd45":
        return sigma4(f, table)
    raise TranslationError(f"unknown logic {logic!r}")


def all_subfamilies(family: Sequence[GroupDesc]) -> Iterable[tuple[GroupDesc, ...]]:
    for r in range(len(family) + 1):
        yield from combinations(family, r)
