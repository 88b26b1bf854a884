"""Group descriptions over an integer agent universe and the two oracles.

Agents are natural numbers. A universe is either all of N or a finite
prefix {0..N-1}. Named groups are stored as ``IntervalSet`` values; derived
groups are described symbolically with union and difference only, and the
solver learns about them exclusively through ``card_gt`` (the threshold
oracle) and ``intersection_empty`` (the intersection oracle).
"""

from __future__ import annotations

import math
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence


class SetAlgebraError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Interval sets


class IntervalSet:
    """Finite union of half-open intervals over N, optionally with a cofinite tail.

    Canonical form: intervals sorted, non-empty, pairwise non-adjacent; the
    tail start (if any) lies strictly after the last interval end.
    """

    __slots__ = ("intervals", "tail", "_hash")

    def __init__(self, intervals: Iterable[tuple[int, int]] = (), tail: int | None = None):
        pieces = sorted((int(a), int(b)) for a, b in intervals if b > a)
        merged: list[list[int]] = []
        for a, b in pieces:
            if a < 0:
                raise SetAlgebraError(f"negative agent bound {a}")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        if tail is not None:
            tail = int(tail)
            if tail < 0:
                raise SetAlgebraError(f"negative agent bound {tail}")
            while merged and merged[-1][1] >= tail:
                tail = min(tail, merged[-1][0])
                merged.pop()
        self.intervals: tuple[tuple[int, int], ...] = tuple((a, b) for a, b in merged)
        self.tail = tail
        self._hash = hash((self.intervals, self.tail))

    @classmethod
    def from_elements(cls, elements: Iterable[int]) -> "IntervalSet":
        return cls((x, x + 1) for x in elements)

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls()

    @classmethod
    def everything(cls) -> "IntervalSet":
        return cls((), 0)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, IntervalSet)
            and self.intervals == other.intervals
            and self.tail == other.tail
        )

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        parts = [f"[{a},{b})" for a, b in self.intervals]
        if self.tail is not None:
            parts.append(f"[{self.tail},inf)")
        return "IntervalSet(" + (" + ".join(parts) if parts else "{}") + ")"

    def is_empty(self) -> bool:
        return not self.intervals and self.tail is None

    def card(self) -> float | int:
        if self.tail is not None:
            return math.inf
        return sum(b - a for a, b in self.intervals)

    def __contains__(self, x: int) -> bool:
        if self.tail is not None and x >= self.tail:
            return True
        return any(a <= x < b for a, b in self.intervals)

    def elements(self) -> list[int]:
        if self.tail is not None:
            raise SetAlgebraError("cannot enumerate a cofinite set")
        return [x for a, b in self.intervals for x in range(a, b)]

    def _bounds(self) -> list[tuple[int, float]]:
        out: list[tuple[int, float]] = list(self.intervals)
        if self.tail is not None:
            out.append((self.tail, math.inf))
        return out

    @staticmethod
    def _from_bounds(bounds: list[tuple[int, float]]) -> "IntervalSet":
        finite = [(a, int(b)) for a, b in bounds if b != math.inf]
        tails = [a for a, b in bounds if b == math.inf]
        return IntervalSet(finite, min(tails) if tails else None)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return self._from_bounds(self._bounds() + other._bounds())

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        xs, ys = self._bounds(), other._bounds()
        i = j = 0
        while i < len(xs) and j < len(ys):
            a = max(xs[i][0], ys[j][0])
            b = min(xs[i][1], ys[j][1])
            if a < b:
                out.append((a, b))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        return self._from_bounds(out)

    def complement(self) -> "IntervalSet":
        out: list[tuple[int, float]] = []
        pos = 0
        for a, b in self._bounds():
            if a > pos:
                out.append((pos, a))
            pos = b
        if pos != math.inf:
            out.append((int(pos), math.inf))
        return self._from_bounds(out)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        return self.intersection(other.complement())

    __or__ = union
    __and__ = intersection
    __sub__ = difference


class BitSet:
    """Finite set of agents in {0..n-1} stored as an int bitmask.

    Used to cross-check ``IntervalSet`` arithmetic on finite universes.
    """

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0):
        self.n = n
        self.bits = bits & ((1 << n) - 1)

    @classmethod
    def from_elements(cls, n: int, elements: Iterable[int]) -> "BitSet":
        bits = 0
        for x in elements:
            if 0 <= x < n:
                bits |= 1 << x
        return cls(n, bits)

    @classmethod
    def from_interval_set(cls, n: int, s: IntervalSet) -> "BitSet":
        bits = 0
        for a, b in s.intervals:
            for x in range(a, min(b, n)):
                bits |= 1 << x
        if s.tail is not None:
            for x in range(s.tail, n):
                bits |= 1 << x
        return cls(n, bits)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitSet) and (self.n, self.bits) == (other.n, other.bits)

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __repr__(self) -> str:
        return f"BitSet({self.n}, {self.elements()})"

    def union(self, other: "BitSet") -> "BitSet":
        return BitSet(self.n, self.bits | other.bits)

    def intersection(self, other: "BitSet") -> "BitSet":
        return BitSet(self.n, self.bits & other.bits)

    def difference(self, other: "BitSet") -> "BitSet":
        return BitSet(self.n, self.bits & ~other.bits)

    def complement(self) -> "BitSet":
        return BitSet(self.n, ~self.bits)

    def is_empty(self) -> bool:
        return self.bits == 0

    def card(self) -> int:
        return bin(self.bits).count("1")

    def elements(self) -> list[int]:
        return [x for x in range(self.n) if self.bits >> x & 1]

    def to_interval_set(self) -> IntervalSet:
        return IntervalSet.from_elements(self.elements())


# ---------------------------------------------------------------------------
# Descriptions


class GroupDesc:
    """Symbolic group: a name, a literal agent, or a union/difference of descriptions."""

    __slots__ = ()

    def leaves(self) -> Iterable["GroupDesc"]:
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Name(GroupDesc):
    name: str

    def leaves(self):
        yield self

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, eq=True)
class Agent(GroupDesc):
    """Singleton group holding one literal agent, as written in ``K[3]``."""

    agent: int

    def leaves(self):
        yield self

    def __str__(self) -> str:
        return str(self.agent)


@dataclass(frozen=True, eq=True)
class Union(GroupDesc):
    left: GroupDesc
    right: GroupDesc
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("U", self.left, self.right)))

    def __hash__(self) -> int:
        return self._hash

    def leaves(self):
        yield from self.left.leaves()
        yield from self.right.leaves()

    def __str__(self) -> str:
        return f"{self.left} + {_wrap(self.right)}"


@dataclass(frozen=True, eq=True)
class Diff(GroupDesc):
    left: GroupDesc
    right: GroupDesc
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("D", self.left, self.right)))

    def __hash__(self) -> int:
        return self._hash

    def leaves(self):
        yield from self.left.leaves()
        yield from self.right.leaves()

    def __str__(self) -> str:
        return f"{self.left} - {_wrap(self.right)}"


def _wrap(d: GroupDesc) -> str:
    return f"({d})" if isinstance(d, (Union, Diff)) else str(d)


def desc_length(d: GroupDesc) -> int:
    """Number of name (or literal agent) occurrences in the description."""
    return sum(1 for _ in d.leaves())


def union_of(ds: Sequence[GroupDesc]) -> GroupDesc | None:
    """Left-folded union; ``None`` stands for the empty union."""
    out: GroupDesc | None = None
    for d in ds:
        out = d if out is None else Union(out, d)
    return out


def minus_all(g: GroupDesc, hs: Sequence[GroupDesc]) -> GroupDesc:
    """The description ``g - (h1 + h2 + ...)``; just ``g`` when ``hs`` is empty."""
    u = union_of(hs)
    return g if u is None else Diff(g, u)


def intersect_desc(a: GroupDesc, b: GroupDesc) -> GroupDesc:
    """a ∩ b written with difference only."""
    return Diff(a, Diff(a, b))


# ---------------------------------------------------------------------------
# Universe and table


@dataclass(frozen=True)
class Universe:
    size: int | None = None  # None means all of N

    @property
    def is_finite(self) -> bool:
        return self.size is not None

    def full(self) -> IntervalSet:
        return IntervalSet.everything() if self.size is None else IntervalSet([(0, self.size)])

    def __str__(self) -> str:
        return "nat" if self.size is None else f"finite {self.size}"


class GroupTable:
    """Named groups plus the cardinality oracle O_m and the intersection oracle O'.

    ``card_gt`` and ``intersection_empty`` are the only entry points the
    solver uses; each call bumps a counter. ``eval`` is exposed for tests and
    for validation of inline literals.
    """

    def __init__(self, groups: dict[str, IntervalSet] | None = None, universe: Universe | None = None):
        self.universe = universe or Universe()
        self._groups: dict[str, IntervalSet] = {}
        self._memo: dict[GroupDesc, IntervalSet] = {}
        self._lock = threading.Lock()
        self.o_queries = 0
        self.o_prime_queries = 0
        self.o_by_threshold: Counter[int] = Counter()
        for name, s in (groups or {}).items():
            self.declare(name, s)

    def declare(self, name: str, s: IntervalSet) -> None:
        if name in self._groups:
            raise SetAlgebraError(f"group {name!r} declared twice")
        s = s & self.universe.full()
        if s.is_empty():
            raise SetAlgebraError(f"group {name!r} is empty")
        self._groups[name] = s

    @property
    def names(self) -> list[str]:
        return sorted(self._groups)

    def __contains__(self, name: str) -> bool:
        return name in self._groups

    def group(self, name: str) -> IntervalSet:
        return self._groups[name]

    def eval(self, d: GroupDesc) -> IntervalSet:
        hit = self._memo.get(d)
        if hit is not None:
            return hit
        if isinstance(d, Name):
            try:
                out = self._groups[d.name]
            except KeyError:
                raise SetAlgebraError(f"undeclared group {d.name!r}") from None
        elif isinstance(d, Agent):
            out = IntervalSet([(d.agent, d.agent + 1)]) & self.universe.full()
        elif isinstance(d, Union):
            out = self.eval(d.left) | self.eval(d.right)
        elif isinstance(d, Diff):
            out = self.eval(d.left) - self.eval(d.right)
        else:
            raise SetAlgebraError(f"not a group description: {d!r}")
        with self._lock:
            self._memo[d] = out
        return out

    def card_gt(self, d: GroupDesc, k: int) -> bool:
        """Oracle O_m: is |d| > k?"""
        with self._lock:
            self.o_queries += 1
            self.o_by_threshold[k] += 1
        return self.eval(d).card() > k

    def is_empty(self, d: GroupDesc) -> bool:
        return not self.card_gt(d, 0)

    def intersection_empty(self, ds: Sequence[GroupDesc]) -> bool:
        """Oracle O': is the intersection of the given groups empty?"""
        if not ds:
            raise SetAlgebraError("intersection of an empty family")
        with self._lock:
            self.o_prime_queries += 1
        acc = self.eval(ds[0])
        for d in ds[1:]:
            acc = acc & self.eval(d)
        return acc.is_empty()

    def counters(self) -> dict[str, int]:
        return {"O": self.o_queries, "O'": self.o_prime_queries, "O0": self.o_by_threshold[0]}

    def reset_counters(self) -> None:
        with self._lock:
            self.o_queries = 0
            self.o_prime_queries = 0
            self.o_by_threshold.clear()


# ---------------------------------------------------------------------------
# Interval expressions as written in problem files


def parse_interval_expr(text: str) -> IntervalSet:
    """Parse ``[a,b) + [c,inf) - [d,e)``, evaluated left to right."""
    pos = 0
    s = text.strip()
    acc: IntervalSet | None = None
    op = "+"
    while True:
        while pos < len(s) and s[pos].isspace():
            pos += 1
        if pos >= len(s) or s[pos] != "[":
            raise SetAlgebraError(f"expected '[' at column {pos + 1} in {text!r}")
        close = s.find(")", pos)
        if close < 0:
            raise SetAlgebraError(f"unterminated interval in {text!r}")
        body = s[pos + 1 : close].split(",")
        if len(body) != 2:
            raise SetAlgebraError(f"malformed interval {s[pos:close + 1]!r}")
        try:
            lo = int(body[0])
            hi_text = body[1].strip()
            term = IntervalSet((), lo) if hi_text == "inf" else IntervalSet([(lo, int(hi_text))])
        except ValueError:
            raise SetAlgebraError(f"malformed interval {s[pos:close + 1]!r}") from None
        if acc is None:
            acc = term
        else:
            acc = acc | term if op == "+" else acc - term
        pos = close + 1
        while pos < len(s) and s[pos].isspace():
            pos += 1
        if pos >= len(s):
            return acc
        if s[pos] not in "+-":
            raise SetAlgebraError(f"expected '+' or '-' at column {pos + 1} in {text!r}")
        op = s[pos]
        pos += 1


def format_interval_set(s: IntervalSet) -> str:
    """Inverse of ``parse_interval_expr`` for canonical sets."""
    parts = [f"[{a},{b})" for a, b in s.intervals]
    if s.tail is not None:
        parts.append(f"[{s.tail},inf)")
    if not parts:
        return "[0,0)"
    return " + ".join(parts)
