"""Formulas of the multi-agent language with everyone-knows and common knowledge.

The core AST has five node kinds: ``Prop``, ``Not``, ``And``, ``Everyone``
and ``Common``. ``K[i] p`` is ``Everyone`` over the singleton group ``{i}``.
Disjunction, implication, equivalence and the constants are desugared by the
parser, so lengths and closures are always computed on the core AST.

A group slot holds either a ``GroupDesc`` (formulas over the real agent
universe) or a ``frozenset`` of synthesized agent ids (translated formulas).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, Iterator

from .setalgebra import Agent, Diff, GroupDesc, GroupTable, Name, SetAlgebraError, Union

Group = Hashable  # GroupDesc or frozenset[int]


class FormulaError(ValueError):
    pass


class Formula:
    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return And(self, other)

    def __invert__(self) -> "Formula":
        return Not(self)

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("not", self.child)))

    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("and", self.left, self.right)))

    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class Everyone(Formula):
    group: Group
    child: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("E", self.group, self.child)))

    def __hash__(self) -> int:
        return self._hash


@dataclass(frozen=True)
class Common(Formula):
    group: Group
    child: Formula
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("C", self.group, self.child)))

    def __hash__(self) -> int:
        return self._hash


# Proposition reserved for the constants; the fresh pool starts after it.
CONST_PROP = "_g0"
FALSE = And(Prop(CONST_PROP), Not(Prop(CONST_PROP)))
TRUE = Not(FALSE)


def K(agent, child: Formula) -> Everyone:
    """K_i as everyone-knows over {i}; ``agent`` is an int or a synthesized id."""
    if isinstance(agent, int) and not isinstance(agent, bool):
        return Everyone(Agent(agent), child)
    return Everyone(frozenset([agent]), child)


def neg(f: Formula) -> Formula:
    """Negation with ¬¬ψ identified with ψ."""
    return f.child if isinstance(f, Not) else Not(f)


def conj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return TRUE
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(fs: Iterable[Formula]) -> Formula:
    fs = list(fs)
    if not fs:
        return FALSE
    out = fs[0]
    for f in fs[1:]:
        out = Not(And(Not(out), Not(f)))
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def iff(a: Formula, b: Formula) -> Formula:
    return And(implies(a, b), implies(b, a))


# ---------------------------------------------------------------------------
# Measures and closures


def length(f: Formula) -> int:
    """Symbol count with weights prop/¬/∧/E/K = 1 and C = 3."""
    stack = [f]
    n = 0
    while stack:
        g = stack.pop()
        if isinstance(g, Prop):
            n += 1
        elif isinstance(g, Not):
            n += 1
            stack.append(g.child)
        elif isinstance(g, And):
            n += 1
            stack.append(g.left)
            stack.append(g.right)
        elif isinstance(g, Everyone):
            n += 1
            stack.append(g.child)
        elif isinstance(g, Common):
            n += 3
            stack.append(g.child)
        else:
            raise FormulaError(f"not a formula: {g!r}")
    return n


def subformulas(f: Formula) -> list[Formula]:
    """Plain subformulas, children before parents, without duplicates."""
    out: list[Formula] = []
    seen: set[Formula] = set()

    def visit(g: Formula) -> None:
        if g in seen:
            return
        if isinstance(g, (Not, Everyone, Common)):
            visit(g.child)
        elif isinstance(g, And):
            visit(g.left)
            visit(g.right)
        seen.add(g)
        out.append(g)

    visit(f)
    return out


def common_unfolding(c: Common) -> tuple[And, Everyone]:
    """For C_G ψ return (ψ ∧ C_G ψ, E_G(ψ ∧ C_G ψ))."""
    body = And(c.child, c)
    return body, Everyone(c.group, body)


def sub(f: Formula) -> list[Formula]:
    """Sub(φ): subformulas plus ψ∧C_Gψ and E_G(ψ∧C_Gψ) for every C_Gψ, in a fixed order."""
    out: list[Formula] = []
    seen: set[Formula] = set()
    for g in subformulas(f):
        extra = list(common_unfolding(g)) if isinstance(g, Common) else []
        for h in [g, *extra]:
            if h not in seen:
                seen.add(h)
                out.append(h)
    return out


def sub_plus(f: Formula) -> list[Formula]:
    """Sub⁺(φ): Sub(φ) closed under single negation, ¬¬ψ identified with ψ."""
    out: list[Formula] = []
    seen: set[Formula] = set()
    for g in sub(f):
        for h in (g, neg(g)):
            if h not in seen:
                seen.add(h)
                out.append(h)
    return out


def esub(f: Formula, agent, member: Callable[[Group, object], bool] | None = None) -> list[Formula]:
    """ESub_i(φ): Sub(φ) plus K_i ψ for each E_G ψ ∈ Sub(φ) with i ∈ G."""
    member = member or (lambda g, i: i in g)
    base = sub(f)
    seen = set(base)
    out = list(base)
    for g in base:
        if isinstance(g, Everyone) and member(g.group, agent):
            k = Everyone(frozenset([agent]), g.child)
            if k not in seen:
                seen.add(k)
                out.append(k)
    return out


def groups_of(f: Formula) -> list[Group]:
    """Groups labelling an E or C operator, in first-occurrence order."""
    out: list[Group] = []
    seen: set = set()
    for g in subformulas(f):
        if isinstance(g, (Everyone, Common)) and g.group not in seen:
            seen.add(g.group)
            out.append(g.group)
    return out


def props_of(f: Formula) -> list[str]:
    return sorted({g.name for g in subformulas(f) if isinstance(g, Prop)})


def map_groups(f: Formula, fn: Callable[[Group], Group]) -> Formula:
    """Rebuild ``f`` with every group label replaced by ``fn(label)``."""
    memo: dict[Formula, Formula] = {}
    for g in subformulas(f):
        if isinstance(g, Prop):
            new: Formula = g
        elif isinstance(g, Not):
            new = Not(memo[g.child])
        elif isinstance(g, And):
            new = And(memo[g.left], memo[g.right])
        elif isinstance(g, Everyone):
            new = Everyone(fn(g.group), memo[g.child])
        else:
            new = Common(fn(g.group), memo[g.child])
        memo[g] = new
    return memo[f]


def validate(f: Formula, table: GroupTable) -> None:
    """Reject groups that are undeclared or evaluate to the empty set."""
    for g in groups_of(f):
        if not isinstance(g, GroupDesc):
            continue
        try:
            empty = table.is_empty(g)
        except SetAlgebraError as e:
            raise FormulaError(str(e)) from None
        if empty:
            raise FormulaError(f"group {format_group(g)} is empty")


# ---------------------------------------------------------------------------
# Printing


def format_group(g: Group) -> str:
    if isinstance(g, GroupDesc):
        return str(g)
    if isinstance(g, frozenset):
        return "{" + ",".join(str(x) for x in sorted(g, key=repr)) + "}"
    return str(g)


def _modal_prefix(f: Everyone | Common) -> str:
    if isinstance(f, Everyone):
        if isinstance(f.group, Agent):
            return f"K[{f.group.agent}]"
        return f"E[{format_group(f.group)}]"
    return f"C[{format_group(f.group)}]"


def pretty(f: Formula) -> str:
    """Core-syntax rendering; ``parse(pretty(f)) == f``."""
    if f == FALSE:
        return "false"
    if f == TRUE:
        return "true"
    if isinstance(f, Prop):
        return f.name
    if isinstance(f, Not):
        return "~" + _unary_operand(f.child)
    if isinstance(f, And):
        right = pretty(f.right)
        if isinstance(f.right, And) and f.right not in (FALSE,):
            right = f"({right})"
        left = pretty(f.left)
        if f.left == FALSE:
            left = "false"
        return f"{left} & {right}"
    return f"{_modal_prefix(f)} {_unary_operand(f.child)}"


def _unary_operand(f: Formula) -> str:
    s = pretty(f)
    if isinstance(f, And) and f != FALSE:
        return f"({s})"
    return s


# ---------------------------------------------------------------------------
# Parsing

_TOKEN = re.compile(r"\s*(?:(<->|->|[~&|()\[\]+\-])|([A-Za-z_][A-Za-z0-9_]*)|(\d+))")
_FRESH = re.compile(r"_g\d+$")


class _Parser:
    def __init__(self, text: str, table: GroupTable | None):
        self.text = text
        self.table = table
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                if text[pos:].strip() == "":
                    break
                col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
                raise FormulaError(f"unexpected character at column {col}: {text[col - 1]!r}")
            start = m.start(m.lastindex)
            if m.group(1):
                self.toks.append(("op", m.group(1), start))
            elif m.group(2):
                self.toks.append(("id", m.group(2), start))
            else:
                self.toks.append(("int", m.group(3), start))
            pos = m.end()
        self.i = 0

    def peek(self, k: int = 0) -> tuple[str, str, int]:
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else ("eof", "", len(self.text))

    def error(self, msg: str) -> FormulaError:
        return FormulaError(f"{msg} at column {self.peek()[2] + 1}")

    def take(self, value: str) -> None:
        kind, v, _ = self.peek()
        if kind != "op" or v != value:
            raise self.error(f"expected {value!r}")
        self.i += 1

    def at(self, value: str) -> bool:
        kind, v, _ = self.peek()
        return kind == "op" and v == value

    def formula(self) -> Formula:
        f = self.iff()
        if self.peek()[0] != "eof":
            raise self.error("unexpected token")
        return f

    def iff(self) -> Formula:
        f = self.imp()
        while self.at("<->"):
            self.i += 1
            f = iff(f, self.imp())
        return f

    def imp(self) -> Formula:
        f = self.disj()
        if self.at("->"):
            self.i += 1
            return implies(f, self.imp())
        return f

    def disj(self) -> Formula:
        f = self.conj()
        while self.at("|"):
            self.i += 1
            f = Not(And(Not(f), Not(self.conj())))
        return f

    def conj(self) -> Formula:
        f = self.unary()
        while self.at("&"):
            self.i += 1
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind, v, _ = self.peek()
        if kind == "op" and v == "~":
            self.i += 1
            return Not(self.unary())
        if kind == "id" and v in ("K", "E", "C") and self.peek(1)[:2] == ("op", "["):
            self.i += 2
            if v == "K":
                k2, v2, _ = self.peek()
                if k2 != "int":
                    raise self.error("expected an agent number")
                self.i += 1
                group: GroupDesc = Agent(int(v2))
            else:
                group = self.group_expr()
            self.take("]")
            self.check_group(group)
            child = self.unary()
            return Common(group, child) if v == "C" else Everyone(group, child)
        return self.atom()

    def atom(self) -> Formula:
        kind, v, _ = self.peek()
        if kind == "op" and v == "(":
            self.i += 1
            f = self.iff()
            self.take(")")
            return f
        if kind == "id":
            self.i += 1
            if v == "true":
                return TRUE
            if v == "false":
                return FALSE
            if v.startswith("_") and not _FRESH.match(v):
                self.i -= 1
                raise self.error(f"identifier {v!r} may not start with '_'")
            return Prop(v)
        raise self.error("expected a formula")

    def group_expr(self) -> GroupDesc:
        g = self.group_term()
        while self.at("+") or self.at("-"):
            op = self.peek()[1]
            self.i += 1
            rhs = self.group_term()
            g = Union(g, rhs) if op == "+" else Diff(g, rhs)
        return g

    def group_term(self) -> GroupDesc:
        kind, v, _ = self.peek()
        if kind == "op" and v == "(":
            self.i += 1
            g = self.group_expr()
            self.take(")")
            return g
        if kind == "int":
            self.i += 1
            return Agent(int(v))
        if kind == "id":
            if self.table is not None and v not in self.table:
                raise self.error(f"undeclared group {v!r}")
            self.i += 1
            return Name(v)
        raise self.error("expected a group")

    def check_group(self, g: GroupDesc) -> None:
        if self.table is None:
            return
        if self.table.eval(g).is_empty():
            raise FormulaError(f"group {g} is empty")


def parse(text: str, table: GroupTable | None = None) -> Formula:
    """Parse concrete syntax into the desugared core AST.

    ``->`` associates to the right; ``&``, ``|`` and ``<->`` to the left.
    With a table, group names must be declared and groups nonempty.
    """
    return _Parser(text, table).formula()


def iter_nodes(f: Formula) -> Iterator[Formula]:
    yield from subformulas(f)
