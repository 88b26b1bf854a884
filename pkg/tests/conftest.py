"""Shared fixtures, formula strategies and the acceptance report hook."""

from __future__ import annotations

import os
import random
import sys

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from ckdecide.formula import And, Common, Everyone, Formula, Not, Prop  # noqa: E402
from ckdecide.setalgebra import Agent, GroupTable, IntervalSet, Name, Universe  # noqa: E402

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; printed in the terminal summary."""

    def emit(label: str, ok: bool, detail: str = "") -> None:
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# ---------------------------------------------------------------------------
# Tables


def finite_table(sets: dict[str, set[int]], size: int) -> GroupTable:
    return GroupTable({k: IntervalSet.from_elements(v) for k, v in sets.items()}, Universe(size))


@pytest.fixture
def two_agents() -> GroupTable:
    """Agents 0 and 1 with the groups {0}, {1} and {0,1}."""
    return finite_table({"A0": {0}, "A1": {1}, "ALL": {0, 1}}, 2)


@pytest.fixture
def infinite_table() -> GroupTable:
    """Groups over all of N, mixing finite and cofinite members."""
    return GroupTable(
        {
            "A": IntervalSet([(0, 5)]),
            "B": IntervalSet((), 3),
            "C": IntervalSet((), 0),
            "D": IntervalSet([(2, 4)]),
            "S": IntervalSet([(1, 4)]),
        }
    )


# ---------------------------------------------------------------------------
# Random formulas


def random_formula(rng: random.Random, size: int, props, groups, common: bool = True) -> Formula:
    """A random core formula with roughly ``size`` operators."""
    if size <= 0:
        return Prop(rng.choice(props))
    r = rng.random()
    if r < 0.25:
        return Not(random_formula(rng, size - 1, props, groups, common))
    if r < 0.5:
        k = rng.randint(0, size - 1)
        return And(
            random_formula(rng, k, props, groups, common),
            random_formula(rng, size - 1 - k, props, groups, common),
        )
    if r < 0.85 or not common:
        return Everyone(rng.choice(groups), random_formula(rng, size - 1, props, groups, common))
    return Common(rng.choice(groups), random_formula(rng, size - 1, props, groups, common))


def formulas(props=("p", "q"), groups=(Name("A0"), Name("A1"), Name("ALL"), Agent(0), Agent(1)), max_leaves=6):
    """Hypothesis strategy for core formulas."""
    leaf = st.sampled_from([Prop(p) for p in props])
    group = st.sampled_from(list(groups))

    def extend(children):
        return st.one_of(
            children.map(Not),
            st.tuples(children, children).map(lambda t: And(*t)),
            st.tuples(group, children).map(lambda t: Everyone(*t)),
            st.tuples(group, children).map(lambda t: Common(*t)),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)
