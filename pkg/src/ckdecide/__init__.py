"""Satisfiability and validity for epistemic logics over infinite agent sets."""

from .formula import Formula, parse, pretty
from .setalgebra import GroupTable, IntervalSet, Universe
from .tableau import CapExceeded, SatVerdict, decide, validity

__all__ = [
    "CapExceeded",
    "Formula",
    "GroupTable",
    "IntervalSet",
    "SatVerdict",
    "Universe",
    "decide",
    "parse",
    "pretty",
    "validity",
]
