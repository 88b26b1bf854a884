"""Command-line front end: ``decide`` problem files and ``gen`` reduction instances.

Problem files are line oriented::

    universe nat            # or: universe finite N
    group A = [0,3) + [5,inf)
    formula f: E[A] p & ~C[A] q

Blank lines and ``#`` comments are ignored. Verdicts go to stdout, one line
per formula in declaration order; statistics with wall time go to stderr so
stdout stays byte-for-byte reproducible.
"""

from __future__ import annotations

import argparse
import random
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import genformulas as gen
from .formula import Formula, FormulaError, Not, parse
from .models import ExtractionError, extract_model
from .reduction import LOGICS, TranslationError
from .setalgebra import GroupTable, Name, SetAlgebraError, Universe, parse_interval_expr
from .tableau import DEFAULT_MAX_STATES, CapExceeded, decide

EXIT_OK, EXIT_PARSE, EXIT_CAP = 0, 2, 3


class ProblemError(ValueError):
    pass


@dataclass
class Problem:
    universe: Universe
    groups: dict = field(default_factory=dict)
    formulas: list[tuple[str, Formula]] = field(default_factory=list)

    def table(self) -> GroupTable:
        """A fresh table, so each formula gets its own oracle counters."""
        return GroupTable(dict(self.groups), self.universe)


def parse_problem(text: str, origin: str = "<input>") -> Problem:
    """Parse a whole problem file; raises ``ProblemError`` with a line reference."""
    universe: Universe | None = None
    groups: dict = {}
    raw: list[tuple[int, str, str]] = []
    for no, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{origin}:{no}"
        head, _, rest = body.partition(" ")
        rest = rest.strip()
        try:
            if head == "universe":
                if universe is not None:
                    raise ProblemError("universe declared twice")
                universe = _parse_universe(rest)
            elif head == "group":
                name, eq, expr = rest.partition("=")
                name = name.strip()
                if not eq or not name.isidentifier():
                    raise ProblemError("expected 'group NAME = <interval-expr>'")
                if name in groups:
                    raise ProblemError(f"group {name!r} declared twice")
                groups[name] = parse_interval_expr(expr)
            elif head == "formula":
                name, colon, ftext = rest.partition(":")
                name = name.strip()
                if not colon or not name:
                    raise ProblemError("expected 'formula NAME: <formula>'")
                if any(n == name for _, n, _ in raw):
                    raise ProblemError(f"formula {name!r} declared twice")
                raw.append((no, name, ftext))
            else:
                raise ProblemError(f"unknown directive {head!r}")
        except (SetAlgebraError, ProblemError) as exc:
            raise ProblemError(f"{where}: {exc}") from None
    if universe is None:
        universe = Universe()
    try:
        table = GroupTable(dict(groups), universe)
    except SetAlgebraError as exc:
        raise ProblemError(f"{origin}: {exc}") from None
    problem = Problem(universe, {n: table.group(n) for n in table.names})
    for no, name, ftext in raw:
        try:
            problem.formulas.append((name, parse(ftext, table)))
        except (FormulaError, SetAlgebraError) as exc:
            raise ProblemError(f"{origin}:{no}: {exc}") from None
    if not problem.formulas:
        raise ProblemError(f"{origin}: no formulas")
    return problem


def _parse_universe(rest: str) -> Universe:
    parts = rest.split()
    if parts == ["nat"]:
        return Universe()
    if len(parts) == 2 and parts[0] == "finite" and parts[1].isdigit() and int(parts[1]) > 0:
        return Universe(int(parts[1]))
    raise ProblemError("expected 'universe nat' or 'universe finite N'")


@dataclass
class Outcome:
    name: str
    verdict: str
    stats: dict
    alphabet: list[str]
    model_json: str | None


def _solve(problem: Problem, name: str, f: Formula, logic: str, task: str, max_states: int, want_model: bool) -> Outcome:
    table = problem.table()
    target = f if task == "sat" else Not(f)
    v = decide(target, table, logic, max_states=max_states)
    if task == "sat":
        verdict = "SAT" if v.sat else "UNSAT"
    else:
        verdict = "INVALID" if v.sat else "VALID"
    model_json = None
    if want_model and v.sat:
        M = extract_model(v.engine)
        model_json = M.to_json(logic, v.alphabet.sigma)
    return Outcome(name, verdict, v.stats, v.alphabet.describe(), model_json)


def _model_path(base: Path, name: str, many: bool) -> Path:
    return base.with_name(f"{base.stem}.{name}{base.suffix}") if many else base


def cmd_decide(args: argparse.Namespace) -> int:
    try:
        text = Path(args.input).read_text(encoding="utf-8") if args.input != "-" else sys.stdin.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        problem = parse_problem(text, args.input)
    except ProblemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    want_model = args.model_out is not None
    jobs = problem.formulas
    workers = max(1, min(args.jobs, len(jobs)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_solve, problem, name, f, args.logic, args.task, args.max_states, want_model) for name, f in jobs
        ]
        for fut in futures:
            try:
                out = fut.result()
            except CapExceeded as exc:
                print(f"error: state cap exceeded: {exc}", file=sys.stderr)
                return EXIT_CAP
            except (TranslationError, SetAlgebraError, FormulaError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_PARSE
            except ExtractionError as exc:
                print(f"error: model extraction failed: {exc}", file=sys.stderr)
                return 1
            line = f"{out.name} {out.verdict}"
            if args.stats:
                s = out.stats
                line += f" O={s['o_queries']} O'={s['o_prime_queries']} states={s['states']} rounds={s['rounds']}"
                print(f"{out.name} time={s['time']:.3f}s", file=sys.stderr)
            print(line, flush=True)
            if args.dump_alphabet:
                for a in out.alphabet:
                    print(f"  {a}")
            if out.model_json is not None:
                _model_path(Path(args.model_out), out.name, len(jobs) > 1).write_text(out.model_json + "\n", encoding="utf-8")
    return EXIT_OK


FAMILIES = ("phi_a", "phi_Gp", "psi_G", "psi_m", "phi_m", "phi_d")


def _instance(family: str, rng: random.Random, table: GroupTable, depth: int, m: int) -> Formula | None:
    names = [Name(n) for n in table.names]
    pool = gen.FreshPropPool()
    if family == "phi_a":
        return gen.phi_a(names[0], rng.sample(names[1:], rng.randint(0, len(names) - 1)), pool)
    if family == "phi_d":
        return gen.phi_d(rng.sample(names, rng.randint(2, len(names))), pool)
    if family == "psi_m":
        return gen.psi_m(m, names[0], rng.sample(names[1:], rng.randint(0, min(2, len(names) - 1))), pool)
    g = gen.random_nested(rng, table, depth, inner_size=(1, m) if family == "phi_m" else (1, 1))
    if g is None:
        return None
    if family == "phi_Gp":
        return gen.phi_Gp(g, pool)
    if family == "psi_G":
        return gen.psi_G(g, pool)
    return gen.phi_m_Gp(m, g, pool)


def cmd_gen(args: argparse.Namespace) -> int:
    """One random table with ``--count`` instances of the family over it."""
    rng = random.Random(args.seed)
    for _ in range(100):
        table = gen.random_table(rng, args.groups, args.universe)
        formulas = []
        for i in range(args.count):
            f = _instance(args.family, rng, table, args.depth, args.m)
            if f is None:
                break
            formulas.append((f"{args.family}_{i}", f))
        if len(formulas) == args.count:
            break
    else:
        print(f"error: no table admits a nesting of depth {args.depth}", file=sys.stderr)
        return EXIT_PARSE
    text = gen.problem_text(table, formulas)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ckdecide", description="Satisfiability for knowledge logics with group operators.")
    sub = p.add_subparsers(dest="command", required=True)
    d = sub.add_parser("decide", help="decide every formula of a problem file")
    d.add_argument("--logic", choices=LOGICS, required=True)
    d.add_argument("--task", choices=("sat", "valid"), default="sat")
    d.add_argument("--input", required=True, help="problem file, or - for stdin")
    d.add_argument("--model-out", help="write the witness structure (JSON) on SAT / INVALID")
    d.add_argument("--stats", action="store_true", help="append oracle counts, states and rounds")
    d.add_argument("--dump-alphabet", action="store_true", help="print the translated agent alphabet")
    d.add_argument("--max-states", type=int, default=DEFAULT_MAX_STATES)
    d.add_argument("--jobs", type=int, default=1, help="formulas decided concurrently")
    d.set_defaults(func=cmd_decide)
    g = sub.add_parser("gen", help="emit random reduction instances as problem files")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--groups", type=int, default=3)
    g.add_argument("--universe", type=int, default=4, help="size of the finite agent universe")
    g.add_argument("--depth", type=int, default=0, help="nesting depth for phi_Gp / psi_G / phi_m")
    g.add_argument("--m", type=int, default=1, help="threshold for psi_m / phi_m")
    g.add_argument("--out", help="output file (default stdout)")
    g.set_defaults(func=cmd_gen)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
