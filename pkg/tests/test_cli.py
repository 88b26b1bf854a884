import json
import re
import subprocess
import sys

import pytest

from ckdecide.cli import ProblemError, main, parse_problem
from ckdecide.genformulas import Nested
from ckdecide.models import KripkeModel, check, verify_frame
from ckdecide.setalgebra import GroupTable, IntervalSet, Name

INTRO = """\
universe nat
group G = [0,2)
formula intro: E[G] p & ~E[G] E[G] p
"""


def write(tmp_path, text, name="f.eslp"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_contradiction_is_unsat(tmp_path, capsys):
    path = write(tmp_path, "universe nat\nformula f: p & ~p\n")
    assert run(capsys, "decide", "--logic", "s5", "--input", path) == (0, "f UNSAT\n", "")


def test_introspection_instance_writes_a_model(tmp_path, capsys):
    path = write(tmp_path, INTRO)
    out_path = tmp_path / "m.json"
    code, out, _ = run(capsys, "decide", "--logic", "s4", "--input", path, "--model-out", str(out_path))
    assert (code, out) == (0, "intro SAT\n")
    doc = json.loads(out_path.read_text())
    assert doc["logic"] == "s4"
    M = KripkeModel.from_json(out_path.read_text())
    assert verify_frame(M, "s4")
    # the model is over the translated alphabet: evaluate the translated formula
    prob = parse_problem(INTRO)
    from ckdecide.formula import map_groups

    (_, f) = prob.formulas[0]
    sigma = {Name(k): frozenset(v) for k, v in doc["sigma"].items()}
    g = map_groups(f, lambda d: sigma[d])
    assert any(check(M, s, g) for s in M.states)


def test_valid_task(tmp_path, capsys):
    path = write(tmp_path, "universe finite 2\ngroup G = [0,2)\nformula c: C[G] p -> E[G] (p & C[G] p)\nformula e: E[G] p -> p\n")
    assert run(capsys, "decide", "--logic", "s5", "--task", "valid", "--input", path)[1] == "c VALID\ne VALID\n"
    assert run(capsys, "decide", "--logic", "k", "--task", "valid", "--input", path)[1] == "c VALID\ne INVALID\n"


@pytest.mark.parametrize(
    "text",
    [
        "universe nat\nformula f: p &\n",
        "universe nat\ngroup G = [0,\nformula f: p\n",
        "universe nat\nformula f: E[NOPE] p\n",
        "universe moon\nformula f: p\n",
        "universe nat\n",
        "universe nat\nformula f: p\nformula f: q\n",
        "universe nat\ngroup G = [0,1)\ngroup G = [1,2)\nformula f: p\n",
        "universe finite 3\ngroup G = [5,inf)\nformula f: p\n",
    ],
)
def test_parse_errors_exit_2(tmp_path, capsys, text):
    code, out, err = run(capsys, "decide", "--logic", "k", "--input", write(tmp_path, text))
    assert code == 2 and out == "" and err.startswith("error: ")


def test_missing_file_exit_2(tmp_path, capsys):
    assert run(capsys, "decide", "--logic", "k", "--input", str(tmp_path / "nope"))[0] == 2


def test_error_names_the_line(tmp_path):
    with pytest.raises(ProblemError, match=r"x:3"):
        parse_problem("universe nat\n\nformula f: (p\n", "x")


def test_cap_exit_3(tmp_path, capsys):
    path = write(tmp_path, "universe nat\ngroup G = [0,3)\nformula f: E[G] p & E[G] q & ~C[G] (p & q)\n")
    code, _, err = run(capsys, "decide", "--logic", "k", "--input", path, "--max-states", "4")
    assert code == 3 and "cap" in err


def test_stats_line(tmp_path, capsys):
    path = write(tmp_path, INTRO)
    code, out, err = run(capsys, "decide", "--logic", "k", "--input", path, "--stats")
    m = re.fullmatch(r"intro SAT O=(\d+) O'=(\d+) states=(\d+) rounds=(\d+)\n", out)
    assert code == 0 and m
    n = 9  # |E[G] p & ~E[G] E[G] p|
    assert int(m.group(1)) <= n * 2**n
    assert int(m.group(3)) <= 2**n
    assert re.fullmatch(r"intro time=\d+\.\d{3}s\n", err)


def test_dump_alphabet(tmp_path, capsys):
    path = write(tmp_path, INTRO)
    _, out, _ = run(capsys, "decide", "--logic", "s4", "--input", path, "--dump-alphabet")
    lines = out.splitlines()
    assert lines[0] == "intro SAT" and len(lines) > 1
    assert all(line.startswith("  ") for line in lines[1:])


def test_output_is_deterministic_and_ordered(tmp_path, capsys):
    text = "universe finite 3\ngroup A = [0,2)\ngroup B = [1,3)\n" + "".join(
        f"formula f{i}: {body}\n"
        for i, body in enumerate(["E[A] p & ~E[B] p", "C[A] p & ~p", "~C[A + B] q & E[A] q", "p & ~p", "K[2] p & ~K[0] p"])
    )
    path = write(tmp_path, text)
    outs = [run(capsys, "decide", "--logic", "s5", "--input", path, "--jobs", j)[1] for j in ("1", "1", "4")]
    assert outs[0] == outs[1] == outs[2]
    assert [line.split()[0] for line in outs[0].splitlines()] == [f"f{i}" for i in range(5)]


def _gen_members(table: GroupTable, g) -> set:
    if isinstance(g, Nested):
        out = _gen_members(table, g.base)
        for h in g.minus:
            out -= _gen_members(table, h)
        return out
    return set(table.eval(g).elements())


@pytest.mark.parametrize("seed", range(4))
def test_gen_then_decide_matches_set_arithmetic(tmp_path, capsys, seed):
    out_file = tmp_path / "gen.eslp"
    assert run(capsys, "gen", "phi_a", "--seed", str(seed), "--count", "3", "--universe", "6", "--out", str(out_file))[0] == 0
    prob = parse_problem(out_file.read_text())
    table = prob.table()
    expected = []
    for name, f in prob.formulas:
        # conj of ¬E[G0] p and E[Gi] p: collect the groups from the formula itself
        parts, stack = [], [f]
        while stack:
            x = stack.pop()
            if hasattr(x, "left"):
                stack += [x.right, x.left]
            else:
                parts.append(x)
        g0 = parts[0].child.group
        gs = [x.group for x in parts[1:]]
        expected.append(f"{name} {'SAT' if _gen_members(table, Nested(g0, tuple(gs))) else 'UNSAT'}")
    code, out, _ = run(capsys, "decide", "--logic", "t", "--input", str(out_file))
    assert code == 0 and out.splitlines() == expected


@pytest.mark.parametrize("family", ["phi_a", "phi_Gp", "psi_G", "phi_d"])
def test_gen_families_parse(capsys, family):
    code, out, _ = run(capsys, "gen", family, "--seed", "1", "--depth", "1" if family in ("phi_Gp", "psi_G") else "0")
    assert code == 0
    prob = parse_problem(out)
    assert len(prob.formulas) == 1


def test_console_script(tmp_path):
    path = write(tmp_path, "universe nat\nformula f: p & ~p\nformula g: p\n")
    done = subprocess.run(
        [sys.executable, "-m", "ckdecide.cli", "decide", "--logic", "kd45", "--input", path],
        capture_output=True,
        text=True,
        check=False,
    )
    assert (done.returncode, done.stdout) == (0, "f UNSAT\ng SAT\n")


def test_stdin_input(monkeypatch, capsys):
    import io

    monkeypatch.setattr(sys, "stdin", io.StringIO("universe nat\nformula f: K[3] p & ~p\n"))
    assert run(capsys, "decide", "--logic", "t", "--input", "-")[:2] == (0, "f UNSAT\n")


def test_group_expressions_in_files(capsys, tmp_path):
    text = "universe nat\ngroup T1 = [0,10)\ngroup T2 = [5,inf)\nformula a: ~E[T1] p & E[T2] p\nformula b: ~E[T1 - T2] p & E[T1] p\n"
    assert parse_problem(text).groups["T2"] == IntervalSet((), 5)
    _, out, _ = run(capsys, "decide", "--logic", "s5", "--input", write(tmp_path, text))
    assert out == "a SAT\nb UNSAT\n"
