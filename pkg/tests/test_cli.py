import io
import json
import sys

import pytest

from corpus import DATA
from oppsym import Permutation, generated_group_order
from oppsym.cli import EXIT_BUDGET, EXIT_INTERNAL, EXIT_OK, EXIT_PARSE, main

TRIANGLE = str(DATA / "triangle.g")
WORKED = str(DATA / "worked.g")
RELABELED = str(DATA / "worked_relabeled.g")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_triangle_text(capsys):
    code, out, _ = run(capsys, "--mode=enhanced", TRIANGLE)
    lines = out.splitlines()
    assert code == EXIT_OK
    assert lines[:2] == ["(1 2)", "(0 1)"]
    assert "group_order 6" in lines
    assert lines[-1] == "complete true"


def test_compare_reports_conflicts(capsys):
    code, out, _ = run(capsys, "--mode=compare", WORKED)
    assert code == EXIT_OK
    assert "group_order 32" in out
    line = next(l for l in out.splitlines() if l.startswith("conflicts "))
    base, enh = (int(x.split("=")[1]) for x in line.split()[1:])
    assert enh < base
    assert "conflict_depth_histogram" in out
    _, out, _ = run(capsys, "--mode=compare", RELABELED)
    assert "conflicts baseline=16 enhanced=4" in out.splitlines()


def test_cnf_empty_formula(capsys):
    code, out, _ = run(capsys, "--cnf", "--mode=enhanced", str(DATA / "trivial.cnf"))
    assert code == EXIT_OK
    assert "group_order 8" in out.splitlines()


def test_json_fields_and_round_trip(capsys):
    code, out, _ = run(capsys, "--json", WORKED)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert set(doc) == {"n", "m", "k", "mode", "heuristic", "group_order", "generators",
                        "nodes", "conflicts", "bad_leaves", "time_ms", "complete"}
    assert doc["group_order"] == "32" and doc["complete"] is True


def test_json_generators_regenerate_group(capsys):
    code, out, _ = run(capsys, "--json", "--mode=baseline", str(DATA / "triangle.g"))
    doc = json.loads(out)
    gens = [Permutation.from_cycles(c, doc["n"]) for c in doc["generators"]]
    assert generated_group_order(gens, doc["n"]) == int(doc["group_order"])


def test_json_compare_histogram(capsys):
    code, out, _ = run(capsys, "--json", "--mode=compare", WORKED)
    doc = json.loads(out)
    assert doc["mode"] == "compare"
    hist = doc["conflict_depth_histogram"]
    assert sum(hist.values()) + doc["unmatched_conflicts"] == doc["baseline"]["conflicts"]
    assert doc["conflicts"] <= doc["baseline"]["conflicts"]


def test_text_and_json_agree(capsys):
    _, text, _ = run(capsys, WORKED, "--heuristic=largest")
    _, js, _ = run(capsys, WORKED, "--heuristic=largest", "--json")
    doc = json.loads(js)
    fields = dict(l.split(" ", 1) for l in text.splitlines() if not l.startswith("("))
    for key in ("n", "m", "k", "group_order", "nodes", "conflicts", "bad_leaves"):
        assert fields[key] == str(doc[key])
    assert [l for l in text.splitlines() if l.startswith("(")] == doc["generators"]


def test_stdin_input(capsys, monkeypatch):
    monkeypatch.setattr(sys, "stdin", io.StringIO("3 2 1\n0 0 0\n0 1\n1 2\n"))
    code, out, _ = run(capsys)
    assert code == EXIT_OK and "(0 2)" in out.splitlines()


def test_parse_error_exit_code(capsys, tmp_path):
    bad = tmp_path / "bad.g"
    bad.write_text("2 1 1\n0 0\n0 0\n")
    code, out, err = run(capsys, str(bad))
    assert code == EXIT_PARSE and out == ""
    assert "line 3" in err and "self-loop" in err
    code, _, err = run(capsys, str(tmp_path / "missing.g"))
    assert code == EXIT_PARSE


def test_budget_exit_code(capsys):
    code, out, err = run(capsys, "--json", "--max-nodes=2", WORKED)
    assert code == EXIT_BUDGET
    assert json.loads(out)["complete"] is False
    assert "budget" in err


def test_internal_error_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(sys.modules["oppsym.search"], "is_automorphism", lambda g, a: False)
    code, _, err = run(capsys, TRIANGLE)
    assert code == EXIT_INTERNAL and "assertion" in err


def test_trace_goes_to_stderr(capsys):
    code, out, err = run(capsys, "--trace", WORKED)
    assert code == EXIT_OK
    assert "refine-cell=" in err and "refine-cell=" not in out
    assert "conflict: step" in err


def test_plot_writes_figure(capsys, tmp_path):
    target = tmp_path / "hist.png"
    code, _, _ = run(capsys, "--mode=compare", "--plot", str(target), WORKED)
    assert code == EXIT_OK
    assert target.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    empty = tmp_path / "none.png"
    assert run(capsys, "--mode=compare", "--plot", str(empty), TRIANGLE)[0] == EXIT_OK
    assert empty.exists()


def test_plot_requires_compare(capsys):
    with pytest.raises(SystemExit):
        main(["--plot", "x.png", WORKED])


def test_huge_group_order_prints(capsys, tmp_path):
    n = 1600
    f = tmp_path / "empty.g"
    f.write_text(f"{n} 0 1\n" + " ".join(["0"] * n) + "\n")
    code, out, _ = run(capsys, "--json", str(f))
    assert code == EXIT_OK
    assert len(json.loads(out)["group_order"]) > 4300
