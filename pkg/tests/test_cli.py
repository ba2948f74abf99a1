import json
import random

import pytest

from bmepoly.cli import main
from bmepoly.trees import parse_newick

from conftest import random_additive, random_matrix


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_phylip(tmp_path, d, name="m.phy"):
    p = tmp_path / name
    p.write_text(d.to_phylip())
    return str(p)


def test_solve_additive_bnb(tmp_path, capsys):
    rng = random.Random(3)
    t, lengths, d = random_additive(8, rng)
    code, out, _ = run(capsys, "solve", "--method", "bnb", write_phylip(tmp_path, d))
    assert code == 0
    newick, rest = out.split("\n", 1)
    assert parse_newick(newick) == t
    cert = json.loads(rest)
    assert cert["schema"] == "bmepoly.certificate/1"
    assert cert["value_x"] == str(2**6 * sum(lengths.values()))


def test_solve_methods_agree(tmp_path, capsys):
    d = random_matrix(7, random.Random(11))
    path = write_phylip(tmp_path, d)
    values = {}
    for method in ("exhaustive", "bnb"):
        code, out, _ = run(capsys, "solve", "--method", method, "--format", "json", path)
        assert code == 0
        values[method] = json.loads(out)["value_x"]
    assert values["exhaustive"] == values["bnb"]


def test_solve_three_taxa(tmp_path, capsys):
    p = tmp_path / "m3.phy"
    p.write_text("3\na 0 1 2\nb 1 0 3\nc 2 3 0\n")
    code, out, _ = run(capsys, "solve", str(p), "--format", "text")
    assert code == 0
    assert "(a,b,c);" in out and "value d.x 6" in out


def test_solve_reports_bad_cell(tmp_path, capsys):
    p = tmp_path / "bad.phy"
    p.write_text("3\na 0 1 2\nb 1 0 -3\nc 2 -3 0\n")
    code, _, err = run(capsys, "solve", str(p))
    assert code == 3
    assert "(b, c)" in err


def test_solve_missing_file(capsys):
    code, _, _ = run(capsys, "solve", "/nonexistent/m.phy")
    assert code == 3


def test_exhaustive_guard(tmp_path, capsys):
    d = random_matrix(11, random.Random(1))
    code, _, err = run(capsys, "solve", "--method", "exhaustive", write_phylip(tmp_path, d))
    assert code == 4
    assert "--force" in err


def test_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--method", "magic", "x"])
    assert exc.value.code == 2


def test_stats(capsys):
    code, out, _ = run(capsys, "stats", "-n", "6", "--verify", "--format", "json")
    assert code == 0
    data = json.loads(out)
    fams = {(r["family"], tuple(r.get("sizes", ()))): r for r in data["families"]}
    assert fams[("caterpillar", ())]["count"] == 15
    assert fams[("intersecting-cherry", ())]["verified"]["tight"] == [30]
    assert fams[("split", (3, 3))]["count"] == 10
    assert all(r["ok"] for r in data["families"])


def test_stats_formula_only(capsys):
    code, out, _ = run(capsys, "stats", "-n", "20", "--format", "json")
    assert code == 0
    assert json.loads(out)["split_facets"] == 2**19 - 190 - 21


def test_stats_guard(capsys):
    code, _, _ = run(capsys, "stats", "-n", "9", "--verify")
    assert code == 4


def test_certify(capsys):
    code, out, _ = run(capsys, "certify", "((1,2),(3,4),(5,6));", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["formula_count"] == 24 and data["dimension"] == 9 and data["certified"]


def test_certify_nonbinary(capsys):
    code, _, err = run(capsys, "certify", "(1,2,(3,4,5));")
    assert code == 3
    assert "binary" in err


def test_certify_all_small(capsys):
    code, out, _ = run(capsys, "certify", "--all", "-n", "6", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["trees"] == 105 and data["certified"] == 105 and data["count_matches"] == 105


def test_phi(capsys):
    code, out, _ = run(capsys, "phi", "(({1},{2}),{3})", "--root", "4")
    assert code == 0 and out.strip() == "(1,2,(3,4));"
    code, out, _ = run(capsys, "phi", "({1,2,3})", "--root", "4")
    assert out.strip() == "(1,2,3,4);"
    code, out, _ = run(capsys, "phi", "--fibers", "-n", "5", "--format", "json")
    fibers = json.loads(out)["fibers"]
    assert len(fibers) == 15 and set(fibers.values()) == {8}


def test_phi_parse_error(capsys):
    code, _, _ = run(capsys, "phi", "(({1},{2}),{3}", "--root", "4")
    assert code == 3


def test_facets(capsys):
    code, out, _ = run(capsys, "facets", "-n", "6", "--family", "split")
    lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert len(lines) == 10 and all(ln.endswith("<= 16") for ln in lines)
    code, out, _ = run(capsys, "facets", "-n", "6", "--tight", "((1,2),(3,4),(5,6));", "--format", "json")
    assert json.loads(out)["count"] == 24
    code, out, _ = run(capsys, "facets", "-n", "5", "--family", "cyclic", "--format", "json")
    data = json.loads(out)
    assert data["count"] == 12 and {q["rhs"] for q in data["inequalities"]} == {"13"}


def test_facets_unknown_family(capsys):
    code, _, _ = run(capsys, "facets", "-n", "6", "--family", "bogus")
    assert code == 3


def test_json_outputs_are_deterministic(tmp_path, capsys):
    d = random_matrix(8, random.Random(5))
    path = write_phylip(tmp_path, d)
    outs = [run(capsys, "solve", path, "--format", "json")[1] for _ in range(2)]
    assert outs[0] == outs[1]
