import json

import pytest

from cfgd import samples
from cfgd.cli import main
from cfgd.cycluit import import_cycluit
from cfgd.datalog import parse_program
from cfgd.treewidth import TreeEncoding, write_pace


@pytest.fixture
def files(tmp_path):
    (tmp_path / "p.dl").write_text(samples.REACH_FROM_A)
    (tmp_path / "u.dl").write_text(samples.UNREACHABLE_PAIR)
    (tmp_path / "table.facts").write_text(samples.TABLE_INSTANCE)
    (tmp_path / "yes.facts").write_text("A(1). R(1,2). B(3).\n")
    (tmp_path / "no.facts").write_text("A(1). R(1,2). B(2).\n")
    td, mapping = write_pace(samples.table_decomposition())
    (tmp_path / "t.td").write_text(td)
    (tmp_path / "t.map").write_text(mapping)
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check(files, capsys):
    code, out, _ = run(capsys, "check", "--program", files / "p.dl")
    assert code == 0 and "body_size: 6" in out
    code, out, _ = run(capsys, "check", "--program", files / "u.dl")
    assert code == 1 and "cfg: violated" in out


def test_stratify_tab_format(files, capsys):
    code, out, _ = run(capsys, "stratify", "--program", files / "p.dl", "--strata")
    assert code == 0
    assert dict(line.split("\t") for line in out.split("\n") if line) == {"T": "1", "Goal": "2"}


def test_eval_exit_codes(files, capsys):
    assert run(capsys, "eval", "--program", files / "p.dl", "--instance", files / "yes.facts")[0] == 0
    assert run(capsys, "eval", "--program", files / "p.dl", "--instance", files / "no.facts")[0] == 1
    code, _, err = run(capsys, "eval", "--program", files / "missing.dl", "--instance", files / "no.facts")
    assert code == 2 and "error" in err


def test_eval_fallback(files, capsys):
    code, out, err = run(capsys, "eval", "--program", files / "u.dl", "--instance", files / "no.facts")
    assert out.strip() in ("accept", "reject") and "warning" in err
    code, _, _ = run(capsys, "eval", "--program", files / "u.dl", "--instance", files / "no.facts",
                     "--fallback", "error")
    assert code == 2


def test_eval_stats(files, capsys):
    code, out, err = run(capsys, "eval", "--program", files / "p.dl", "--instance", files / "yes.facts", "--stats")
    assert code == 0 and "gates:" in err and "time_total:" in err


def test_encode_with_pace(files, capsys):
    code, out, _ = run(capsys, "encode", "--instance", files / "table.facts", "--td", files / "t.td",
                       "--mapping", files / "t.map")
    assert code == 0
    enc = TreeEncoding.from_json(out)
    assert enc.k == 2 and sum(f is not None for f in enc.facts) == 11


def test_provenance_json_labels(files, capsys):
    code, out, _ = run(capsys, "provenance", "--program", files / "p.dl", "--instance", files / "yes.facts")
    assert code == 0
    c = import_cycluit(out)
    assert sorted(c.labels.values()) == ["A(1)", "B(3)", "R(1,2)"]


def test_provenance_dot_to_file(files, capsys):
    out_path = files / "c.dot"
    code, _, _ = run(capsys, "provenance", "--program", files / "p.dl", "--instance", files / "yes.facts",
                     "--format", "dot", "--out", out_path)
    assert code == 0 and out_path.read_text().startswith("digraph")


def test_compile_export(files, capsys):
    code, out, _ = run(capsys, "compile", "--program", files / "p.dl", "--instance", files / "yes.facts")
    doc = json.loads(out)
    assert code == 0 and doc["transitions"]


def test_oracle_table(files, capsys):
    csv = files / "o.csv"
    code, out, _ = run(capsys, "oracle", "--program", files / "p.dl", "--instance", files / "yes.facts",
                       "--table", csv)
    assert code == 0 and "valuations: 8" in out
    assert len(csv.read_text().splitlines()) == 9


@pytest.mark.parametrize("argv,content", [
    (["cq", "--query", "q.cq"], "R(x,y), S(y,z)"),
    (["rpq", "--regex", "R.S-"], None),
    (["sac2rpq", "--file", "q.s2rpq"], "x y R\ny z S\n"),
    (["gnf", "--file", "f.gnf"], "(exists (x) (and (A x) (nguarded (A x) (not (B x)))))"),
])
def test_translate(files, capsys, monkeypatch, argv, content):
    monkeypatch.chdir(files)
    if content is not None:
        (files / argv[2]).write_text(content)
    code, out, _ = run(capsys, "translate", *argv)
    assert code == 0
    first, rest = out.split("\n", 1)
    assert first.startswith("% body_size=")
    p = parse_program(rest)
    assert int(first.split()[1].split("=")[1]) >= 1 and p.rules
