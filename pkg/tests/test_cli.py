import json

import pytest

from contextuality import corpus
from contextuality.cli import main
from contextuality.io import dumps, loads


@pytest.fixture
def export(tmp_path):
    def write(name):
        path = tmp_path / f"{name}.json"
        path.write_text(dumps(corpus.get(name)))
        return str(path)
    return write


@pytest.mark.parametrize("name,ext,code", [
    ("EX2_P", "cbd2", 0),
    ("EX2_PPRIME", "cbd2", 2),
    ("EX3_P", "ks", 3),
    ("EX3_P", "bcbd2", 0),
    ("THM2_P5", "dnc", 2),
])
def test_classify_exit_codes(export, capsys, name, ext, code):
    assert main(["classify", export(name), "-e", ext]) == code
    out = json.loads(capsys.readouterr().out)
    assert out["extension"] == ext


def test_classify_text_with_witness(export, capsys):
    assert main(["classify", export("EX3_P"), "--format", "text", "--witness"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("cbd2: noncontextual")
    assert '"atoms"' in out


def test_classify_emit_lp(export, tmp_path, capsys):
    lp = tmp_path / "sys.lp"
    assert main(["classify", export("EX1_MARGINAL"), "--emit-lp", str(lp)]) == 2
    text = lp.read_text()
    assert text.strip() and "=" in text


def test_classify_rejects_invalid(tmp_path, capsys):
    data = {
        "observables": [{"id": "q", "outcomes": ["0", "1"]}],
        "contexts": [{"id": "c", "observables": ["q"]}],
        "tables": {"c": [{"outcome": ["0"], "p": "1/2"}]},
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(data))
    assert main(["classify", str(path)]) == 1
    assert "1/2" in capsys.readouterr().err


def test_missing_file(capsys):
    assert main(["classify", "/nonexistent/x.json"]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_validate(export, capsys):
    assert main(["validate", export("EX1")]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_transform_post_process_then_drop(export, tmp_path):
    pipeline = tmp_path / "pipe.json"
    pipeline.write_text(json.dumps([
        {"op": "post_process", "q": ["q1", "q2"], "id": "q3", "outcomes": ["0", "1"],
         "map": [{"from": ["0", "0"], "to": "1"}, {"from": ["0", "1"], "to": "0"},
                 {"from": ["1", "0"], "to": "0"}, {"from": ["1", "1"], "to": "1"}]},
        {"op": "marginalize", "drop": ["q2"]},
    ]))
    out = tmp_path / "out.json"
    assert main(["transform", export("EX3_P"), str(pipeline), "-o", str(out)]) == 0
    assert loads(out.read_text()) == corpus.get("EX3_PPRIME")
    assert main(["classify", str(out), "-e", "cbd2"]) == 2


def test_transform_with_corpus_reference(export, tmp_path, capsys):
    pipeline = tmp_path / "pipe.json"
    pipeline.write_text(json.dumps({"steps": [{"op": "product", "with": "EX4_DET"}]}))
    assert main(["transform", export("EX4_COIN"), str(pipeline)]) == 0
    b = loads(capsys.readouterr().out)
    assert len(b.contexts) == len(corpus.get("EX4_COIN").contexts) * len(corpus.get("EX4_DET").contexts)


def test_examples(capsys, tmp_path):
    assert main(["examples", "--list"]) == 0
    names = capsys.readouterr().out.split()
    assert len(names) >= 15 and "THM2_P5" in names
    assert main(["examples", "--name", "NOPE"]) == 1
    out = tmp_path / "pr.json"
    assert main(["examples", "--name", "THM2_P5", "-o", str(out)]) == 0
    assert loads(out.read_text()) == corpus.get("THM2_P5")


def test_audit_json(capsys):
    assert main(["audit", "-e", "cbd1", "--axiom", "Nestedness", "--format", "json"]) == 0
    (r,) = json.loads(capsys.readouterr().out)
    assert r["outcome"] == "violated" and r["witness"]


def test_audit_canonical_independence_uses_witness(capsys):
    assert main(["audit", "-e", "cbcbd2-lifted", "--axiom", "Independence"]) == 0
    assert "violated" in capsys.readouterr().out


def test_audit_fuzz_text(capsys):
    assert main(["audit", "-e", "cbd2", "--axiom", "Nestedness", "--trials", "20", "--fuzz-only"]) == 0
    assert "no-counterexample in 20 trials" in capsys.readouterr().out


def test_table1_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["table1", "--trials", "3", "--seed", "1", "-o", str(a)]) == 0
    assert main(["table1", "--trials", "3", "--seed", "1", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert "∅" in a.read_text()


def test_chain(capsys):
    assert main(["chain", "--which", "thm2"]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    assert last == "final behavior isomorphic to the PR box: True; KS verdict: contextual"
    assert main(["chain", "--which", "thm3", "--format", "json"]) == 0
    assert "first_violation" in json.loads(capsys.readouterr().out)


def test_join_closure_flag(export, capsys):
    assert main(["classify", export("EX3_P"), "-e", "cbcbd2-lifted", "--join-closure"]) == 2
    assert main(["classify", export("EX3_P"), "-e", "cbd2", "--join-closure"]) == 1
    assert "only applies" in capsys.readouterr().err
