import json
import subprocess
import sys
from pathlib import Path

import pytest

from logconn.cli import main
from logconn.document import parse_document, serialize_document
from logconn.errors import DocumentError

SAMPLES = Path(__file__).resolve().parent.parent / "samples"

MINIMAL = {
    "ring": {"n": 2, "r": 2, "trunc": 3},
    "objects": {
        "C": {"type": "connection", "family": "relative", "rank": 1,
              "matrices": {"log1": [[0, 0, [[[1, 0], 1, 1]]]]}},
    },
    "jobs": [{"command": "check", "args": {"connection": "C"}}],
}


def write(tmp_path, doc, name="doc.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc, indent=2))
    return p


def run(argv, capsys):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr()


def test_parse_minimal():
    doc = parse_document(json.dumps(MINIMAL))
    C = doc.objects["C"]
    assert C.rank == 1 and doc.ring.trunc == 3
    assert doc.jobs == [{"command": "check", "args": {"connection": "C"}}]


def test_dangling_reference_diagnostic():
    bad = dict(MINIMAL, jobs=[{"command": "check", "args": {"connection": "C9"}}])
    text = json.dumps(bad, indent=2)
    with pytest.raises(DocumentError) as info:
        parse_document(text)
    err = info.value
    assert "dangling" in str(err) and "C9" in str(err)
    assert err.line == next(i for i, ln in enumerate(text.splitlines(), 1) if '"C9"' in ln)
    assert err.column is not None


def test_inadmissible_monomial_diagnostic():
    bad = json.loads(json.dumps(MINIMAL))
    bad["objects"]["C"]["matrices"]["log1"] = [[0, 0, [[[1, 1], 1, 1]]]]
    with pytest.raises(DocumentError) as info:
        parse_document(json.dumps(bad))
    assert "inadmissible" in str(info.value)
    assert "objects.C" in str(info.value.path)


def test_syntax_error_has_position():
    with pytest.raises(DocumentError) as info:
        parse_document('{"ring": {"n": 2,\n  "r": }')
    assert info.value.line == 2 and info.value.column is not None


@pytest.mark.parametrize("name", ["demo.json", "counterexamples.json"])
def test_serialize_round_trip(name):
    text = (SAMPLES / name).read_text()
    once = serialize_document(parse_document(text))
    twice = serialize_document(parse_document(once))
    assert once == twice
    assert json.loads(once) == json.loads(text)


def test_demo_exit_zero_and_deterministic(tmp_path, capsys):
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    code1, _ = run(["run", "--input", SAMPLES / "demo.json", "--output", out1], capsys)
    code2, _ = run(["run", "--input", SAMPLES / "demo.json", "--output", out2], capsys)
    assert code1 == code2 == 0
    assert out1.read_bytes() == out2.read_bytes()
    reports = json.loads(out1.read_text())["reports"]
    assert all(r["verdict"] in ("pass", "ok") for r in reports)


def test_counterexamples_exit_one(capsys):
    code, cap = run(["run", "--input", SAMPLES / "counterexamples.json"], capsys)
    assert code == 1
    reports = json.loads(cap.out)["reports"]
    check = next(r for r in reports if r["command"] == "check")
    assert check["verdict"] == "fail"
    assert check["certificates"]["witness"] == [[0, 0, 1, 1]]
    kc = next(r for r in reports if r["command"] == "kernel-cokernel")
    assert kc["verdict"] == "error" and "not nilpotent" in kc["message"]


def test_parse_error_exit_two(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{")
    code, cap = run(["check", "--input", p], capsys)
    assert code == 2 and "syntax error" in cap.err
    code, _ = run(["check", "--input", tmp_path / "missing.json"], capsys)
    assert code == 2
    code, _ = run(["no-such-command", "--input", p], capsys)
    assert code == 2


def test_integrability_failure_reported(tmp_path, capsys):
    doc = {"ring": {"n": 3, "r": 3, "trunc": 3},
           "objects": {"C": {"type": "connection", "family": "absolute", "rank": 1,
                             "matrices": {"log1": [[0, 0, [[[0, 1, 0], 1, 1]]]]}}},
           "jobs": [{"command": "check", "args": {"connection": "C"}}]}
    code, cap = run(["run", "--input", write(tmp_path, doc)], capsys)
    assert code == 1
    rep = json.loads(cap.out)["reports"][0]
    assert rep["verdict"] == "fail" and rep["certificates"]["integrable"] is False
    assert rep["certificates"]["failing_pair"] == ["log2", "log1"]


def test_subcommand_and_bindings(tmp_path, capsys):
    p = write(tmp_path, MINIMAL)
    code, cap = run(["reduce", "--input", p], capsys)
    assert code == 0
    rep = json.loads(cap.out)["reports"][0]
    assert rep["command"] == "reduce" and rep["certificates"]["zero"]
    code, cap = run(["normal-form", "--input", p, "--arg", "connection=C", "--arg", "pivot=1"], capsys)
    assert code == 0
    assert json.loads(cap.out)["reports"][0]["certificates"]["defining_equation_zero"]


def test_trunc_override(tmp_path, capsys):
    doc = json.loads(json.dumps(MINIMAL))
    doc["objects"]["C"]["matrices"]["log1"][0][2].append([[3, 0], 1, 1])
    p = write(tmp_path, doc)
    code, cap = run(["run", "--input", p, "--trunc", "2"], capsys)
    assert code == 0
    rep = json.loads(cap.out)["reports"][0]
    assert rep["ring"]["trunc"] == 2
    parsed = parse_document(json.dumps(doc), trunc=2)
    assert parsed.objects["C"].matrix("log1").max_degree() == 1


def test_text_format(capsys):
    code, cap = run(["run", "--input", SAMPLES / "demo.json", "--format", "text"], capsys)
    assert code == 0
    lines = cap.out.strip().splitlines()
    assert lines[-1].endswith("all passed")
    assert any("bicomplex-verify" in ln and "PASS" in ln for ln in lines)


def test_bicomplex_verify_unit(tmp_path, capsys):
    doc = {"ring": {"n": 2, "r": 2, "trunc": 3},
           "objects": {"U": {"type": "connection", "family": "absolute", "rank": 1, "matrices": {}}},
           "jobs": [{"command": "bicomplex-verify", "args": {"connection": "U", "u_trunc": 2}}]}
    code, cap = run(["run", "--input", write(tmp_path, doc)], capsys)
    assert code == 0
    rep = json.loads(cap.out)["reports"][0]
    assert rep["certificates"]["verdict"] == "equal on stabilized degrees"


def test_stdin_and_console_script(tmp_path):
    text = json.dumps(MINIMAL)
    proc = subprocess.run([sys.executable, "-m", "logconn.cli", "check", "--input", "-"],
                          input=text, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["summary"]["passed"] is True


def test_thread_cap_does_not_change_output(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("LOGCONN_THREADS", "1")
    _, serial = run(["run", "--input", SAMPLES / "demo.json"], capsys)
    monkeypatch.setenv("LOGCONN_THREADS", "4")
    _, parallel = run(["run", "--input", SAMPLES / "demo.json"], capsys)
    assert serial.out == parallel.out
