import json
import subprocess
import sys

import pytest

from serrekit.cli import main


POINT = {
    "ambient": {"kind": "projective", "dim": 2},
    "line_bundle": {"twist": 1},
    "rank": 2,
    "subscheme": {"mode": "global_ci", "F": "x0", "G": "x1"},
    "sections": {"2": ["1"]},
}


def write_doc(tmp_path, doc, name="in.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_build_verify_roundtrip(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    out = str(tmp_path / "bundle.json")
    code, _, _ = run_cli(capsys, "build", src, "-o", out)
    assert code == 0
    code, stdout, _ = run_cli(capsys, "verify", out)
    assert code == 0
    entries = json.loads(stdout)
    assert entries and all(e["passed"] for e in entries)
    names = {e["check"] for e in entries}
    assert {"section_relation", "dependency_locus", "defect_shape",
            "obstruction_cocycle", "correction_solves_obstruction",
            "determinant_raw", "determinant_corrected",
            "transition_cocycle"} <= names


def test_build_output_is_byte_deterministic(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run_cli(capsys, "build", src, "-o", str(a))[0] == 0
    assert run_cli(capsys, "build", src, "-o", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_text_format(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    code, stdout, _ = run_cli(capsys, "build", src, "--format", "text")
    assert code == 0
    assert "chart 2: meets=True" in stdout
    assert "verification:" in stdout
    assert "FAIL" not in stdout


def test_build_schema_failures(tmp_path, capsys):
    code, _, err = run_cli(capsys, "build", str(tmp_path / "missing.json"))
    assert code == 1 and "error[parse]" in err

    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    code, _, err = run_cli(capsys, "build", str(bad))
    assert code == 1 and "error[parse]" in err

    doc = dict(POINT, rank=1)
    code, _, err = run_cli(capsys, "build", write_doc(tmp_path, doc))
    assert code == 1 and "error[parse]" in err


def test_build_zero_sections_tagged_load_sections(tmp_path, capsys):
    doc = dict(POINT, sections={"2": ["0"]})
    code, _, err = run_cli(capsys, "build", write_doc(tmp_path, doc))
    assert code == 1
    assert "error[load_sections]" in err


def test_build_obstructed_exit_two_with_witness(tmp_path, capsys):
    doc = dict(POINT, line_bundle={"twist": 3})
    code, stdout, err = run_cli(capsys, "build", write_doc(tmp_path, doc))
    assert code == 2
    payload = json.loads(stdout)["error"]
    assert payload["type"] == "Obstructed"
    assert payload["multidegree"] == [-1, -1, -1]
    assert payload["component"] == 1
    assert payload["witness"]["sections"]
    assert "error[correct]" in err


def test_verify_catches_hand_edit(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    out = tmp_path / "bundle.json"
    assert run_cli(capsys, "build", src, "-o", str(out))[0] == 0
    doc = json.loads(out.read_text(encoding="utf-8"))
    doc["overlaps"]["0,1"]["corrected"][0][0]["num"] = "x1 + 7"
    edited = write_doc(tmp_path, doc, "edited.json")
    code, _, err = run_cli(capsys, "verify", edited)
    assert code == 1
    assert "determinant_corrected" in err


def test_verify_truncated_file(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    out = tmp_path / "bundle.json"
    assert run_cli(capsys, "build", src, "-o", str(out))[0] == 0
    trunc = tmp_path / "trunc.json"
    trunc.write_bytes(out.read_bytes()[:64])
    code, _, err = run_cli(capsys, "verify", str(trunc))
    assert code == 1 and "error[parse]" in err


def test_cohomology_dimensions(capsys):
    for spec, twist, degree, want in [("P2", -3, 2, "1"),
                                      ("P3", -2, 2, "0"),
                                      ("P2", 1, 0, "3")]:
        code, stdout, _ = run_cli(capsys, "cohomology", "--ambient", spec,
                                  "--twist", str(twist),
                                  "--degree", str(degree))
        assert code == 0
        assert stdout.strip() == want


def test_cohomology_rejects_affine(capsys):
    code, _, err = run_cli(capsys, "cohomology", "--ambient", "A2",
                           "--twist", "0", "--degree", "0")
    assert code == 1 and "error[parse]" in err


def test_compare_self_gives_identity(tmp_path, capsys):
    src = write_doc(tmp_path, POINT)
    out = str(tmp_path / "bundle.json")
    assert run_cli(capsys, "build", src, "-o", out)[0] == 0
    code, stdout, _ = run_cli(capsys, "compare", out, out)
    assert code == 0
    doc = json.loads(stdout)
    assert doc["xi"] == []
    for key, rows in doc["N"].items():
        for a, row in enumerate(rows):
            for b, entry in enumerate(row):
                assert entry["num"] == ("1" if a == b else "0")


def test_compare_twist_mismatch_exit_two(tmp_path, capsys):
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    assert run_cli(capsys, "build", write_doc(tmp_path, POINT, "ia.json"),
                   "-o", a)[0] == 0
    doc2 = dict(POINT, line_bundle={"twist": 2})
    assert run_cli(capsys, "build", write_doc(tmp_path, doc2, "ib.json"),
                   "-o", b)[0] == 0
    code, _, err = run_cli(capsys, "compare", a, b)
    assert code == 2 and "error[compare]" in err


def test_compare_different_ambient_exit_one(tmp_path, capsys):
    a = str(tmp_path / "a.json")
    b = str(tmp_path / "b.json")
    assert run_cli(capsys, "build", write_doc(tmp_path, POINT, "ia.json"),
                   "-o", a)[0] == 0
    line = {
        "ambient": {"kind": "projective", "dim": 3},
        "line_bundle": {"twist": 2},
        "rank": 2,
        "subscheme": {"mode": "global_ci", "F": "x0", "G": "x1"},
        "sections": {"2": ["1"], "3": ["1"]},
    }
    assert run_cli(capsys, "build", write_doc(tmp_path, line, "ib.json"),
                   "-o", b)[0] == 0
    code, _, err = run_cli(capsys, "compare", a, b)
    assert code == 1 and "error[compare]" in err


def test_module_entry_point_and_stdin(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "serrekit.cli", "cohomology",
         "--ambient", "P2", "--twist", "-3", "--degree", "2"],
        capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "1"
    proc = subprocess.run(
        [sys.executable, "-m", "serrekit.cli", "build", "-"],
        input=json.dumps(POINT), capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["rank"] == 2
