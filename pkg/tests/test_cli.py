import io
import json
import subprocess
import sys

import pytest

from stripfol.cli import main
from stripfol.generate import fixture_text


def run(capsys, *argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("name", ["M0", "M1", "M2", "M3"])
def test_validate_fixtures(capsys, name):
    code, out, _ = run(capsys, "validate", name)
    assert (code, out) == (0, "ok\n")


def test_validate_m4(capsys):
    code, out, err = run(capsys, "validate", "M4", "--format", "json")
    assert code == 1
    assert not json.loads(out)["valid"]
    assert "overlapping arcs" in err


def test_analyze_m1(capsys):
    code, out, _ = run(capsys, "analyze", "M1")
    assert code == 0
    assert "special points: 2" in out and "hausdorff = false" in out
    code, out, _ = run(capsys, "analyze", "M1", "--format", "json")
    data = json.loads(out)
    assert data["special_points"] == ["g0", "g1"] and not data["hausdorff"]["holds"]
    assert data["nonseparated_pairs"] == [["g0", "g1"]]
    assert len(data["kaplan_components"]) == 2


def test_analyze_invalid_model(capsys):
    code, _, err = run(capsys, "analyze", "M4")
    assert code == 1 and "overlapping arcs" in err


def test_leafspace_formats(capsys):
    code, out, _ = run(capsys, "leafspace", "M1", "--format", "dot")
    assert code == 0 and out.count("style=dashed") == 1
    code, out, _ = run(capsys, "leafspace", "M0")
    doc = json.loads(out)
    assert len(doc["edges"]) == 2 and len(doc["vertices"]) == 1 and doc["nonseparated"] == []


def test_trivialize_then_verify(capsys, tmp_path):
    atlas = tmp_path / "atlas.json"
    code, _, _ = run(capsys, "trivialize", "M0", "-o", str(atlas))
    assert code == 0
    code, out, _ = run(capsys, "verify", str(atlas), "--grid", "21")
    report = json.loads(out)
    assert code == 0 and report["passed"] and report["failures"] == []
    code, out, _ = run(capsys, "verify", str(atlas), "--grid", "11", "--format", "csv")
    assert code == 0 and out.startswith("check,worst_residual,passed\n")


def test_verify_tampered_atlas(capsys, tmp_path):
    _, out, _ = run(capsys, "trivialize", "M1")
    doc = json.loads(out)
    doc["charts"] = doc["charts"][:-1]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", str(path), "--grid", "11")
    assert code == 2
    assert "coverage" in {f["check"] for f in json.loads(out)["failures"]}


def test_verify_seed_off_the_leaf(capsys, tmp_path):
    _, out, _ = run(capsys, "trivialize", "M1")
    doc = json.loads(out)
    doc["charts"][2]["x0"] = "5"  # g0 is the arc (-inf, 0)
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "verify", str(path))
    assert code == 3 and "does not lie on its leaf" in err


def test_verify_malformed_input(capsys, tmp_path):
    path = tmp_path / "junk.json"
    path.write_text("{not json")
    assert run(capsys, "verify", str(path))[0] == 3
    path.write_text(json.dumps({"schema": "stripfol.atlas/1"}))
    assert run(capsys, "verify", str(path))[0] == 3


def test_double_and_export(capsys):
    code, out, _ = run(capsys, "double", "M3")
    assert code == 0 and "boundary" not in out
    code, out, _ = run(capsys, "double", "M3", "--format", "json")
    assert len(json.loads(out)["strips"]) == 4
    code, out, _ = run(capsys, "export", "M1", "--format", "model")
    assert code == 0 and "glue s1.top.1 s2.bottom.1 keep" in out


def test_stdin_and_json_model_input(capsys, monkeypatch):
    code, out, _ = run(capsys, "export", "-", stdin=fixture_text("M2"), monkeypatch=monkeypatch)
    assert code == 0
    code, again, _ = run(capsys, "export", "-", "--format", "model", stdin=out, monkeypatch=monkeypatch)
    assert code == 0
    code, _, _ = run(capsys, "validate", "-", stdin=again, monkeypatch=monkeypatch)
    assert code == 0


@pytest.mark.parametrize(
    "argv",
    [
        ["validate", "no/such/file.model"],
        ["trivialize", "M0", "--spacing", "0"],
        ["trivialize", "M0", "--collar", "3/4"],
        ["verify", "x.json", "--grid", "2"],
        ["frobnicate", "M0"],
        [],
    ],
)
def test_usage_and_io_errors(capsys, argv):
    with pytest.raises(SystemExit) as info:
        code = main(argv)
        raise SystemExit(code)
    assert info.value.code == 3


def test_parse_error_reports_line(capsys, tmp_path):
    path = tmp_path / "bad.model"
    path.write_text("strip s1\nside s1 sideways open\n")
    code, _, err = run(capsys, "validate", str(path))
    assert code == 3 and ":2:" in err


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "export", "M0", "-o", str(tmp_path / "missing" / "out.json"))
    assert code == 3 and "cannot write" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "stripfol", "validate", "M0"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "ok\n"
