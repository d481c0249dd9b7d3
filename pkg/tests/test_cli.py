import json
import os
import subprocess
import sys

import pytest

from ultramarkov.cli import fixture_names, main

# (fixture, command, format) triples with version-controlled reports
GOLDEN = [
    ("example1", "validate", "text"),
    ("example1", "injectivity", "text"),
    ("example1", "all", "text"),
    ("example2", "injectivity", "text"),
    ("example2", "diagram", "text"),
    ("example2_negative", "injectivity", "text"),
    ("example2_negative", "injectivity", "records"),
    ("example3", "injectivity", "text"),
    ("broken_map", "validate", "text"),
    ("broken_map", "validate", "records"),
]


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("fixture,command,fmt", GOLDEN)
def test_golden_reports(capsys, golden_dir, fixture, command, fmt):
    code, out, _ = run_cli(capsys, command, "--fixture", fixture, "--format", fmt)
    path = golden_dir / f"{fixture}.{command}.{fmt}.txt"
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(out)
    assert out == path.read_text()
    # a second run is byte-identical
    assert run_cli(capsys, command, "--fixture", fixture, "--format", fmt)[1] == out


@pytest.mark.parametrize("fixture,command,expected", [
    ("example1", "injectivity", 0),
    ("example2_negative", "injectivity", 1),
    ("broken_map", "validate", 1),
    ("broken_map", "injectivity", 1),
    ("example3", "validate", 0),
])
def test_exit_codes(capsys, fixture, command, expected):
    assert run_cli(capsys, command, "--fixture", fixture)[0] == expected


def test_example1_injectivity_witnesses(capsys):
    code, out, _ = run_cli(capsys, "injectivity", "--fixture", "example1")
    assert code == 0
    assert "inj.2 v1  witnesses: 1/6, 1/2" in out
    assert "inj.3 v1  witnesses: 1/2" in out


def test_negative_certified_condition_3(capsys):
    code, out, _ = run_cli(capsys, "injectivity", "--fixture", "example2_negative", "--format", "records")
    recs = [json.loads(line) for line in out.splitlines()]
    bad = [r for r in recs if r["verdict"] == "fails"]
    assert code == 1
    assert {(r["check"], r["subject"]) for r in bad} == {("inj.3", "v2"), ("inj.c", "v2")}


def test_undetermined_exit_2(capsys, tmp_path):
    # 1/4 -> 3/4 -> 9/4 -> 3/4 is a periodic orbit, so it never escapes
    cfg = tmp_path / "periodic.cfg"
    cfg.write_text("[map]\nambient = [0, 4)\nI_1 = [0, 1]: 3x\nI_2 = [2, 3]: 3x-6\n\n"
                   "[run]\nX = {}\npoint = 1/4\nbound = 8\n")
    assert run_cli(capsys, "validate", "--config", str(cfg))[0] == 0
    code, out, _ = run_cli(capsys, "markov-rep", "--config", str(cfg))
    assert code == 2 and "1 undetermined" in out


def test_input_errors(capsys, tmp_path):
    assert run_cli(capsys, "validate", "--fixture", "nope")[0] == 3
    assert run_cli(capsys, "validate")[0] == 3
    assert run_cli(capsys, "validate", "--config", str(tmp_path / "missing.cfg"))[0] == 3
    bad = tmp_path / "bad.cfg"
    bad.write_text("[map]\nambient = [0, 2)\nI_1 = [0, 0.5]: 2x\n")
    code, _, err = run_cli(capsys, "validate", "--config", str(bad))
    assert code == 3 and "line 3" in err
    assert run_cli(capsys, "injectivity", "--fixture", "example1", "--depth", "0")[0] == 3


def test_command_needs_map(capsys, tmp_path):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("[ultragraph]\nedge e1: v1 -> {2}\nedge e2: v2 -> {1}\n\n[run]\nX = {1}\n")
    assert run_cli(capsys, "lift", "--config", str(cfg))[0] == 0
    assert run_cli(capsys, "relations", "--config", str(cfg))[0] == 3


def test_export_matrices(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "markov-rep", "--fixture", "example1", "--depth", "3",
                         "--export-matrices", str(tmp_path))
    assert code == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert "basis.tsv" in names and "nu.s_e1.coo" in names


def test_fixture_listing(capsys):
    assert run_cli(capsys, "fixtures")[0] == 0
    assert fixture_names() == ["broken_map", "example1", "example2", "example2_negative", "example3"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "ultramarkov", "validate", "--fixture", "example1"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and proc.stdout.endswith("0 undetermined\n")
