from __future__ import annotations

import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from conftest import FIXTURES, ROOT, SLICE
from rdfbench.cli import main
from rdfbench.records import read_csv, read_jsonl

MINI_RUN = FIXTURES / "mini_run"


def _error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def _digest(directory) -> dict:
    return {p.relative_to(directory).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(directory.rglob("*")) if p.is_file()}


def test_query_from_argument_file(tmp_path, capsys):
    q = tmp_path / "q.rq"
    q.write_text("SELECT ?y WHERE { dbr:Airbus dbo:foundingYear ?y . }")
    assert main(["query", str(FIXTURES / "reference.nt"), str(q)]) == 0
    out = capsys.readouterr()
    assert out.out == '?y\n"1970"^^<http://www.w3.org/2001/XMLSchema#integer>\n'
    assert "rows=1" in out.err


def test_query_syntax_error_exit_code(tmp_path, capsys):
    q = tmp_path / "bad.rq"
    q.write_text("SELECT ?x WHERE {")
    assert main(["query", str(FIXTURES / "reference.nt"), str(q)]) == 2
    assert _error(capsys)["error"] == "syntax-error"


def test_query_from_stdin():
    proc = subprocess.run(
        [sys.executable, "-m", "rdfbench", "query", str(FIXTURES / "reference.nt"), "-"],
        input="ASK { dbr:Facebook dbo:location dbr:California . }", capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout == "true\n"


def test_slice_command(tmp_path, capsys):
    out = tmp_path / "s.nt"
    assert main(["slice", str(FIXTURES / "reference.nt"), "-o", str(out), "-n", "2"]) == 0
    text = out.read_text()
    companies = {line.split()[0] for line in text.splitlines() if "ontology/Company>" in line}
    assert len(companies) == 2


def test_missing_input_is_io_error(tmp_path, capsys):
    assert main(["slice", str(tmp_path / "nope.nt")]) == 5
    assert _error(capsys)["error"] == "io-error"


def test_run_phase_without_from_run_is_config_error(capsys):
    assert main(["run", "--config", str(ROOT / "configs" / "mock.yaml"), "--phase", "3"]) == 2
    err = _error(capsys)
    assert err["error"] == "config-error" and "--from-run" in err["message"]


def test_run_unknown_override(capsys):
    assert main(["run", "--config", str(ROOT / "configs" / "mock.yaml"), "--set", "nonsense=1"]) == 2
    assert "nonsense" in _error(capsys)["message"]


def test_run_balance_failure_exit_code(tmp_path, capsys):
    code = main(["run", "--config", str(ROOT / "configs" / "mock.yaml"), "--slice", str(SLICE),
                 "--artifacts", str(tmp_path), "--set", "categories=[yesno]", "--set", "repair_budget=0",
                 "--set", "provider.fault_rate=1.0", "--set", "phase3_targets_per_category=2",
                 "--set", "phase2_seeds_per_category=1", "--set", "templates_per_category=1",
                 "--set", "seeds_per_template=1", "--set", "candidate_budget_factor=1"])
    assert code == 4
    assert _error(capsys)["error"] == "balance-failure"


def test_run_small_end_to_end(tmp_path, capsys):
    code = main(["run", "--config", str(ROOT / "configs" / "mock.yaml"), "--slice", str(SLICE),
                 "--artifacts", str(tmp_path), "--run-name", "tiny", "--set", "categories=[generic, counting]",
                 "--set", "templates_per_category=1", "--set", "seeds_per_template=2",
                 "--set", "phase2_seeds_per_category=2", "--set", "phase3_targets_per_category=2"])
    assert code == 0
    info = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert info["by_phase"]["3"] == 4
    (run_dir,) = tmp_path.iterdir()
    assert run_dir.name.startswith("tiny_")
    assert len(read_jsonl(run_dir / "phase3.jsonl")) == 4


def test_analyze_is_read_only_without_out(tmp_path, capsys):
    run = tmp_path / "run"
    shutil.copytree(MINI_RUN, run)
    before = _digest(run)
    assert main(["analyze", str(run)]) == 0
    out = capsys.readouterr().out
    assert "Pre-repair validity by phase" in out and "Strategy-level robustness" in out
    assert _digest(run) == before


def test_analyze_out_matches_goldens(tmp_path, capsys):
    assert main(["analyze", str(MINI_RUN), "--out", str(tmp_path)]) == 0
    assert _digest(tmp_path) == _digest(FIXTURES / "mini_goldens")


def test_analyze_empty_dir_is_io_error(tmp_path, capsys):
    assert main(["analyze", str(tmp_path)]) == 5


def test_export_round_trip(tmp_path, capsys):
    csv_path = tmp_path / "p3.csv"
    assert main(["export", str(MINI_RUN / "phase3.jsonl"), str(csv_path), "--format", "csv"]) == 0
    assert len(read_csv(csv_path)) == len(read_jsonl(MINI_RUN / "phase3.jsonl"))
    back = tmp_path / "p3.jsonl"
    assert main(["export", str(csv_path), str(back), "--format", "jsonl"]) == 0
    assert back.read_bytes() == (MINI_RUN / "phase3.jsonl").read_bytes()


def test_review_in_place_and_out(tmp_path, capsys):
    phase = tmp_path / "phase2.jsonl"
    shutil.copy(MINI_RUN / "phase2.jsonl", phase)
    records = read_jsonl(phase)
    edits = tmp_path / "edits.jsonl"
    edits.write_text(json.dumps({"id": records[0].id, "action": "reject"}) + "\n")
    out = tmp_path / "reviewed.jsonl"
    assert main(["review", str(phase), str(edits), "--out", str(out)]) == 0
    assert len(read_jsonl(out)) == len(records) - 1
    assert len(read_csv(out.with_suffix(".csv"))) == len(records) - 1
    assert len(read_jsonl(phase)) == len(records)
    assert main(["review", str(phase), str(edits), "--in-place"]) == 0
    assert len(read_jsonl(phase)) == len(records) - 1


def test_review_errors(tmp_path, capsys):
    phase = tmp_path / "phase2.jsonl"
    shutil.copy(MINI_RUN / "phase2.jsonl", phase)
    edits = tmp_path / "edits.jsonl"
    edits.write_text(json.dumps({"id": "missing", "action": "reject"}) + "\n")
    assert main(["review", str(phase), str(edits), "--out", str(tmp_path / "o.jsonl")]) == 2
    assert _error(capsys)["error"] == "review-error"
    assert main(["review", str(phase), str(edits)]) == 2


def test_bad_subcommand_exits_nonzero():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code != 0
