"""Freeze a small mock run and its report tables as test fixtures.

Writes tests/fixtures/mini_run/ (phase JSONL files) and
tests/fixtures/mini_goldens/ (the tables computed from them). Re-run only
when the record schema or table format changes on purpose.
"""

from __future__ import annotations

import shutil
import tempfile
from pathlib import Path

from rdfbench.analysis import compute_tables, load_run
from rdfbench.config import load_config
from rdfbench.graph import default_profile, load_ntriples_file
from rdfbench.pipeline import run_pipeline

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"

MINI = [
    "templates_per_category=2",
    "seeds_per_template=2",
    "phase2_seeds_per_category=3",
    "phase3_targets_per_category=4",
    "provider.fault_rate=0.2",
]


def main() -> None:
    cfg = load_config(ROOT / "configs" / "mock.yaml", MINI, environ={})
    graph = load_ntriples_file(ROOT / cfg.slice)
    run_out = FIXTURES / "mini_run"
    gold_out = FIXTURES / "mini_goldens"
    with tempfile.TemporaryDirectory() as tmp:
        result = run_pipeline(cfg, graph, default_profile(), Path(tmp) / "run")
        shutil.rmtree(run_out, ignore_errors=True)
        run_out.mkdir(parents=True)
        for ph in (1, 2, 3):
            for name in (f"phase{ph}.jsonl", f"phase{ph}_rejected.jsonl"):
                shutil.copy(result.run_dir / name, run_out / name)
    shutil.rmtree(gold_out, ignore_errors=True)
    for rel, text in compute_tables(*load_run(run_out)).items():
        path = gold_out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    print(f"froze {run_out} and {gold_out}")


if __name__ == "__main__":
    main()
