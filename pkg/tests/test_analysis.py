from __future__ import annotations

import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from rdfbench.analysis import (
    DASH,
    category_stats,
    compute_tables,
    export,
    fmt_num,
    fmt_pct,
    import_records,
    latency_by_category,
    load_run,
    phase_stats,
    repair_stats,
    strategy_stats,
)
from rdfbench.records import BenchmarkRecord, RecordIOError

MINI_RUN = FIXTURES / "mini_run"
MINI_GOLDENS = FIXTURES / "mini_goldens"


def _rec(rid, category, **kw):
    base = dict(parse_ok=True, exec_ok=True)
    base.update(kw)
    return BenchmarkRecord(rid, 3, category, "llm", f"question {rid}", "ASK { }", **base)


HAND = [
    _rec("p3-generic-0000", "generic", answer_count=2, strategy_tags=["JOIN"], triple_count=3,
         llm_ms=10.0, exec_ms=1.0, pre_repair_valid=True),
    _rec("p3-generic-0001", "generic", empty=True, strategy_tags=["JOIN", "RAG"], triple_count=2, filter_count=1,
         llm_ms=20.0, exec_ms=3.0, repair_attempts=1),
    _rec("p3-counting-0000", "counting", answer_count=1, strategy_tags=["JOIN", "COUNT"], triple_count=3,
         uses_count=True, llm_ms=30.0, exec_ms=2.0, pre_repair_valid=True),
    _rec("p3-yesno-0000", "yesno", empty=True, strategy_tags=["ASK"], triple_count=2, llm_ms=5.0, exec_ms=4.0,
         repair_attempts=2),
]
HAND_REJECTED = [
    _rec("p3-difference-0000", "difference", parse_ok=False, exec_ok=False, repair_attempts=2,
         status="rejected", failure="irreparable"),
]


# -- formatting


@pytest.mark.parametrize("num,den,text", [
    (1, 8, "12.5"), (1, 3, "33.3"), (2, 3, "66.7"), (1, 16, "6.3"), (3, 16, "18.8"), (0, 5, "0.0"),
    (5, 5, "100.0"), (0, 0, DASH),
])
def test_fmt_pct_half_up(num, den, text):
    assert fmt_pct(num, den) == text


def test_fmt_num():
    assert fmt_num(0.05) == "0.1"
    assert fmt_num(2.25) == "2.3"
    assert fmt_num(16.25) == "16.3"
    assert fmt_num(None) == DASH


# -- hand-built set


def test_phase_stats_hand():
    (s,) = phase_stats(HAND)
    assert s.row() == ["3", "4", "4", "4", "2", "16.3", "2.5"]


def test_category_stats_hand():
    rows = {s.category: s.row() for s in category_stats(HAND)}
    assert rows["generic"] == ["Generic", "2", "2.5", "0.5", "0.0", "50.0", "S"]
    assert rows["counting"] == ["Counting", "1", "3.0", "0.0", "100.0", "0.0", "S"]
    assert rows["yesno"] == ["Yes/No", "1", "2.0", "0.0", "0.0", "100.0", "N"]
    assert rows["difference"] == ["Difference", "0", DASH, DASH, DASH, DASH, "C"]
    assert sum(s.n for s in category_stats(HAND)) == len(HAND)


def test_strategy_stats_hand():
    rows = {s.tag: s.row() for s in strategy_stats(HAND)}
    assert rows["JOIN"] == ["JOIN", "3", "100.0", "100.0", "33.3"]
    assert rows["COUNT"] == ["COUNT", "1", "100.0", "100.0", "0.0"]
    assert rows["RAG"] == ["RAG", "1", "100.0", "100.0", "100.0"]
    assert rows["FILTER"] == ["FILTER", "0", DASH, DASH, DASH]
    assert list(rows) == ["JOIN", "FILTER", "COUNT", "ORDER", "NEGATION", "ASK", "RAG"]


def test_repair_stats_hand():
    (s,) = repair_stats(HAND, HAND_REJECTED)
    assert (s.candidates, s.pre_valid, s.repairs, s.accepted) == (5, 2, 5, 4)
    assert s.row() == ["3", "40.0", "5", "100.0"]


def test_latency_csv_has_a_row_per_category():
    lines = latency_by_category(HAND).splitlines()
    assert lines[0] == "category,n,mean_llm_ms,median_llm_ms,mean_exec_ms"
    assert len(lines) == 10
    assert lines[1] == "generic,2,15.0,15.0,2.0"
    assert lines[-1] == "yesno,1,5.0,5.0,4.0"


# -- frozen mini run


def test_tables_match_frozen_goldens():
    tables = compute_tables(*load_run(MINI_RUN))
    golden = {p.relative_to(MINI_GOLDENS).as_posix(): p.read_text(encoding="utf-8")
              for p in MINI_GOLDENS.rglob("*.csv")}
    assert tables == golden


def test_counts_agree_with_raw_lines():
    # independent recount straight from the JSON lines
    raw = [json.loads(line) for line in (MINI_RUN / "phase3.jsonl").read_text().splitlines()]
    by_cat = Counter(d["category"] for d in raw)
    empties = Counter(d["category"] for d in raw if d["exec_ok"] and d["empty"])
    accepted, _ = load_run(MINI_RUN)
    for s in category_stats(accepted[3]):
        assert s.n == by_cat.get(s.category, 0)
        assert s.empty_n == empties.get(s.category, 0)
    tags = Counter(t for d in raw for t in d["strategy_tags"])
    for s in strategy_stats(accepted[3]):
        assert s.n == tags.get(s.tag, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_tables_are_order_independent(seed):
    accepted, rejected = load_run(MINI_RUN)
    rng = random.Random(seed)
    shuffled_acc = {ph: rng.sample(v, len(v)) for ph, v in accepted.items()}
    shuffled_rej = {ph: rng.sample(v, len(v)) for ph, v in rejected.items()}
    assert compute_tables(shuffled_acc, shuffled_rej) == compute_tables(accepted, rejected)


def test_export_import_fixpoint(tmp_path):
    records = import_records(MINI_RUN / "phase3.jsonl")
    export(records, tmp_path / "a.csv", "csv")
    back = import_records(tmp_path / "a.csv")
    assert back == records
    export(back, tmp_path / "b.jsonl", "jsonl")
    assert (tmp_path / "b.jsonl").read_bytes() == (MINI_RUN / "phase3.jsonl").read_bytes()
    with pytest.raises(ValueError):
        export(records, tmp_path / "c.xml", "xml")


def test_load_run_needs_phase_files(tmp_path):
    with pytest.raises(RecordIOError):
        load_run(tmp_path)
