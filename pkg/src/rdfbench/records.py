"""BenchmarkRecord and its JSONL/CSV encodings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

ACCEPTED = "accepted"
REJECTED = "rejected"

# Fields that carry wall-clock measurements; masked when comparing runs.
TIMING_FIELDS = ("llm_ms", "exec_ms")


@dataclass
class BenchmarkRecord:
    id: str
    phase: int
    category: str
    template_id: str
    question: str
    sparql: str
    parse_ok: bool = False
    exec_ok: bool = False
    empty: bool = False
    answer_count: int = 0
    answer_type: str = ""
    repair_attempts: int = 0
    pre_repair_valid: bool = False
    llm_ms: float = 0.0
    exec_ms: float = 0.0
    prompt_len: int = 0
    question_len: int = 0
    retrieval_scores: list[float] = field(default_factory=list)
    strategy_tags: list[str] = field(default_factory=list)
    guard_violations: list[str] = field(default_factory=list)
    entities: dict[str, str] = field(default_factory=dict)
    rewrites: list[str] = field(default_factory=list)
    status: str = ACCEPTED
    failure: Optional[str] = None
    diagnostics: list[str] = field(default_factory=list)
    triple_count: int = 0
    filter_count: int = 0
    uses_count: bool = False
    uses_order: bool = False

    def check(self) -> list[str]:
        problems = []
        if self.exec_ok and not self.parse_ok:
            problems.append("exec_ok without parse_ok")
        if self.empty and not self.exec_ok:
            problems.append("empty without exec_ok")
        if self.exec_ok and (self.answer_count == 0) != self.empty:
            problems.append("answer_count and empty disagree")
        if self.status == ACCEPTED and self.category == "counting" and self.answer_count != 1:
            problems.append("counting record without exactly one answer row")
        return problems

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


CSV_COLUMNS: tuple[str, ...] = tuple(f.name for f in fields(BenchmarkRecord))
_JSON_COLUMNS = {"retrieval_scores", "strategy_tags", "guard_violations", "entities", "rewrites", "diagnostics"}
_BOOL_COLUMNS = {f.name for f in fields(BenchmarkRecord) if f.type in ("bool", bool)}
_INT_COLUMNS = {f.name for f in fields(BenchmarkRecord) if f.type in ("int", int)}
_FLOAT_COLUMNS = {f.name for f in fields(BenchmarkRecord) if f.type in ("float", float)}


def masked(record: dict) -> dict:
    return {k: (None if k in TIMING_FIELDS else v) for k, v in record.items()}


class RecordIOError(OSError):
    error_class = "io-error"


def write_jsonl(path: Path | str, records: Iterable[BenchmarkRecord]) -> int:
    path = Path(path)
    n = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            for r in records:
                fh.write(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=False) + "\n")
                n += 1
    except OSError as exc:
        raise RecordIOError(f"cannot write {path}: {exc}") from exc
    return n


def read_jsonl(path: Path | str) -> list[BenchmarkRecord]:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            return [BenchmarkRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}") from exc


def _cell(name: str, value) -> str:
    if name in _JSON_COLUMNS:
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    return repr(value) if isinstance(value, float) else str(value)


def _parse_cell(name: str, text: str):
    if name in _JSON_COLUMNS:
        return json.loads(text)
    if name in _BOOL_COLUMNS:
        return text == "true"
    if name in _INT_COLUMNS:
        return int(text)
    if name in _FLOAT_COLUMNS:
        return float(text)
    if name == "failure":
        return text or None
    return text


def records_to_csv(records: Iterable[BenchmarkRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        d = r.to_dict()
        writer.writerow([_cell(c, d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(path: Path | str, records: Iterable[BenchmarkRecord]) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(records_to_csv(records), encoding="utf-8")
    except OSError as exc:
        raise RecordIOError(f"cannot write {path}: {exc}") from exc


def read_csv(path: Path | str) -> list[BenchmarkRecord]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}") from exc
    reader = csv.DictReader(io.StringIO(text))
    return [BenchmarkRecord.from_dict({k: _parse_cell(k, v) for k, v in row.items()}) for row in reader]
