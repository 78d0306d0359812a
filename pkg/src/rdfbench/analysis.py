"""Report tables and figure data computed from record streams.

All statistics are order-independent functions of the records. Percentages
are rendered with one decimal, rounding half up; a zero denominator renders
as ``--``.
"""

from __future__ import annotations

import csv
import io
import json
import statistics
from collections import Counter
from dataclasses import asdict, dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .policy import REGISTRY, STRATEGY_TAGS, Category
from .records import ACCEPTED, BenchmarkRecord, RecordIOError, read_csv, read_jsonl, write_csv, write_jsonl

DASH = "--"


def pct(num: int, den: int) -> Optional[float]:
    return None if den == 0 else 100.0 * num / den


def fmt_pct(num: int, den: int) -> str:
    if den == 0:
        return DASH
    value = (Decimal(num) * 100 / Decimal(den)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP)
    return str(value)


def fmt_num(value: Optional[float]) -> str:
    if value is None:
        return DASH
    return str(Decimal(repr(value)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def _mean(values: Sequence[float]) -> Optional[float]:
    return sum(values) / len(values) if values else None


@dataclass(frozen=True)
class PhaseStats:
    phase: int
    total: int
    parse_ok: int
    exec_ok: int
    empty: int
    avg_llm_ms: Optional[float]
    avg_exec_ms: Optional[float]

    def row(self) -> list[str]:
        return [str(self.phase), str(self.total), str(self.parse_ok), str(self.exec_ok), str(self.empty),
                fmt_num(self.avg_llm_ms), fmt_num(self.avg_exec_ms)]


PHASE_COLUMNS = ["phase", "total", "parse_ok", "exec_ok", "empty", "avg_llm_ms", "avg_exec_ms"]


def phase_stats(records: Iterable[BenchmarkRecord]) -> list[PhaseStats]:
    by_phase: dict[int, list[BenchmarkRecord]] = {}
    for r in records:
        by_phase.setdefault(r.phase, []).append(r)
    out = []
    for phase in sorted(by_phase):
        rs = by_phase[phase]
        out.append(PhaseStats(
            phase=phase,
            total=len(rs),
            parse_ok=sum(r.parse_ok for r in rs),
            exec_ok=sum(r.parse_ok and r.exec_ok for r in rs),
            empty=sum(r.parse_ok and r.exec_ok and r.empty for r in rs),
            avg_llm_ms=_mean([r.llm_ms for r in rs if r.llm_ms is not None]),
            avg_exec_ms=_mean([r.exec_ms for r in rs if r.exec_ok and r.exec_ms is not None]),
        ))
    return out


@dataclass(frozen=True)
class CategoryStats:
    category: str
    n: int
    avg_triples: Optional[float]
    avg_filters: Optional[float]
    agg_n: int
    empty_n: int
    executed: int
    profile_type: str

    @property
    def agg_pct(self) -> Optional[float]:
        return pct(self.agg_n, self.n)

    @property
    def empty_pct(self) -> Optional[float]:
        return pct(self.empty_n, self.executed)

    def row(self) -> list[str]:
        return [REGISTRY[Category(self.category)].display, str(self.n), fmt_num(self.avg_triples),
                fmt_num(self.avg_filters), fmt_pct(self.agg_n, self.n), fmt_pct(self.empty_n, self.executed),
                self.profile_type]


CATEGORY_COLUMNS = ["category", "n", "triples", "filters", "agg_pct", "empty_pct", "type"]


def category_stats(records: Iterable[BenchmarkRecord]) -> list[CategoryStats]:
    groups: dict[str, list[BenchmarkRecord]] = {c.value: [] for c in Category}
    for r in records:
        groups.setdefault(r.category, []).append(r)
    out = []
    for c in Category:
        rs = groups[c.value]
        executed = [r for r in rs if r.parse_ok and r.exec_ok]
        parsed = [r for r in rs if r.parse_ok]
        out.append(CategoryStats(
            category=c.value,
            n=len(rs),
            avg_triples=_mean([r.triple_count for r in parsed]),
            avg_filters=_mean([r.filter_count for r in parsed]),
            agg_n=sum(r.uses_count or r.uses_order for r in rs),
            empty_n=sum(r.empty for r in executed),
            executed=len(executed),
            profile_type=REGISTRY[c].profile_type,
        ))
    return out


@dataclass(frozen=True)
class StrategyStats:
    tag: str
    n: int
    exec_n: int
    parse_n: int
    empty_n: int

    @property
    def exec_pct(self) -> Optional[float]:
        return pct(self.exec_n, self.n)

    @property
    def parse_pct(self) -> Optional[float]:
        return pct(self.parse_n, self.n)

    @property
    def empty_pct(self) -> Optional[float]:
        return pct(self.empty_n, self.exec_n)

    def row(self) -> list[str]:
        return [self.tag, str(self.n), fmt_pct(self.exec_n, self.n), fmt_pct(self.parse_n, self.n),
                fmt_pct(self.empty_n, self.exec_n)]


STRATEGY_COLUMNS = ["strategy", "n", "exec_pct", "parse_pct", "empty_pct"]


def strategy_stats(records: Iterable[BenchmarkRecord]) -> list[StrategyStats]:
    rs = list(records)
    out = []
    for tag in STRATEGY_TAGS:
        tagged = [r for r in rs if tag.value in r.strategy_tags]
        executed = [r for r in tagged if r.parse_ok and r.exec_ok]
        out.append(StrategyStats(
            tag=tag.value,
            n=len(tagged),
            exec_n=len(executed),
            parse_n=sum(r.parse_ok for r in tagged),
            empty_n=sum(r.empty for r in executed),
        ))
    return out


@dataclass(frozen=True)
class RepairStats:
    phase: int
    candidates: int
    pre_valid: int
    repairs: int
    accepted: int
    post_valid: int

    @property
    def pre_repair_pct(self) -> Optional[float]:
        return pct(self.pre_valid, self.candidates)

    @property
    def post_repair_pct(self) -> Optional[float]:
        return pct(self.post_valid, self.accepted)

    def row(self) -> list[str]:
        return [str(self.phase), fmt_pct(self.pre_valid, self.candidates), str(self.repairs),
                fmt_pct(self.post_valid, self.accepted)]


REPAIR_COLUMNS = ["phase", "pre_repair_pct", "repairs", "post_repair_pct"]


def repair_stats(accepted: Iterable[BenchmarkRecord], rejected: Iterable[BenchmarkRecord]) -> list[RepairStats]:
    """First-candidate validity over all candidates; post-repair validity over accepted records."""
    acc: dict[int, list[BenchmarkRecord]] = {}
    rej: dict[int, list[BenchmarkRecord]] = {}
    for r in accepted:
        acc.setdefault(r.phase, []).append(r)
    for r in rejected:
        rej.setdefault(r.phase, []).append(r)
    out = []
    for phase in sorted(set(acc) | set(rej)):
        a, j = acc.get(phase, []), rej.get(phase, [])
        every = a + j
        out.append(RepairStats(
            phase=phase,
            candidates=len(every),
            pre_valid=sum(r.pre_repair_valid for r in every),
            repairs=sum(r.repair_attempts for r in every),
            accepted=len(a),
            post_valid=sum(r.parse_ok and r.exec_ok for r in a),
        ))
    return out


# --------------------------------------------------------------------------
# CSV helpers


def table_csv(columns: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def render_table(columns: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(str(c)), *(len(str(r[i])) for r in rows)) if rows else len(c) for i, c in enumerate(columns)]
    lines = ["  ".join(str(c).ljust(w) for c, w in zip(columns, widths))]
    for r in rows:
        lines.append("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)


def _write(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RecordIOError(f"cannot write {path}: {exc}") from exc
    return path


# --------------------------------------------------------------------------
# Figure data


def latency_by_category(records: Sequence[BenchmarkRecord]) -> str:
    rows = []
    for c in Category:
        rs = [r for r in records if r.category == c.value]
        llm = [r.llm_ms for r in rs]
        rows.append([c.value, str(len(rs)), fmt_num(_mean(llm)),
                     fmt_num(statistics.median(llm) if llm else None),
                     fmt_num(_mean([r.exec_ms for r in rs]))])
    return table_csv(["category", "n", "mean_llm_ms", "median_llm_ms", "mean_exec_ms"], rows)


def answer_count_distribution(records: Sequence[BenchmarkRecord]) -> str:
    counts = Counter(r.answer_count for r in records if r.exec_ok)
    return table_csv(["answer_count", "n"], [[str(k), str(counts[k])] for k in sorted(counts)])


def retrieval_score_rows(records: Sequence[BenchmarkRecord]) -> str:
    rows = []
    for r in sorted(records, key=lambda r: r.id):
        for rank, s in enumerate(r.retrieval_scores, 1):
            rows.append([r.id, str(r.phase), r.category, str(rank), f"{s:.6f}"])
    return table_csv(["record_id", "phase", "category", "rank", "score"], rows)


def strategy_coverage(records: Sequence[BenchmarkRecord]) -> str:
    rows = []
    for c in Category:
        rs = [r for r in records if r.category == c.value]
        rows.append([c.value] + [str(sum(t.value in r.strategy_tags for r in rs)) for t in STRATEGY_TAGS])
    return table_csv(["category"] + [t.value for t in STRATEGY_TAGS], rows)


def parse_repair_by_category(accepted: Sequence[BenchmarkRecord], rejected: Sequence[BenchmarkRecord]) -> str:
    rows = []
    every = list(accepted) + list(rejected)
    for c in Category:
        rs = [r for r in every if r.category == c.value]
        repaired = sum(r.repair_attempts > 0 for r in rs)
        rows.append([c.value, str(len(rs)), fmt_pct(sum(r.pre_repair_valid for r in rs), len(rs)),
                     fmt_pct(repaired, len(rs))])
    return table_csv(["category", "candidates", "first_candidate_valid_pct", "repair_rate_pct"], rows)


def prompt_latency(records: Sequence[BenchmarkRecord]) -> str:
    rows = [[r.id, str(r.phase), r.category, str(r.prompt_len), f"{r.llm_ms:.3f}"]
            for r in sorted(records, key=lambda r: r.id)]
    return table_csv(["record_id", "phase", "category", "prompt_len", "llm_ms"], rows)


def error_types(rejected: Sequence[BenchmarkRecord], accepted: Sequence[BenchmarkRecord]) -> str:
    counts: Counter = Counter()
    for r in rejected:
        stage = next((d.split(": ", 1)[1] for d in r.diagnostics if d.startswith("failed-stage: ")), "unknown")
        counts[(r.phase, f"rejected:{r.failure}:{stage}")] += 1
    for r in accepted:
        if r.repair_attempts:
            counts[(r.phase, "repaired")] += 1
    rows = [[str(p), k, str(counts[(p, k)])] for p, k in sorted(counts)]
    return table_csv(["phase", "error_type", "n"], rows)


# --------------------------------------------------------------------------
# Reports


def compute_tables(accepted_by_phase: Mapping[int, Sequence[BenchmarkRecord]],
                   rejected_by_phase: Mapping[int, Sequence[BenchmarkRecord]]) -> dict[str, str]:
    accepted = [r for ph in sorted(accepted_by_phase) for r in accepted_by_phase[ph]]
    rejected = [r for ph in sorted(rejected_by_phase) for r in rejected_by_phase[ph]]
    final_phase = max(accepted_by_phase) if accepted_by_phase else 3
    final = list(accepted_by_phase.get(final_phase, []))
    return {
        "tables/phase_stats.csv": table_csv(PHASE_COLUMNS, [s.row() for s in phase_stats(accepted)]),
        "tables/category_stats.csv": table_csv(CATEGORY_COLUMNS, [s.row() for s in category_stats(final)]),
        "tables/strategy_stats.csv": table_csv(STRATEGY_COLUMNS, [s.row() for s in strategy_stats(final)]),
        "tables/repair_stats.csv": table_csv(REPAIR_COLUMNS, [s.row() for s in repair_stats(accepted, rejected)]),
        "figures_data/latency_by_category.csv": latency_by_category(final),
        "figures_data/answer_count_distribution.csv": answer_count_distribution(final),
        "figures_data/retrieval_scores.csv": retrieval_score_rows(accepted),
        "figures_data/strategy_coverage.csv": strategy_coverage(final),
        "figures_data/parse_repair_by_category.csv": parse_repair_by_category(accepted, rejected),
        "figures_data/prompt_latency.csv": prompt_latency(accepted),
        "figures_data/error_types.csv": error_types(rejected, accepted),
    }


def summarize(accepted_by_phase: Mapping[int, Sequence[BenchmarkRecord]],
              rejected_by_phase: Mapping[int, Sequence[BenchmarkRecord]]) -> dict:
    accepted = [r for ph in sorted(accepted_by_phase) for r in accepted_by_phase[ph]]
    rejected = [r for ph in sorted(rejected_by_phase) for r in rejected_by_phase[ph]]
    return {
        "phase_stats": [asdict(s) for s in phase_stats(accepted)],
        "repair_stats": [
            dict(asdict(s), pre_repair_pct=s.pre_repair_pct, post_repair_pct=s.post_repair_pct)
            for s in repair_stats(accepted, rejected)
        ],
        "totals": {
            "accepted": len(accepted),
            "rejected": len(rejected),
            "by_phase": {str(ph): len(v) for ph, v in sorted(accepted_by_phase.items())},
            "by_category": dict(sorted(Counter(r.category for r in accepted_by_phase.get(
                max(accepted_by_phase) if accepted_by_phase else 3, [])).items())),
        },
    }


def write_reports(out_dir: Path | str,
                  accepted_by_phase: Mapping[int, Sequence[BenchmarkRecord]],
                  rejected_by_phase: Mapping[int, Sequence[BenchmarkRecord]],
                  extra: Optional[dict] = None) -> dict:
    out_dir = Path(out_dir)
    written = []
    for rel, text in compute_tables(accepted_by_phase, rejected_by_phase).items():
        written.append(str(_write(out_dir / rel, text).relative_to(out_dir)))
    summary = summarize(accepted_by_phase, rejected_by_phase)
    summary["artifacts"] = sorted(written)
    if extra:
        summary.update(extra)
    _write(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def load_run(run_dir: Path | str) -> tuple[dict[int, list[BenchmarkRecord]], dict[int, list[BenchmarkRecord]]]:
    run_dir = Path(run_dir)
    accepted: dict[int, list[BenchmarkRecord]] = {}
    rejected: dict[int, list[BenchmarkRecord]] = {}
    for ph in (1, 2, 3):
        p = run_dir / f"phase{ph}.jsonl"
        if p.exists():
            accepted[ph] = [r for r in read_jsonl(p) if r.status == ACCEPTED]
            rp = run_dir / f"phase{ph}_rejected.jsonl"
            rejected[ph] = read_jsonl(rp) if rp.exists() else []
    if not accepted:
        raise RecordIOError(f"no phase JSONL files under {run_dir}")
    return accepted, rejected


def export(records: Sequence[BenchmarkRecord], path: Path | str, fmt: str) -> Path:
    path = Path(path)
    if fmt == "csv":
        write_csv(path, records)
    elif fmt == "jsonl":
        write_jsonl(path, records)
    else:
        raise ValueError(f"unknown export format {fmt!r}")
    return path


def import_records(path: Path | str) -> list[BenchmarkRecord]:
    path = Path(path)
    if path.suffix == ".csv":
        return read_csv(path)
    return read_jsonl(path)
