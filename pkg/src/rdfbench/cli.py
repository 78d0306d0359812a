"""Command-line entry point: slice, run, analyze, export, review, query."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .analysis import (
    CATEGORY_COLUMNS,
    PHASE_COLUMNS,
    REPAIR_COLUMNS,
    STRATEGY_COLUMNS,
    compute_tables,
    export,
    import_records,
    load_run,
    render_table,
)
from .config import ConfigError, load_config
from .graph import default_profile, extract_slice, load_ntriples_file, serialize_ntriples
from .llm import GenerationExhausted, ProviderError
from .pipeline import BalanceError, ReviewError, apply_review, new_run_dir, read_edits, run_pipeline
from .records import RecordIOError, read_jsonl, write_csv, write_jsonl
from .retrieval import EmbeddingConfigError, EmbeddingError
from .sparql import ExecutionTimeout, QueryError, evaluate, parse_query

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_BALANCE = 4
EXIT_IO = 5


def _fail(code: int, error_class: str, message: str) -> int:
    print(json.dumps({"error": error_class, "message": message}), file=sys.stderr)
    return code


def _load_graph(path: str):
    diags: list = []
    try:
        graph = load_ntriples_file(path, diags)
    except OSError as exc:
        raise RecordIOError(f"cannot read {path}: {exc}") from exc
    for d in diags[:20]:
        print(f"warning: {path}:{d.line}: {d.reason}", file=sys.stderr)
    return graph


def cmd_slice(args) -> int:
    source = _load_graph(args.input)
    out = extract_slice(source, default_profile(), args.max_companies, shuffle_seed=args.shuffle_seed)
    text = serialize_ntriples(out)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text, encoding="utf-8")
        print(f"wrote {len(out)} triples to {args.output}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = load_config(args.config, args.set)
    graph = _load_graph(args.slice or cfg.slice)
    phases = (args.phase,) if args.phase else (1, 2, 3)
    if args.phase and args.phase > 1 and not args.from_run:
        raise ConfigError("--from-run", f"phase {args.phase} needs the run directory holding earlier phases")
    run_dir = new_run_dir(args.artifacts or cfg.artifacts_dir, args.run_name)
    echo = (lambda line: print(line, file=sys.stderr)) if args.verbose else None
    result = run_pipeline(cfg, graph, default_profile(), run_dir, phases=phases,
                          from_run=Path(args.from_run) if args.from_run else None, echo=echo)
    totals = result.summary["totals"]
    print(json.dumps({"run_dir": str(run_dir), "accepted": totals["accepted"],
                      "rejected": totals["rejected"], "by_phase": totals["by_phase"]}))
    return EXIT_OK


_TABLE_TITLES = {
    "tables/phase_stats.csv": ("Phase-level metrics", PHASE_COLUMNS),
    "tables/category_stats.csv": ("Structural complexity by category", CATEGORY_COLUMNS),
    "tables/strategy_stats.csv": ("Strategy-level robustness", STRATEGY_COLUMNS),
    "tables/repair_stats.csv": ("Pre-repair validity by phase", REPAIR_COLUMNS),
}


def cmd_analyze(args) -> int:
    import csv
    import io

    accepted, rejected = load_run(args.run_dir)
    tables = compute_tables(accepted, rejected)
    if args.out:
        out = Path(args.out)
        for rel, text in tables.items():
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        print(f"wrote {len(tables)} files under {out}")
    for rel, (title, _) in _TABLE_TITLES.items():
        rows = list(csv.reader(io.StringIO(tables[rel])))
        print(f"\n{title}\n" + render_table(rows[0], rows[1:]))
    return EXIT_OK


def cmd_export(args) -> int:
    records = import_records(args.input)
    export(records, args.output, args.format)
    print(f"wrote {len(records)} records to {args.output}")
    return EXIT_OK


def cmd_review(args) -> int:
    if not args.in_place and not args.out:
        raise ConfigError("--out", "review needs --out PATH or --in-place")
    records = read_jsonl(args.phase_file)
    kept, log = apply_review(records, read_edits(args.edits))
    target = Path(args.phase_file) if args.in_place else Path(args.out)
    write_jsonl(target, kept)
    if target.suffix == ".jsonl":
        write_csv(target.with_suffix(".csv"), kept)
    for line in log:
        print(line)
    print(f"{len(kept)} of {len(records)} records kept -> {target}")
    return EXIT_OK


def cmd_query(args) -> int:
    graph = _load_graph(args.slice)
    text = sys.stdin.read() if args.query in (None, "-") else Path(args.query).read_text(encoding="utf-8")
    try:
        ast = parse_query(text)
    except QueryError as exc:
        return _fail(EXIT_CONFIG, exc.error_class, str(exc))
    try:
        result, metrics = evaluate(ast, graph, timeout=args.timeout)
    except ExecutionTimeout as exc:
        return _fail(EXIT_CONFIG, exc.error_class, str(exc))
    sys.stdout.write(result.to_tsv())
    print(f"# rows={metrics.row_count} exec_ms={metrics.exec_ms:.2f}", file=sys.stderr)
    for d in metrics.diagnostics[:10]:
        print(f"# {d}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rdfbench", description="Schema-grounded NL-to-SPARQL benchmark construction.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("slice", help="extract the company mini-slice from an N-Triples dump")
    s.add_argument("input")
    s.add_argument("-o", "--output", default="-")
    s.add_argument("-n", "--max-companies", type=int, default=5000)
    s.add_argument("--shuffle-seed", type=int, default=None)
    s.set_defaults(func=cmd_slice)

    r = sub.add_parser("run", help="run pipeline phases")
    r.add_argument("--config", default=None)
    r.add_argument("--run-name", default="run")
    r.add_argument("--phase", type=int, choices=(1, 2, 3), default=None)
    r.add_argument("--from-run", default=None)
    r.add_argument("--slice", default=None)
    r.add_argument("--artifacts", default=None)
    r.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("analyze", help="recompute report tables from a run directory")
    a.add_argument("run_dir")
    a.add_argument("--out", default=None)
    a.set_defaults(func=cmd_analyze)

    e = sub.add_parser("export", help="convert records between JSONL and CSV")
    e.add_argument("input")
    e.add_argument("output")
    e.add_argument("--format", choices=("csv", "jsonl"), required=True)
    e.set_defaults(func=cmd_export)

    v = sub.add_parser("review", help="apply accept/reject/replace edits to a phase JSONL")
    v.add_argument("phase_file")
    v.add_argument("edits")
    g = v.add_mutually_exclusive_group()
    g.add_argument("--in-place", action="store_true")
    g.add_argument("--out", default=None)
    v.set_defaults(func=cmd_review)

    q = sub.add_parser("query", help="evaluate a SPARQL query against a slice (TSV output)")
    q.add_argument("slice")
    q.add_argument("query", nargs="?", default=None)
    q.add_argument("--timeout", type=float, default=20.0)
    q.set_defaults(func=cmd_query)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EmbeddingConfigError, ReviewError) as exc:
        return _fail(EXIT_CONFIG, getattr(exc, "error_class", "config-error"), str(exc))
    except (ProviderError, EmbeddingError, GenerationExhausted) as exc:
        return _fail(EXIT_PROVIDER, exc.error_class, str(exc))
    except BalanceError as exc:
        return _fail(EXIT_BALANCE, exc.error_class, str(exc))
    except (RecordIOError, OSError) as exc:
        return _fail(EXIT_IO, "io-error", str(exc))


if __name__ == "__main__":
    sys.exit(main())
