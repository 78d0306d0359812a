"""Regenerate data/synthetic_slice.nt from the built-in synthetic source graph."""

from __future__ import annotations

import argparse
from pathlib import Path

from rdfbench.graph import default_profile, extract_slice, serialize_ntriples
from rdfbench.synth import synthetic_source

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--companies", type=int, default=300, help="companies in the synthetic source")
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-companies", type=int, default=5000)
    ap.add_argument("-o", "--output", default=str(ROOT / "data" / "synthetic_slice.nt"))
    args = ap.parse_args()

    source = synthetic_source(args.companies, args.seed)
    out = extract_slice(source, default_profile(), args.max_companies)
    Path(args.output).write_text(serialize_ntriples(out), encoding="utf-8")
    print(f"{len(source)} source triples -> {len(out)} slice triples in {args.output}")


if __name__ == "__main__":
    main()
