#!/usr/bin/env python3
"""Run the full clarification pipeline over a synthetic corpus with mock
backends and print the run report and corpus statistics."""

from __future__ import annotations

import argparse
import json
import tempfile

from clarbench.fixtures import build_pipeline_fixture, synthetic_corpus
from clarbench.gateway import ChatClient
from clarbench.model import read_records
from clarbench.pipeline import corpus_stats, run_corpus

import os


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=25)
    parser.add_argument("--out", default=None, help="output directory (default: temp)")
    args = parser.parse_args()

    corpus = synthetic_corpus(args.n)
    cfg, backends, transcripts = build_pipeline_fixture(corpus)
    client = ChatClient(backends, transcripts)

    out_dir = args.out or tempfile.mkdtemp(prefix="mock_pipeline_")
    report = run_corpus(corpus, cfg, client, out_dir)
    print(f"output in {out_dir}")
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))

    records = list(read_records(os.path.join(out_dir, "records.jsonl")))
    stats = corpus_stats(records, {c.id: c for c in corpus})
    print(json.dumps(stats.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
