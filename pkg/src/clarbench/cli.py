"""Command-line interface: ingest, metrics, quality, pipeline, clustereval, serve."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any

from . import ingest as ingest_mod
from .clustereval import ClusterAssignment, judge_pairs, sample_pairs, tally_significance
from .gateway import ChatClient, load_backends
from .model import read_contributions, read_records, write_contributions
from .pipeline import (
    PipelineConfig,
    clarification_diagnostics,
    corpus_stats,
    run_corpus,
    triples_from_event_rows,
)
from .quality import FitConfig, LikelihoodForm, QualityDataset, fit_mle
from .textmetrics import corpus_agreement


def _write_json(path: str | None, data: dict[str, Any]) -> None:
    text = json.dumps(data, ensure_ascii=False, indent=2, sort_keys=True)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_ingest(args: argparse.Namespace) -> int:
    cfg = ingest_mod.IngestConfig(
        min_chars=args.min_chars,
        max_chars=args.max_chars,
        sample_size=args.sample,
        seed=args.seed,
    )
    rows = ingest_mod.read_raw_rows(args.input)
    corpus, summary = ingest_mod.prepare_corpus(rows, cfg)
    if args.sample is not None:
        corpus, warnings = ingest_mod.stratified_sample(corpus, cfg)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
    write_contributions(args.out, corpus)
    _write_json(args.summary, summary.to_dict())
    return 0


def _cmd_metrics_agree(args: argparse.Namespace) -> int:
    corpus = {c.id: c for c in read_contributions(args.corpus)}
    by_id_a = {r.contribution_id: r for r in read_records(args.a)}
    by_id_b = {r.contribution_id: r for r in read_records(args.b)}
    shared = sorted(set(by_id_a) & set(by_id_b) & set(corpus))
    pairs = [(by_id_a[cid], by_id_b[cid], corpus[cid]) for cid in shared]
    lambdas = tuple(sorted({0.5, 1.0, args.overlap_lambda}))
    report = corpus_agreement(pairs, lambdas=lambdas, window_k=args.k)
    _write_json(args.out, report.to_dict())
    return 0


def _cmd_quality_fit(args: argparse.Namespace) -> int:
    dataset = QualityDataset.from_jsonl(args.events)
    form = LikelihoodForm.PAPER_PRODUCT if args.form == "paper" else LikelihoodForm.STANDARD_CENSORED
    cfg = FitConfig(max_iters=args.max_iters, seed=args.seed)
    result = fit_mle(dataset, cfg, form)
    _write_json(args.out, result.to_dict())
    return 0


def _load_pipeline_setup(path: str) -> tuple[PipelineConfig, ChatClient]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    backends = {}
    from .gateway.config import backend_from_dict

    for entry in raw["backends"]:
        cfg = backend_from_dict(entry)
        backends[cfg.name] = cfg
    pipe_cfg = PipelineConfig(
        stage_backends=raw["stages"],
        max_parallel=raw.get("max_parallel", 4),
        checkpoint_interval=raw.get("checkpoint_interval", 10),
        language=raw.get("language", "fr"),
        one_shot=raw.get("one_shot", False),
        seed=raw.get("seed", 0),
        run_id=raw.get("run_id", "pipeline"),
    )
    return pipe_cfg, ChatClient(backends)


def _cmd_pipeline_run(args: argparse.Namespace) -> int:
    corpus = list(read_contributions(args.corpus))
    pipe_cfg, client = _load_pipeline_setup(args.config)
    report = run_corpus(corpus, pipe_cfg, client, args.out, force_resume=args.force_resume)
    print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True))
    return 0


def _cmd_pipeline_stats(args: argparse.Namespace) -> int:
    corpus = {c.id: c for c in read_contributions(args.corpus)}
    stats = corpus_stats(read_records(args.records), corpus)
    _write_json(args.out, stats.to_dict())
    return 0


def _cmd_pipeline_diagnostics(args: argparse.Namespace) -> int:
    with open(args.events, encoding="utf-8") as fh:
        rows = [json.loads(line) for line in fh if line.strip()]
    report = clarification_diagnostics(triples_from_event_rows(rows))
    _write_json(args.out, report.to_dict())
    return 0


def _cmd_clustereval_run(args: argparse.Namespace) -> int:
    assignment_a = ClusterAssignment.from_jsonl(args.a)
    assignment_b = ClusterAssignment.from_jsonl(args.b)
    pairs_a, warn_a = sample_pairs(assignment_a, args.n, args.seed)
    pairs_b, warn_b = sample_pairs(assignment_b, args.n, args.seed + 1)
    for w in warn_a + warn_b:
        print(f"warning: {w}", file=sys.stderr)
    themes = sorted(set(pairs_a) & set(pairs_b))
    flat_a, flat_b = [], []
    for theme in themes:
        n = min(len(pairs_a[theme]), len(pairs_b[theme]))
        flat_a.extend(pairs_a[theme][:n])
        flat_b.extend(pairs_b[theme][:n])
    client = ChatClient(load_backends(args.backends))
    tally = judge_pairs(flat_a, flat_b, client, args.judge, seed=args.seed)
    tests = tally_significance(tally)
    _write_json(
        args.out,
        {
            "tally": tally.to_dict(),
            "tests": {name: rep.to_dict() for name, rep in tests.items()},
        },
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import os

    import uvicorn

    from .service import (
        ADMIN_TOKEN_ENV,
        CampaignService,
        EventJournal,
        campaign_config_from_dict,
        create_app,
    )

    corpus = list(read_contributions(args.corpus))
    with open(args.campaign, encoding="utf-8") as fh:
        cfg = campaign_config_from_dict(json.load(fh))
    client = None
    if args.backends:
        client = ChatClient(load_backends(args.backends))
    journal = EventJournal(args.journal)
    service = CampaignService(
        corpus,
        cfg,
        journal,
        client=client,
        admin_token=os.environ.get(ADMIN_TOKEN_ENV, ""),
    )
    app = create_app(service, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clarbench")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="prepare a working corpus from a raw export")
    p.add_argument("--input", required=True, help="CSV or JSONL with id, theme, text")
    p.add_argument("--out", required=True, help="output contributions JSONL")
    p.add_argument("--min-chars", type=int, default=30)
    p.add_argument("--max-chars", type=int, default=600)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--summary", default=None, help="write the corpus summary JSON here")
    p.set_defaults(func=_cmd_ingest)

    metrics = sub.add_parser("metrics", help="agreement metrics")
    msub = metrics.add_subparsers(dest="metrics_command", required=True)
    p = msub.add_parser("agree", help="agreement report between two annotation files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--corpus", required=True, help="contributions JSONL with the texts")
    p.add_argument("--lambda", dest="overlap_lambda", type=float, default=0.5)
    p.add_argument("--k", type=int, default=15)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_metrics_agree)

    quality = sub.add_parser("quality", help="clarification quality model")
    qsub = quality.add_subparsers(dest="quality_command", required=True)
    p = qsub.add_parser("fit", help="fit the censored-Beta model from an event log")
    p.add_argument("--events", required=True)
    p.add_argument("--form", choices=["paper", "censored"], default="paper")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_quality_fit)

    pipeline = sub.add_parser("pipeline", help="batch clarification pipeline")
    psub = pipeline.add_subparsers(dest="pipeline_command", required=True)
    p = psub.add_parser("run")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--force-resume", action="store_true")
    p.set_defaults(func=_cmd_pipeline_run)
    p = psub.add_parser("stats")
    p.add_argument("--records", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pipeline_stats)
    p = psub.add_parser("diagnostics")
    p.add_argument("--events", required=True, help="exported events JSONL with text pairs")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_pipeline_diagnostics)

    clueval = sub.add_parser("clustereval", help="clustering comparison via judge")
    csub = clueval.add_subparsers(dest="clustereval_command", required=True)
    p = csub.add_parser("run")
    p.add_argument("--a", required=True, help="cluster assignment JSONL (side A)")
    p.add_argument("--b", required=True, help="cluster assignment JSONL (side B)")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--backends", required=True, help="backend config JSON")
    p.add_argument("--judge", required=True, help="judge backend name")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_clustereval_run)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--campaign", required=True, help="campaign config JSON")
    p.add_argument("--journal", required=True, help="journal directory")
    p.add_argument("--backends", default=None, help="backend config JSON")
    p.add_argument("--ui", default=None, help="static frontend bundle directory")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
