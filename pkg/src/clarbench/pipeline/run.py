"""Batch runner for the three-stage clarification pipeline.

Contributions are processed concurrently, each through extraction, structure
detection, and clarification against configured backends.  Completions are
checkpointed write-through so an interrupted run resumes without repeating
work, and the final output is merged in contribution-id order, which makes
runs byte-stable regardless of completion order.  Rather than aborting a long
run, unusable model output lands in a quarantine file.
"""

from __future__ import annotations

import json
import os
import threading
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

from ..model import (
    AnnotationRecord,
    ArgumentativeUnit,
    CharSpan,
    ClarificationEvent,
    Contribution,
    ErrorLabel,
    LabeledSegment,
    Phase,
    RecordStatus,
    SegmentType,
    Theme,
    encode_record,
    record_from_dict,
    validate_record,
)
from ..textmetrics.strings import rouge_l_f1
from ..gateway.client import ChatClient, GatewayError
from ..gateway.parsing import StageParseError, parse_stage_output
from ..gateway.prompts import Stage, render_prompt
from .align import AlignmentStatus, align_extractive

THEME_LABELS = {
    "fr": {
        Theme.TAXATION: "Fiscalité et dépenses publiques",
        Theme.ECOLOGY: "Transition écologique",
        Theme.STATE_ORGANIZATION: "Organisation de l'État et des services publics",
        Theme.DEMOCRACY: "Démocratie et citoyenneté",
    },
    "en": {
        Theme.TAXATION: "Taxation and Public Spending",
        Theme.ECOLOGY: "Ecological Transition",
        Theme.STATE_ORGANIZATION: "Organization of the State",
        Theme.DEMOCRACY: "Democracy and Citizenship",
    },
}


def theme_label(theme: Theme, language: str = "fr") -> str:
    return THEME_LABELS.get(language, THEME_LABELS["fr"])[theme]


@dataclass(frozen=True)
class PipelineConfig:
    stage_backends: dict[str, str]  # stage value -> backend name
    max_parallel: int = 4
    checkpoint_interval: int = 10
    language: str = "fr"
    one_shot: bool = False
    seed: int = 0
    run_id: str = "pipeline"

    def __post_init__(self) -> None:
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")
        for stage in (Stage.AU_EXTRACTION, Stage.AS_DETECTION, Stage.CLARIFICATION):
            if stage.value not in self.stage_backends:
                raise ValueError(f"no backend configured for stage {stage.value}")

    def backend_for(self, stage: Stage) -> str:
        return self.stage_backends[stage.value]


@dataclass(frozen=True)
class Quarantined:
    contribution_id: str
    stage: str
    reason: str
    raw: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "contribution_id": self.contribution_id,
            "stage": self.stage,
            "reason": self.reason,
            "raw": self.raw,
        }


class CheckpointCorruption(Exception):
    pass


def run_stage(
    stage: Stage,
    vars: dict[str, str],
    client: ChatClient,
    cfg: PipelineConfig,
):
    """Render, complete, and parse one stage; one re-prompt on a parse failure."""
    messages = render_prompt(stage, vars, language=cfg.language, one_shot=cfg.one_shot)
    backend = cfg.backend_for(stage)
    last: StageParseError | None = None
    for _ in range(2):
        completion = client.complete(backend, messages)
        try:
            return parse_stage_output(stage, completion.text), completion
        except StageParseError as exc:
            last = exc
    raise last


def _joined_with_map(text: str, spans: Sequence[CharSpan]) -> tuple[str, list[int | None]]:
    parts: list[str] = []
    idx: list[int | None] = []
    for i, span in enumerate(spans):
        if i:
            parts.append(" ")
            idx.append(None)
        for j in range(span.start, span.end):
            parts.append(text[j])
            idx.append(j)
    return "".join(parts), idx


def _split_joined_spans(
    spans: Sequence[CharSpan], idx: list[int | None]
) -> list[CharSpan]:
    """Map spans in AU-joined coordinates back to contribution coordinates."""
    out: list[CharSpan] = []
    for span in spans:
        run_start: int | None = None
        prev: int | None = None
        for p in range(span.start, span.end):
            orig = idx[p]
            if orig is None:
                if run_start is not None:
                    out.append(CharSpan(run_start, prev + 1))
                    run_start = None
                continue
            if run_start is None:
                run_start = orig
            prev = orig
        if run_start is not None:
            out.append(CharSpan(run_start, prev + 1))
    return out


@dataclass
class ContributionOutcome:
    record: AnnotationRecord | None
    quarantined: list[Quarantined] = field(default_factory=list)
    dropped_units: int = 0
    dropped_segments: int = 0
    fuzzy_units: int = 0


def process_contribution(
    contribution: Contribution, client: ChatClient, cfg: PipelineConfig
) -> ContributionOutcome:
    outcome = ContributionOutcome(record=None)
    cid = contribution.id
    label = theme_label(contribution.theme, cfg.language)

    try:
        units_raw, _ = run_stage(
            Stage.AU_EXTRACTION, {"contribution": contribution.text}, client, cfg
        )
    except StageParseError as exc:
        outcome.quarantined.append(Quarantined(cid, exc.stage.value, exc.reason, exc.raw))
        return outcome
    except GatewayError as exc:
        raise GatewayError(f"{cid}: {exc}") from exc

    units: list[ArgumentativeUnit] = []
    events: list[ClarificationEvent] = []
    for unit_text in units_raw:
        alignment = align_extractive(contribution.text, unit_text)
        if alignment.status is AlignmentStatus.FAILED:
            outcome.dropped_units += 1
            outcome.quarantined.append(
                Quarantined(cid, "au_alignment", "unit not extractive", unit_text)
            )
            continue
        if alignment.status is AlignmentStatus.FUZZY_FLAGGED:
            outcome.fuzzy_units += 1
        au_spans = tuple(alignment.spans)
        joined, idx_map = _joined_with_map(contribution.text, au_spans)

        try:
            segments_raw, _ = run_stage(
                Stage.AS_DETECTION,
                {"contribution": contribution.text, "argumentative unit": joined},
                client,
                cfg,
            )
        except StageParseError as exc:
            outcome.dropped_units += 1
            outcome.quarantined.append(Quarantined(cid, exc.stage.value, exc.reason, exc.raw))
            continue

        segments: list[LabeledSegment] = []
        cursor = 0
        for kind, seg_text in segments_raw:
            sub = joined[cursor:]
            if not sub.strip():
                outcome.dropped_segments += 1
                continue
            seg_align = align_extractive(sub, seg_text)
            if seg_align.status is AlignmentStatus.FAILED:
                outcome.dropped_segments += 1
                continue
            shifted = [CharSpan(s.start + cursor, s.end + cursor) for s in seg_align.spans]
            cursor = shifted[-1].end
            for piece in _split_joined_spans(shifted, idx_map):
                segments.append(LabeledSegment(piece, kind))
        if not segments:
            outcome.dropped_units += 1
            outcome.quarantined.append(
                Quarantined(cid, "as_alignment", "no segment aligned", joined)
            )
            continue

        by_kind: dict[SegmentType, list[str]] = {k: [] for k in SegmentType}
        for seg in segments:
            by_kind[seg.kind].append(contribution.text[seg.span.start : seg.span.end])

        try:
            parsed, completion = run_stage(
                Stage.CLARIFICATION,
                {
                    "contribution": contribution.text,
                    "theme": label,
                    "argumentative unit": joined,
                    "statements": "; ".join(by_kind[SegmentType.STATEMENT]),
                    "premises": "; ".join(by_kind[SegmentType.PREMISE]),
                    "solutions": "; ".join(by_kind[SegmentType.SOLUTION]),
                },
                client,
                cfg,
            )
        except StageParseError as exc:
            outcome.dropped_units += 1
            outcome.quarantined.append(Quarantined(cid, exc.stage.value, exc.reason, exc.raw))
            continue

        backend = cfg.backend_for(Stage.CLARIFICATION)
        au_ref = f"{cid}:{len(units)}"
        units.append(
            ArgumentativeUnit(
                spans=au_spans,
                segments=tuple(segments),
                clarification=parsed.text,
                source_model=backend,
            )
        )
        events.append(
            ClarificationEvent(
                au_ref=au_ref,
                backend=backend,
                attempt_index=1,
                accepted=True,
                observed_quality=rouge_l_f1(completion.text, parsed.text),
                error_labels=frozenset({ErrorLabel.MISFORMULATION})
                if parsed.preamble_stripped
                else None,
            )
        )

    if not units:
        if not outcome.quarantined:
            outcome.quarantined.append(
                Quarantined(cid, "pipeline", "no unit survived", "")
            )
        return outcome

    record = AnnotationRecord(
        contribution_id=cid,
        annotator_id=cfg.run_id,
        phase=Phase.AUTOMATIC,
        units=tuple(units),
        events=tuple(events),
        status=RecordStatus.COMPLETED,
    )
    violations = validate_record(record, contribution)
    if violations:
        outcome.quarantined.append(
            Quarantined(cid, "validation", "; ".join(v.invariant for v in violations), "")
        )
        return outcome
    outcome.record = record
    return outcome


@dataclass
class RunReport:
    n_contributions: int = 0
    n_records: int = 0
    n_units: int = 0
    segments: dict[str, int] = field(default_factory=dict)
    n_quarantined: int = 0
    dropped_units: int = 0
    dropped_segments: int = 0
    fuzzy_units: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_contributions": self.n_contributions,
            "n_records": self.n_records,
            "n_units": self.n_units,
            "segments": dict(sorted(self.segments.items())),
            "n_quarantined": self.n_quarantined,
            "dropped_units": self.dropped_units,
            "dropped_segments": self.dropped_segments,
            "fuzzy_units": self.fuzzy_units,
        }


class _Checkpoint:
    def __init__(self, out_dir: str, force: bool = False):
        self.dir = os.path.join(out_dir, "checkpoint")
        os.makedirs(self.dir, exist_ok=True)
        self.ids_path = os.path.join(self.dir, "processed_ids.txt")
        self.records_path = os.path.join(self.dir, "records.partial.jsonl")
        self.quarantine_path = os.path.join(self.dir, "quarantine.partial.jsonl")
        self.meta_path = os.path.join(self.dir, "meta.json")
        self.force = force
        self.processed: set[str] = set()
        self.counters: dict[str, dict[str, int]] = {}
        self._load()

    @staticmethod
    def _complete_lines(path: str) -> list[str]:
        if not os.path.exists(path):
            return []
        with open(path, "rb") as fh:
            blob = fh.read()
        if not blob:
            return []
        text = blob.decode("utf-8", errors="replace")
        lines = text.split("\n")
        # The final element is either "" (file ends with a newline) or a torn
        # line from a crash mid-write; drop it either way.
        lines = lines[:-1]
        return [l for l in lines if l]

    def _load(self) -> None:
        for line in self._complete_lines(self.ids_path):
            try:
                marker = json.loads(line)
                cid = marker["id"]
            except (json.JSONDecodeError, KeyError, TypeError):
                if self.force:
                    continue
                raise CheckpointCorruption(
                    f"corrupt marker line in {self.ids_path}; "
                    "rerun with force_resume to discard"
                )
            self.processed.add(cid)
            self.counters[cid] = {
                "fuzzy": marker.get("fuzzy", 0),
                "dropped_units": marker.get("dropped_units", 0),
                "dropped_segments": marker.get("dropped_segments", 0),
            }

    def records(self) -> list[dict[str, Any]]:
        out = []
        for line in self._complete_lines(self.records_path):
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                if not self.force:
                    raise CheckpointCorruption(
                        f"corrupt record line in {self.records_path}; "
                        "rerun with force_resume to discard"
                    )
        return out

    def quarantines(self) -> list[dict[str, Any]]:
        out = []
        for line in self._complete_lines(self.quarantine_path):
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError:
                if not self.force:
                    raise CheckpointCorruption(
                        f"corrupt quarantine line in {self.quarantine_path}; "
                        "rerun with force_resume to discard"
                    )
        return out

    def mark(self, cid: str, outcome: ContributionOutcome) -> None:
        if outcome.record is not None:
            with open(self.records_path, "a", encoding="utf-8") as fh:
                fh.write(encode_record(outcome.record) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        if outcome.quarantined:
            with open(self.quarantine_path, "a", encoding="utf-8") as fh:
                for q in outcome.quarantined:
                    fh.write(json.dumps(q.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        marker = {
            "id": cid,
            "fuzzy": outcome.fuzzy_units,
            "dropped_units": outcome.dropped_units,
            "dropped_segments": outcome.dropped_segments,
        }
        with open(self.ids_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(marker, ensure_ascii=False, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.processed.add(cid)
        self.counters[cid] = {
            "fuzzy": outcome.fuzzy_units,
            "dropped_units": outcome.dropped_units,
            "dropped_segments": outcome.dropped_segments,
        }


def run_corpus(
    corpus: Sequence[Contribution],
    cfg: PipelineConfig,
    client: ChatClient,
    out_dir: str,
    force_resume: bool = False,
) -> RunReport:
    """Run the full pipeline over a corpus, resumably, into ``out_dir``.

    Writes records.jsonl (sorted by contribution id), quarantine.jsonl, and
    report.json.  A prior interrupted run in the same directory is resumed;
    corrupted checkpoint data aborts unless ``force_resume`` is set.
    """
    os.makedirs(out_dir, exist_ok=True)
    ckpt = _Checkpoint(out_dir, force=force_resume)
    corpus_ids = {c.id for c in corpus}
    stray = ckpt.processed - corpus_ids
    if stray and not force_resume:
        raise CheckpointCorruption(
            f"checkpoint contains {len(stray)} ids not in the corpus; "
            "rerun with force_resume to discard"
        )

    pending = [c for c in corpus if c.id not in ckpt.processed]
    lock = threading.Lock()

    def handle(contribution: Contribution) -> None:
        outcome = process_contribution(contribution, client, cfg)
        with lock:
            ckpt.mark(contribution.id, outcome)

    if pending:
        with ThreadPoolExecutor(max_workers=cfg.max_parallel) as pool:
            futures = [pool.submit(handle, c) for c in pending]
            done, not_done = wait(futures, return_when=FIRST_EXCEPTION)
            for fut in done:
                exc = fut.exception()
                if exc is not None:
                    for other in not_done:
                        other.cancel()
                    raise exc

    # Finalize: merge checkpoint shards into sorted, byte-stable outputs.
    records = []
    seen: set[str] = set()
    for d in ckpt.records():
        rec = record_from_dict(d)
        if rec.contribution_id in ckpt.processed and rec.contribution_id not in seen:
            seen.add(rec.contribution_id)
            records.append(rec)
    records.sort(key=lambda r: r.contribution_id)
    quarantines = [
        q for q in ckpt.quarantines() if q["contribution_id"] in ckpt.processed
    ]
    quarantines.sort(key=lambda q: (q["contribution_id"], q["stage"], q["raw"]))

    with open(os.path.join(out_dir, "records.jsonl"), "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(encode_record(rec) + "\n")
    with open(os.path.join(out_dir, "quarantine.jsonl"), "w", encoding="utf-8") as fh:
        for q in quarantines:
            fh.write(json.dumps(q, ensure_ascii=False, sort_keys=True) + "\n")

    report = RunReport(n_contributions=len(corpus))
    report.n_records = len(records)
    seg_counts: dict[str, int] = {k.value: 0 for k in SegmentType}
    for rec in records:
        report.n_units += len(rec.units)
        for unit in rec.units:
            for seg in unit.segments:
                seg_counts[seg.kind.value] += 1
    report.segments = seg_counts
    report.n_quarantined = len(quarantines)
    for counters in ckpt.counters.values():
        report.fuzzy_units += counters["fuzzy"]
        report.dropped_units += counters["dropped_units"]
        report.dropped_segments += counters["dropped_segments"]
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def export_events(records: Iterable[AnnotationRecord]) -> list[dict[str, Any]]:
    """Flatten clarification events from pipeline records for the quality model."""
    rows = []
    for rec in records:
        for ev in rec.events:
            rows.append(
                {
                    "contribution_id": rec.contribution_id,
                    "au_ref": ev.au_ref,
                    "backend": ev.backend,
                    "attempt_index": ev.attempt_index,
                    "accepted": ev.accepted,
                    "observed_quality": ev.observed_quality,
                }
            )
    return rows
