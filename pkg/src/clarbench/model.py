"""Shared domain types for consultation contributions and their annotations.

Everything here is an immutable value object, safe to share across threads.
Records serialize to one JSON object per line; field names are snake_case and
character spans are ``[start, end]`` pairs of Unicode scalar offsets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Iterator


class Theme(Enum):
    """The four consultation themes."""

    TAXATION = "Taxation"
    ECOLOGY = "Ecology"
    STATE_ORGANIZATION = "StateOrganization"
    DEMOCRACY = "Democracy"


class SegmentType(Enum):
    STATEMENT = "Statement"
    SOLUTION = "Solution"
    PREMISE = "Premise"


class Phase(Enum):
    PHASE1 = "Phase1"
    PHASE2 = "Phase2"
    AUTOMATIC = "Automatic"


class RecordStatus(Enum):
    COMPLETED = "Completed"
    SKIPPED = "Skipped"


class SkipReason(Enum):
    NOT_UNDERSTANDABLE = "NotUnderstandable"
    HATE_SPEECH = "HateSpeech"
    TOO_LONG = "TooLong"
    PERSONAL_INFO = "PersonalInfo"


class ErrorLabel(Enum):
    OVER_ANALYSIS = "OverAnalysis"
    MISCOMPREHENSION = "Miscomprehension"
    OVER_SPECIFICITY = "OverSpecificity"
    MISFORMULATION = "Misformulation"


# Reporting order when a single dominant error type is wanted.
ERROR_LABEL_PRIORITY = (
    ErrorLabel.OVER_ANALYSIS,
    ErrorLabel.MISCOMPREHENSION,
    ErrorLabel.OVER_SPECIFICITY,
    ErrorLabel.MISFORMULATION,
)


def dominant_error_label(labels: Iterable[ErrorLabel]) -> ErrorLabel | None:
    """First label present by the fixed priority order, or None."""
    got = set(labels)
    for label in ERROR_LABEL_PRIORITY:
        if label in got:
            return label
    return None


@dataclass(frozen=True)
class CharSpan:
    """Half-open character interval; offsets are Unicode scalar values."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def overlaps(self, other: "CharSpan") -> bool:
        return self.start < other.end and other.start < self.end

    def contains(self, other: "CharSpan") -> bool:
        return self.start <= other.start and other.end <= self.end


@dataclass(frozen=True)
class Contribution:
    id: str
    theme: Theme
    text: str
    sentence_count: int
    char_length: int

    def __post_init__(self) -> None:
        if self.char_length != len(self.text):
            raise ValueError(
                f"char_length {self.char_length} != len(text) {len(self.text)}"
            )
        if self.text and self.sentence_count < 1:
            raise ValueError("non-empty text must count at least one sentence")
        if self.sentence_count < 0:
            raise ValueError("sentence_count must be non-negative")


@dataclass(frozen=True)
class LabeledSegment:
    span: CharSpan
    kind: SegmentType


@dataclass(frozen=True)
class ArgumentativeUnit:
    """A possibly non-contiguous set of spans addressing one coherent topic."""

    spans: tuple[CharSpan, ...]
    segments: tuple[LabeledSegment, ...]
    clarification: str | None = None
    source_model: str | None = None

    def span_union_contains(self, span: CharSpan) -> bool:
        """Whether ``span`` lies inside the union of this unit's spans.

        Unit spans are non-overlapping, so containment means the span is
        covered by consecutive unit spans without gaps; since segments are
        contiguous they must sit inside a single unit span.
        """
        return any(s.contains(span) for s in self.spans)

    def covered_text(self, text: str) -> str:
        """Unit surface form: span texts joined by single spaces."""
        return " ".join(text[s.start : s.end] for s in self.spans)


@dataclass(frozen=True)
class ClarificationEvent:
    """One clarification attempt for one argumentative unit."""

    au_ref: str
    backend: str
    attempt_index: int
    accepted: bool
    observed_quality: float | None = None
    error_labels: frozenset[ErrorLabel] | None = None

    def __post_init__(self) -> None:
        if self.attempt_index < 1:
            raise ValueError("attempt_index must be >= 1")
        if self.accepted and self.observed_quality is None:
            raise ValueError("accepted event must carry observed_quality")
        if not self.accepted and self.observed_quality is not None:
            raise ValueError("rejected event must not carry observed_quality")
        if self.observed_quality is not None and not (
            0.0 <= self.observed_quality <= 1.0
        ):
            raise ValueError("observed_quality must lie in [0, 1]")


@dataclass(frozen=True)
class AnnotationRecord:
    contribution_id: str
    annotator_id: str
    phase: Phase
    units: tuple[ArgumentativeUnit, ...] = ()
    events: tuple[ClarificationEvent, ...] = ()
    status: RecordStatus = RecordStatus.COMPLETED
    skip_reason: SkipReason | None = None


@dataclass(frozen=True)
class Violation:
    """A single invariant violation found by validate_record."""

    invariant: str
    detail: str


def _check_events(record: AnnotationRecord, out: list[Violation]) -> None:
    by_ref: dict[str, list[ClarificationEvent]] = {}
    for ev in record.events:
        by_ref.setdefault(ev.au_ref, []).append(ev)
    for ref, evs in by_ref.items():
        indices = sorted(e.attempt_index for e in evs)
        if indices != list(range(1, len(indices) + 1)):
            out.append(
                Violation(
                    "event_attempt_sequence",
                    f"AU {ref}: attempt indices {indices} do not form 1..K",
                )
            )
            continue
        accepted = [e.attempt_index for e in evs if e.accepted]
        last = max(indices)
        if accepted != [last]:
            out.append(
                Violation(
                    "event_acceptance",
                    f"AU {ref}: exactly the last attempt must be accepted "
                    f"(accepted={accepted}, K={last})",
                )
            )
        if record.phase is Phase.PHASE2 and last != 1:
            out.append(
                Violation(
                    "event_phase2_single_attempt",
                    f"AU {ref}: phase 2 allows a single attempt, got K={last}",
                )
            )


def validate_record(
    record: AnnotationRecord, contribution: Contribution
) -> list[Violation]:
    """Check every structural invariant of a record against its contribution.

    Returns an empty list iff the record is valid.  Raises ValueError when the
    record does not reference the given contribution at all.
    """
    if record.contribution_id != contribution.id:
        raise ValueError(
            f"record references contribution {record.contribution_id!r}, "
            f"got {contribution.id!r}"
        )
    out: list[Violation] = []
    n = contribution.char_length

    if record.status is RecordStatus.COMPLETED:
        if not record.units:
            out.append(Violation("completed_has_units", "completed record has no units"))
        if record.skip_reason is not None:
            out.append(Violation("skip_reason_only_when_skipped", "completed record carries a skip_reason"))
    else:
        if record.units:
            out.append(Violation("skipped_has_no_units", f"skipped record has {len(record.units)} units"))
        if record.skip_reason is None:
            out.append(Violation("skipped_has_reason", "skipped record has no skip_reason"))

    all_unit_spans: list[tuple[int, CharSpan]] = []
    all_segments: list[tuple[int, LabeledSegment]] = []
    for i, unit in enumerate(record.units):
        if not unit.segments:
            out.append(Violation("unit_has_segments", f"unit {i} has no segments"))
        sorted_ok = all(
            unit.spans[j].start < unit.spans[j + 1].start
            for j in range(len(unit.spans) - 1)
        )
        if not sorted_ok:
            out.append(Violation("unit_spans_sorted", f"unit {i} spans not sorted by start"))
        for span in unit.spans:
            if span.end > n:
                out.append(
                    Violation("span_in_text", f"unit {i} span [{span.start},{span.end}) exceeds text length {n}")
                )
            all_unit_spans.append((i, span))
        for seg in unit.segments:
            if seg.span.end > n:
                out.append(
                    Violation("span_in_text", f"unit {i} segment [{seg.span.start},{seg.span.end}) exceeds text length {n}")
                )
            elif not unit.span_union_contains(seg.span):
                out.append(
                    Violation(
                        "segment_containment",
                        f"unit {i} segment [{seg.span.start},{seg.span.end}) outside unit spans",
                    )
                )
            all_segments.append((i, seg))

    for a in range(len(all_unit_spans)):
        for b in range(a + 1, len(all_unit_spans)):
            ia, sa = all_unit_spans[a]
            ib, sb = all_unit_spans[b]
            if sa.overlaps(sb):
                out.append(
                    Violation(
                        "unit_span_overlap",
                        f"unit {ia} span [{sa.start},{sa.end}) overlaps unit {ib} span [{sb.start},{sb.end})",
                    )
                )

    for a in range(len(all_segments)):
        for b in range(a + 1, len(all_segments)):
            ia, ga = all_segments[a]
            ib, gb = all_segments[b]
            if ga.span.overlaps(gb.span):
                out.append(
                    Violation(
                        "segment_overlap",
                        f"unit {ia} segment [{ga.span.start},{ga.span.end}) overlaps "
                        f"unit {ib} segment [{gb.span.start},{gb.span.end})",
                    )
                )

    _check_events(record, out)
    return out


# --- JSONL codec ---------------------------------------------------------


def contribution_to_dict(c: Contribution) -> dict[str, Any]:
    return {
        "id": c.id,
        "theme": c.theme.value,
        "text": c.text,
        "sentence_count": c.sentence_count,
        "char_length": c.char_length,
    }


def contribution_from_dict(d: dict[str, Any]) -> Contribution:
    return Contribution(
        id=d["id"],
        theme=Theme(d["theme"]),
        text=d["text"],
        sentence_count=d["sentence_count"],
        char_length=d["char_length"],
    )


def _span_to_list(s: CharSpan) -> list[int]:
    return [s.start, s.end]


def _span_from_list(v: list[int]) -> CharSpan:
    return CharSpan(int(v[0]), int(v[1]))


def unit_to_dict(u: ArgumentativeUnit) -> dict[str, Any]:
    return {
        "spans": [_span_to_list(s) for s in u.spans],
        "segments": [
            {"span": _span_to_list(g.span), "kind": g.kind.value} for g in u.segments
        ],
        "clarification": u.clarification,
        "source_model": u.source_model,
    }


def unit_from_dict(d: dict[str, Any]) -> ArgumentativeUnit:
    return ArgumentativeUnit(
        spans=tuple(_span_from_list(s) for s in d["spans"]),
        segments=tuple(
            LabeledSegment(_span_from_list(g["span"]), SegmentType(g["kind"]))
            for g in d["segments"]
        ),
        clarification=d.get("clarification"),
        source_model=d.get("source_model"),
    )


def event_to_dict(e: ClarificationEvent) -> dict[str, Any]:
    return {
        "au_ref": e.au_ref,
        "backend": e.backend,
        "attempt_index": e.attempt_index,
        "accepted": e.accepted,
        "observed_quality": e.observed_quality,
        "error_labels": sorted(l.value for l in e.error_labels)
        if e.error_labels is not None
        else None,
    }


def event_from_dict(d: dict[str, Any]) -> ClarificationEvent:
    labels = d.get("error_labels")
    return ClarificationEvent(
        au_ref=d["au_ref"],
        backend=d["backend"],
        attempt_index=d["attempt_index"],
        accepted=d["accepted"],
        observed_quality=d.get("observed_quality"),
        error_labels=frozenset(ErrorLabel(v) for v in labels)
        if labels is not None
        else None,
    )


def record_to_dict(r: AnnotationRecord) -> dict[str, Any]:
    return {
        "contribution_id": r.contribution_id,
        "annotator_id": r.annotator_id,
        "phase": r.phase.value,
        "units": [unit_to_dict(u) for u in r.units],
        "events": [event_to_dict(e) for e in r.events],
        "status": r.status.value,
        "skip_reason": r.skip_reason.value if r.skip_reason is not None else None,
    }


def record_from_dict(d: dict[str, Any]) -> AnnotationRecord:
    return AnnotationRecord(
        contribution_id=d["contribution_id"],
        annotator_id=d["annotator_id"],
        phase=Phase(d["phase"]),
        units=tuple(unit_from_dict(u) for u in d["units"]),
        events=tuple(event_from_dict(e) for e in d["events"]),
        status=RecordStatus(d["status"]),
        skip_reason=SkipReason(d["skip_reason"]) if d.get("skip_reason") else None,
    )


def encode_record(r: AnnotationRecord) -> str:
    return json.dumps(record_to_dict(r), ensure_ascii=False, sort_keys=True)


def decode_record(line: str) -> AnnotationRecord:
    return record_from_dict(json.loads(line))


def read_records(path: str) -> Iterator[AnnotationRecord]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield decode_record(line)


def write_records(path: str, records: Iterable[AnnotationRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(encode_record(r) + "\n")


def read_contributions(path: str) -> Iterator[Contribution]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield contribution_from_dict(json.loads(line))


def write_contributions(path: str, contributions: Iterable[Contribution]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for c in contributions:
            fh.write(json.dumps(contribution_to_dict(c), ensure_ascii=False, sort_keys=True) + "\n")
