"""Corpus statistics tables and clarification correction diagnostics."""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from ..model import AnnotationRecord, Contribution, RecordStatus, SegmentType, Theme
from ..textmetrics.strings import RougeVariant, levenshtein, rouge

SEG_ORDER = (SegmentType.STATEMENT, SegmentType.SOLUTION, SegmentType.PREMISE)


@dataclass
class ThemeRow:
    contributions: int = 0
    units: int = 0
    segments: dict[str, int] = field(
        default_factory=lambda: {k.value: 0 for k in SEG_ORDER}
    )

    def percentages(self) -> dict[str, float]:
        total = sum(self.segments.values())
        if total == 0:
            return {k: 0.0 for k in self.segments}
        return {k: 100.0 * v / total for k, v in self.segments.items()}


@dataclass
class CorpusStats:
    rows: dict[str, ThemeRow] = field(default_factory=dict)
    total: ThemeRow = field(default_factory=ThemeRow)

    def to_dict(self) -> dict[str, Any]:
        def row_dict(row: ThemeRow) -> dict[str, Any]:
            return {
                "contributions": row.contributions,
                "units": row.units,
                "segments": dict(row.segments),
                "percentages": {k: round(v, 1) for k, v in row.percentages().items()},
            }

        return {
            "per_theme": {t: row_dict(r) for t, r in sorted(self.rows.items())},
            "total": row_dict(self.total),
        }


def corpus_stats(
    records: Iterable[AnnotationRecord],
    corpus: Mapping[str, Contribution],
) -> CorpusStats:
    """Per-theme contribution/unit/segment counts with row-wise percentages."""
    stats = CorpusStats(rows={t.value: ThemeRow() for t in Theme})
    seen: dict[str, set[str]] = {t.value: set() for t in Theme}
    for rec in records:
        if rec.status is not RecordStatus.COMPLETED:
            continue
        contribution = corpus[rec.contribution_id]
        theme = contribution.theme.value
        row = stats.rows[theme]
        if rec.contribution_id not in seen[theme]:
            seen[theme].add(rec.contribution_id)
            row.contributions += 1
        row.units += len(rec.units)
        for unit in rec.units:
            for seg in unit.segments:
                row.segments[seg.kind.value] += 1
    for row in stats.rows.values():
        stats.total.contributions += row.contributions
        stats.total.units += row.units
        for k, v in row.segments.items():
            stats.total.segments[k] += v
    return stats


@dataclass(frozen=True)
class ClarificationTriple:
    """Original unit text, raw backend clarification, final accepted text."""

    au_text: str
    llm_text: str
    final_text: str
    backend: str


def _strip_punct(text: str) -> str:
    kept = [ch for ch in text if not unicodedata.category(ch).startswith("P")]
    return " ".join("".join(kept).split())


@dataclass
class DiagnosticsReport:
    n_triples: int = 0
    n_modified: int = 0
    n_unmodified: int = 0
    edit_distance: dict[str, dict[str, float]] = field(default_factory=dict)
    rouge_scores: dict[str, dict[str, float]] = field(default_factory=dict)
    containment_rate: float = 0.0  # over modified clarifications
    mean_lengths: dict[str, float] = field(default_factory=dict)
    per_backend_edit: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_triples": self.n_triples,
            "n_modified": self.n_modified,
            "n_unmodified": self.n_unmodified,
            "edit_distance": self.edit_distance,
            "rouge": self.rouge_scores,
            "containment_rate_modified": self.containment_rate,
            "mean_lengths": self.mean_lengths,
            "per_backend_edit_distance": self.per_backend_edit,
        }


_PAIRS = ("au_to_llm", "au_to_final", "llm_to_final")


def _mean(xs: Sequence[float]) -> float:
    return sum(xs) / len(xs) if xs else 0.0


def clarification_diagnostics(triples: Sequence[ClarificationTriple]) -> DiagnosticsReport:
    """Edit-distance and ROUGE tables over (unit, backend output, final) triples."""
    report = DiagnosticsReport(n_triples=len(triples))
    if not triples:
        return report

    modified = [t for t in triples if t.llm_text.strip() != t.final_text.strip()]
    unmodified = [t for t in triples if t.llm_text.strip() == t.final_text.strip()]
    report.n_modified = len(modified)
    report.n_unmodified = len(unmodified)

    def pair_texts(t: ClarificationTriple, pair: str) -> tuple[str, str]:
        if pair == "au_to_llm":
            return t.au_text, t.llm_text
        if pair == "au_to_final":
            return t.au_text, t.final_text
        return t.llm_text, t.final_text

    report.edit_distance = {"all": {}, "unmodified_au_to_llm": {}}
    for pair in _PAIRS:
        report.edit_distance["all"][pair] = _mean(
            [float(levenshtein(*pair_texts(t, pair))) for t in triples]
        )
    report.edit_distance["unmodified_au_to_llm"]["au_to_llm"] = _mean(
        [float(levenshtein(t.au_text, t.llm_text)) for t in unmodified]
    )

    report.rouge_scores = {}
    for pair in _PAIRS:
        scores = {}
        for variant in RougeVariant:
            vals = []
            for t in triples:
                ref, hyp = pair_texts(t, pair)
                vals.append(rouge(ref, hyp, variant).f1)
            scores[variant.value] = _mean(vals)
        report.rouge_scores[pair] = scores
    report.rouge_scores["unmodified_au_to_llm"] = {
        variant.value: _mean(
            [rouge(t.au_text, t.llm_text, variant).f1 for t in unmodified]
        )
        for variant in RougeVariant
    }

    contained = [
        t for t in modified if _strip_punct(t.final_text) in _strip_punct(t.llm_text)
    ]
    report.containment_rate = len(contained) / len(modified) if modified else 0.0

    report.mean_lengths = {
        "au_modified": _mean([float(len(t.au_text)) for t in modified]),
        "au_unmodified": _mean([float(len(t.au_text)) for t in unmodified]),
        "llm": _mean([float(len(t.llm_text)) for t in triples]),
        "final": _mean([float(len(t.final_text)) for t in triples]),
    }

    backends = sorted({t.backend for t in triples})
    for backend in backends:
        sub = [t for t in triples if t.backend == backend]
        report.per_backend_edit[backend] = {
            pair: _mean([float(levenshtein(*pair_texts(t, pair))) for t in sub])
            for pair in _PAIRS
        }
    return report


def triples_from_event_rows(rows: Iterable[dict[str, Any]]) -> list[ClarificationTriple]:
    """Accepted clarification events with stored texts -> diagnostic triples."""
    out = []
    for row in rows:
        if not row.get("accepted"):
            continue
        if not all(k in row and row[k] is not None for k in ("au_text", "llm_text", "final_text")):
            continue
        out.append(
            ClarificationTriple(
                au_text=row["au_text"],
                llm_text=row["llm_text"],
                final_text=row["final_text"],
                backend=row["backend"],
            )
        )
    return out
