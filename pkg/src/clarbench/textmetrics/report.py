"""Corpus-level agreement report between two sets of annotations."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable

from ..model import AnnotationRecord, Contribution, RecordStatus
from .segmentation import (
    DocMatchCount,
    MatchConfig,
    PRF,
    match_spans,
    span_prf,
    window_diff,
)
from .tagging import CLASSES, TagAgreement, tag_agreement, token_labels
from .tokens import Token, tokenize, tokens_in_spans

REPORT_NOTES = (
    "window_diff: mean over doubly annotated contributions; boundaries are "
    "token positions where unit membership changes. "
    "per_class agreement: intersection-over-union of the two annotators' "
    "token sets per class, pooled over the corpus. "
    "macro averaging unit: one doubly annotated contribution."
)


def unit_boundaries(record: AnnotationRecord, tokens: list[Token]) -> list[int]:
    """Token indices where the covering argumentative unit changes."""
    membership: list[int | None] = [None] * len(tokens)
    for u_idx, unit in enumerate(record.units):
        covered = tokens_in_spans(tokens, list(unit.spans))
        for t in covered:
            membership[t] = u_idx
    return [
        i
        for i in range(1, len(tokens))
        if membership[i] != membership[i - 1]
    ]


def unit_token_sets(
    record: AnnotationRecord, tokens: list[Token]
) -> list[frozenset[int]]:
    out = []
    for unit in record.units:
        toks = tokens_in_spans(tokens, list(unit.spans))
        if toks:
            out.append(toks)
    return out


@dataclass
class AgreementReport:
    window_diff_mean: float = 0.0
    window_diff_median: float = 0.0
    span_prf: dict[str, dict[str, PRF]] = field(default_factory=dict)  # lambda -> micro/macro
    tag_agreement_ratio: float = 0.0
    tag_agreement_median: float = 0.0
    per_class: dict[str, float] = field(default_factory=dict)
    merged_ratio: float = 0.0
    confusion: dict[str, dict[str, float]] = field(default_factory=dict)
    n_documents: int = 0
    notes: str = REPORT_NOTES

    def to_dict(self) -> dict[str, Any]:
        return {
            "notes": self.notes,
            "n_documents": self.n_documents,
            "window_diff": {"mean": self.window_diff_mean, "median": self.window_diff_median},
            "span_prf": {
                lam: {
                    kind: {"precision": v.precision, "recall": v.recall, "f1": v.f1}
                    for kind, v in kinds.items()
                }
                for lam, kinds in self.span_prf.items()
            },
            "tag_agreement": {
                "ratio_mean": self.tag_agreement_ratio,
                "ratio_median": self.tag_agreement_median,
                "per_class": self.per_class,
                "merged_ratio": self.merged_ratio,
            },
            "confusion": self.confusion,
        }


def _median(xs: list[float]) -> float:
    if not xs:
        return 0.0
    s = sorted(xs)
    m = len(s) // 2
    return s[m] if len(s) % 2 else (s[m - 1] + s[m]) / 2


def corpus_agreement(
    pairs: Iterable[tuple[AnnotationRecord, AnnotationRecord, Contribution]],
    lambdas: tuple[float, ...] = (0.5, 1.0),
    window_k: int = 15,
) -> AgreementReport:
    """Aggregate agreement metrics over doubly annotated contributions.

    Record a is treated as the second annotator (predictions), record b as the
    first (reference) for precision/recall orientation.
    """
    wds: list[float] = []
    ratios: list[float] = []
    merged: list[float] = []
    counts: dict[float, list[DocMatchCount]] = {lam: [] for lam in lambdas}
    both_cls: dict[str, int] = {c: 0 for c in CLASSES}
    either_cls: dict[str, int] = {c: 0 for c in CLASSES}
    conf_counts: dict[str, dict[str, float]] = {c: {d: 0.0 for d in CLASSES} for c in CLASSES}
    n_tokens_total = 0
    n_docs = 0

    for a, b, contribution in pairs:
        if a.status is not RecordStatus.COMPLETED or b.status is not RecordStatus.COMPLETED:
            continue
        n_docs += 1
        tokens = tokenize(contribution.text)
        n = len(tokens)
        if n > window_k:
            wds.append(
                window_diff(
                    unit_boundaries(b, tokens), unit_boundaries(a, tokens), n, window_k
                )
            )
        sets_a = unit_token_sets(a, tokens)
        sets_b = unit_token_sets(b, tokens)
        for lam in lambdas:
            res = match_spans(sets_a, sets_b, MatchConfig(overlap_threshold=lam, window_k=window_k))
            counts[lam].append(DocMatchCount(len(res.pairs), len(sets_a), len(sets_b)))

        agree: TagAgreement = tag_agreement(a, b, contribution)
        ratios.append(agree.ratio)
        merged.append(agree.merged_ratio)
        la = _labels(a, tokens)
        lb = _labels(b, tokens)
        for x, y in zip(la, lb):
            conf_counts[x][y] += 1.0
            n_tokens_total += 1
            for cls in CLASSES:
                if x == cls and y == cls:
                    both_cls[cls] += 1
                if x == cls or y == cls:
                    either_cls[cls] += 1

    report = AgreementReport(n_documents=n_docs)
    report.window_diff_mean = sum(wds) / len(wds) if wds else 0.0
    report.window_diff_median = _median(wds)
    report.span_prf = {}
    for lam in lambdas:
        micro, macro = span_prf(counts[lam])
        report.span_prf[f"{lam:g}"] = {"micro": micro, "macro": macro}
    report.tag_agreement_ratio = sum(ratios) / len(ratios) if ratios else 0.0
    report.tag_agreement_median = _median(ratios)
    report.merged_ratio = sum(merged) / len(merged) if merged else 0.0
    report.per_class = {
        c: both_cls[c] / either_cls[c] if either_cls[c] else 0.0 for c in CLASSES
    }
    if n_tokens_total:
        report.confusion = {
            c: {d: conf_counts[c][d] / n_tokens_total for d in CLASSES} for c in CLASSES
        }
    else:
        report.confusion = conf_counts
    return report


def _labels(record: AnnotationRecord, tokens: list[Token]) -> list[str]:
    return token_labels(record, tokens)
