"""Token-tag agreement between two annotations of one contribution."""

from __future__ import annotations

from dataclasses import dataclass

from ..model import AnnotationRecord, Contribution, LabeledSegment, SegmentType
from .segmentation import overlap_score
from .tokens import Token, tokenize, tokens_in_spans

# The implicit fourth class for tokens covered by no segment; metric-time only.
NONE_CLASS = "None"

CLASSES = (
    SegmentType.STATEMENT.value,
    SegmentType.SOLUTION.value,
    SegmentType.PREMISE.value,
    NONE_CLASS,
)


def token_labels(record: AnnotationRecord, tokens: list[Token]) -> list[str]:
    """One class per token: the segment type covering it, or the None class."""
    labels = [NONE_CLASS] * len(tokens)
    for unit in record.units:
        for seg in unit.segments:
            for i, tok in enumerate(tokens):
                if seg.span.contains(tok.span):
                    labels[i] = seg.kind.value
    return labels


def constrained_overlap(
    seg1: LabeledSegment, seg2: LabeledSegment, tokens: list[Token]
) -> float:
    """Token overlap gated by label equality (0 when the types differ)."""
    t1 = tokens_in_spans(tokens, [seg1.span])
    t2 = tokens_in_spans(tokens, [seg2.span])
    if seg1.kind is not seg2.kind:
        if not t1 or not t2:
            raise ValueError("constrained_overlap requires non-empty token sets")
        return 0.0
    return overlap_score(t1, t2)


@dataclass(frozen=True)
class TagAgreement:
    ratio: float
    per_class: dict[str, float]
    merged_ratio: float
    confusion: dict[str, dict[str, float]]  # proportions over token pairs
    n_tokens: int


def _merge(label: str) -> str:
    # Premises and statements collapse into a single class.
    return SegmentType.STATEMENT.value if label == SegmentType.PREMISE.value else label


def tag_agreement(
    a: AnnotationRecord, b: AnnotationRecord, contribution: Contribution
) -> TagAgreement:
    """Token-level agreement of two annotations of the same contribution.

    Per-class agreement is intersection-over-union of the two annotators'
    token sets for that class.  The merged ratio recomputes the plain ratio
    after mapping premises onto statements.
    """
    if a.contribution_id != contribution.id or b.contribution_id != contribution.id:
        raise ValueError("records must annotate the given contribution")
    tokens = tokenize(contribution.text)
    la = token_labels(a, tokens)
    lb = token_labels(b, tokens)
    n = len(tokens)
    if n == 0:
        empty = {c: 0.0 for c in CLASSES}
        conf = {c: {d: 0.0 for d in CLASSES} for c in CLASSES}
        return TagAgreement(0.0, empty, 0.0, conf, 0)

    equal = sum(1 for x, y in zip(la, lb) if x == y)
    ratio = equal / n

    per_class: dict[str, float] = {}
    for cls in CLASSES:
        both = sum(1 for x, y in zip(la, lb) if x == cls and y == cls)
        either = sum(1 for x, y in zip(la, lb) if x == cls or y == cls)
        per_class[cls] = both / either if either else 0.0

    merged_equal = sum(1 for x, y in zip(la, lb) if _merge(x) == _merge(y))
    merged_ratio = merged_equal / n

    conf = {c: {d: 0.0 for d in CLASSES} for c in CLASSES}
    for x, y in zip(la, lb):
        conf[x][y] += 1 / n
    return TagAgreement(ratio, per_class, merged_ratio, conf, n)
