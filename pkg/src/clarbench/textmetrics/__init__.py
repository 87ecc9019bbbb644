"""Text and agreement metrics: tokenization, segmentation agreement, tagging
agreement, and string similarity."""

from .report import AgreementReport, corpus_agreement, unit_boundaries, unit_token_sets
from .segmentation import (
    DocMatchCount,
    MatchConfig,
    MatchResult,
    PRF,
    match_spans,
    overlap_score,
    span_prf,
    window_diff,
)
from .strings import (
    RougeScore,
    RougeVariant,
    lcs_length,
    levenshtein,
    rouge,
    rouge_l_f1,
    similarity,
)
from .tagging import NONE_CLASS, TagAgreement, constrained_overlap, tag_agreement, token_labels
from .tokens import Token, tokenize, tokens_in_spans

__all__ = [
    "AgreementReport",
    "DocMatchCount",
    "MatchConfig",
    "MatchResult",
    "NONE_CLASS",
    "PRF",
    "RougeScore",
    "RougeVariant",
    "TagAgreement",
    "Token",
    "constrained_overlap",
    "corpus_agreement",
    "lcs_length",
    "levenshtein",
    "match_spans",
    "overlap_score",
    "rouge",
    "rouge_l_f1",
    "similarity",
    "span_prf",
    "tag_agreement",
    "token_labels",
    "tokenize",
    "tokens_in_spans",
    "unit_boundaries",
    "unit_token_sets",
    "window_diff",
]
