"""Character- and n-gram-level string similarity."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .tokens import tokenize


def levenshtein(a: str, b: str) -> int:
    """Minimum number of character insertions, deletions, and substitutions."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) < len(a):
        a, b = b, a
    prev = list(range(len(a) + 1))
    for j, cb in enumerate(b, start=1):
        cur = [j] + [0] * len(a)
        for i, ca in enumerate(a, start=1):
            cost = 0 if ca == cb else 1
            cur[i] = min(prev[i] + 1, cur[i - 1] + 1, prev[i - 1] + cost)
        prev = cur
    return prev[len(a)]


def similarity(a: str, b: str) -> float:
    """Normalized Levenshtein similarity in [0, 1]."""
    if not a and not b:
        return 1.0
    return 1.0 - levenshtein(a, b) / max(len(a), len(b))


class RougeVariant(Enum):
    R1 = "rouge1"
    R2 = "rouge2"
    RL = "rougeL"


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


def lcs_length(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b, start=1):
            cur[j] = prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def _ngrams(toks: list[str], n: int) -> Counter:
    return Counter(tuple(toks[i : i + n]) for i in range(len(toks) - n + 1))


def rouge(ref: str, hyp: str, variant: RougeVariant = RougeVariant.RL) -> RougeScore:
    """ROUGE-1/2 multiset n-gram overlap or ROUGE-L via longest common subsequence."""
    ref_toks = [t.text for t in tokenize(ref)]
    hyp_toks = [t.text for t in tokenize(hyp)]
    if not ref_toks or not hyp_toks:
        return RougeScore(0.0, 0.0, 0.0)
    if variant is RougeVariant.RL:
        overlap = lcs_length(ref_toks, hyp_toks)
        ref_n, hyp_n = len(ref_toks), len(hyp_toks)
    else:
        n = 1 if variant is RougeVariant.R1 else 2
        ref_counts = _ngrams(ref_toks, n)
        hyp_counts = _ngrams(hyp_toks, n)
        if not ref_counts or not hyp_counts:
            return RougeScore(0.0, 0.0, 0.0)
        overlap = sum((ref_counts & hyp_counts).values())
        ref_n, hyp_n = sum(ref_counts.values()), sum(hyp_counts.values())
    p = overlap / hyp_n
    r = overlap / ref_n
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return RougeScore(p, r, f1)


def rouge_l_f1(ref: str, hyp: str) -> float:
    return rouge(ref, hyp, RougeVariant.RL).f1
