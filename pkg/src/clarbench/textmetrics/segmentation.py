"""Segmentation agreement: sliding-window disagreement, span matching, P/R/F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment


@dataclass(frozen=True)
class MatchConfig:
    overlap_threshold: float = 0.5  # lambda
    window_k: int = 15

    def __post_init__(self) -> None:
        if not (0.0 < self.overlap_threshold <= 1.0):
            raise ValueError("overlap threshold must lie in (0, 1]")
        if self.window_k <= 0:
            raise ValueError("window_k must be positive")


def window_diff(
    ref_boundaries: Iterable[int],
    hyp_boundaries: Iterable[int],
    n_tokens: int,
    k: int,
) -> float:
    """Fraction of k-sized sliding windows whose boundary counts disagree.

    A boundary index b in [1, n_tokens-1] separates token b-1 from token b.
    The window starting at token i spans tokens i..i+k, i.e. gaps i+1..i+k.
    """
    if k <= 0:
        raise ValueError("window size k must be positive")
    if k >= n_tokens:
        raise ValueError(f"window size {k} must be smaller than n_tokens {n_tokens}")
    ref = set(ref_boundaries)
    hyp = set(hyp_boundaries)
    for b in ref | hyp:
        if not (1 <= b <= n_tokens - 1):
            raise ValueError(f"boundary index {b} outside [1, {n_tokens - 1}]")

    # Prefix counts over gap indicators; gap g is "inside" windows i+1..i+k.
    ref_ind = np.zeros(n_tokens, dtype=np.int64)
    hyp_ind = np.zeros(n_tokens, dtype=np.int64)
    ref_ind[list(ref)] = 1
    hyp_ind[list(hyp)] = 1
    ref_cum = np.concatenate(([0], np.cumsum(ref_ind)))
    hyp_cum = np.concatenate(([0], np.cumsum(hyp_ind)))
    n_windows = n_tokens - k
    starts = np.arange(n_windows)
    ref_counts = ref_cum[starts + k + 1] - ref_cum[starts + 1]
    hyp_counts = hyp_cum[starts + k + 1] - hyp_cum[starts + 1]
    disagreements = int(np.count_nonzero(ref_counts != hyp_counts))
    return disagreements / n_windows


def overlap_score(s1: frozenset[int] | set[int], s2: frozenset[int] | set[int]) -> float:
    """min(|S1 n S2|/|S1|, |S1 n S2|/|S2|) over token-index sets."""
    if not s1 or not s2:
        raise ValueError("overlap_score requires non-empty token sets")
    inter = len(s1 & s2)
    return min(inter / len(s1), inter / len(s2))


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]  # (index_a, index_b, score)
    unmatched_a: tuple[int, ...]
    unmatched_b: tuple[int, ...]
    assignment_total: float  # optimal total score before thresholding


def match_spans(
    side_a: Sequence[frozenset[int]],
    side_b: Sequence[frozenset[int]],
    cfg: MatchConfig,
) -> MatchResult:
    """Optimal one-to-one span matching, thresholded at the overlap lambda.

    The assignment maximizes total overlap score exactly (rectangular matrices
    allowed); assigned pairs below the threshold are reported as unmatched.
    At lambda = 1 only exact token-set equality counts as a match.
    """
    if not side_a or not side_b:
        return MatchResult((), tuple(range(len(side_a))), tuple(range(len(side_b))), 0.0)
    scores = np.zeros((len(side_a), len(side_b)))
    for i, sa in enumerate(side_a):
        for j, sb in enumerate(side_b):
            scores[i, j] = overlap_score(sa, sb)
    rows, cols = linear_sum_assignment(scores, maximize=True)
    total = float(scores[rows, cols].sum())
    lam = cfg.overlap_threshold
    pairs = []
    for i, j in zip(rows, cols):
        s = float(scores[i, j])
        keep = s == 1.0 if lam == 1.0 else s >= lam
        if keep:
            pairs.append((int(i), int(j), s))
    matched_a = {p[0] for p in pairs}
    matched_b = {p[1] for p in pairs}
    return MatchResult(
        pairs=tuple(pairs),
        unmatched_a=tuple(i for i in range(len(side_a)) if i not in matched_a),
        unmatched_b=tuple(j for j in range(len(side_b)) if j not in matched_b),
        assignment_total=total,
    )


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass(frozen=True)
class DocMatchCount:
    """Per-document matching outcome: n_a predicted spans, n_b reference spans."""

    matched: int
    n_a: int
    n_b: int


def span_prf(docs: Sequence[DocMatchCount]) -> tuple[PRF, PRF]:
    """(micro, macro) precision/recall/F1 over per-document match counts.

    Micro pools counts; macro averages per-document values, scoring a document
    with no spans on either side as perfect agreement.
    """
    total_m = sum(d.matched for d in docs)
    total_a = sum(d.n_a for d in docs)
    total_b = sum(d.n_b for d in docs)
    micro_p = total_m / total_a if total_a else 0.0
    micro_r = total_m / total_b if total_b else 0.0
    micro = PRF(micro_p, micro_r, _f1(micro_p, micro_r))

    ps, rs, fs = [], [], []
    for d in docs:
        if d.n_a == 0 and d.n_b == 0:
            ps.append(1.0)
            rs.append(1.0)
            fs.append(1.0)
            continue
        p = d.matched / d.n_a if d.n_a else 0.0
        r = d.matched / d.n_b if d.n_b else 0.0
        ps.append(p)
        rs.append(r)
        fs.append(_f1(p, r))
    n = len(docs)
    macro = PRF(sum(ps) / n, sum(rs) / n, sum(fs) / n) if n else PRF(0.0, 0.0, 0.0)
    return micro, macro
