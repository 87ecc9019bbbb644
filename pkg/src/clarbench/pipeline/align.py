"""Alignment of extractive LLM output back onto source character offsets.

Generated units are supposed to be verbatim copies of source segments joined
by single spaces, but models reflow whitespace and drift on case or
punctuation.  The aligner normalizes whitespace, then greedily matches the
longest space-bounded prefix of the generated text left-to-right into the
source.  When that fails, a second pass matches case-folded, punctuation-free
text and accepts segments whose normalized similarity stays at or above 0.9;
anything less is refused rather than guessed.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum

from ..model import CharSpan
from ..textmetrics.strings import similarity

FUZZY_THRESHOLD = 0.9


class AlignmentStatus(Enum):
    EXACT = "Exact"
    FUZZY_FLAGGED = "FuzzyFlagged"
    FAILED = "Failed"


@dataclass(frozen=True)
class AlignmentResult:
    spans: tuple[CharSpan, ...]
    coverage: float
    status: AlignmentStatus


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _normalize(text: str) -> tuple[str, list[int]]:
    """Collapse whitespace runs to single spaces; map output index -> input index."""
    out: list[str] = []
    idx: list[int] = []
    pending_space = False
    for i, ch in enumerate(text):
        if ch.isspace():
            if out:
                pending_space = True
        else:
            if pending_space:
                out.append(" ")
                idx.append(i - 1)
                pending_space = False
            out.append(ch)
            idx.append(i)
    return "".join(out), idx


def _fold(text: str) -> tuple[str, list[int]]:
    """Drop punctuation and case; map output index -> input index."""
    out: list[str] = []
    idx: list[int] = []
    for i, ch in enumerate(text):
        if _is_punct(ch):
            continue
        if ch == " " and (not out or out[-1] == " "):
            continue
        for c in ch.casefold():
            out.append(c)
            idx.append(i)
    while out and out[-1] == " ":
        out.pop()
        idx.pop()
    return "".join(out), idx


def _candidate_ends(generated: str, start: int) -> list[int]:
    """Possible segment ends: end of text or a joint space, longest first."""
    ends = [len(generated)]
    for i in range(len(generated) - 1, start, -1):
        if generated[i] == " ":
            ends.append(i)
    return ends


def _greedy(source: str, generated: str) -> list[tuple[int, int, int, int]] | None:
    """Left-to-right maximal matching; (g_start, g_end, s_start, s_end) pieces."""
    pieces: list[tuple[int, int, int, int]] = []
    g = 0
    s_min = 0
    n = len(generated)
    while g < n:
        found = None
        for end in _candidate_ends(generated, g):
            sub = generated[g:end]
            p = source.find(sub, s_min)
            if p != -1:
                found = (g, end, p, p + len(sub))
                break
        if found is None:
            return None
        pieces.append(found)
        g = found[1]
        s_min = found[3]
        if g < n and generated[g] == " ":
            g += 1
    return pieces


def _to_char_spans(pieces: list[tuple[int, int]], idx: list[int]) -> tuple[CharSpan, ...]:
    return tuple(CharSpan(idx[p], idx[q - 1] + 1) for p, q in pieces)


def align_extractive(source: str, generated: str) -> AlignmentResult:
    """Locate the generated text inside the source as ordered character spans."""
    if not generated.strip():
        raise ValueError("generated text must be non-empty")
    s_norm, s_idx = _normalize(source)
    g_norm, _ = _normalize(generated)

    exact = _greedy(s_norm, g_norm)
    if exact is not None:
        spans = _to_char_spans([(p[2], p[3]) for p in exact], s_idx)
        return AlignmentResult(spans, 1.0, AlignmentStatus.EXACT)

    s_fold, sf_idx = _fold(s_norm)
    g_fold, gf_idx = _fold(g_norm)
    if not g_fold or not s_fold:
        return AlignmentResult((), 0.0, AlignmentStatus.FAILED)
    fuzzy = _greedy(s_fold, g_fold)
    if fuzzy is None:
        return AlignmentResult((), 0.0, AlignmentStatus.FAILED)

    sims: list[float] = []
    norm_pieces: list[tuple[int, int]] = []
    for gs, ge, ss, se in fuzzy:
        g_seg = g_norm[gf_idx[gs] : gf_idx[ge - 1] + 1]
        s_start, s_end = sf_idx[ss], sf_idx[se - 1] + 1
        s_seg = s_norm[s_start:s_end]
        sims.append(similarity(g_seg, s_seg))
        norm_pieces.append((s_start, s_end))
    if min(sims) < FUZZY_THRESHOLD:
        return AlignmentResult((), 0.0, AlignmentStatus.FAILED)
    spans = _to_char_spans(norm_pieces, s_idx)
    return AlignmentResult(spans, min(sims), AlignmentStatus.FUZZY_FLAGGED)
