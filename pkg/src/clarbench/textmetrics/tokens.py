"""Tokenization shared by every token-level metric.

Rule: split on whitespace; every punctuation character becomes its own token.
Token spans cover the source text exactly (whitespace aside), so offsets can
round-trip between metrics and annotations.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass

from ..model import CharSpan


@dataclass(frozen=True)
class Token:
    text: str
    span: CharSpan


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    start = None
    for i, ch in enumerate(text):
        if ch.isspace():
            if start is not None:
                tokens.append(Token(text[start:i], CharSpan(start, i)))
                start = None
        elif _is_punct(ch):
            if start is not None:
                tokens.append(Token(text[start:i], CharSpan(start, i)))
                start = None
            tokens.append(Token(ch, CharSpan(i, i + 1)))
        else:
            if start is None:
                start = i
    if start is not None:
        tokens.append(Token(text[start:], CharSpan(start, len(text))))
    return tokens


def tokens_in_spans(tokens: list[Token], spans: list[CharSpan]) -> frozenset[int]:
    """Indices of tokens whose character span is fully inside the span union."""
    out = set()
    for i, tok in enumerate(tokens):
        if any(s.contains(tok.span) for s in spans):
            out.add(i)
    return frozenset(out)
