"""Parsing of stage outputs into structured values.

List stages expect "- item" lines; structure detection expects
"- [TYPE] segment" lines with tag names mapped through the localized tag
table.  Clarification outputs get introductory meta-sentences and markdown
emphasis wrappers stripped; anything stripped is flagged rather than silently
dropped.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from ..model import SegmentType
from .prompts import Stage, load_tag_tables

_SEGMENT_TAGS, _VERDICT_TAGS = load_tag_tables()


class StageParseError(Exception):
    def __init__(self, stage: Stage, raw: str, reason: str):
        super().__init__(f"{stage.value}: {reason}")
        self.stage = stage
        self.raw = raw
        self.reason = reason


class Verdict(Enum):
    A = "A"
    B = "B"
    TIE = "TIE"


@dataclass(frozen=True)
class ParsedClarification:
    text: str
    preamble_stripped: bool  # recorded as a misformulation flag upstream


_BULLET_RE = re.compile(r"^\s*-\s*(.*\S)\s*$")
_TYPED_RE = re.compile(r"^\s*-\s*\[\s*([^\[\]]+?)\s*\]\s*(.*\S)\s*$")

# Introductory meta-sentences: a short first line/sentence announcing the
# answer, terminated by a colon.
_PREAMBLE_RES = [
    re.compile(
        r"^\s*(?:voici|here is|the (?:clear|underlying|final)[^:]{0,80}|"
        r"l'argument[^:]{0,80}|la clarification[^:]{0,80}|the clarification[^:]{0,80}|"
        r"clarified (?:text|argument)[^:]{0,40})\s*:\s*",
        re.IGNORECASE,
    ),
]
_WRAPPER_RES = [
    re.compile(r"^\*\*(.+)\*\*$", re.DOTALL),
    re.compile(r"^\*(.+)\*$", re.DOTALL),
    re.compile(r"^«\s*(.+?)\s*»$", re.DOTALL),
    re.compile(r'^"(.+)"$', re.DOTALL),
]


def strip_clarification(raw: str) -> ParsedClarification:
    """Remove known preambles and emphasis wrappers until a fixed point."""
    text = raw.strip()
    stripped = False
    changed = True
    while changed:
        changed = False
        for pat in _PREAMBLE_RES:
            new = pat.sub("", text, count=1)
            if new != text:
                text = new.strip()
                stripped = True
                changed = True
        for pat in _WRAPPER_RES:
            m = pat.match(text)
            if m:
                text = m.group(1).strip()
                stripped = True
                changed = True
    return ParsedClarification(text=text, preamble_stripped=stripped)


def _parse_units(raw: str) -> list[str]:
    units = []
    for line in raw.splitlines():
        m = _BULLET_RE.match(line)
        if m and m.group(1).strip():
            units.append(m.group(1).strip())
    return units


def _parse_typed_segments(raw: str) -> list[tuple[SegmentType, str]]:
    out = []
    for line in raw.splitlines():
        m = _TYPED_RE.match(line)
        if not m:
            continue
        tag = m.group(1).strip().upper()
        mapped = _SEGMENT_TAGS.get(tag)
        if mapped is None or not m.group(2).strip():
            continue
        out.append((SegmentType(mapped), m.group(2).strip()))
    return out


def parse_verdict(raw: str) -> Verdict:
    token = raw.strip().strip(".,;:!\"'«»* \n\t").upper()
    mapped = _VERDICT_TAGS.get(token)
    if mapped is None:
        raise StageParseError(Stage.CLUSTER_JUDGE, raw, f"unrecognized verdict {token!r}")
    return Verdict(mapped)


def parse_stage_output(stage: Stage, raw: str):
    """Parse a raw completion according to the stage's output contract."""
    if stage is Stage.AU_EXTRACTION:
        units = _parse_units(raw)
        if not units:
            raise StageParseError(stage, raw, "no list items found")
        return units
    if stage is Stage.AS_DETECTION:
        segments = _parse_typed_segments(raw)
        if not segments:
            raise StageParseError(stage, raw, "no typed segments found")
        return segments
    if stage is Stage.CLARIFICATION:
        parsed = strip_clarification(raw)
        if not parsed.text:
            raise StageParseError(stage, raw, "empty clarification")
        return parsed
    if stage in (Stage.CLARIF_JUDGE, Stage.CLUSTER_JUDGE):
        return parse_verdict(raw)
    raise ValueError(f"unknown stage {stage}")
