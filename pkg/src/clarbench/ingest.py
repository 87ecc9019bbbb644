"""Corpus preparation: dedup, length filtering, sentence counting, sampling.

The sentencizer is a deterministic rule (terminal-punctuation runs followed by
whitespace or end of text, with a fixed French abbreviation list) so that the
whole preparation step is reproducible without external models.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator

from .model import Contribution, Theme

TERMINALS = {".", "!", "?", "…"}

# Common French abbreviations whose trailing period does not end a sentence.
ABBREVIATIONS = {
    "m.", "mm.", "mme.", "mmes.", "mlle.", "dr.", "me.", "st.", "ste.",
    "etc.", "ex.", "cf.", "p.", "pp.", "art.", "chap.", "vol.", "no.",
    "n°.", "av.", "bd.", "env.", "fig.", "tel.", "tél.",
}


def count_sentences(text: str) -> int:
    """Number of sentences under the terminal-punctuation rule (>= 1 if non-empty)."""
    text = text.strip()
    if not text:
        return 0
    n = len(text)
    count = 0
    i = 0
    last_boundary = 0
    while i < n:
        if text[i] in TERMINALS:
            j = i
            while j + 1 < n and text[j + 1] in TERMINALS:
                j += 1
            followed = j + 1 >= n or text[j + 1].isspace()
            # A lone period after an abbreviation is not a boundary.
            abbrev = False
            if text[i : j + 1] == ".":
                k = i - 1
                while k >= 0 and not text[k].isspace():
                    k -= 1
                word = text[k + 1 : i + 1].lower()
                abbrev = word in ABBREVIATIONS
            if followed and not abbrev:
                count += 1
                last_boundary = j + 1
            i = j + 1
        else:
            i += 1
    if text[last_boundary:].strip():
        count += 1
    return max(count, 1)


@dataclass(frozen=True)
class IngestConfig:
    min_chars: int = 30
    max_chars: int = 600
    # Lower bounds of sentence-count bins; the last bin is open-ended.
    length_bins: tuple[int, ...] = (1, 2, 3, 4, 5)
    sample_size: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if not (0 < self.min_chars < self.max_chars):
            raise ValueError("need 0 < min_chars < max_chars")
        if any(a >= b for a, b in zip(self.length_bins, self.length_bins[1:])):
            raise ValueError("length_bins must be strictly increasing")

    def bin_index(self, sentence_count: int) -> int:
        idx = 0
        for i, lower in enumerate(self.length_bins):
            if sentence_count >= lower:
                idx = i
        return idx


@dataclass
class CorpusSummary:
    input_count: int = 0
    kept_count: int = 0
    dedup_count: int = 0
    filtered_count: int = 0
    per_theme: dict[str, int] = field(default_factory=dict)
    length_histogram: dict[int, int] = field(default_factory=dict)

    def check(self) -> None:
        assert self.input_count == self.kept_count + self.dedup_count + self.filtered_count

    def to_dict(self) -> dict[str, Any]:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "dedup_count": self.dedup_count,
            "filtered_count": self.filtered_count,
            "per_theme": dict(sorted(self.per_theme.items())),
            "length_histogram": {str(k): v for k, v in sorted(self.length_histogram.items())},
        }


RawRow = tuple[str | None, Theme, str]


class IngestError(Exception):
    pass


def read_raw_rows(path: str) -> Iterator[RawRow]:
    """Load (id, theme, text) rows from a CSV or JSONL export."""
    if path.endswith(".csv"):
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            for lineno, row in enumerate(reader, start=2):
                try:
                    yield row.get("id"), Theme(row["theme"]), row["text"]
                except (KeyError, ValueError, TypeError) as exc:
                    raise IngestError(f"{path}:{lineno}: bad row ({exc})") from exc
    else:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    d = json.loads(line)
                    yield d.get("id"), Theme(d["theme"]), d["text"]
                except (KeyError, ValueError, TypeError) as exc:
                    raise IngestError(f"{path}:{lineno}: bad row ({exc})") from exc


def prepare_corpus(
    raw: Iterable[RawRow], cfg: IngestConfig
) -> tuple[list[Contribution], CorpusSummary]:
    """Trim, dedup (exact match first), then length-filter and sentence-count."""
    summary = CorpusSummary()
    seen: set[str] = set()
    out: list[Contribution] = []
    for i, (rid, theme, text) in enumerate(raw):
        summary.input_count += 1
        trimmed = text.strip()
        if trimmed in seen:
            summary.dedup_count += 1
            continue
        seen.add(trimmed)
        if not (cfg.min_chars <= len(trimmed) <= cfg.max_chars):
            summary.filtered_count += 1
            continue
        sc = count_sentences(trimmed)
        contrib = Contribution(
            id=rid if rid else f"c{i:07d}",
            theme=theme,
            text=trimmed,
            sentence_count=sc,
            char_length=len(trimmed),
        )
        out.append(contrib)
        summary.kept_count += 1
        summary.per_theme[theme.value] = summary.per_theme.get(theme.value, 0) + 1
        b = cfg.bin_index(sc)
        summary.length_histogram[b] = summary.length_histogram.get(b, 0) + 1
    summary.check()
    return out, summary


def stratified_sample(
    corpus: list[Contribution], cfg: IngestConfig
) -> tuple[list[Contribution], list[str]]:
    """Sample uniformly across (theme, sentence-count bin) cells.

    Cell sizes differ by at most one unless a cell runs out of members, which
    is reported as a warning.  Deterministic for a fixed seed.
    """
    rng = random.Random(cfg.seed)
    warnings: list[str] = []
    if cfg.sample_size is None:
        shuffled = list(corpus)
        rng.shuffle(shuffled)
        return shuffled, warnings
    if cfg.sample_size > len(corpus):
        raise ValueError(f"sample_size {cfg.sample_size} > corpus size {len(corpus)}")

    cells: dict[tuple[str, int], list[Contribution]] = {}
    for c in corpus:
        cells.setdefault((c.theme.value, cfg.bin_index(c.sentence_count)), []).append(c)
    for key in [k for k in cells if not cells[k]]:
        warnings.append(f"cell {key} is empty, skipped")
        del cells[key]

    cell_order = sorted(cells)
    rng.shuffle(cell_order)  # which cells get the +1 remainder is seed-driven
    for key in cell_order:
        rng.shuffle(cells[key])

    picked: list[Contribution] = []
    remaining = cfg.sample_size
    warned: set[tuple[str, int]] = set()
    while remaining > 0:
        progressed = False
        for key in cell_order:
            if remaining == 0:
                break
            if cells[key]:
                picked.append(cells[key].pop())
                remaining -= 1
                progressed = True
            elif remaining > 0 and key not in warned:
                warned.add(key)
                warnings.append(f"cell {key} exhausted before its quota")
        if not progressed:
            warnings.append(f"corpus exhausted with {remaining} slots unfilled")
            break
    rng.shuffle(picked)
    return picked, warnings
