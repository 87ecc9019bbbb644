"""Within-cluster pair sampling for the pairwise judge protocol."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable

NOISE_CLUSTER_IDS = {"-1", "noise"}


@dataclass(frozen=True)
class ClusterRow:
    text_id: str
    cluster: str
    theme: str
    text: str
    surface_text_id: str | None = None  # maps clarifications back to their units


@dataclass
class ClusterAssignment:
    rows: dict[str, ClusterRow] = field(default_factory=dict)

    def add(self, row: ClusterRow) -> None:
        if row.text_id in self.rows:
            raise ValueError(f"duplicate text_id {row.text_id!r}")
        self.rows[row.text_id] = row

    @classmethod
    def from_dicts(cls, dicts: Iterable[dict[str, Any]]) -> "ClusterAssignment":
        assignment = cls()
        for d in dicts:
            assignment.add(
                ClusterRow(
                    text_id=str(d["text_id"]),
                    cluster=str(d["cluster"]),
                    theme=str(d["theme"]),
                    text=d["text"],
                    surface_text_id=str(d["surface_text_id"])
                    if d.get("surface_text_id") is not None
                    else None,
                )
            )
        return assignment

    @classmethod
    def from_jsonl(cls, path: str) -> "ClusterAssignment":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dicts(json.loads(line) for line in fh if line.strip())

    def themes(self) -> list[str]:
        return sorted({r.theme for r in self.rows.values()})


@dataclass(frozen=True)
class SampledPair:
    theme: str
    first: ClusterRow
    second: ClusterRow


def _pair_from_index(members: list[ClusterRow], index: int) -> tuple[ClusterRow, ClusterRow]:
    """Decode a flat index in [0, C(n,2)) to an unordered (i < j) pair."""
    n = len(members)
    i = 0
    count = n - 1
    while index >= count:
        index -= count
        i += 1
        count = n - 1 - i
    j = i + 1 + index
    return members[i], members[j]


def sample_pairs(
    assignment: ClusterAssignment,
    n_per_theme: int,
    seed: int,
    noise_ids: set[str] = NOISE_CLUSTER_IDS,
) -> tuple[dict[str, list[SampledPair]], list[str]]:
    """Sample same-cluster pairs so that every qualifying unordered pair is
    equally likely, without replacement; the noise cluster never qualifies.

    Returns per-theme pair lists plus warnings for themes that could not fill
    their quota.
    """
    rng = random.Random(seed)
    warnings: list[str] = []
    out: dict[str, list[SampledPair]] = {}
    for theme in assignment.themes():
        clusters: dict[str, list[ClusterRow]] = {}
        for row in assignment.rows.values():
            if row.theme != theme or row.cluster in noise_ids:
                continue
            clusters.setdefault(row.cluster, []).append(row)
        eligible = {
            cid: sorted(members, key=lambda r: r.text_id)
            for cid, members in clusters.items()
            if len(members) >= 2
        }
        weights = {cid: len(m) * (len(m) - 1) // 2 for cid, m in eligible.items()}
        total_pairs = sum(weights.values())
        target = min(n_per_theme, total_pairs)
        if target < n_per_theme:
            warnings.append(
                f"theme {theme}: only {total_pairs} distinct same-cluster pairs, "
                f"requested {n_per_theme}"
            )
        picked: list[SampledPair] = []
        used: set[tuple[str, int]] = set()
        cluster_order = sorted(weights)
        if target == total_pairs:
            for cid in cluster_order:
                for index in range(weights[cid]):
                    first, second = _pair_from_index(eligible[cid], index)
                    picked.append(SampledPair(theme, first, second))
            rng.shuffle(picked)
            out[theme] = picked
            continue
        while len(picked) < target:
            # cluster weighted by its pair count, then a uniform pair inside
            r = rng.randrange(total_pairs)
            acc = 0
            for cid in cluster_order:
                acc += weights[cid]
                if r < acc:
                    break
            index = rng.randrange(weights[cid])
            if (cid, index) in used:
                continue
            used.add((cid, index))
            first, second = _pair_from_index(eligible[cid], index)
            picked.append(SampledPair(theme, first, second))
        out[theme] = picked
    return out, warnings
