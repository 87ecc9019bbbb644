"""Pairwise judge protocol between two clusterings."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Any, Sequence

from ..gateway.client import ChatClient, GatewayError
from ..gateway.parsing import StageParseError, Verdict, parse_stage_output
from ..gateway.prompts import Stage, render_prompt
from .sampling import SampledPair
from .stats import SignificanceReport, significance_tests


@dataclass
class JudgeTally:
    per_theme: dict[str, dict[str, int]] = field(default_factory=dict)
    forced_ties: int = 0  # unparseable verdicts counted as TIE after one retry
    unjudged: int = 0
    permutation: list[bool] = field(default_factory=list)  # True where sides swapped

    def add(self, theme: str, verdict: Verdict) -> None:
        row = self.per_theme.setdefault(theme, {"A": 0, "B": 0, "TIE": 0})
        row[verdict.value] += 1

    def totals(self) -> dict[str, int]:
        out = {"A": 0, "B": 0, "TIE": 0}
        for row in self.per_theme.values():
            for k, v in row.items():
                out[k] += v
        return out

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_theme": {t: dict(r) for t, r in sorted(self.per_theme.items())},
            "totals": self.totals(),
            "forced_ties": self.forced_ties,
            "unjudged": self.unjudged,
        }


def _pair_block(pair: SampledPair) -> str:
    return f"- {pair.first.text}\n- {pair.second.text}"


def judge_pairs(
    pairs_a: Sequence[SampledPair],
    pairs_b: Sequence[SampledPair],
    client: ChatClient,
    backend: str,
    seed: int = 0,
    language: str = "fr",
) -> JudgeTally:
    """Present one pair from each clustering to the judge and tally verdicts.

    Sides are shuffled per item (with the permutation recorded) to cancel any
    position bias; verdicts are mapped back before tallying.  A verdict that
    stays unparseable after one retry counts as a flagged TIE; a backend
    failure marks the item unjudged.
    """
    if len(pairs_a) != len(pairs_b):
        raise ValueError("pair lists must have equal length")
    rng = random.Random(seed)
    tally = JudgeTally()
    for pa, pb in zip(pairs_a, pairs_b):
        swap = rng.random() < 0.5
        tally.permutation.append(swap)
        left, right = (pb, pa) if swap else (pa, pb)
        messages = render_prompt(
            Stage.CLUSTER_JUDGE,
            {"cluster_a": _pair_block(left), "cluster_b": _pair_block(right)},
            language=language,
        )
        verdict: Verdict | None = None
        gateway_failed = False
        for _ in range(2):
            try:
                completion = client.complete(backend, messages)
            except GatewayError:
                gateway_failed = True
                break
            try:
                verdict = parse_stage_output(Stage.CLUSTER_JUDGE, completion.text)
                break
            except StageParseError:
                continue
        if verdict is None:
            if gateway_failed:
                tally.unjudged += 1
                continue
            verdict = Verdict.TIE
            tally.forced_ties += 1
        if swap and verdict is Verdict.A:
            verdict = Verdict.B
        elif swap and verdict is Verdict.B:
            verdict = Verdict.A
        tally.add(pa.theme, verdict)
    return tally


def tally_significance(tally: JudgeTally, alternative: str = "two-sided") -> dict[str, SignificanceReport]:
    """Per-theme and total significance tests for a judge tally."""
    out: dict[str, SignificanceReport] = {}
    for theme, row in sorted(tally.per_theme.items()):
        out[theme] = significance_tests(row["A"], row["B"], row["TIE"], alternative)
    totals = tally.totals()
    out["total"] = significance_tests(totals["A"], totals["B"], totals["TIE"], alternative)
    return out
