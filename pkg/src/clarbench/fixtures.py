"""Deterministic synthetic fixtures: corpora, mock transcripts, campaigns.

Everything here is offline and seed-stable, so pipeline runs, service
campaigns, and evaluation flows can be exercised end-to-end without network
access or live models.
"""

from __future__ import annotations

import random

from .gateway.client import MockTranscript, request_key
from .gateway.config import BackendConfig
from .gateway.prompts import Stage, render_prompt
from .model import Contribution, SegmentType, Theme
from .pipeline.run import PipelineConfig, theme_label

THEMES = (Theme.TAXATION, Theme.ECOLOGY, Theme.STATE_ORGANIZATION, Theme.DEMOCRACY)

_TOPICS = (
    "la taxe sur les carburants",
    "les transports en commun",
    "les services publics locaux",
    "le vote blanc",
    "les énergies renouvelables",
    "la TVA sur les produits essentiels",
    "le budget des communes",
    "la participation citoyenne",
)

_REASONS = (
    "les prix augmentent sans cesse",
    "les campagnes sont isolées",
    "les démarches sont trop lentes",
    "les citoyens veulent être entendus",
    "le climat se dérègle",
    "les foyers modestes souffrent",
    "les élus sont trop éloignés",
    "la confiance s'érode",
)


def synthetic_corpus(n: int = 25, seed: int = 7) -> list[Contribution]:
    """Small French-flavoured contributions with two opinion sentences each."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        topic = _TOPICS[rng.randrange(len(_TOPICS))]
        reason = _REASONS[rng.randrange(len(_REASONS))]
        other = _TOPICS[rng.randrange(len(_TOPICS))]
        s1 = f"Il faut agir sur {topic} car {reason}."
        s2 = f"Par ailleurs, {other} mérite un vrai débat public numéro {i}."
        text = f"{s1} {s2}"
        out.append(
            Contribution(
                id=f"c{i:04d}",
                theme=THEMES[i % 4],
                text=text,
                sentence_count=2,
                char_length=len(text),
            )
        )
    return out


def mock_backend(name: str = "mock-main") -> BackendConfig:
    return BackendConfig(name=name, base_url="mock://in-memory", model=f"{name}-model")


def _sentences(contribution: Contribution) -> tuple[str, str]:
    first, rest = contribution.text.split(". ", 1)
    return first + ".", rest


def build_pipeline_fixture(
    corpus: list[Contribution],
) -> tuple[PipelineConfig, dict[str, BackendConfig], dict[str, MockTranscript]]:
    """Mock transcripts driving the full pipeline over ``corpus``.

    Varies behaviour by contribution index: two units for most, a fuzzy
    lowercased copy every 7th, a preamble-wrapped clarification every 5th, and
    an unparseable extraction every 11th (which must end up quarantined).
    """
    backend = mock_backend()
    cfg = PipelineConfig(
        stage_backends={
            Stage.AU_EXTRACTION.value: backend.name,
            Stage.AS_DETECTION.value: backend.name,
            Stage.CLARIFICATION.value: backend.name,
        },
        max_parallel=3,
        language="fr",
        run_id="mockrun",
    )
    transcript = MockTranscript()

    def record(stage: Stage, vars: dict[str, str], response: str) -> None:
        messages = render_prompt(stage, vars, language=cfg.language)
        transcript.responses[
            request_key(backend.model, messages, backend.temperature)
        ] = response

    for i, contribution in enumerate(sorted(corpus, key=lambda c: c.id)):
        s1, s2 = _sentences(contribution)
        if i % 11 == 3:
            record(
                Stage.AU_EXTRACTION,
                {"contribution": contribution.text},
                "Je ne peux pas traiter cette demande.",
            )
            continue
        if i % 7 == 2:
            units = [s1.lower()]  # case drift: aligns fuzzily
        elif i % 3 == 0:
            units = [s1, s2]
        else:
            units = [contribution.text]
        record(
            Stage.AU_EXTRACTION,
            {"contribution": contribution.text},
            "\n".join(f"- {u}" for u in units),
        )
        for u_idx, unit in enumerate(units):
            joined = _aligned_unit_text(contribution.text, unit)
            if u_idx == 0 and i % 3 == 0:
                body, tail = joined[: len(joined) // 2], joined[len(joined) // 2 :]
                response = f"- [SOLUTION] {body}\n- [ARGUMENT] {tail}"
            else:
                kind = ("SOLUTION", "CONSTAT", "ARGUMENT")[u_idx % 3]
                response = f"- [{kind}] {joined}"
            record(
                Stage.AS_DETECTION,
                {"contribution": contribution.text, "argumentative unit": joined},
                response,
            )
            clar = f"Il faut agir clairement sur le point {i}.{u_idx}."
            if i % 5 == 1:
                response = (
                    "L'argument clair et auto-suffisant sous-jacent est : "
                    f"**{clar}**"
                )
            else:
                response = clar
            segs = _segments_for(response, joined, u_idx, i)
            record(
                Stage.CLARIFICATION,
                {
                    "contribution": contribution.text,
                    "theme": theme_label(contribution.theme, cfg.language),
                    "argumentative unit": joined,
                    "statements": segs[SegmentType.STATEMENT],
                    "premises": segs[SegmentType.PREMISE],
                    "solutions": segs[SegmentType.SOLUTION],
                },
                response,
            )
    return cfg, {backend.name: backend}, {backend.name: transcript}


def _aligned_unit_text(source: str, unit: str) -> str:
    """The unit text as the pipeline reconstructs it from aligned spans."""
    from .pipeline.align import align_extractive

    result = align_extractive(source, unit)
    return " ".join(source[s.start : s.end] for s in result.spans)


def _segments_for(clar_response: str, joined: str, u_idx: int, i: int) -> dict[SegmentType, str]:
    out = {k: "" for k in SegmentType}
    if u_idx == 0 and i % 3 == 0:
        body, tail = joined[: len(joined) // 2], joined[len(joined) // 2 :]
        out[SegmentType.SOLUTION] = body.strip()
        out[SegmentType.PREMISE] = tail.strip()
    else:
        kind = (SegmentType.SOLUTION, SegmentType.STATEMENT, SegmentType.PREMISE)[u_idx % 3]
        out[kind] = joined
    return out


def drive_campaign(service, tokens: list[str], regenerate: bool = True) -> int:
    """Round-robin mock annotators through a campaign until no tasks remain.

    Each annotator passes the tutorial with the gold segmentation, then for
    every assigned contribution generates one clarification (when asked to)
    and submits a single full-span solution unit.  Returns the number of
    submitted annotation records.
    """
    submitted = 0
    active = list(tokens)
    while active:
        still_active = []
        for token in active:
            task = service.next_task(token)
            if task["kind"] == "none":
                continue
            still_active.append(token)
            if task["kind"] == "tutorial":
                cid = task["contribution"]["id"]
                item = next(t for t in service.cfg.tutorial if t.contribution.id == cid)
                units = [
                    {
                        "spans": [[s.start, s.end] for s in spans],
                        "segments": [
                            {"span": [s.start, s.end], "kind": "Solution"} for s in spans
                        ],
                        "clarification": "Exemple.",
                    }
                    for spans in item.gold_units
                ]
                service.submit(token, {"contribution_id": cid, "units": units})
                continue
            contribution = task["contribution"]
            cid = contribution["id"]
            text = contribution["text"]
            clarification = "Texte clarifié."
            if regenerate:
                resp = service.regenerate(
                    token,
                    {
                        "contribution_id": cid,
                        "au_key": "0",
                        "au_text": text,
                        "statements": [],
                        "premises": [],
                        "solutions": [text],
                    },
                )
                clarification = resp["text"]
            unit = {
                "spans": [[0, len(text)]],
                "segments": [{"span": [0, len(text)], "kind": "Solution"}],
                "clarification": clarification,
            }
            result = service.submit(token, {"contribution_id": cid, "units": [unit]})
            if not result.get("accepted"):
                raise AssertionError(f"mock submission rejected: {result}")
            submitted += 1
    return submitted
