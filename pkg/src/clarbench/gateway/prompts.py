"""Prompt templates for the pipeline stages and judge protocols.

Templates live as JSON data files per language (``templates/<lang>/``) so they
can be localized without touching code; the French set is the operative one.
Placeholders use the ``{{name}}`` form and are substituted verbatim.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources


class Stage(Enum):
    AU_EXTRACTION = "au_extraction"
    AS_DETECTION = "as_detection"
    CLARIFICATION = "clarification"
    CLARIF_JUDGE = "clarif_judge"
    CLUSTER_JUDGE = "cluster_judge"


class PromptError(Exception):
    pass


_PLACEHOLDER_RE = re.compile(r"\{\{([^{}]+)\}\}")


@dataclass(frozen=True)
class PromptTemplate:
    stage: Stage
    language: str
    system: str
    user: str
    one_shot_example: str | None = None

    @property
    def placeholders(self) -> frozenset[str]:
        return frozenset(
            _PLACEHOLDER_RE.findall(self.system) + _PLACEHOLDER_RE.findall(self.user)
        )


def _load_template(stage: Stage, language: str) -> PromptTemplate:
    pkg = resources.files("clarbench.gateway") / "templates" / language / f"{stage.value}.json"
    try:
        data = json.loads(pkg.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise PromptError(f"no template for stage {stage.value} in language {language!r}") from exc
    return PromptTemplate(
        stage=stage,
        language=language,
        system=data["system"],
        user=data["user"],
        one_shot_example=data.get("one_shot_example"),
    )


_CACHE: dict[tuple[Stage, str], PromptTemplate] = {}


def get_template(stage: Stage, language: str = "fr") -> PromptTemplate:
    key = (stage, language)
    if key not in _CACHE:
        _CACHE[key] = _load_template(stage, language)
    return _CACHE[key]


def load_tag_tables() -> tuple[dict[str, str], dict[str, str]]:
    pkg = resources.files("clarbench.gateway") / "templates" / "tag_names.json"
    data = json.loads(pkg.read_text(encoding="utf-8"))
    return data["segment_tags"], data["verdict_tags"]


def render_prompt(
    stage: Stage,
    vars: dict[str, str],
    language: str = "fr",
    one_shot: bool = False,
) -> list[dict[str, str]]:
    """Substitute placeholders into the stage template; system+user messages.

    Every placeholder referenced by the template must be provided; unknown
    extras are ignored.  With ``one_shot`` the template's example block is
    inserted before the payload.
    """
    template = get_template(stage, language)
    missing = sorted(template.placeholders - set(vars))
    if missing:
        raise PromptError(f"missing placeholder {missing[0]}")

    def substitute(text: str) -> str:
        return _PLACEHOLDER_RE.sub(lambda m: vars[m.group(1)], text)

    user = substitute(template.user)
    if one_shot and template.one_shot_example:
        user = template.one_shot_example + "\n\n" + user
    return [
        {"role": "system", "content": substitute(template.system)},
        {"role": "user", "content": user},
    ]
