"""Versioned prompt template catalog.

Every agent call goes through a named template here; the template id rides
along on the ChatRequest so scripted mocks can key on it. Strategy rewrite
prompts live in strategies.json (schema-validated at load).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from gseo.config import RunConfig
from gseo.errors import ConfigError
from gseo.providers.base import ChatMessage, ChatRequest

CATALOG_VERSION = "v1"


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    system: str
    user: str

    def render(self, **fields: str) -> tuple[ChatMessage, ChatMessage]:
        return (
            ChatMessage("system", self.system),
            ChatMessage("user", self.user.format(**fields)),
        )


def build_request(
    template_id: str, config: RunConfig, temperature: float, **fields: str
) -> ChatRequest:
    template = CATALOG[template_id]
    return ChatRequest(
        messages=template.render(**fields),
        temperature=temperature,
        model_id=config.model_id,
        template_id=template_id,
    )


_RATING_REPLY_FORMAT = (
    "Reply in exactly this format:\n"
    "rating: <number between 0 and 10 with one decimal>\n"
    "justification: <two or three sentences explaining the rating>"
)

# Anchor semantics are defined at 0 / 5 / 10 only; intermediate values are
# left to the judge's interpolation.
_DIMENSION_RUBRICS = {
    "CP": (
        "Citation prominence: how visible and clearly presented is the credit "
        "given to the target source in the answer?\n"
        "0 = the target source is never cited; 5 = cited once in a minor or "
        "buried position; 10 = cited prominently and unambiguously where its "
        "material is used."
    ),
    "AA": (
        "Attribution accuracy: do the claims the answer attributes to the "
        "target source actually originate from it?\n"
        "0 = attributions to the target are fabricated or belong to other "
        "sources; 5 = attributions are partly correct with noticeable errors; "
        "10 = every claim credited to the target is genuinely found in it."
    ),
    "FA": (
        "Faithfulness: is the meaning of the target source's material "
        "preserved without distortion in the answer?\n"
        "0 = the target's meaning is contradicted or badly distorted; 5 = the "
        "gist survives but with nontrivial drift or omission; 10 = the "
        "target's meaning is conveyed accurately and in context."
    ),
    "KC": (
        "Key information point coverage: how many of the target source's "
        "specific facts relevant to the query appear in the answer?\n"
        "0 = none of the target's key facts appear; 5 = about half appear; "
        "10 = all the relevant key facts from the target are covered."
    ),
    "SC": (
        "Semantic contribution: to what extent did the target source's core "
        "ideas transfer into the answer's substance?\n"
        "0 = the answer's ideas owe nothing to the target; 5 = the target "
        "contributes supporting ideas but not the main thrust; 10 = the "
        "answer's central ideas come from the target."
    ),
    "AD": (
        "Answer dominance: what is the target source's overall role in "
        "shaping the final answer relative to the other sources?\n"
        "0 = the target plays no role; 5 = the target is one of several "
        "comparable contributors; 10 = the target dominates the answer."
    ),
}


def _score_template(key: str) -> PromptTemplate:
    return PromptTemplate(
        template_id=f"judge.score.{key}",
        system=(
            "You are a strict evaluation judge measuring how much one target "
            "source influenced a synthesized answer. Score only the dimension "
            "described below, using the full 0-10 range."
        ),
        user=(
            "Dimension to score:\n" + _DIMENSION_RUBRICS[key] + "\n\n"
            "The target source was presented to the answering model as source "
            "[{target_position}].\n\n"
            "Target source (title: {target_title}):\n{target_body}\n\n"
            "Query: {query}\n\n"
            "Synthesized answer:\n{answer}\n\n" + _RATING_REPLY_FORMAT
        ),
    )


CATALOG: dict[str, PromptTemplate] = {
    "corpus.synthesize": PromptTemplate(
        template_id="corpus.synthesize",
        system=(
            "You generate realistic search queries that a user might type into "
            "a search engine and that the given article could answer."
        ),
        user=(
            "Article title: {title}\n\nArticle:\n{body}\n\n"
            "Write {n} diverse, natural-sounding search queries answerable from "
            "this article. Cover different angles of its content. Return one "
            "query per line, numbered 1 to {n}, with no other text."
        ),
    ),
    "corpus.refine": PromptTemplate(
        template_id="corpus.refine",
        system=(
            "You curate candidate search queries for an article, keeping only "
            "those that are clear, relevant to the article, and not redundant "
            "with each other."
        ),
        user=(
            "Article title: {title}\n\nArticle:\n{body}\n\n"
            "Candidate queries:\n{candidates}\n\n"
            "Decide which candidates to keep. Reply with a single line in the "
            "form 'keep: 1, 3, 4' listing the numbers of the queries to keep."
        ),
    ),
    "judge.answer": PromptTemplate(
        template_id="judge.answer",
        system=(
            "You are a search answer engine. Using only the numbered sources "
            "provided, write a concise, accurate answer to the query. Cite the "
            "sources you draw on with bracketed numbers like [1] or [2] placed "
            "immediately after the material they support. Cite only source "
            "numbers that exist."
        ),
        user="Sources:\n{sources}\n\nQuery: {query}\n\nAnswer:",
    ),
    "refine.analyze": PromptTemplate(
        template_id="refine.analyze",
        system=(
            "You are a content diagnostician. Given an article's per-dimension "
            "influence scores and examples of its weakest query-answer "
            "outcomes, identify the root causes and propose concrete, "
            "actionable revisions, most important first."
        ),
        user=(
            "Article title: {title}\n\nArticle:\n{body}\n\n"
            "Current per-dimension scores (0-10):\n{scores}\n\n"
            "Lowest-scoring examples:\n{examples}\n\n"
            "Propose up to {max_suggestions} prioritized improvement "
            "suggestions. Format each on its own line as:\n"
            "<rank>. (dimensions: <comma-separated dimension keys>) <concrete "
            "description of the change to make>"
        ),
    ),
    "refine.edit": PromptTemplate(
        template_id="refine.edit",
        system=(
            "You are an expert editor. Revise the article to implement exactly "
            "the one suggestion given, changing nothing else gratuitously. "
            "Return only the full revised article text."
        ),
        user=(
            "Article title: {title}\n\nArticle:\n{body}\n\n"
            "Suggestion to implement:\n{suggestion}\n\nRevised article:"
        ),
    ),
    "select.adjudicate": PromptTemplate(
        template_id="select.adjudicate",
        system=(
            "You are the final adjudicator over an article's revision history. "
            "Weigh peak scores against stability across dimensions and pick "
            "the single best version overall."
        ),
        user=(
            "Revision history (per version: scores, the change applied, and "
            "the opening of the text):\n{history}\n\n"
            "Which version is best overall? Reply in exactly this format:\n"
            "version: <integer version number>\n"
            "justification: <detailed reasoning for the choice>"
        ),
    ),
}

for _key in _DIMENSION_RUBRICS:
    CATALOG[f"judge.score.{_key}"] = _score_template(_key)


_STRATEGY_FILE_SCHEMA = {
    "type": "object",
    "required": ["schema", "catalog_version", "strategies"],
    "properties": {
        "schema": {"const": "gseo/v1"},
        "catalog_version": {"type": "string"},
        "strategies": {
            "type": "object",
            "minProperties": 9,
            "additionalProperties": {
                "type": "object",
                "required": ["abbrev", "category", "synthetic_content", "system", "user"],
                "properties": {
                    "abbrev": {"type": "string", "minLength": 2, "maxLength": 2},
                    "category": {
                        "enum": [
                            "fluency-engagement",
                            "authority-credibility",
                            "seo-techniques",
                        ]
                    },
                    "synthetic_content": {"type": "boolean"},
                    "system": {"type": "string", "minLength": 1},
                    "user": {"type": "string", "minLength": 1},
                },
            },
        },
    },
}


def load_strategy_catalog() -> dict[str, dict]:
    """Load and validate prompts/strategies.json; register templates."""
    raw = resources.files("gseo.prompts").joinpath("strategies.json").read_text("utf-8")
    data = json.loads(raw)
    try:
        jsonschema.validate(data, _STRATEGY_FILE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid strategies.json: {exc.message}") from exc
    for key, spec in data["strategies"].items():
        CATALOG.setdefault(
            f"baseline.{key}",
            PromptTemplate(
                template_id=f"baseline.{key}", system=spec["system"], user=spec["user"]
            ),
        )
    return data["strategies"]
