"""Single-shot rewrite strategies and their sequential pipelines, the
comparison arms against the agentic refinement loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

from gseo.config import RunConfig
from gseo.corpus import Document
from gseo.errors import EmptyCompletionError, ValidationFailedError
from gseo.prompts import build_request, load_strategy_catalog
from gseo.providers.base import ChatBackend
from gseo.refine import validate_revision

logger = logging.getLogger(__name__)

CATEGORY_FLUENCY = "fluency-engagement"
CATEGORY_AUTHORITY = "authority-credibility"
CATEGORY_SEO = "seo-techniques"


@dataclass(frozen=True)
class Strategy:
    key: str
    abbrev: str
    category: str
    synthetic_content: bool

    @property
    def template_id(self) -> str:
        return f"baseline.{self.key}"


def _load_registry() -> dict[str, Strategy]:
    registry = {}
    for key, spec in load_strategy_catalog().items():
        registry[key] = Strategy(
            key=key,
            abbrev=spec["abbrev"],
            category=spec["category"],
            synthetic_content=spec["synthetic_content"],
        )
    return registry


STRATEGIES: dict[str, Strategy] = _load_registry()
ABBREVIATIONS: dict[str, str] = {s.abbrev: s.key for s in STRATEGIES.values()}


def get_strategy(name: str) -> Strategy:
    """Look up a strategy by key or abbreviation."""
    key = ABBREVIATIONS.get(name, name)
    strategy = STRATEGIES.get(key)
    if strategy is None:
        known = ", ".join(sorted(STRATEGIES))
        raise KeyError(f"unknown strategy {name!r}; known strategies: {known}")
    return strategy


def _rewrite(doc: Document, strategy: Strategy, chat: ChatBackend, config: RunConfig) -> str:
    request = build_request(
        strategy.template_id,
        config,
        temperature=config.temperature_precise,
        title=doc.title,
        body=doc.body,
    )
    try:
        return chat.complete(request).content.strip()
    except EmptyCompletionError:
        return chat.complete(request).content.strip()


def apply_strategy(
    doc: Document, strategy: Strategy, chat: ChatBackend, config: RunConfig
) -> Document:
    """One rewrite call at precise temperature, validated against the same
    stability checks as loop revisions. Validation failure is an error, not
    a silent passthrough of the original."""
    if not doc.body.strip():
        raise ValueError("document body must be non-empty")
    body = _rewrite(doc, strategy, chat, config)
    revised = doc.revised(body=body, provenance=f"baseline:{strategy.key}")
    outcome = validate_revision(doc, revised)
    if not outcome.passed:
        raise ValidationFailedError(
            f"strategy {strategy.key} produced an invalid rewrite: {outcome.reason}"
        )
    return revised


def pipeline_label(strategies: Sequence[Strategy]) -> str:
    """Chain label: the bare key for a single step, '+'-joined
    abbreviations for multi-step chains."""
    if len(strategies) == 1:
        return strategies[0].key
    return "+".join(s.abbrev for s in strategies)


def apply_pipeline(
    doc: Document, strategies: Sequence[Strategy], chat: ChatBackend, config: RunConfig
) -> Document:
    """Sequential composition of 1 to 4 distinct strategies; the final
    provenance records the ordered chain."""
    if not strategies:
        raise ValueError("pipeline requires at least one strategy")
    if len(strategies) > 4:
        raise ValueError("pipeline supports at most 4 strategies")
    keys = [s.key for s in strategies]
    if len(set(keys)) != len(keys):
        raise ValueError("pipeline strategies must not repeat")

    label = pipeline_label(strategies)
    current = doc
    for step, strategy in enumerate(strategies, start=1):
        body = _rewrite(current, strategy, chat, config)
        provenance = f"baseline:{label}" if step == len(strategies) else (
            f"baseline:{pipeline_label(strategies[:step])}"
        )
        revised = current.revised(body=body, provenance=provenance)
        outcome = validate_revision(current, revised)
        if not outcome.passed:
            raise ValidationFailedError(
                f"pipeline step {strategy.key} produced an invalid rewrite: {outcome.reason}"
            )
        current = revised
    return current
