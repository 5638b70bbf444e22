"""Iterative analyze-revise-evaluate refinement producing a Trajectory.

Each iteration evaluates the current version, diagnoses weaknesses from its
lowest-scoring outcomes, applies the highest-priority suggestion that
survives validation, and repeats until the iteration cap, a score plateau,
or suggestion exhaustion."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from gseo.config import RunConfig
from gseo.corpus import BenchmarkCorpus, Document
from gseo.errors import EmptyCompletionError
from gseo.judge import (
    DIMENSION_KEYS,
    DIMENSIONS,
    EvaluationRecord,
    PerformanceVector,
    evaluate_document,
)
from gseo.prompts import build_request
from gseo.providers import ProviderSet
from gseo.providers.base import ChatBackend

logger = logging.getLogger(__name__)

TERMINATION_MAX_ITERATIONS = "max_iterations"
TERMINATION_PLATEAU = "plateau"
TERMINATION_VALIDATION_EXHAUSTED = "validation_exhausted"
TERMINATION_REASONS = (
    TERMINATION_MAX_ITERATIONS,
    TERMINATION_PLATEAU,
    TERMINATION_VALIDATION_EXHAUSTED,
)

LENGTH_RATIO_MIN = 0.3
LENGTH_RATIO_MAX = 3.0


@dataclass(frozen=True)
class Suggestion:
    suggestion_id: str
    dimensions: tuple[str, ...]
    description: str
    priority: int

    def __post_init__(self) -> None:
        if not self.description.strip():
            raise ValueError("suggestion description must be non-empty")
        for key in self.dimensions:
            if key not in DIMENSION_KEYS:
                raise ValueError(f"unknown dimension {key!r} in suggestion")


@dataclass(frozen=True)
class ValidationOutcome:
    passed: bool
    reason: str


@dataclass(frozen=True)
class TrajectoryEntry:
    version: int
    document: Document
    vector: PerformanceVector
    suggestions: tuple[Suggestion, ...] = ()
    applied_suggestion: Suggestion | None = None
    validation: ValidationOutcome | None = None


@dataclass(frozen=True)
class Trajectory:
    entries: tuple[TrajectoryEntry, ...]
    termination_reason: str

    def __post_init__(self) -> None:
        if not self.entries:
            raise ValueError("trajectory must have at least one entry")
        for i, entry in enumerate(self.entries):
            if entry.version != i:
                raise ValueError("trajectory versions must be contiguous from 0")
        if self.entries[0].applied_suggestion is not None:
            raise ValueError("entry 0 cannot carry an applied suggestion")
        if self.termination_reason not in TERMINATION_REASONS:
            raise ValueError(f"unknown termination reason {self.termination_reason!r}")


def select_low_scoring_examples(
    records: Sequence[EvaluationRecord], per_dim: int
) -> list[EvaluationRecord]:
    """For each dimension, the ``per_dim`` lowest-rated records, rating ties
    broken by query_id order."""
    if not records:
        raise ValueError("records must be non-empty")
    if per_dim < 1:
        raise ValueError("per_dim must be >= 1")
    out: list[EvaluationRecord] = []
    for dim in DIMENSIONS:
        bucket = [r for r in records if r.dimension == dim.value]
        bucket.sort(key=lambda r: (r.rating, r.query_id))
        out.extend(bucket[:per_dim])
    return out


_SUGGESTION_LINE = re.compile(
    r"^\s*\d+[.)]\s*(?:\(\s*(?:dimensions?|dims?)\s*:\s*([A-Za-z,\s]*)\))?\s*(.*?)\s*$"
)


def _parse_suggestions(text: str, version: int) -> list[Suggestion]:
    suggestions: list[Suggestion] = []
    for line in text.splitlines():
        if not re.match(r"^\s*\d+[.)]", line):
            continue
        match = _SUGGESTION_LINE.match(line)
        if not match:
            continue
        dims_raw, description = match.group(1), match.group(2)
        if not description.strip():
            continue  # a suggestion without a description is useless
        dims = tuple(
            tok for tok in re.split(r"[,\s]+", (dims_raw or "").strip().upper())
            if tok in DIMENSION_KEYS
        )
        suggestions.append(
            Suggestion(
                suggestion_id=f"v{version}-s{len(suggestions) + 1}",
                dimensions=dims,
                description=description.strip(),
                priority=len(suggestions) + 1,
            )
        )
    return suggestions


def _format_examples(examples: Sequence[EvaluationRecord]) -> str:
    blocks = []
    for r in examples:
        blocks.append(
            f"- dimension {r.dimension}, query {r.query_id}, rating {r.rating:.1f}\n"
            f"  judge justification: {r.justification}\n"
            f"  answer: {r.answer_text}"
        )
    return "\n".join(blocks) if blocks else "(none)"


def analyze(
    doc: Document,
    vector: PerformanceVector,
    examples: Sequence[EvaluationRecord],
    chat: ChatBackend,
    config: RunConfig,
    max_suggestions: int = 5,
) -> list[Suggestion]:
    """Diagnose the document against its scores and worst examples, at
    creative temperature. Returns prioritized suggestions; an empty list
    means the analyst reply was unusable even after one re-prompt."""
    scores = "\n".join(f"{key}: {value:.2f}" for key, value in vector.ordered())
    request = build_request(
        "refine.analyze",
        config,
        temperature=config.temperature_creative,
        title=doc.title,
        body=doc.body,
        scores=scores,
        examples=_format_examples(examples),
        max_suggestions=str(max_suggestions),
    )
    suggestions = _parse_suggestions(chat.complete(request).content, doc.version)
    if not suggestions:
        suggestions = _parse_suggestions(chat.complete(request).content, doc.version)
    if not suggestions:
        logger.warning("analyst reply unparseable after re-prompt on version %d", doc.version)
    return suggestions[:max_suggestions]


def apply_suggestion(
    doc: Document, suggestion: Suggestion, chat: ChatBackend, config: RunConfig
) -> Document:
    """Editor rewrite implementing exactly one suggestion, at precise
    temperature. Empty completions are retried once."""
    request = build_request(
        "refine.edit",
        config,
        temperature=config.temperature_precise,
        title=doc.title,
        body=doc.body,
        suggestion=suggestion.description,
    )
    try:
        body = chat.complete(request).content
    except EmptyCompletionError:
        body = chat.complete(request).content
    return doc.revised(body=body.strip(), provenance=f"maco:{doc.version + 1}")


def validate_revision(old: Document, new: Document) -> ValidationOutcome:
    """Stability checks for an edited version: non-empty, length ratio
    within bounds, and actually different from its predecessor."""
    if not new.body.strip():
        return ValidationOutcome(False, "revision body is empty")
    ratio = len(new.body) / len(old.body)
    if not LENGTH_RATIO_MIN <= ratio <= LENGTH_RATIO_MAX:
        return ValidationOutcome(
            False,
            f"length ratio {ratio:.2f} outside [{LENGTH_RATIO_MIN}, {LENGTH_RATIO_MAX}]",
        )
    if new.body == old.body:
        return ValidationOutcome(False, "revision identical to previous version")
    return ValidationOutcome(True, "ok")


def _plateaued(entries: Sequence[TrajectoryEntry], config: RunConfig) -> bool:
    w = config.plateau_window
    if len(entries) - 1 < w:
        return False
    recent = entries[-(w + 1):]
    if config.plateau_per_dimension:
        for prev, cur in zip(recent, recent[1:]):
            for key, value in cur.vector.means.items():
                if value - prev.vector.means[key] >= config.plateau_epsilon:
                    return False
        return True
    for prev, cur in zip(recent, recent[1:]):
        if cur.vector.mean() - prev.vector.mean() >= config.plateau_epsilon:
            return False
    return True


def run_refinement_loop(
    d0: Document,
    corpus: BenchmarkCorpus,
    providers: ProviderSet,
    config: RunConfig,
    run_dir: str | Path | None = None,
    resume: bool = False,
) -> Trajectory:
    """Run the full refinement loop from ``d0`` (or, with ``resume``, from
    the last complete persisted entry in ``run_dir``).

    Iteration t: evaluate D_t, check plateau / iteration cap, analyze, then
    apply suggestions in priority order until one survives validation. A
    provider failure mid-run propagates after the completed entries have
    been persisted, so the run stays resumable.
    """
    sink = None
    entries: list[TrajectoryEntry] = []
    latest_records: tuple[EvaluationRecord, ...] = ()
    if run_dir is not None:
        from gseo import rundir

        sink = rundir
        run_dir = Path(run_dir)
        if resume:
            entries, latest_records = rundir.load_partial_trajectory(run_dir, corpus)
            if entries:
                logger.info("resuming from version %d", entries[-1].version)

    if not entries:
        result = evaluate_document(d0, corpus, providers, config)
        entries.append(TrajectoryEntry(version=0, document=d0, vector=result.vector))
        latest_records = result.records
        if sink is not None:
            sink.persist_trajectory_entry(run_dir, entries[0], latest_records)

    termination: str
    while True:
        current = entries[-1]
        if _plateaued(entries, config):
            termination = TERMINATION_PLATEAU
            break
        if current.version >= config.max_iterations:
            termination = TERMINATION_MAX_ITERATIONS
            break

        examples = select_low_scoring_examples(list(latest_records), config.examples_per_dim)
        suggestions = analyze(current.document, current.vector, examples, providers.chat, config)
        entries[-1] = current = replace(current, suggestions=tuple(suggestions))

        applied: Suggestion | None = None
        applied_outcome: ValidationOutcome | None = None
        revised: Document | None = None
        validations: list[tuple[Suggestion, ValidationOutcome]] = []
        for suggestion in sorted(suggestions, key=lambda s: s.priority):
            candidate = apply_suggestion(current.document, suggestion, providers.chat, config)
            outcome = validate_revision(current.document, candidate)
            validations.append((suggestion, outcome))
            if outcome.passed:
                applied, applied_outcome, revised = suggestion, outcome, candidate
                break
            logger.warning(
                "revision for %s failed validation (%s); trying next suggestion",
                suggestion.suggestion_id,
                outcome.reason,
            )
        if sink is not None:
            sink.persist_suggestions(run_dir, current.version, suggestions, applied, validations)

        if revised is None or applied is None:
            termination = TERMINATION_VALIDATION_EXHAUSTED
            break

        result = evaluate_document(revised, corpus, providers, config)
        entry = TrajectoryEntry(
            version=current.version + 1,
            document=revised,
            vector=result.vector,
            applied_suggestion=applied,
            validation=applied_outcome,
        )
        entries.append(entry)
        latest_records = result.records
        if sink is not None:
            sink.persist_trajectory_entry(run_dir, entry, latest_records)

    trajectory = Trajectory(entries=tuple(entries), termination_reason=termination)
    if sink is not None:
        sink.persist_termination(run_dir, trajectory)
    return trajectory
