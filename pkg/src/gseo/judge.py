"""Document evaluation: reranked context assembly, simulated answer
generation, and six-dimension influence scoring by a judge LLM."""

from __future__ import annotations

import enum
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from gseo.config import RunConfig
from gseo.corpus import BenchmarkCorpus, Document, Query
from gseo.errors import EmptyCompletionError, EvaluationError
from gseo.prompts import build_request
from gseo.providers import ProviderSet
from gseo.providers.base import ChatBackend, ChatMessage, ChatRequest, SearchResult
from gseo.providers.rerank import rerank_with_fallback

logger = logging.getLogger(__name__)


class Dimension(enum.Enum):
    """The six influence dimensions, grouped into three layers."""

    CP = "CP"
    AA = "AA"
    FA = "FA"
    KC = "KC"
    SC = "SC"
    AD = "AD"

    @property
    def layer(self) -> str:
        if self is Dimension.CP:
            return "attribution-mechanics"
        if self in (Dimension.AA, Dimension.FA):
            return "content-fidelity"
        return "semantic-dominance"


DIMENSIONS: tuple[Dimension, ...] = (
    Dimension.CP,
    Dimension.AA,
    Dimension.FA,
    Dimension.KC,
    Dimension.SC,
    Dimension.AD,
)
DIMENSION_KEYS: tuple[str, ...] = tuple(d.value for d in DIMENSIONS)


@dataclass(frozen=True)
class ContextEntry:
    text: str
    title: str = ""
    url: str | None = None
    is_target: bool = False


@dataclass(frozen=True)
class EvaluationContext:
    """Reranker-ordered context with the target document inserted once."""

    query: Query
    entries: tuple[ContextEntry, ...]
    insertion_position: int  # 1-based index of the target entry

    def __post_init__(self) -> None:
        targets = [i for i, e in enumerate(self.entries, start=1) if e.is_target]
        if len(targets) != 1:
            raise ValueError(f"context must contain the target exactly once, found {len(targets)}")
        if targets[0] != self.insertion_position:
            raise ValueError("insertion_position does not point at the target entry")


@dataclass(frozen=True)
class GeneratedAnswer:
    text: str
    cited_source_indices: frozenset[int]
    citations_stripped: bool = False


@dataclass(frozen=True)
class EvaluationRecord:
    version: int
    query_id: str
    dimension: str
    rating: float
    justification: str
    answer_text: str
    insertion_position: int

    def __post_init__(self) -> None:
        if self.dimension not in DIMENSION_KEYS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if not 0.0 <= self.rating <= 10.0:
            raise ValueError(f"rating {self.rating} outside [0, 10]")
        if not self.justification:
            raise ValueError("justification must be non-empty")


@dataclass(frozen=True)
class PerformanceVector:
    """Per-dimension mean ratings for one document version."""

    version: int
    means: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.means:
            raise ValueError("performance vector must have at least one component")
        for key, value in self.means.items():
            if key not in DIMENSION_KEYS:
                raise ValueError(f"unknown dimension {key!r}")
            if not 0.0 <= value <= 10.0:
                raise ValueError(f"component {key}={value} outside [0, 10]")

    def ordered(self) -> list[tuple[str, float]]:
        return [(k, self.means[k]) for k in DIMENSION_KEYS if k in self.means]

    def mean(self) -> float:
        values = [v for _, v in self.ordered()]
        return sum(values) / len(values)


@dataclass(frozen=True)
class EvaluationResult:
    records: tuple[EvaluationRecord, ...]
    vector: PerformanceVector
    missing: tuple[tuple[str, str], ...] = ()  # (query_id, dimension) pairs


def build_eval_context(
    doc: Document,
    query: Query,
    contexts: Sequence[SearchResult],
    providers: ProviderSet,
) -> EvaluationContext:
    """Insert the target document into the retrieved contexts at the
    position the reranker assigns. No retrieved context is ever dropped or
    duplicated; with no contexts the target stands alone at position 1."""
    if not doc.body.strip():
        raise ValueError("target document body must be non-empty")
    if any(c.content == doc.body for c in contexts):
        raise EvaluationError("target document text already present among contexts")
    if not contexts:
        entry = ContextEntry(text=doc.body, title=doc.title, url=doc.url, is_target=True)
        return EvaluationContext(query=query, entries=(entry,), insertion_position=1)

    texts = [c.content for c in contexts] + [doc.body]
    target_index = len(contexts)
    ranked = rerank_with_fallback(providers.reranker, query.text, texts, target_index)
    entries: list[ContextEntry] = []
    position = 0
    for slot, candidate in enumerate(ranked, start=1):
        if candidate.index == target_index:
            entries.append(
                ContextEntry(text=doc.body, title=doc.title, url=doc.url, is_target=True)
            )
            position = slot
        else:
            ctx = contexts[candidate.index]
            entries.append(ContextEntry(text=ctx.content, title=ctx.title, url=ctx.url))
    return EvaluationContext(query=query, entries=tuple(entries), insertion_position=position)


_CITATION_RE = re.compile(r"\[(\d+)\]")


def parse_citations(text: str) -> frozenset[int]:
    """Bracketed integer citation indices; bracketed non-integers ignored."""
    return frozenset(int(m) for m in _CITATION_RE.findall(text))


def strip_citations(text: str) -> str:
    return re.sub(r"\s*\[\d+\]", "", text)


def _sources_block(ctx: EvaluationContext) -> str:
    blocks = []
    for i, entry in enumerate(ctx.entries, start=1):
        header = f"[{i}] {entry.title}".rstrip()
        blocks.append(f"{header}\n{entry.text}")
    return "\n\n".join(blocks)


def _reprompt(chat: ChatBackend, request: ChatRequest, reply: str, correction: str) -> str:
    followup = ChatRequest(
        messages=request.messages
        + (ChatMessage("assistant", reply), ChatMessage("user", correction)),
        temperature=request.temperature,
        model_id=request.model_id,
        template_id=request.template_id,
    )
    return chat.complete(followup).content


def generate_answer(
    query: Query, ctx: EvaluationContext, chat: ChatBackend, config: RunConfig
) -> GeneratedAnswer:
    """Simulate answer synthesis over the evaluation context, at precise
    temperature. Citations referencing nonexistent source numbers trigger
    one re-prompt; if still broken the answer is kept citation-stripped."""
    request = build_request(
        "judge.answer",
        config,
        temperature=config.temperature_precise,
        sources=_sources_block(ctx),
        query=query.text,
    )
    try:
        text = chat.complete(request).content
    except EmptyCompletionError:
        text = chat.complete(request).content

    limit = len(ctx.entries)
    cited = parse_citations(text)
    if all(1 <= i <= limit for i in cited):
        return GeneratedAnswer(text=text, cited_source_indices=cited)

    correction = (
        f"Some citations reference source numbers that do not exist; only 1 to {limit} "
        "are valid. Rewrite the answer citing only existing sources."
    )
    retry_text = _reprompt(chat, request, text, correction)
    cited = parse_citations(retry_text)
    if all(1 <= i <= limit for i in cited):
        return GeneratedAnswer(text=retry_text, cited_source_indices=cited)

    logger.warning(
        "answer for %s cited out-of-range sources after re-prompt; stripping citations",
        query.query_id,
    )
    return GeneratedAnswer(
        text=strip_citations(retry_text),
        cited_source_indices=frozenset(),
        citations_stripped=True,
    )


_RATING_RE = re.compile(r"rating\s*:\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_JUSTIFICATION_RE = re.compile(r"justification\s*:\s*(.+)", re.IGNORECASE | re.DOTALL)


def _parse_verdict(text: str) -> tuple[float, str] | None:
    match = _RATING_RE.search(text)
    if not match:
        return None
    rating = float(match.group(1))
    if not 0.0 <= rating <= 10.0:
        return None
    just_match = _JUSTIFICATION_RE.search(text)
    justification = (just_match.group(1).strip() if just_match else "") or text.strip()
    return round(rating, 1), justification


def score_dimension(
    doc: Document,
    query: Query,
    answer: GeneratedAnswer,
    ctx: EvaluationContext,
    dim: Dimension,
    chat: ChatBackend,
    config: RunConfig,
) -> EvaluationRecord | None:
    """One judge verdict for (document, query, dimension). An unparseable or
    out-of-range rating is re-prompted once, then recorded as missing
    (None) so it drops out of the means."""
    request = build_request(
        f"judge.score.{dim.value}",
        config,
        temperature=config.temperature_precise,
        target_position=str(ctx.insertion_position),
        target_title=doc.title,
        target_body=doc.body,
        query=query.text,
        answer=answer.text,
    )
    reply = chat.complete(request).content
    verdict = _parse_verdict(reply)
    if verdict is None:
        correction = (
            "The reply could not be parsed. Respond again in exactly the required "
            "format, with the rating between 0 and 10."
        )
        verdict = _parse_verdict(_reprompt(chat, request, reply, correction))
    if verdict is None:
        logger.warning(
            "judge verdict unparseable for query=%s dim=%s; recording as missing",
            query.query_id,
            dim.value,
        )
        return None
    rating, justification = verdict
    return EvaluationRecord(
        version=doc.version,
        query_id=query.query_id,
        dimension=dim.value,
        rating=rating,
        justification=justification,
        answer_text=answer.text,
        insertion_position=ctx.insertion_position,
    )


def evaluate_document(
    doc: Document,
    corpus: BenchmarkCorpus,
    providers: ProviderSet,
    config: RunConfig,
    dims: Iterable[Dimension] = DIMENSIONS,
) -> EvaluationResult:
    """Score the document over every (pair, dimension) cell and aggregate
    per-dimension means into a performance vector. Missing verdicts are
    excluded from both numerator and denominator; a dimension with no
    surviving verdicts fails the evaluation."""
    dim_list = [d for d in DIMENSIONS if d in set(dims)]
    if not dim_list:
        raise ValueError("dims must be non-empty")

    def eval_pair(pair_index: int) -> list[EvaluationRecord | None]:
        pair = corpus.pairs[pair_index]
        ctx = build_eval_context(doc, pair.query, pair.contexts, providers)
        answer = generate_answer(pair.query, ctx, providers.chat, config)
        return [
            score_dimension(doc, pair.query, answer, ctx, dim, providers.chat, config)
            for dim in dim_list
        ]

    indices = range(len(corpus.pairs))
    if config.concurrency > 1:
        with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
            per_pair = list(pool.map(eval_pair, indices))
    else:
        per_pair = [eval_pair(i) for i in indices]

    records: list[EvaluationRecord] = []
    missing: list[tuple[str, str]] = []
    sums = {d.value: 0.0 for d in dim_list}
    counts = {d.value: 0 for d in dim_list}
    for pair_index in indices:  # canonical (pair, dimension) aggregation order
        for dim, record in zip(dim_list, per_pair[pair_index]):
            if record is None:
                missing.append((corpus.pairs[pair_index].query.query_id, dim.value))
                continue
            records.append(record)
            sums[dim.value] += record.rating
            counts[dim.value] += 1

    empty = [key for key, n in counts.items() if n == 0]
    if empty:
        raise EvaluationError(
            f"no usable judge verdicts for dimension(s) {', '.join(empty)} "
            f"on version {doc.version}"
        )
    vector = PerformanceVector(
        version=doc.version,
        means={key: sums[key] / counts[key] for key in sums},
    )
    return EvaluationResult(records=tuple(records), vector=vector, missing=tuple(missing))
