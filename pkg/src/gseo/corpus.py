"""Benchmark corpus construction: query synthesis, refinement, retrieval,
plus the seed-query pipeline (top-n retrieval, random source selection,
query-article verification)."""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from gseo.config import RunConfig
from gseo.errors import CorpusError, ProviderError, VerificationInconclusive
from gseo.prompts import build_request
from gseo.providers.base import ChatBackend, SearchBackend, SearchResult

logger = logging.getLogger(__name__)

QUERY_ORIGINS = ("synthesized", "seed-dataset")

ANSWER_TYPES = frozenset({"Fact", "Explanation", "List", "Comparison", "Guide"})
USER_INTENTS = frozenset({"Learning", "Research", "Entertainment", "Comparison", "Purchase"})
TOPICS = frozenset(
    {
        "Education", "Internet", "Real Estate", "Sports", "News", "Arts", "Beauty",
        "Online Comm.", "Electronics", "Shopping", "Hobbies", "Economics", "Pets",
        "Business", "Politics",
    }
)
_TAG_VOCABULARIES = {"answer_type": ANSWER_TYPES, "user_intent": USER_INTENTS, "topic": TOPICS}

MIN_QUERY_CHARS = 8
NEAR_DUPLICATE_JACCARD = 0.85

_QUERY_LEADS = frozenset(
    """what how why when where which who whom whose is are was were am do does did
    can could should would will may might has have had explain describe list
    compare define summarize tell give name identify outline""".split()
)


@dataclass(frozen=True)
class Document:
    """A versioned article. Version 0 is always the original; revised
    versions carry provenance 'maco:<iteration>' or 'baseline:<strategy>'."""

    doc_id: str
    title: str
    body: str
    version: int = 0
    provenance: str = "original"
    url: str | None = None

    def __post_init__(self) -> None:
        if not self.body:
            raise ValueError("Document.body must be non-empty")
        if self.version < 0:
            raise ValueError("Document.version must be >= 0")
        if (self.version == 0) != (self.provenance == "original"):
            raise ValueError(
                f"version 0 iff provenance 'original' (got version={self.version}, "
                f"provenance={self.provenance!r})"
            )
        if self.provenance != "original" and not self.provenance.startswith(("baseline:", "maco:")):
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def revised(self, body: str, provenance: str) -> "Document":
        return Document(
            doc_id=self.doc_id,
            title=self.title,
            body=body,
            version=self.version + 1,
            provenance=provenance,
            url=self.url,
        )


@dataclass(frozen=True)
class Query:
    query_id: str
    text: str
    origin: str = "synthesized"
    tags: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("Query.text must be non-empty")
        if self.origin not in QUERY_ORIGINS:
            raise ValueError(f"Query.origin must be one of {QUERY_ORIGINS}")
        for key, value in (self.tags or {}).items():
            vocab = _TAG_VOCABULARIES.get(key)
            if vocab is None:
                raise ValueError(f"unknown tag key {key!r}")
            if value not in vocab:
                raise ValueError(f"tag {key}={value!r} not in the closed vocabulary")


@dataclass(frozen=True)
class CorpusPair:
    query: Query
    contexts: tuple[SearchResult, ...] = ()
    retrieval_error: str | None = None


@dataclass(frozen=True)
class BenchmarkCorpus:
    source: Document
    pairs: tuple[CorpusPair, ...]

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValueError("BenchmarkCorpus.pairs must be non-empty")
        texts = [p.query.text for p in self.pairs]
        if len(set(texts)) != len(texts):
            raise ValueError("corpus queries must be unique by text")


@dataclass(frozen=True)
class BenchmarkSeed:
    """Output of the seed-query stage: a randomly selected source article
    plus the full retrieval candidate pool it was drawn from."""

    source: Document
    candidates: tuple[SearchResult, ...]


def normalize_url(url: str) -> str:
    """Scheme-insensitive, www- and trailing-slash-insensitive URL identity,
    dropping fragments. Search APIs disagree on canonical forms."""
    u = url.strip().lower()
    u = re.sub(r"^[a-z][a-z0-9+.-]*://", "", u)
    if u.startswith("www."):
        u = u[4:]
    u = u.split("#", 1)[0]
    return u.rstrip("/")


def _normalize_text(text: str) -> str:
    return " ".join(text.split()).casefold()


def _token_jaccard(a: str, b: str) -> float:
    ta = set(re.findall(r"[a-z0-9]+", a.casefold()))
    tb = set(re.findall(r"[a-z0-9]+", b.casefold()))
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb)


_NUMBERED_LINE = re.compile(r"^\s*(?:\d+[.)]\s*|[-*]\s+)?(.+?)\s*$")


def _parse_query_lines(text: str) -> list[str]:
    out = []
    for line in text.splitlines():
        match = _NUMBERED_LINE.match(line)
        if match and match.group(1).strip():
            out.append(match.group(1).strip())
    return out


def synthesize_candidate_queries(
    doc: Document, n_candidates: int, chat: ChatBackend, config: RunConfig
) -> list[Query]:
    """Ask the chat backend (at creative temperature) for up to
    ``n_candidates`` queries answerable from the document. Duplicate lines
    are dropped, so fewer may come back."""
    if not doc.body.strip():
        raise ValueError("document body must be non-empty")
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    request = build_request(
        "corpus.synthesize",
        config,
        temperature=config.temperature_creative,
        title=doc.title,
        body=doc.body,
        n=str(n_candidates),
    )
    lines = _parse_query_lines(chat.complete(request).content)
    if not lines:
        lines = _parse_query_lines(chat.complete(request).content)
        if not lines:
            raise ProviderError("query synthesis produced no parseable queries after re-prompt")

    seen: set[str] = set()
    queries: list[Query] = []
    for line in lines:
        norm = _normalize_text(line)
        if norm in seen:
            continue
        seen.add(norm)
        queries.append(Query(query_id=f"q{len(queries) + 1:03d}", text=line))
        if len(queries) == n_candidates:
            break
    return queries


def _passes_form_heuristics(text: str) -> bool:
    stripped = text.strip()
    if len(stripped) < MIN_QUERY_CHARS:
        return False
    if stripped.endswith("?"):
        return True
    first = re.split(r"\W+", stripped.casefold(), maxsplit=1)[0]
    return first in _QUERY_LEADS


_KEEP_LINE = re.compile(r"keep\s*:\s*([\d,\s]+)", re.IGNORECASE)


def _parse_keep_indices(text: str) -> list[int] | None:
    match = _KEEP_LINE.search(text)
    if not match:
        return None
    try:
        return [int(tok) for tok in re.split(r"[,\s]+", match.group(1).strip()) if tok]
    except ValueError:
        return None


def refine_queries(
    candidates: Sequence[Query], doc: Document, chat: ChatBackend, config: RunConfig
) -> list[Query]:
    """Filter candidates for clarity, relevance, and non-redundancy: cheap
    form heuristics and near-duplicate removal first, then an LLM keep-list
    over the survivors. Output is always a subset of the input, in order."""
    if not candidates:
        raise ValueError("candidates must be non-empty")

    survivors: list[Query] = []
    seen: set[str] = set()
    for query in candidates:
        norm = _normalize_text(query.text)
        if norm in seen:
            continue
        if not _passes_form_heuristics(query.text):
            continue
        if any(_token_jaccard(query.text, kept.text) >= NEAR_DUPLICATE_JACCARD for kept in survivors):
            continue
        seen.add(norm)
        survivors.append(query)
    if not survivors:
        return []

    numbered = "\n".join(f"{i + 1}. {q.text}" for i, q in enumerate(survivors))
    request = build_request(
        "corpus.refine",
        config,
        temperature=config.temperature_precise,
        title=doc.title,
        body=doc.body,
        candidates=numbered,
    )
    keep = _parse_keep_indices(chat.complete(request).content)
    if keep is None:
        keep = _parse_keep_indices(chat.complete(request).content)
    if keep is None:
        logger.warning("query filter reply unparseable after re-prompt; keeping all survivors")
        return survivors
    keep_set = {i for i in keep if 1 <= i <= len(survivors)}
    return [q for i, q in enumerate(survivors, start=1) if i in keep_set]


def retrieve_contexts(
    doc: Document, queries: Sequence[Query], k: int, search: SearchBackend
) -> BenchmarkCorpus:
    """Retrieve up to ``k`` context documents per query. A failed search
    degrades that pair to empty contexts instead of aborting the batch;
    only a fully failed batch is an error."""
    if not queries:
        raise ValueError("queries must be non-empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    pairs: list[CorpusPair] = []
    failures = 0
    for query in queries:
        try:
            results = search.search(query.text, k)
            pairs.append(CorpusPair(query=query, contexts=tuple(results)))
        except ProviderError as exc:
            failures += 1
            logger.warning("retrieval failed for %r: %s", query.text, exc)
            pairs.append(CorpusPair(query=query, contexts=(), retrieval_error=str(exc)))
    if failures == len(queries):
        raise CorpusError("every context retrieval failed; no usable corpus")
    return BenchmarkCorpus(source=doc, pairs=tuple(pairs))


def build_corpus(
    doc: Document, chat: ChatBackend, search: SearchBackend, config: RunConfig
) -> BenchmarkCorpus:
    """Full corpus pipeline for one document: synthesize, refine, retrieve."""
    candidates = synthesize_candidate_queries(doc, config.n_query_candidates, chat, config)
    refined = refine_queries(candidates, doc, chat, config)
    if not refined:
        raise CorpusError("query refinement rejected every candidate")
    return retrieve_contexts(doc, refined, config.retrieval_k, search)


def build_benchmark_pair(
    seed_query: Query, search: SearchBackend, top_n: int = 10, rng_seed: int = 0
) -> BenchmarkSeed:
    """Retrieve the ``top_n`` results for a seed query and select one
    uniformly at random (seeded) as the source article."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    results = search.search(seed_query.text, top_n)
    if not results:
        raise CorpusError(f"no search results for seed query {seed_query.text!r}")
    chosen = results[random.Random(rng_seed).randrange(len(results))]
    source = Document(
        doc_id=normalize_url(chosen.url),
        title=chosen.title or chosen.url,
        body=chosen.content or chosen.title or chosen.url,
        url=chosen.url,
    )
    return BenchmarkSeed(source=source, candidates=tuple(results))


def verify_query_article_link(
    query: Query, article: Document, search: SearchBackend, k: int = 5
) -> bool:
    """True iff a fresh search for the query returns the article within the
    top ``k`` results, matching on normalized URL. A failed search raises
    VerificationInconclusive rather than reporting False."""
    article_url = article.url or article.doc_id
    if not article_url:
        raise ValueError("article must carry a url identity (url or doc_id)")
    target = normalize_url(article_url)
    try:
        results = search.search(query.text, k)
    except ProviderError as exc:
        raise VerificationInconclusive(
            f"verification search failed for {query.text!r}: {exc}"
        ) from exc
    return any(normalize_url(r.url) == target for r in results[:k])
