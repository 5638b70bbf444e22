"""Shared builders for tests: canned corpora, scripted chat handlers, and
mock-mode fixture files for end-to-end CLI runs."""

from __future__ import annotations

import json
import re
from pathlib import Path

from gseo.config import RunConfig
from gseo.corpus import BenchmarkCorpus, CorpusPair, Document, Query
from gseo.judge import DIMENSION_KEYS
from gseo.providers import FixtureSearchBackend, ProviderSet, ScriptedChatBackend
from gseo.providers.base import SearchResult
from gseo.providers.rerank import OverlapReranker

DOC_BODY_V0 = (
    "Community solar gardens let households subscribe to shared panels and "
    "receive bill credits for the power produced. Subscribers join a local "
    "array, pay a monthly share, and support renewable generation without "
    "installing rooftop equipment. (rev-0)"
)

QUERY_TEXTS = (
    "What are community solar gardens?",
    "How do solar garden subscriptions work?",
    "Who can join a community solar garden?",
)

SEARCH_ROWS = [
    ("https://energy.example.com/shared-solar", "Shared solar overview",
     "Shared solar programs allocate output of one array to many subscribers.", 0.95),
    ("https://grid.example.org/bill-credits", "Bill credit mechanics",
     "Utilities apply monthly bill credits for each subscriber's share of production.", 0.90),
    ("https://news.example.net/renewables", "Renewable adoption trends",
     "Adoption of community renewable programs keeps growing across regions.", 0.85),
    ("https://coop.example.io/join", "Joining an energy cooperative",
     "Households can join cooperatives to access shared clean energy projects.", 0.80),
    ("https://faq.example.com/solar", "Solar FAQ",
     "Frequently asked questions about solar subscriptions and eligibility.", 0.75),
]


def make_document(body: str = DOC_BODY_V0, doc_id: str = "solar-gardens",
                  title: str = "Community Solar Gardens",
                  url: str | None = "https://example.com/solar-gardens") -> Document:
    return Document(doc_id=doc_id, title=title, body=body, url=url)


def make_search_results(rows=SEARCH_ROWS) -> tuple[SearchResult, ...]:
    return tuple(
        SearchResult(url=u, title=t, content=c, score=s, rank=i + 1)
        for i, (u, t, c, s) in enumerate(rows)
    )


def make_corpus(n_queries: int = 3, contexts_per_query: int = 3,
                doc: Document | None = None) -> BenchmarkCorpus:
    doc = doc or make_document()
    results = make_search_results()[:contexts_per_query]
    pairs = tuple(
        CorpusPair(
            query=Query(query_id=f"q{i + 1:03d}", text=QUERY_TEXTS[i % len(QUERY_TEXTS)] + ("" if i < len(QUERY_TEXTS) else f" variant {i}")),
            contexts=results,
        )
        for i in range(n_queries)
    )
    return BenchmarkCorpus(source=doc, pairs=pairs)


def extract_query(request) -> str:
    """Pull the 'Query: ...' line out of a rendered prompt."""
    user_text = "\n".join(m.content for m in request.messages if m.role == "user")
    match = re.search(r"^Query: (.+)$", user_text, re.MULTILINE)
    return match.group(1) if match else ""


def judge_handlers(score_fn=None, answer: str = "Subscribers share one array's output [1]."):
    """Chat handlers covering answer generation and all six judge rubrics.

    ``score_fn(dim_key, request) -> float`` decides each rating; default is
    a constant 9.0.
    """
    score_fn = score_fn or (lambda dim, request: 9.0)
    handlers = {"judge.answer": lambda request: answer}
    for dim in DIMENSION_KEYS:
        def scorer(request, dim=dim):
            rating = score_fn(dim, request)
            return f"rating: {rating}\njustification: scripted verdict for {dim}."
        handlers[f"judge.score.{dim}"] = scorer
    return handlers


def make_providers(handlers=None, default: str | None = None,
                   search_fixtures=None, search_default=SEARCH_ROWS,
                   fail_queries=()) -> ProviderSet:
    return ProviderSet(
        chat=ScriptedChatBackend(handlers=handlers or {}, default=default),
        search=FixtureSearchBackend(
            fixtures=search_fixtures or {}, default=search_default, fail_queries=fail_queries
        ),
        reranker=OverlapReranker(),
    )


def mock_config(**overrides) -> RunConfig:
    defaults = dict(backend="mock", chat_fixture="unused", search_fixture="unused")
    defaults.update(overrides)
    return RunConfig(**defaults)


# ---------------------------------------------------------------------------
# Mock-mode fixture files for CLI runs

REVISION_MARK = "(rev-{n})"


def revision_body(n: int) -> str:
    base = DOC_BODY_V0.replace("(rev-0)", "").rstrip()
    extras = " ".join(
        f"Revision {i} adds a cited expert quotation and clearer steps." for i in range(1, n + 1)
    )
    suffix = f" {extras}" if extras else ""
    return f"{base}{suffix} (rev-{n})"


def write_pipeline_fixtures(
    target_dir: Path,
    ratings_by_version: dict[int, float],
    selector_reply: str = "version: 2\njustification: best balance of scores and stability.",
) -> tuple[Path, Path, Path]:
    """Write chat/search fixture files plus a source document whose body
    carries a revision marker, so judge and editor replies can vary by
    version via substring matching. Returns (doc, chat, search) paths."""
    entries = [
        {
            "template_id": "corpus.synthesize",
            "content": "\n".join(f"{i + 1}. {q}" for i, q in enumerate(QUERY_TEXTS)),
        },
        {"template_id": "corpus.refine", "content": "keep: 1, 2, 3"},
        {
            "template_id": "judge.answer",
            "content": "Community solar gardens share one array's output among subscribers [1].",
        },
        {
            "template_id": "refine.analyze",
            "content": (
                "1. (dimensions: CP, AA) Add a clearly cited expert quotation.\n"
                "2. (dimensions: KC) List the subscription steps explicitly."
            ),
        },
        {"template_id": "select.adjudicate", "content": selector_reply},
    ]
    base = DOC_BODY_V0.replace("(rev-0)", "").rstrip()
    for key in (
        "fluent", "simple_language", "technical_terms", "authoritative", "more_quotes",
        "citing_sources", "statistics", "unique_words", "keyword_stuffing",
    ):
        entries.append(
            {
                "template_id": f"baseline.{key}",
                "content": f"{base} Rewritten via {key}. (rev-0)",
            }
        )
    versions = sorted(ratings_by_version)
    for version in versions:
        marker = REVISION_MARK.format(n=version)
        for dim in DIMENSION_KEYS:
            entries.append(
                {
                    "template_id": f"judge.score.{dim}",
                    "contains": marker,
                    "content": (
                        f"rating: {ratings_by_version[version]}\n"
                        f"justification: scripted {dim} verdict for revision {version}."
                    ),
                }
            )
        entries.append(
            {
                "template_id": "refine.edit",
                "contains": marker,
                "content": revision_body(version + 1),
            }
        )

    chat_path = target_dir / "chat_fixture.json"
    chat_path.write_text(
        json.dumps({"schema": "gseo/v1", "entries": entries}, indent=2) + "\n",
        encoding="utf-8",
    )

    search_path = target_dir / "search_fixture.json"
    search_payload = {
        "schema": "gseo/v1",
        "default": [
            {"url": u, "title": t, "content": c, "score": s} for u, t, c, s in SEARCH_ROWS
        ],
    }
    search_path.write_text(json.dumps(search_payload, indent=2) + "\n", encoding="utf-8")

    doc_path = target_dir / "article.txt"
    doc_path.write_text(DOC_BODY_V0, encoding="utf-8")
    return doc_path, chat_path, search_path


def write_cli_config(
    target_dir: Path, chat_path: Path, search_path: Path, **overrides
) -> Path:
    values = {
        "backend": "mock",
        "chat_fixture": str(chat_path),
        "search_fixture": str(search_path),
        "max_iterations": 3,
        "tau": 7.0,
        "rng_seed": 7,
    }
    values.update(overrides)
    lines = []
    for key, value in values.items():
        if isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, (int, float)):
            lines.append(f"{key} = {value}")
        else:
            lines.append(f'{key} = "{value}"')
    config_path = target_dir / "config.toml"
    config_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return config_path
