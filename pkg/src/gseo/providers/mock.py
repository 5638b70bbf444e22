"""Offline scripted backends for byte-deterministic runs and tests.

The chat mock is a scripted table keyed by (prompt-template id, input
digest). Lookup order for a request:

1. entry with matching template_id and exact digest
2. entries with matching template_id and a ``contains`` substring of the
   rendered user text, in file order
3. a Python handler registered for the template_id (test convenience)
4. entry with matching template_id and neither digest nor contains
5. the global default entry

Given fixed entries/handlers, a mock response is a pure function of the
request bytes, so identical calls always yield identical responses.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from gseo.errors import EmptyCompletionError, ProviderError
from gseo.providers.base import (
    ChatRequest,
    ChatResponse,
    SearchResult,
    TokenUsage,
    request_digest,
    sort_search_results,
)

SCHEMA = "gseo/v1"


@dataclass(frozen=True)
class ScriptEntry:
    template_id: str
    content: str
    digest: str | None = None
    contains: str | None = None


class ScriptedChatBackend:
    """Chat backend replaying a scripted table; records every call."""

    def __init__(
        self,
        entries: Sequence[ScriptEntry] = (),
        handlers: Mapping[str, Callable[[ChatRequest], str]] | None = None,
        default: str | None = None,
    ) -> None:
        self._entries = list(entries)
        self._handlers = dict(handlers or {})
        self._default = default
        self._lock = threading.Lock()
        self.calls: list[ChatRequest] = []

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
        content = self._lookup(request)
        if not content:
            raise EmptyCompletionError(
                f"scripted completion for template {request.template_id!r} is empty"
            )
        return ChatResponse(
            content=content,
            finish_reason="stop",
            usage=TokenUsage(prompt_tokens=0, completion_tokens=0),
        )

    def _lookup(self, request: ChatRequest) -> str:
        template = request.template_id or ""
        digest = request_digest(request)
        user_text = "\n".join(m.content for m in request.messages if m.role == "user")

        for entry in self._entries:
            if entry.template_id == template and entry.digest == digest:
                return entry.content
        for entry in self._entries:
            if entry.template_id == template and entry.contains is not None:
                if entry.contains in user_text:
                    return entry.content
        handler = self._handlers.get(template)
        if handler is not None:
            return handler(request)
        for entry in self._entries:
            if entry.template_id == template and entry.digest is None and entry.contains is None:
                return entry.content
        if self._default is not None:
            return self._default
        raise ProviderError(
            f"no scripted response for template {template!r} (digest {digest[:12]}...)"
        )

    def count(self, template_prefix: str = "") -> int:
        """Number of recorded calls whose template_id starts with the prefix."""
        with self._lock:
            return sum(
                1 for c in self.calls if (c.template_id or "").startswith(template_prefix)
            )


class FixtureSearchBackend:
    """Search backend serving canned results keyed by query text.

    Each fixture row is (url, title, content, score); results are ordered by
    descending score with contiguous 1-based ranks, truncated to
    ``max_results``. Queries in ``fail_queries`` raise, exercising the
    degraded-retrieval paths.
    """

    def __init__(
        self,
        fixtures: Mapping[str, Sequence[tuple[str, str, str, float]]] | None = None,
        default: Sequence[tuple[str, str, str, float]] | None = None,
        fail_queries: Sequence[str] = (),
    ) -> None:
        self._fixtures = {k: list(v) for k, v in (fixtures or {}).items()}
        self._default = list(default) if default is not None else []
        self._fail = set(fail_queries)
        self._lock = threading.Lock()
        self.calls: list[tuple[str, int]] = []

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        if not query:
            raise ValueError("query must be non-empty")
        if max_results < 1:
            raise ValueError("max_results must be >= 1")
        with self._lock:
            self.calls.append((query, max_results))
        if query in self._fail:
            raise ProviderError(f"scripted search failure for query {query!r}")
        raw = self._fixtures.get(query, self._default)
        return sort_search_results(raw)[:max_results]


def load_chat_fixture(path: str | Path) -> ScriptedChatBackend:
    """Build a scripted chat backend from a JSON fixture file."""
    data = _load_fixture_json(path)
    entries = [
        ScriptEntry(
            template_id=row["template_id"],
            content=row["content"],
            digest=row.get("digest"),
            contains=row.get("contains"),
        )
        for row in data.get("entries", [])
    ]
    return ScriptedChatBackend(entries=entries, default=data.get("default"))


def load_search_fixture(path: str | Path) -> FixtureSearchBackend:
    """Build a fixture search backend from a JSON fixture file."""
    data = _load_fixture_json(path)

    def rows(items: list[dict]) -> list[tuple[str, str, str, float]]:
        return [
            (r["url"], r.get("title", ""), r.get("content", ""), float(r.get("score", 0.0)))
            for r in items
        ]

    fixtures = {q: rows(items) for q, items in data.get("queries", {}).items()}
    default = rows(data["default"]) if "default" in data else None
    return FixtureSearchBackend(
        fixtures=fixtures,
        default=default,
        fail_queries=data.get("fail_queries", []),
    )


def _load_fixture_json(path: str | Path) -> dict:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("schema") != SCHEMA:
        raise ProviderError(f"fixture {path} missing schema field {SCHEMA!r}")
    return payload
