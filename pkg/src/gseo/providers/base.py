"""Core provider types and protocols: chat completion, web search, reranking.

Backends are shareable across threads; every call is independent and the
only mutable state (mock call recorders) is lock-protected.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence, TypeVar

from gseo.errors import ProviderError

CHAT_ROLES = ("system", "user", "assistant")

_T = TypeVar("_T")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in CHAT_ROLES:
            raise ValueError(f"invalid chat role {self.role!r}, expected one of {CHAT_ROLES}")


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion request.

    ``template_id`` is a local routing key naming the prompt template that
    produced the request. It is never sent over the wire; scripted mock
    backends use it (together with the input digest) to look up replies.
    """

    messages: tuple[ChatMessage, ...]
    temperature: float
    model_id: str
    template_id: str | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("ChatRequest.messages must be non-empty")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first chat message must have role 'system' or 'user'")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not self.model_id:
            raise ValueError("model_id must be non-empty")


@dataclass(frozen=True)
class TokenUsage:
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str = "stop"
    usage: TokenUsage = field(default_factory=TokenUsage)


@dataclass(frozen=True)
class SearchResult:
    """One retrieved web document. Result lists are ordered by descending
    score with unique, contiguous 1-based ranks."""

    url: str
    title: str
    content: str
    score: float
    rank: int

    def __post_init__(self) -> None:
        if self.score < 0:
            raise ValueError(f"relevance score must be >= 0, got {self.score}")
        if self.rank < 1:
            raise ValueError(f"rank is 1-based, got {self.rank}")


@dataclass(frozen=True)
class RankedCandidate:
    """Reranker output row: ``index`` points into the candidate list passed in."""

    index: int
    score: float


class ChatBackend(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class SearchBackend(Protocol):
    def search(self, query: str, max_results: int) -> list[SearchResult]: ...


class RerankBackend(Protocol):
    def rerank(self, query: str, texts: Sequence[str]) -> list[RankedCandidate]: ...


def request_digest(request: ChatRequest) -> str:
    """Deterministic digest of a chat request's wire-relevant bytes.

    Mock tables key on (template_id, digest); template_id itself is
    excluded so the digest reflects only what a live backend would see.
    """
    payload = {
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        "temperature": request.temperature,
        "model_id": request.model_id,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def sort_search_results(raw: Sequence[tuple[str, str, str, float]]) -> list[SearchResult]:
    """Order (url, title, content, score) rows by descending score (stable)
    and assign contiguous 1-based ranks."""
    ordered = sorted(enumerate(raw), key=lambda pair: (-pair[1][3], pair[0]))
    return [
        SearchResult(url=url, title=title, content=content, score=score, rank=i + 1)
        for i, (_, (url, title, content, score)) in enumerate(ordered)
    ]


@dataclass(frozen=True)
class RetryPolicy:
    """Bounded exponential backoff for transient backend failures."""

    max_attempts: int = 4
    base_delay: float = 0.5
    max_delay: float = 8.0

    def __post_init__(self) -> None:
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.base_delay < 0 or self.max_delay < 0:
            raise ValueError("delays must be >= 0")

    def delay(self, attempt: int) -> float:
        """Backoff before retry number ``attempt`` (1-based)."""
        return min(self.base_delay * (2 ** (attempt - 1)), self.max_delay)


def run_with_retries(
    operation: Callable[[], _T],
    *,
    policy: RetryPolicy,
    is_transient: Callable[[Exception], bool],
    sleep: Callable[[float], None] = time.sleep,
    what: str = "provider call",
) -> _T:
    """Run ``operation``, retrying transient failures up to the policy ceiling."""
    last_exc: Exception | None = None
    for attempt in range(1, policy.max_attempts + 1):
        try:
            return operation()
        except Exception as exc:
            if not is_transient(exc):
                raise
            last_exc = exc
            if attempt < policy.max_attempts:
                sleep(policy.delay(attempt))
    raise ProviderError(f"{what} failed after {policy.max_attempts} attempts: {last_exc}")
