"""Pluggable chat/search/rerank backends with scripted offline mocks."""

from __future__ import annotations

import os
from dataclasses import dataclass

from gseo.config import ENV_LLM_KEY, ENV_SEARCH_KEY, RunConfig
from gseo.errors import ConfigError
from gseo.providers.base import (
    ChatBackend,
    ChatMessage,
    ChatRequest,
    ChatResponse,
    RankedCandidate,
    RerankBackend,
    RetryPolicy,
    SearchBackend,
    SearchResult,
    TokenUsage,
    request_digest,
)
from gseo.providers.mock import (
    FixtureSearchBackend,
    ScriptedChatBackend,
    ScriptEntry,
    load_chat_fixture,
    load_search_fixture,
)
from gseo.providers.rerank import OverlapReranker, rerank_with_fallback


@dataclass(frozen=True)
class ProviderSet:
    chat: ChatBackend
    search: SearchBackend
    reranker: RerankBackend


def build_providers(config: RunConfig, env: dict[str, str] | None = None) -> ProviderSet:
    """Assemble backends per config. Mock mode never touches the network and
    therefore never even constructs an HTTP client."""
    if config.backend == "mock":
        config.require_fixtures()
        return ProviderSet(
            chat=load_chat_fixture(config.chat_fixture),
            search=load_search_fixture(config.search_fixture),
            reranker=OverlapReranker(),
        )

    from gseo.providers.openai_chat import OpenAIChatBackend
    from gseo.providers.tavily_search import TavilySearchBackend

    env = dict(os.environ if env is None else env)
    llm_key = env.get(ENV_LLM_KEY, "")
    search_key = env.get(ENV_SEARCH_KEY, "")
    if not llm_key or not search_key:
        raise ConfigError(
            f"live backend requires {ENV_LLM_KEY} and {ENV_SEARCH_KEY} in the environment"
        )
    retry = RetryPolicy(
        max_attempts=config.retry_max_attempts, base_delay=config.retry_base_delay
    )
    return ProviderSet(
        chat=OpenAIChatBackend(api_key=llm_key, base_url=config.llm_base_url, retry=retry),
        search=TavilySearchBackend(
            api_key=search_key, base_url=config.search_base_url, retry=retry
        ),
        reranker=OverlapReranker(),
    )


__all__ = [
    "ChatBackend",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "FixtureSearchBackend",
    "OverlapReranker",
    "ProviderSet",
    "RankedCandidate",
    "RerankBackend",
    "RetryPolicy",
    "ScriptEntry",
    "ScriptedChatBackend",
    "SearchBackend",
    "SearchResult",
    "TokenUsage",
    "build_providers",
    "load_chat_fixture",
    "load_search_fixture",
    "request_digest",
    "rerank_with_fallback",
]
