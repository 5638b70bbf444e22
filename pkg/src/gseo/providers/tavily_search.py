"""Live web-search backend mirroring the Tavily request/response shape."""

from __future__ import annotations

import logging
from typing import Callable

import httpx

from gseo.errors import ProviderError
from gseo.providers.base import RetryPolicy, SearchResult, run_with_retries, sort_search_results

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.tavily.com"


def search_request_body(query: str, max_results: int, api_key: str = "") -> dict:
    """Wire body for a search POST. ``api_key`` is the one volatile field;
    golden-file comparisons mask it."""
    return {
        "api_key": api_key,
        "query": query,
        "max_results": max_results,
    }


class _TransientHTTPError(Exception):
    pass


class TavilySearchBackend:
    """POSTs to ``{base_url}/search``; returns at most ``max_results`` items
    ordered by descending relevance score. Zero results is not an error."""

    def __init__(
        self,
        api_key: str,
        base_url: str = DEFAULT_BASE_URL,
        retry: RetryPolicy | None = None,
        timeout: float = 30.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] | None = None,
    ) -> None:
        if not api_key:
            raise ProviderError("search backend requires an API key (GSEO_SEARCH_API_KEY)")
        self._api_key = api_key
        self._base_url = base_url.rstrip("/")
        self._retry = retry or RetryPolicy()
        self._sleep = sleep
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def search(self, query: str, max_results: int) -> list[SearchResult]:
        if not query:
            raise ValueError("query must be non-empty")
        if max_results < 1:
            raise ValueError("max_results must be >= 1")
        body = search_request_body(query, max_results, api_key=self._api_key)
        url = f"{self._base_url}/search"

        def attempt() -> dict:
            try:
                resp = self._client.post(url, json=body)
            except httpx.HTTPError as exc:
                raise _TransientHTTPError(f"transport error: {exc}") from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                raise _TransientHTTPError(f"HTTP {resp.status_code}")
            if resp.status_code != 200:
                raise ProviderError(f"search backend returned HTTP {resp.status_code}: {resp.text[:200]}")
            return resp.json()

        kwargs = {} if self._sleep is None else {"sleep": self._sleep}
        payload = run_with_retries(
            attempt,
            policy=self._retry,
            is_transient=lambda e: isinstance(e, _TransientHTTPError),
            what="web search",
            **kwargs,
        )
        rows = [
            (
                item.get("url", ""),
                item.get("title", ""),
                item.get("content", ""),
                float(item.get("score", 0.0)),
            )
            for item in payload.get("results", [])
        ]
        return sort_search_results(rows)[:max_results]
