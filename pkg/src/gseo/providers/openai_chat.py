"""Live chat backend speaking the OpenAI-compatible chat-completions protocol."""

from __future__ import annotations

import logging
from typing import Callable

import httpx

from gseo.errors import EmptyCompletionError, ProviderError
from gseo.providers.base import (
    ChatRequest,
    ChatResponse,
    RetryPolicy,
    TokenUsage,
    run_with_retries,
)

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"


def chat_request_body(request: ChatRequest) -> dict:
    """Wire body for a chat-completions POST. Pure; golden-file tested."""
    return {
        "model": request.model_id,
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        "temperature": request.temperature,
    }


class _TransientHTTPError(Exception):
    pass


class OpenAIChatBackend:
    """POSTs to ``{base_url}/chat/completions`` with bounded retry on 429/5xx
    and transport errors."""

    def __init__(
        self,
        api_key: str,
        base_url: str = DEFAULT_BASE_URL,
        retry: RetryPolicy | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] | None = None,
    ) -> None:
        if not api_key:
            raise ProviderError("chat backend requires an API key (GSEO_LLM_API_KEY)")
        self._base_url = base_url.rstrip("/")
        self._retry = retry or RetryPolicy()
        self._sleep = sleep
        self._client = httpx.Client(
            timeout=timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    def complete(self, request: ChatRequest) -> ChatResponse:
        body = chat_request_body(request)
        url = f"{self._base_url}/chat/completions"

        def attempt() -> dict:
            try:
                resp = self._client.post(url, json=body)
            except httpx.HTTPError as exc:
                raise _TransientHTTPError(f"transport error: {exc}") from exc
            if resp.status_code == 429 or resp.status_code >= 500:
                raise _TransientHTTPError(f"HTTP {resp.status_code}")
            if resp.status_code != 200:
                raise ProviderError(f"chat backend returned HTTP {resp.status_code}: {resp.text[:200]}")
            return resp.json()

        kwargs = {} if self._sleep is None else {"sleep": self._sleep}
        payload = run_with_retries(
            attempt,
            policy=self._retry,
            is_transient=lambda e: isinstance(e, _TransientHTTPError),
            what="chat completion",
            **kwargs,
        )
        return _parse_chat_payload(payload)


def _parse_chat_payload(payload: dict) -> ChatResponse:
    try:
        choice = payload["choices"][0]
        content = choice["message"]["content"] or ""
        finish_reason = choice.get("finish_reason") or "stop"
    except (KeyError, IndexError, TypeError) as exc:
        raise ProviderError(f"malformed chat completion payload: {exc}") from exc
    usage = payload.get("usage") or {}
    response = ChatResponse(
        content=content,
        finish_reason=finish_reason,
        usage=TokenUsage(
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
        ),
    )
    if finish_reason == "stop" and not content.strip():
        raise EmptyCompletionError("chat backend returned an empty completion")
    return response
