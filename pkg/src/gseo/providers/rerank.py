"""Reranking backends.

The reranker decides the insertion order of a target document among
retrieved contexts. The scoring scheme is pluggable; the default scores by
query-token overlap, which is deterministic and needs no network.
"""

from __future__ import annotations

import logging
import re
from typing import Sequence

from gseo.providers.base import RankedCandidate, RerankBackend

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


class OverlapReranker:
    """Score each candidate by the number of distinct query tokens it shares
    with the query; ties preserve input order."""

    def rerank(self, query: str, texts: Sequence[str]) -> list[RankedCandidate]:
        if not texts:
            raise ValueError("rerank requires at least one candidate")
        query_tokens = _tokens(query)
        scored = [
            (len(query_tokens & _tokens(text)), i) for i, text in enumerate(texts)
        ]
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        return [RankedCandidate(index=i, score=float(score)) for score, i in scored]


def rerank_with_fallback(
    reranker: RerankBackend,
    query: str,
    texts: Sequence[str],
    target_index: int,
) -> list[RankedCandidate]:
    """Rerank, degrading to input order with the target appended last if the
    backend fails. Evaluation must not abort because a reranker is down."""
    try:
        ranked = reranker.rerank(query, texts)
    except Exception as exc:
        logger.warning("reranker failed (%s); falling back to input order, target last", exc)
        order = [i for i in range(len(texts)) if i != target_index] + [target_index]
        return [RankedCandidate(index=i, score=0.0) for i in order]
    indices = sorted(c.index for c in ranked)
    if indices != list(range(len(texts))):
        logger.warning("reranker returned a non-permutation; falling back to input order")
        order = [i for i in range(len(texts)) if i != target_index] + [target_index]
        return [RankedCandidate(index=i, score=0.0) for i in order]
    return list(ranked)
