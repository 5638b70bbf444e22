"""Holistic version selection over a refinement trajectory.

An LLM adjudicates across the whole history; if its reply cannot be mapped
to a real version after one re-prompt, a deterministic argmax-of-means
fallback guarantees a valid selection."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from gseo.config import RunConfig
from gseo.errors import ProviderError
from gseo.judge import DIMENSION_KEYS
from gseo.prompts import build_request
from gseo.providers.base import ChatBackend, ChatMessage, ChatRequest
from gseo.refine import Trajectory

logger = logging.getLogger(__name__)

POLICY_LLM = "llm"
POLICY_ARGMAX_MEAN = "argmax_mean"
POLICY_NO_SELECTOR = "no_selector"

DOCUMENT_EXCERPT_CHARS = 500


@dataclass(frozen=True)
class Selection:
    index: int
    justification: str
    policy: str

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("selection index must be >= 0")
        if self.policy not in (POLICY_LLM, POLICY_ARGMAX_MEAN, POLICY_NO_SELECTOR):
            raise ValueError(f"unknown selection policy {self.policy!r}")
        if self.policy == POLICY_LLM and not self.justification.strip():
            raise ValueError("llm selection requires a justification")


def argmax_mean(trajectory: Trajectory) -> int:
    """Index of the entry maximizing the unweighted mean of the vector
    components; ties go to the earliest version."""
    best_index = 0
    best_mean = trajectory.entries[0].vector.mean()
    for entry in trajectory.entries[1:]:
        mean = entry.vector.mean()
        if mean > best_mean:
            best_index, best_mean = entry.version, mean
    return best_index


def _history_block(trajectory: Trajectory) -> str:
    blocks = []
    for entry in trajectory.entries:
        scores = ", ".join(f"{k}={v:.2f}" for k, v in entry.vector.ordered())
        applied = (
            entry.applied_suggestion.description
            if entry.applied_suggestion is not None
            else "(initial version)"
        )
        excerpt = entry.document.body[:DOCUMENT_EXCERPT_CHARS]
        blocks.append(
            f"Version {entry.version}\n"
            f"  scores: {scores} (mean {entry.vector.mean():.2f})\n"
            f"  change applied: {applied}\n"
            f"  text opening: {excerpt}"
        )
    return "\n\n".join(blocks)


_VERSION_RE = re.compile(r"version\s*[:#]?\s*(\d+)", re.IGNORECASE)
_JUSTIFICATION_RE = re.compile(r"justification\s*:\s*(.+)", re.IGNORECASE | re.DOTALL)


def _parse_choice(text: str, max_version: int) -> tuple[int, str] | None:
    match = _VERSION_RE.search(text)
    if not match:
        match = re.match(r"\s*(\d+)\b", text)
    if not match:
        return None
    index = int(match.group(1))
    if not 0 <= index <= max_version:
        return None
    just_match = _JUSTIFICATION_RE.search(text)
    justification = (just_match.group(1).strip() if just_match else "") or text.strip()
    return index, justification


def select_best_version(
    trajectory: Trajectory, chat: ChatBackend, config: RunConfig
) -> Selection:
    """Adjudicate over the full history. Whatever the LLM does, the result
    is always a valid trajectory index: unparseable or out-of-range replies
    get one re-prompt, then the argmax-mean fallback takes over."""
    max_version = trajectory.entries[-1].version
    request = build_request(
        "select.adjudicate",
        config,
        temperature=config.temperature_precise,
        history=_history_block(trajectory),
    )
    try:
        reply = chat.complete(request).content
        choice = _parse_choice(reply, max_version)
        if choice is None:
            correction = (
                f"The reply did not name a valid version (0 to {max_version}). "
                "Answer again in exactly the required format."
            )
            followup = ChatRequest(
                messages=request.messages
                + (ChatMessage("assistant", reply), ChatMessage("user", correction)),
                temperature=request.temperature,
                model_id=request.model_id,
                template_id=request.template_id,
            )
            choice = _parse_choice(chat.complete(followup).content, max_version)
    except ProviderError as exc:
        logger.warning("selector backend failed (%s); using argmax fallback", exc)
        choice = None

    if choice is None:
        index = argmax_mean(trajectory)
        logger.warning("selector reply unusable; falling back to argmax_mean (version %d)", index)
        return Selection(
            index=index,
            justification=f"argmax of mean score across {DIMENSION_KEYS} components",
            policy=POLICY_ARGMAX_MEAN,
        )
    index, justification = choice
    return Selection(index=index, justification=justification, policy=POLICY_LLM)


def final_version_selection(trajectory: Trajectory) -> Selection:
    """Ablation mode bypassing the selector: keep the last iteration."""
    return Selection(
        index=trajectory.entries[-1].version,
        justification="selector disabled; final iteration kept",
        policy=POLICY_NO_SELECTOR,
    )
