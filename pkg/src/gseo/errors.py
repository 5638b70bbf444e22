"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GseoError(Exception):
    """Base class for all domain errors raised by this package."""


class ConfigError(GseoError):
    """Invalid or incomplete run configuration."""


class ProviderError(GseoError):
    """A chat/search backend call failed after exhausting retries."""


class EmptyCompletionError(ProviderError):
    """The chat backend returned a normally-finished but empty completion.

    Callers are expected to re-prompt once before giving up.
    """


class CorpusError(GseoError):
    """Benchmark corpus construction failed (e.g. every retrieval errored)."""


class VerificationInconclusive(GseoError):
    """The query-article verification search failed.

    Deliberately distinct from a ``False`` verification result: the link
    could not be checked at all.
    """


class EvaluationError(GseoError):
    """Document evaluation could not produce a usable performance vector."""


class ValidationFailedError(GseoError):
    """A rewritten document failed the revision validation checks."""
