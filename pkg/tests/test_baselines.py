from __future__ import annotations

import pytest

from gseo.baselines import (
    ABBREVIATIONS,
    STRATEGIES,
    apply_pipeline,
    apply_strategy,
    get_strategy,
    pipeline_label,
)
from gseo.errors import ValidationFailedError
from gseo.providers import ScriptedChatBackend, request_digest


def rewrite_chat(suffix: str = " Rewritten."):
    """Editor mock appending a per-strategy marker so each step changes the text."""

    def handler(request):
        user = "\n".join(m.content for m in request.messages if m.role == "user")
        body = user.split("Article:\n", 1)[1].rsplit("\n\nRewrite", 1)[0]
        return body + f" [{request.template_id}]{suffix}"

    return ScriptedChatBackend(handlers={t: handler for t in
                                         (f"baseline.{k}" for k in STRATEGIES)})


class TestRegistry:
    def test_nine_strategies_present(self):
        assert set(STRATEGIES) == {
            "fluent", "simple_language", "technical_terms", "authoritative",
            "more_quotes", "citing_sources", "statistics", "unique_words",
            "keyword_stuffing",
        }

    def test_category_mapping_fixed(self):
        groups = {
            "fluency-engagement": {"fluent", "simple_language", "technical_terms"},
            "authority-credibility": {"authoritative", "more_quotes", "citing_sources", "statistics"},
            "seo-techniques": {"unique_words", "keyword_stuffing"},
        }
        for category, keys in groups.items():
            assert {k for k, s in STRATEGIES.items() if s.category == category} == keys

    def test_lookup_by_abbreviation(self):
        assert get_strategy("MQ").key == "more_quotes"
        assert get_strategy("Fl").key == "fluent"
        assert get_strategy("technical_terms").key == "technical_terms"

    def test_unknown_key_lists_known_strategies(self):
        with pytest.raises(KeyError) as excinfo:
            get_strategy("galaxy_brain")
        for key in STRATEGIES:
            assert key in str(excinfo.value)

    def test_synthetic_content_flags(self):
        synthetic = {k for k, s in STRATEGIES.items() if s.synthetic_content}
        assert synthetic == {"more_quotes", "citing_sources", "statistics"}

    def test_abbreviations_unique(self):
        assert len(ABBREVIATIONS) == len(STRATEGIES)


class TestApplyStrategy:
    def test_provenance_records_strategy(self, document, config):
        chat = rewrite_chat()
        revised = apply_strategy(document, get_strategy("more_quotes"), chat, config)
        assert revised.provenance == "baseline:more_quotes"
        assert revised.version == 1
        assert document.version == 0  # input untouched

    def test_validation_failure_is_an_error(self, document, config):
        chat = ScriptedChatBackend(
            handlers={f"baseline.{k}": (lambda r, body=document.body: body) for k in STRATEGIES}
        )
        with pytest.raises(ValidationFailedError):
            apply_strategy(document, get_strategy("fluent"), chat, config)

    def test_each_strategy_dispatches_distinct_template(self, document, config):
        chat = rewrite_chat()
        for key in STRATEGIES:
            apply_strategy(document, get_strategy(key), chat, config)
        templates = [c.template_id for c in chat.calls]
        digests = {request_digest(c) for c in chat.calls}
        assert len(set(templates)) == 9
        assert len(digests) == 9

    def test_precise_temperature(self, document, config):
        chat = rewrite_chat()
        apply_strategy(document, get_strategy("fluent"), chat, config)
        assert chat.calls[0].temperature == config.temperature_precise


class TestApplyPipeline:
    def test_two_steps_in_order(self, document, config):
        chat = rewrite_chat()
        revised = apply_pipeline(
            document, [get_strategy("MQ"), get_strategy("TT")], chat, config
        )
        assert [c.template_id for c in chat.calls] == [
            "baseline.more_quotes", "baseline.technical_terms",
        ]
        assert revised.version == 2
        assert revised.provenance == "baseline:MQ+TT"
        # outputs accumulate: the second rewrite applies on top of the first
        assert "[baseline.more_quotes]" in revised.body
        assert "[baseline.technical_terms]" in revised.body

    def test_empty_pipeline_rejected(self, document, config):
        with pytest.raises(ValueError):
            apply_pipeline(document, [], rewrite_chat(), config)

    def test_four_step_chain_provenance(self, document, config):
        chain = [get_strategy(a) for a in ("MQ", "TT", "CS", "Fl")]
        revised = apply_pipeline(document, chain, rewrite_chat(), config)
        assert revised.provenance == "baseline:MQ+TT+CS+Fl"
        assert revised.version == 4

    def test_singleton_pipeline_equals_apply_strategy(self, document, config):
        strategy = get_strategy("more_quotes")
        via_pipeline = apply_pipeline(document, [strategy], rewrite_chat(), config)
        direct = apply_strategy(document, strategy, rewrite_chat(), config)
        assert via_pipeline == direct

    def test_repeats_rejected(self, document, config):
        with pytest.raises(ValueError):
            apply_pipeline(
                document, [get_strategy("MQ"), get_strategy("MQ")], rewrite_chat(), config
            )

    def test_more_than_four_steps_rejected(self, document, config):
        chain = [get_strategy(a) for a in ("MQ", "TT", "CS", "Fl", "AU")]
        with pytest.raises(ValueError):
            apply_pipeline(document, chain, rewrite_chat(), config)

    def test_label_single_vs_chain(self):
        assert pipeline_label([get_strategy("MQ")]) == "more_quotes"
        assert pipeline_label([get_strategy("MQ"), get_strategy("Fl")]) == "MQ+Fl"
