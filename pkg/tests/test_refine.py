from __future__ import annotations

import re

import pytest

import helpers
from gseo.judge import EvaluationRecord, PerformanceVector
from gseo.providers import ScriptedChatBackend
from gseo.refine import (
    Suggestion,
    Trajectory,
    TrajectoryEntry,
    analyze,
    apply_suggestion,
    run_refinement_loop,
    select_low_scoring_examples,
    validate_revision,
)

MARKER_RE = re.compile(r"\(rev-(\d+)\)")

ANALYST_REPLY = (
    "1. (dimensions: CP, AA) Add a clearly cited expert quotation.\n"
    "2. (dimensions: KC) List the subscription steps explicitly."
)


def _request_version(request) -> int:
    text = "\n".join(m.content for m in request.messages if m.role == "user")
    match = MARKER_RE.search(text)
    return int(match.group(1)) if match else 0


def loop_handlers(ratings_by_version, analyst_reply=ANALYST_REPLY, edit=None):
    def score_fn(dim, request):
        return ratings_by_version[_request_version(request)]

    handlers = helpers.judge_handlers(score_fn)
    handlers["refine.analyze"] = lambda r: analyst_reply
    handlers["refine.edit"] = edit or (
        lambda r: helpers.revision_body(_request_version(r) + 1)
    )
    handlers["select.adjudicate"] = lambda r: "version: 0\njustification: scripted."
    return handlers


def record(dim: str, rating: float, query_id: str = "q001",
           justification: str = "why") -> EvaluationRecord:
    return EvaluationRecord(
        version=0,
        query_id=query_id,
        dimension=dim,
        rating=rating,
        justification=justification,
        answer_text="answer text",
        insertion_position=1,
    )


class TestSelectLowScoringExamples:
    def test_minimum_selected(self):
        records = [record("CP", 3.0, "q001"), record("CP", 8.0, "q002")]
        picked = select_low_scoring_examples(records, per_dim=1)
        assert [r.query_id for r in picked] == ["q001"]

    def test_clamped_when_fewer_records(self):
        records = [record("CP", 3.0, "q001")]
        assert len(select_low_scoring_examples(records, per_dim=2)) == 1

    def test_rating_ties_broken_by_query_id(self):
        records = [
            record("CP", 7.0, "q003"),
            record("CP", 5.0, "q002"),
            record("CP", 5.0, "q001"),
        ]
        picked = select_low_scoring_examples(records, per_dim=2)
        assert [r.query_id for r in picked] == ["q001", "q002"]

    def test_grouped_per_dimension(self):
        records = [record("CP", 4.0, "q001"), record("AD", 2.0, "q001"), record("AD", 9.0, "q002")]
        picked = select_low_scoring_examples(records, per_dim=1)
        assert [(r.dimension, r.query_id) for r in picked] == [("CP", "q001"), ("AD", "q001")]


class TestAnalyze:
    def _vector(self, ad_low=False):
        means = {k: 8.0 for k in ("CP", "AA", "FA", "KC", "SC", "AD")}
        if ad_low:
            means["AD"] = 2.0
        return PerformanceVector(version=0, means=means)

    def test_numbered_suggestions_parsed_with_priorities(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.analyze": lambda r: (
            "1. (dimensions: CP) Improve citation visibility.\n"
            "2. Tighten the opening paragraph.\n"
            "3. (dimensions: KC, SC) Add concrete subscription figures."
        )})
        suggestions = analyze(document, self._vector(), [record("CP", 3.0)], chat, config)
        assert [s.priority for s in suggestions] == [1, 2, 3]
        assert suggestions[0].dimensions == ("CP",)
        assert suggestions[1].dimensions == ()
        assert suggestions[2].dimensions == ("KC", "SC")

    def test_suggestion_without_description_dropped(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.analyze": lambda r: (
            "1. (dimensions: CP) Improve citation visibility.\n"
            "2. (dimensions: AA)\n"
            "3. Add concrete figures."
        )})
        suggestions = analyze(document, self._vector(), [record("CP", 3.0)], chat, config)
        assert len(suggestions) == 2
        assert [s.priority for s in suggestions] == [1, 2]

    def test_prompt_contains_low_scoring_examples_verbatim(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.analyze": lambda r: "1. Fix it."})
        examples = select_low_scoring_examples(
            [record("AD", 1.0, justification="unique-AD-diagnosis-text")], per_dim=1
        )
        analyze(document, self._vector(ad_low=True), examples, chat, config)
        user_text = "\n".join(m.content for m in chat.calls[0].messages if m.role == "user")
        assert "unique-AD-diagnosis-text" in user_text
        assert "AD: 2.00" in user_text

    def test_creative_temperature(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.analyze": lambda r: "1. Fix it."})
        analyze(document, self._vector(), [record("CP", 3.0)], chat, config)
        assert chat.calls[0].temperature == config.temperature_creative

    def test_unusable_reply_returns_empty_after_reprompt(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.analyze": lambda r: "nothing structured"})
        suggestions = analyze(document, self._vector(), [record("CP", 3.0)], chat, config)
        assert suggestions == []
        assert chat.count("refine.analyze") == 2


class TestApplySuggestion:
    def _suggestion(self, description="Add a cited expert quotation."):
        return Suggestion(suggestion_id="v0-s1", dimensions=("AA",), description=description, priority=1)

    def test_version_and_provenance_advance(self, document, config):
        chat = ScriptedChatBackend(
            handlers={"refine.edit": lambda r: document.body + " Extra sentence."}
        )
        revised = apply_suggestion(document, self._suggestion(), chat, config)
        assert revised.version == 1
        assert revised.provenance == "maco:1"
        assert revised.body.endswith("Extra sentence.")
        assert document.version == 0  # input untouched

    def test_empty_completion_retried_once(self, document, config):
        replies = iter(["", document.body + " More."])

        class OneShot:
            def __init__(self):
                self.calls = 0

            def __call__(self, request):
                self.calls += 1
                return next(replies)

        handler = OneShot()
        chat = ScriptedChatBackend(handlers={"refine.edit": handler})
        revised = apply_suggestion(document, self._suggestion(), chat, config)
        assert handler.calls == 2
        assert revised.body.endswith("More.")

    def test_prompt_contains_only_the_given_suggestion(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.edit": lambda r: document.body + " x"})
        apply_suggestion(document, self._suggestion("Only this change."), chat, config)
        user_text = "\n".join(m.content for m in chat.calls[0].messages if m.role == "user")
        assert "Only this change." in user_text
        assert "List the subscription steps" not in user_text

    def test_precise_temperature(self, document, config):
        chat = ScriptedChatBackend(handlers={"refine.edit": lambda r: document.body + " x"})
        apply_suggestion(document, self._suggestion(), chat, config)
        assert chat.calls[0].temperature == config.temperature_precise


class TestValidateRevision:
    def test_identical_body_fails(self, document):
        clone = document.revised(body=document.body, provenance="maco:1")
        outcome = validate_revision(document, clone)
        assert not outcome.passed

    def test_explosion_fails_ratio_check(self, document):
        blown = document.revised(body=document.body * 10, provenance="maco:1")
        outcome = validate_revision(document, blown)
        assert not outcome.passed
        assert "ratio" in outcome.reason

    def test_collapse_fails_ratio_check(self, document):
        shrunk = document.revised(body=document.body[:20], provenance="maco:1")
        assert not validate_revision(document, shrunk).passed

    def test_modest_rewrite_passes(self, document):
        revised = document.revised(body=document.body + " One new sentence.", provenance="maco:1")
        outcome = validate_revision(document, revised)
        assert outcome.passed and outcome.reason == "ok"


RISING = {0: 5.0, 1: 6.0, 2: 7.0, 3: 8.0}
FLAT = {0: 5.0, 1: 5.0, 2: 5.0, 3: 5.0}


class TestRefinementLoop:
    def test_degenerate_zero_iterations(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(handlers=loop_handlers(RISING))
        config = helpers.mock_config(max_iterations=0)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        assert len(trajectory.entries) == 1
        assert trajectory.termination_reason == "max_iterations"
        assert providers.chat.count("judge.score.") == 1 * 3 * 6

    def test_rising_scores_hit_iteration_cap(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(handlers=loop_handlers(RISING))
        config = helpers.mock_config(max_iterations=3)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        assert len(trajectory.entries) == 4
        assert trajectory.termination_reason == "max_iterations"
        means = [e.vector.mean() for e in trajectory.entries]
        assert means == sorted(means)
        assert providers.chat.count("judge.score.") == 4 * 3 * 6

    def test_flat_scores_plateau(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(handlers=loop_handlers(FLAT))
        config = helpers.mock_config(max_iterations=10, plateau_epsilon=0.05, plateau_window=2)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        assert trajectory.termination_reason == "plateau"
        assert len(trajectory.entries) == 3  # two non-improving iterations after entry 0

    def test_applied_suggestion_is_member_of_prior_suggestions(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(handlers=loop_handlers(RISING))
        config = helpers.mock_config(max_iterations=2)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        for prev, cur in zip(trajectory.entries, trajectory.entries[1:]):
            assert cur.applied_suggestion in prev.suggestions
            assert cur.document.body != prev.document.body
            assert cur.validation is not None and cur.validation.passed

    def test_unusable_analyst_terminates_exhausted(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(
            handlers=loop_handlers(RISING, analyst_reply="no structure here")
        )
        config = helpers.mock_config(max_iterations=3)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        assert trajectory.termination_reason == "validation_exhausted"
        assert len(trajectory.entries) == 1
        assert trajectory.entries[0].suggestions == ()

    def test_all_revisions_invalid_terminates_exhausted(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(
            handlers=loop_handlers(RISING, edit=lambda r: helpers.DOC_BODY_V0)
        )
        config = helpers.mock_config(max_iterations=3)
        trajectory = run_refinement_loop(document, corpus, providers, config)
        assert trajectory.termination_reason == "validation_exhausted"
        assert len(trajectory.entries) == 1
        # both suggestions were tried before giving up
        assert providers.chat.count("refine.edit") == 2

    def test_per_dimension_plateau_mode(self, document):
        # CP keeps improving by 0.12 while the mean improvement stays under
        # epsilon, so the two plateau modes diverge.
        corpus = helpers.make_corpus()

        def cp_creep(dim, request):
            version = _request_version(request)
            return 5.0 + (0.12 * version if dim == "CP" else 0.0)

        def run(per_dimension: bool):
            handlers = loop_handlers(RISING)
            handlers.update(helpers.judge_handlers(cp_creep))
            providers = helpers.make_providers(handlers=handlers)
            config = helpers.mock_config(
                max_iterations=3, plateau_epsilon=0.05, plateau_window=2,
                plateau_per_dimension=per_dimension,
            )
            return run_refinement_loop(document, corpus, providers, config)

        mean_mode = run(per_dimension=False)
        assert mean_mode.termination_reason == "plateau"
        assert len(mean_mode.entries) == 3
        per_dim_mode = run(per_dimension=True)
        assert per_dim_mode.termination_reason == "max_iterations"
        assert len(per_dim_mode.entries) == 4

    def test_deterministic_trajectories(self, document):
        corpus = helpers.make_corpus()
        config = helpers.mock_config(max_iterations=2)
        runs = []
        for _ in range(2):
            providers = helpers.make_providers(handlers=loop_handlers(RISING))
            runs.append(run_refinement_loop(document, corpus, providers, config))
        assert runs[0] == runs[1]

    def test_editor_sees_single_suggestion_per_call(self, document):
        corpus = helpers.make_corpus()
        providers = helpers.make_providers(handlers=loop_handlers(RISING))
        config = helpers.mock_config(max_iterations=1)
        run_refinement_loop(document, corpus, providers, config)
        edit_calls = [c for c in providers.chat.calls if c.template_id == "refine.edit"]
        assert len(edit_calls) == 1
        user_text = "\n".join(m.content for m in edit_calls[0].messages if m.role == "user")
        assert "Add a clearly cited expert quotation." in user_text
        assert "List the subscription steps explicitly." not in user_text


class TestTrajectoryInvariants:
    def _entry(self, version: int, applied=None):
        vector = PerformanceVector(version=version, means={"CP": 5.0})
        doc = helpers.make_document() if version == 0 else helpers.make_document().revised(
            body=f"body v{version}", provenance=f"maco:{version}"
        )
        return TrajectoryEntry(version=version, document=doc, vector=vector,
                               applied_suggestion=applied)

    def test_versions_must_be_contiguous(self):
        with pytest.raises(ValueError):
            Trajectory(entries=(self._entry(0), self._entry(2)), termination_reason="plateau")

    def test_entry_zero_has_no_applied_suggestion(self):
        applied = Suggestion(suggestion_id="s", dimensions=(), description="d", priority=1)
        with pytest.raises(ValueError):
            Trajectory(entries=(self._entry(0, applied=applied),), termination_reason="plateau")

    def test_termination_reason_closed_set(self):
        with pytest.raises(ValueError):
            Trajectory(entries=(self._entry(0),), termination_reason="bored")
