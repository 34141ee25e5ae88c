from __future__ import annotations

import json

import pytest

from xnarr.errors import JudgeReplyError, ProfileLockedError, SessionError
from xnarr.feedback import (
    FeedbackEvent,
    apply_feedback,
    lexicon_translate,
    translate_feedback,
)
from xnarr.preference import CpmConfig, FeedbackDelta, PreferenceVector
from xnarr.providers import mock_with_script
from xnarr.templates import TemplateSet

TS = TemplateSet()


class FakeSession:
    """Just the attributes apply_feedback touches."""

    def __init__(self, status="active"):
        self.status = status
        self.preference = PreferenceVector(0.5, 0.5, 0.5, 0.5)
        self.cpm_config = CpmConfig(step_size=0.2)
        self.feedback_history: list[FeedbackEvent] = []


class TestLexicon:
    def test_compound_phrase(self):
        delta = lexicon_translate("shorter and more technical")
        assert delta.deltas == (1.0, -1.0, 0.0, 0.0)
        assert delta.raw_feedback == "shorter and more technical"

    def test_cancellation_sums_then_clamps(self):
        delta = lexicon_translate("more technical, less technical")
        assert delta.deltas[0] == 0.0

    def test_unrelated_text_is_zero(self):
        assert lexicon_translate("lovely weather today").deltas == (0.0,) * 4

    def test_case_insensitive(self):
        assert lexicon_translate("MORE TECHNICAL").deltas[0] == 1.0

    def test_repeated_phrase_clamps(self):
        delta = lexicon_translate("more technical and again more technical")
        assert delta.deltas[0] == 1.0

    def test_full_table(self):
        table = {
            "simpler": (-1.0, 0, 0, 0),
            "longer": (0, 1.0, 0, 0),
            "more detail": (0, 1.0, 0, 0),
            "deeper": (0, 0, 1.0, 0),
            "explain interactions": (0, 0, 1.0, 0),
            "just the facts": (0, 0, -1.0, 0),
            "what should I do": (0, 0, 0, 1.0),
            "more actionable": (0, 0, 0, 1.0),
            "less advice": (0, 0, 0, -1.0),
        }
        for phrase, expected in table.items():
            assert lexicon_translate(phrase).deltas == tuple(float(v) for v in expected), phrase


class TestTranslateFeedback:
    def reply(self, t=1.0, v=0.0, d=0.0, a=0.0) -> str:
        return json.dumps(
            {"technicality": t, "verbosity": v, "depth": d, "actionability": a}
        )

    def test_scripted_passthrough(self):
        translator = mock_with_script([self.reply(1.0)])
        delta = translate_feedback("more technical please", translator, TS)
        assert delta.deltas == (1.0, 0.0, 0.0, 0.0)
        assert delta.raw_feedback == "more technical please"

    def test_clamps_out_of_range(self):
        translator = mock_with_script([self.reply(t=-1.6)])
        delta = translate_feedback("way simpler", translator, TS)
        assert delta.deltas[0] == -1.0

    def test_zero_vector_means_no_change(self):
        translator = mock_with_script([self.reply(0.0)])
        delta = translate_feedback("this is perfect", translator, TS)
        session = FakeSession()
        after = apply_feedback(session, delta)
        assert after == session.preference
        assert after.as_tuple() == (0.5, 0.5, 0.5, 0.5)

    def test_retry_then_error(self):
        translator = mock_with_script(["?", "??", "???"])
        with pytest.raises(JudgeReplyError):
            translate_feedback("anything", translator, TS, retries=2)

    def test_empty_feedback_rejected(self):
        translator = mock_with_script(["unused"])
        with pytest.raises(ValueError, match="empty feedback"):
            translate_feedback("   ", translator, TS)

    def test_feedback_text_reaches_translator(self):
        translator = mock_with_script([self.reply()])
        translate_feedback("MAKE IT SING", translator, TS)
        assert "MAKE IT SING" in translator.request_log[0].messages[1].content


class TestApplyFeedback:
    def test_applies_update_and_records_history(self):
        session = FakeSession()
        delta = FeedbackDelta(deltas=(1.0, 0.0, 0.0, 0.0), raw_feedback="more technical")
        after = apply_feedback(session, delta)
        assert after.as_tuple() == pytest.approx((0.7, 0.5, 0.5, 0.5))
        assert session.preference == after
        assert len(session.feedback_history) == 1
        event = session.feedback_history[0]
        assert event.s_before.as_tuple() == (0.5, 0.5, 0.5, 0.5)
        assert event.s_after == after

    def test_zero_delta_still_recorded(self):
        session = FakeSession()
        apply_feedback(session, FeedbackDelta(deltas=(0.0,) * 4))
        assert session.preference.as_tuple() == (0.5, 0.5, 0.5, 0.5)
        assert len(session.feedback_history) == 1

    def test_confirmed_session_is_locked(self):
        session = FakeSession(status="confirmed")
        with pytest.raises(ProfileLockedError, match="profile locked"):
            apply_feedback(session, FeedbackDelta(deltas=(0.0,) * 4))

    def test_failed_session_not_active(self):
        session = FakeSession(status="failed")
        with pytest.raises(SessionError, match="session not active"):
            apply_feedback(session, FeedbackDelta(deltas=(0.0,) * 4))

    def test_replay_reproduces_final_vector(self):
        from xnarr.preference import update

        session = FakeSession()
        for text in ("more technical", "shorter", "more actionable", "deeper", "deeper"):
            apply_feedback(session, lexicon_translate(text))
        replayed = PreferenceVector(0.5, 0.5, 0.5, 0.5)
        for event in session.feedback_history:
            replayed = update(replayed, event.delta, session.cpm_config)
        assert replayed == session.preference

    def test_event_round_trip(self):
        event = FeedbackEvent(
            s_before=PreferenceVector(0.5, 0.5, 0.5, 0.5),
            delta=FeedbackDelta(deltas=(1.0, 0.0, 0.0, 0.0), raw_feedback="x"),
            s_after=PreferenceVector(0.7, 0.5, 0.5, 0.5),
        )
        restored = FeedbackEvent.from_dict(event.to_dict())
        assert restored == event
