"""Natural-language feedback translated into bounded style deltas.

Two translators: an LLM-backed one (strict JSON contract, clamped) and
a deterministic lexicon for offline runs and tests. Applying feedback
delegates to the preference update rule and keeps an append-only
history on the session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import JudgeReplyError, ProfileLockedError, SessionError
from .preference import DIMENSIONS, CpmConfig, FeedbackDelta, PreferenceVector, update
from .providers import ChatMessage, ChatProvider, ChatRequest
from .style import extract_json_object
from .templates import TemplateSet, render_template

# phrase -> (dimension index, delta); multiple hits per dimension sum, then clamp
LEXICON: tuple[tuple[str, int, float], ...] = (
    ("more technical", 0, 1.0),
    ("less technical", 0, -1.0),
    ("simpler", 0, -1.0),
    ("shorter", 1, -1.0),
    ("longer", 1, 1.0),
    ("more detail", 1, 1.0),
    ("deeper", 2, 1.0),
    ("explain interactions", 2, 1.0),
    ("just the facts", 2, -1.0),
    ("what should i do", 3, 1.0),
    ("more actionable", 3, 1.0),
    ("less advice", 3, -1.0),
)


def lexicon_translate(text: str) -> FeedbackDelta:
    """Keyword-table translation; unmatched text maps to the zero delta."""
    lowered = text.lower()
    sums = [0.0, 0.0, 0.0, 0.0]
    for phrase, dim, delta in LEXICON:
        hits = lowered.count(phrase)
        if hits:
            sums[dim] += hits * delta
    clamped = tuple(min(1.0, max(-1.0, v)) for v in sums)
    return FeedbackDelta(deltas=clamped, raw_feedback=text)


def translate_feedback(
    text: str,
    translator: ChatProvider,
    templates: TemplateSet,
    retries: int = 2,
    model_name: str = "translator",
    temperature: float = 0.0,
    seed: int | None = None,
) -> FeedbackDelta:
    """LLM translation to a [-1,1]^4 delta; values are clamped and the
    raw feedback text is retained."""
    if not text.strip():
        raise ValueError("empty feedback")
    system = templates.text("translator_system.txt")
    user = render_template(templates.text("translator_user.txt"), feedback=text)
    request = ChatRequest(
        model_name=model_name,
        messages=(ChatMessage("system", system), ChatMessage("user", user)),
        temperature=temperature,
        seed=seed,
    )
    last_error: Exception | None = None
    for _ in range(retries + 1):
        response = translator.complete(request)
        try:
            values = extract_json_object(response.content, clamp=(-1.0, 1.0))
        except (ValueError, json.JSONDecodeError) as exc:
            last_error = exc
            continue
        return FeedbackDelta(
            deltas=tuple(values[dim] for dim in DIMENSIONS), raw_feedback=text
        )
    raise JudgeReplyError(f"translator reply unparseable after retries: {last_error}")


@dataclass(frozen=True)
class FeedbackEvent:
    """One applied update: enough to replay the trajectory exactly."""

    s_before: PreferenceVector
    delta: FeedbackDelta
    s_after: PreferenceVector

    def to_dict(self) -> dict:
        return {
            "s_before": self.s_before.as_dict(),
            "delta": self.delta.as_dict(),
            "raw_feedback": self.delta.raw_feedback,
            "s_after": self.s_after.as_dict(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "FeedbackEvent":
        return cls(
            s_before=PreferenceVector.from_dict(payload["s_before"]),
            delta=FeedbackDelta.from_dict(
                payload["delta"], raw_feedback=payload.get("raw_feedback", "")
            ),
            s_after=PreferenceVector.from_dict(payload["s_after"]),
        )


def apply_feedback(session, delta: FeedbackDelta, cfg: CpmConfig | None = None) -> PreferenceVector:
    """Fold a delta into the session's preference state and record the
    event. The session must still be active."""
    if session.status == "confirmed":
        raise ProfileLockedError("profile locked")
    if session.status != "active":
        raise SessionError("session not active")
    cfg = cfg or session.cpm_config
    before = session.preference
    after = update(before, delta, cfg)
    session.preference = after
    session.feedback_history.append(FeedbackEvent(s_before=before, delta=delta, s_after=after))
    return after
