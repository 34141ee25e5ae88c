"""Style alignment: judge-based scoring and per-dimension deviation.

A judge provider rates the narrative on the four rubric dimensions;
alignment compares those scores to the target preference vector
per-dimension, so failing dimensions are directly identifiable and can
be turned into corrective directives.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import JudgeReplyError
from .generation import NarrativeCandidate
from .preference import DIMENSIONS, PreferenceVector
from .providers import ChatMessage, ChatProvider, ChatRequest
from .templates import TemplateSet, render_template

_JSON_BLOCK_RE = re.compile(r"\{.*\}", re.DOTALL)


@dataclass(frozen=True)
class StyleScore:
    scores: PreferenceVector
    rationale: str | None
    judge_model: str


@dataclass(frozen=True)
class StyleConfig:
    deviation_threshold: float = 0.2
    judge_retries: int = 2

    def __post_init__(self):
        if not 0.0 < self.deviation_threshold < 1.0:
            raise ValueError("deviation_threshold must be in (0, 1)")
        if self.judge_retries < 0:
            raise ValueError("judge_retries must be >= 0")


@dataclass(frozen=True)
class AlignmentCheck:
    passed: bool
    deviations: tuple[float, float, float, float]
    failing_dims: tuple[str, ...]


def extract_json_object(text: str, clamp: tuple[float, float]) -> dict[str, float]:
    """Pull the four dimension scores out of a judge reply, clamping each
    into ``clamp``. Raises ValueError on anything unusable."""
    match = _JSON_BLOCK_RE.search(text)
    if match is None:
        raise ValueError("no JSON object in reply")
    payload = json.loads(match.group(0))
    if not isinstance(payload, dict):
        raise ValueError("reply JSON is not an object")
    low, high = clamp
    values = {}
    for dim in DIMENSIONS:
        if dim not in payload:
            raise ValueError(f"reply is missing {dim}")
        values[dim] = min(high, max(low, float(payload[dim])))
    return values


def score_style(
    narrative: NarrativeCandidate,
    judge: ChatProvider,
    templates: TemplateSet,
    cfg: StyleConfig | None = None,
    model_name: str = "judge",
    temperature: float = 0.0,
    seed: int | None = None,
) -> StyleScore:
    """Ask the judge for rubric scores; malformed replies are retried up
    to ``judge_retries`` times, then raise."""
    if not narrative.display_text.strip():
        raise ValueError("narrative is empty")
    cfg = cfg or StyleConfig()
    system = render_template(
        templates.text("judge_system.txt"), rubric_block=templates.rubric_anchor_block()
    )
    user = render_template(
        templates.text("judge_user.txt"), narrative=narrative.display_text
    )
    request = ChatRequest(
        model_name=model_name,
        messages=(ChatMessage("system", system), ChatMessage("user", user)),
        temperature=temperature,
        seed=seed,
    )
    last_error: Exception | None = None
    for _ in range(cfg.judge_retries + 1):
        response = judge.complete(request)
        try:
            values = extract_json_object(response.content, clamp=(0.0, 1.0))
        except (ValueError, json.JSONDecodeError) as exc:
            last_error = exc
            continue
        return StyleScore(
            scores=PreferenceVector.from_dict(values),
            rationale=None,
            judge_model=response.provider_id,
        )
    raise JudgeReplyError(f"judge reply unparseable after retries: {last_error}")


def check_alignment(
    score: StyleScore, target: PreferenceVector, cfg: StyleConfig | None = None
) -> AlignmentCheck:
    """Per-dimension absolute deviation; a dimension fails when it
    exceeds the threshold, and alignment passes iff none fail."""
    cfg = cfg or StyleConfig()
    deviations = tuple(
        abs(s - t) for s, t in zip(score.scores.as_tuple(), target.as_tuple())
    )
    failing = tuple(
        dim
        for dim, deviation in zip(DIMENSIONS, deviations)
        if deviation > cfg.deviation_threshold
    )
    return AlignmentCheck(passed=not failing, deviations=deviations, failing_dims=failing)


def corrective_feedback(
    failing_dims,
    score: PreferenceVector | StyleScore,
    target: PreferenceVector,
    templates: TemplateSet,
) -> str:
    """One directive per failing dimension: direction plus the rubric
    band text of the target level."""
    if not failing_dims:
        raise ValueError("corrective feedback requires failing dimensions")
    scores = score.scores if isinstance(score, StyleScore) else score
    lines = []
    for dim in failing_dims:
        judged = getattr(scores, dim)
        wanted = getattr(target, dim)
        direction = "increase" if wanted > judged else "decrease"
        lines.append(f"{direction} {dim} toward: {templates.band_text(dim, wanted)}")
    return "\n".join(lines)
