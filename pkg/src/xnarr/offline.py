"""Deterministic offline stand-ins for the LLM roles.

The offline narrator writes a faithful, fully tagged narrative straight
from the artifact payload it finds in the prompt, phrased according to
the style band of each dimension. The offline judge reads the style
back from the phrasing. Together they make the whole pipeline runnable
(and byte-reproducible) without any model server; they are stand-ins
for demos and tests, not attempts at language quality.
"""

from __future__ import annotations

import json
import re

from .explanations import ExplanationArtifact, artifact_from_dict
from .generation import INSTANCE_PROBABILITY, TagKind, render_tag, strip_tags
from .preference import DIMENSIONS
from .providers import ChatRequest, ChatResponse
from .templates import BAND_MIDPOINTS, TemplateSet

ARTIFACT_START = "=== EXPLANATION DATA ==="
ARTIFACT_END = "=== END EXPLANATION DATA ==="
NARRATIVE_START = "=== NARRATIVE ==="
NARRATIVE_END = "=== END NARRATIVE ==="

# one digit-free phrasing per style band; the judge maps them back
STYLE_MARKERS: dict[str, tuple[str, ...]] = {
    "technicality": (
        "in everyday terms",
        "in mostly plain terms",
        "in balanced terms",
        "in concrete data terms",
        "in full technical detail",
    ),
    "verbosity": (
        "point by point",
        "in brief",
        "in a few connected sentences",
        "as a connected account",
        "as a full narrative account",
    ),
    "depth": (
        "treating each factor on its own",
        "factor by factor",
        "relating the main factors",
        "considering the factors together",
        "as an interacting system",
    ),
    "actionability": (
        "as a description of the decision",
        "mostly as a diagnosis",
        "noting possible changes",
        "with practical changes to consider",
        "as a plan of concrete steps",
    ),
}


def _between(text: str, start: str, end: str) -> str | None:
    i = text.find(start)
    if i < 0:
        return None
    j = text.find(end, i + len(start))
    if j < 0:
        return None
    return text[i + len(start) : j].strip()


def _message_text(request: ChatRequest, role: str) -> str:
    return "\n".join(m.content for m in request.messages if m.role == role)


def reference_narrative(
    artifact: ExplanationArtifact, bands: tuple[int, int, int, int] = (2, 2, 2, 2)
) -> str:
    """Faithful tagged narrative rendered from artifact ground truth."""
    tech, verb, depth, act = bands
    label = artifact.prediction.label
    marker = {dim: STYLE_MARKERS[dim][b] for dim, b in zip(DIMENSIONS, bands)}
    lines = [
        f"This report explains the decision '{label}' {marker['technicality']}, "
        f"{marker['verbosity']}, {marker['depth']}, and {marker['actionability']}."
    ]
    lines.append(
        f"The model puts the chance of '{label}' at "
        f"{render_tag(TagKind.PRB, INSTANCE_PROBABILITY, artifact.prediction.probability)}."
    )
    ranked = sorted(artifact.attributions, key=lambda a: (-abs(a.impact), a.feature))
    for attribution in ranked[: max(1, 1 + tech)]:
        state = artifact.feature_map[attribution.feature]
        direction = "toward" if attribution.impact >= 0 else "away from"
        lines.append(
            f"The factor {attribution.feature} "
            f"(currently {render_tag(TagKind.CUR, state.name, state.current_value)}"
            f"{' ' + state.unit if state.unit else ''}) pushes the outcome "
            f"{direction} '{label}' with weight "
            f"{render_tag(TagKind.IMP, attribution.feature, attribution.impact)}."
        )
    for change in artifact.counterfactual:
        state = artifact.feature_map[change.feature]
        lines.append(
            f"If {change.feature} moved from "
            f"{render_tag(TagKind.CUR, change.feature, state.current_value)} to "
            f"{render_tag(TagKind.TGT, change.feature, change.target_value)}, "
            f"the predicted probability would shift by "
            f"{render_tag(TagKind.PRB, change.feature, change.probability_shift)}."
        )
    if depth >= 3 and len(artifact.attributions) > 1:
        lines.append(
            "These factors do not act alone; movement in one can amplify or "
            "offset the influence of the others."
        )
    if act >= 3 and artifact.counterfactual:
        first = artifact.counterfactual[0]
        lines.append(
            f"A concrete step would be to bring {first.feature} to "
            f"{render_tag(TagKind.TGT, first.feature, first.target_value)}."
        )
    if verb >= 3:
        lines.append(
            "Taken together, the current values, their weights, and the stated "
            "targets form one consistent picture of this decision."
        )
    return "\n".join(lines)


class OfflineNarrator:
    """Rule-based generator: reads the artifact and the active style
    bands out of the prompt and renders the reference narrative."""

    provider_id = "offline-narrator"

    def __init__(self, templates: TemplateSet | None = None):
        self.templates = templates or TemplateSet()

    def _bands_from_system(self, system_text: str) -> tuple[int, int, int, int]:
        bands = []
        for dim in DIMENSIONS:
            found = 2
            for index, band_text in enumerate(self.templates.rubric[dim]):
                if band_text in system_text:
                    found = index
                    break
            bands.append(found)
        return tuple(bands)

    def complete(self, request: ChatRequest) -> ChatResponse:
        payload = _between(_message_text(request, "user"), ARTIFACT_START, ARTIFACT_END)
        if payload is None:
            raise ValueError("prompt carries no explanation data block")
        artifact = artifact_from_dict(json.loads(payload))
        bands = self._bands_from_system(_message_text(request, "system"))
        return ChatResponse(
            content=reference_narrative(artifact, bands),
            provider_id=self.provider_id,
            latency_ms=0,
        )


PERSONA_PROMPT_MARKER = "roleplaying a reader"

# lexicon-compatible asks, keyed by (dimension, direction)
FEEDBACK_PHRASES: dict[tuple[str, int], str] = {
    ("technicality", 1): "more technical",
    ("technicality", -1): "less technical",
    ("verbosity", 1): "longer",
    ("verbosity", -1): "shorter",
    ("depth", 1): "deeper",
    ("depth", -1): "just the facts",
    ("actionability", 1): "more actionable",
    ("actionability", -1): "less advice",
}


class OfflineJudge:
    """Maps the narrator's band phrasing back to scores; falls back to
    crude text statistics for narratives from other sources. Presented
    with a persona-roleplay prompt instead of the rubric, it answers
    with natural-language style feedback the lexicon can translate."""

    provider_id = "offline-judge"

    def complete(self, request: ChatRequest) -> ChatResponse:
        system = _message_text(request, "system")
        user = _message_text(request, "user")
        if PERSONA_PROMPT_MARKER in system:
            content = self._persona_feedback(system, user)
            return ChatResponse(
                content=content, provider_id=self.provider_id, latency_ms=0
            )
        narrative = _between(user, NARRATIVE_START, NARRATIVE_END)
        if narrative is None:
            narrative = user
        scores = {
            dim: self._score(dim, narrative) for dim in DIMENSIONS
        }
        return ChatResponse(
            content=json.dumps(scores), provider_id=self.provider_id, latency_ms=0
        )

    def _persona_feedback(self, system: str, narrative: str) -> str:
        from .preference import ORDINAL_VALUES

        asks: list[str] = []
        for dim in DIMENSIONS:
            match = re.search(rf"- {dim}: (low|medium|high)", system)
            wanted = ORDINAL_VALUES[match.group(1)] if match else 0.5
            perceived = self._score(dim, narrative)
            gap = wanted - perceived
            if abs(gap) > 0.1:
                asks.append(FEEDBACK_PHRASES[(dim, 1 if gap > 0 else -1)])
        if not asks:
            return "This is fine as it is."
        return "Please make it " + ", ".join(asks) + "."

    def _score(self, dimension: str, narrative: str) -> float:
        for band, phrase in enumerate(STYLE_MARKERS[dimension]):
            if phrase in narrative:
                return BAND_MIDPOINTS[band]
        return self._heuristic(dimension, narrative)

    @staticmethod
    def _heuristic(dimension: str, narrative: str) -> float:
        text = strip_tags(narrative)
        words = max(1, len(text.split()))
        if dimension == "technicality":
            numerals = len(re.findall(r"\d", text))
            return min(1.0, numerals / (0.2 * words))
        if dimension == "verbosity":
            return min(1.0, words / 160.0)
        if dimension == "depth":
            cues = ("interact", "amplify", "offset", "together", "combine")
            return 0.9 if any(c in text.lower() for c in cues) else 0.3
        cues = ("step", "aim", "recommend", "bring", "change")
        return 0.9 if any(c in text.lower() for c in cues) else 0.3
