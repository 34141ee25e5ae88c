"""Prompt assembly and the inline tag grammar for quantitative claims.

A tag has the bit-exact shape ``{{KIND|feature|value}}`` where KIND is
one of CUR, TGT, IMP, PRB; the feature ``_`` denotes the instance-level
probability. The generator must wrap every number it states in a tag so
the verifier can check it against the artifact.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Sequence

from .explanations import ExplanationArtifact, artifact_to_dict
from .preference import PreferenceVector
from .templates import TemplateSet, render_template

if TYPE_CHECKING:
    from .retrieval import RetrievalResult
    from .verification import VerificationReport


class TagKind(str, Enum):
    CUR = "CUR"  # current feature value
    TGT = "TGT"  # counterfactual target value
    IMP = "IMP"  # attribution impact
    PRB = "PRB"  # probability ('_') or per-feature probability shift


INSTANCE_PROBABILITY = "_"

_VALUE_PATTERN = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_FEATURE_PATTERN = r"[A-Za-z_][A-Za-z0-9_]*"

TAG_RE = re.compile(
    r"\{\{(CUR|TGT|IMP|PRB)\|(" + _FEATURE_PATTERN + r")\|(" + _VALUE_PATTERN + r")\}\}"
)
# Any brace-delimited block; blocks that fail TAG_RE are malformed tags.
BLOCK_RE = re.compile(r"\{\{[^{}]*\}\}")


def format_decimal(value: float) -> str:
    """Decimal literal with '.' separator and no grouping; integral
    floats drop the trailing '.0' so 148.0 renders as ``148``."""
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"tag value must be finite, got {value}")
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def render_tag(kind: TagKind, feature: str, value: float) -> str:
    return f"{{{{{TagKind(kind).value}|{feature}|{format_decimal(value)}}}}}"


def strip_tags(tagged_text: str) -> str:
    """Replace each well-formed tag with its value literal; malformed
    braces stay verbatim. Idempotent on tag-free text."""
    return TAG_RE.sub(lambda m: m.group(3), tagged_text)


@dataclass(frozen=True)
class NarrativeCandidate:
    """One generated narrative: the tagged source of truth plus its
    human-facing rendering."""

    tagged_text: str
    display_text: str
    attempt_index: int
    preference_used: PreferenceVector
    evidence_citations: tuple[str, ...] = ()

    @classmethod
    def from_tagged(
        cls,
        tagged_text: str,
        attempt_index: int,
        preference_used: PreferenceVector,
        evidence_citations: Sequence[str] = (),
    ) -> "NarrativeCandidate":
        return cls(
            tagged_text=tagged_text,
            display_text=strip_tags(tagged_text),
            attempt_index=attempt_index,
            preference_used=preference_used,
            evidence_citations=tuple(evidence_citations),
        )

    def to_dict(self) -> dict:
        return {
            "tagged_text": self.tagged_text,
            "display_text": self.display_text,
            "attempt_index": self.attempt_index,
            "preference_used": self.preference_used.as_dict(),
            "evidence_citations": list(self.evidence_citations),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NarrativeCandidate":
        return cls(
            tagged_text=payload["tagged_text"],
            display_text=payload["display_text"],
            attempt_index=payload["attempt_index"],
            preference_used=PreferenceVector.from_dict(payload["preference_used"]),
            evidence_citations=tuple(payload.get("evidence_citations", [])),
        )


@dataclass(frozen=True)
class PromptBundle:
    system_prompt: str
    user_prompt: str
    includes_evidence: bool
    corrective_feedback: str | None = None


def artifact_payload(artifact: ExplanationArtifact) -> str:
    return json.dumps(artifact_to_dict(artifact), indent=2)


def render_evidence_block(evidence: Sequence["RetrievalResult"]) -> str:
    if not evidence:
        return ""
    lines = ["=== SUPPORTING EVIDENCE ==="]
    for result in evidence:
        lines.append(f"[source: {result.chunk.source_citation}] {result.chunk.text}")
    lines.append(
        "Use the evidence only to support argumentation; it never overrides "
        "the explanation data values."
    )
    lines.append("=== END SUPPORTING EVIDENCE ===")
    return "\n".join(lines) + "\n"


def render_corrective_block(
    report: "VerificationReport",
    templates: TemplateSet,
    target: PreferenceVector,
    source_text: str | None = None,
) -> str:
    """Enumerate every failed constraint of the previous attempt as a
    directive the generator can act on."""
    from .style import corrective_feedback  # local import to stay cycle-free

    lines: list[str] = []
    for mismatch in report.numeric_mismatches:
        claim = mismatch.claim
        lines.append(
            f"The tag {{{{{claim.kind.value}|{claim.feature}|{format_decimal(claim.value)}}}}} "
            f"is wrong: the source value is {format_decimal(mismatch.ground_truth)}. "
            "Use the exact source value."
        )
    for claim in report.unknown_references:
        lines.append(
            f"The tag for '{claim.feature}' ({claim.kind.value}) refers to a value "
            "that is not in the explanation data; remove or correct it."
        )
    for feature in report.missing_features:
        lines.append(
            f"The counterfactual feature '{feature}' must be explicitly referenced "
            "with a tag."
        )
    for span in report.untagged_numerals:
        if source_text is not None:
            snippet = source_text[span[0] : span[1]]
            lines.append(
                f"The bare number '{snippet}' must be wrapped in a tag or removed."
            )
        else:
            lines.append("A bare number appears outside any tag; tag or remove it.")
    for span in report.malformed_tags:
        if source_text is not None:
            snippet = source_text[span[0] : span[1]]
            lines.append(f"The tag '{snippet}' is malformed; use {{{{KIND|feature|value}}}}.")
        else:
            lines.append("A malformed tag appears; use {{KIND|feature|value}}.")
    if report.failing_style_dims and report.style_scores is not None:
        lines.extend(
            corrective_feedback(
                report.failing_style_dims, report.style_scores, target, templates
            ).splitlines()
        )
    if not lines:
        return ""
    body = "\n".join(f"- {line}" for line in lines)
    return (
        "=== CORRECTIONS REQUIRED ===\n"
        "The previous attempt violated these constraints; fix every one:\n"
        f"{body}\n"
        "=== END CORRECTIONS REQUIRED ===\n"
    )


def build_prompt(
    artifact: ExplanationArtifact,
    preference: PreferenceVector,
    templates: TemplateSet,
    evidence: Sequence["RetrievalResult"] = (),
    corrective: "VerificationReport | None" = None,
    corrective_source_text: str | None = None,
) -> PromptBundle:
    """Deterministic prompt assembly. The system prompt carries the tag
    grammar, per-dimension style instructions, and the optional evidence
    and corrective sections; the user prompt carries the serialized
    artifact payload exactly once."""
    corrective_block = ""
    if corrective is not None:
        corrective_block = render_corrective_block(
            corrective, templates, preference, corrective_source_text
        )
    system_prompt = render_template(
        templates.text("generation_system.txt"),
        tag_grammar=templates.tag_grammar,
        style_instructions=templates.style_instructions(preference),
        evidence_block=render_evidence_block(evidence),
        corrective_block=corrective_block,
    )
    user_prompt = render_template(
        templates.text("generation_user.txt"),
        artifact_payload=artifact_payload(artifact),
    )
    return PromptBundle(
        system_prompt=system_prompt,
        user_prompt=user_prompt,
        includes_evidence=bool(evidence),
        corrective_feedback=corrective_block or None,
    )
