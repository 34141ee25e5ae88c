"""Deterministic faithfulness and completeness verification.

Parses the tag grammar out of a candidate narrative, resolves each
claim's ground truth in the artifact, and checks numeric agreement under
an absolute tolerance. Completeness requires every counterfactual
feature to be referenced by at least one tag. In strict mode, bare
numerals outside tags are unverifiable claims and fail faithfulness.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Sequence

from .explanations import ExplanationArtifact
from .generation import BLOCK_RE, INSTANCE_PROBABILITY, TAG_RE, TagKind
from .preference import PreferenceVector

Span = tuple[int, int]

# decimal literal not glued to an identifier ('bp2' is a name, not a claim)
NUMERAL_RE = re.compile(r"(?<![A-Za-z0-9_.])\d+(?:\.\d+)?")


@dataclass(frozen=True)
class TaggedClaim:
    kind: TagKind
    feature: str
    value: float
    span: Span

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "feature": self.feature,
            "value": self.value,
            "span": list(self.span),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TaggedClaim":
        return cls(
            kind=TagKind(payload["kind"]),
            feature=payload["feature"],
            value=float(payload["value"]),
            span=tuple(payload["span"]),
        )


@dataclass(frozen=True)
class FaithfulnessConfig:
    """Absolute tolerance for numeric claims, with optional per-kind
    widening (e.g. natural-unit current values)."""

    tolerance_default: float = 0.05
    per_kind_tolerance: dict[TagKind, float] = field(default_factory=dict)
    strict_untagged_numerals: bool = True

    def __post_init__(self):
        if self.tolerance_default <= 0:
            raise ValueError("tolerance_default must be positive")
        normalized = {
            TagKind(k): float(v) for k, v in self.per_kind_tolerance.items()
        }
        for kind, v in normalized.items():
            if v <= 0:
                raise ValueError(f"tolerance for {kind.value} must be positive")
        object.__setattr__(self, "per_kind_tolerance", normalized)

    def tolerance(self, kind: TagKind) -> float:
        return self.per_kind_tolerance.get(TagKind(kind), self.tolerance_default)


@dataclass(frozen=True)
class NumericMismatch:
    claim: TaggedClaim
    ground_truth: float
    abs_error: float

    def to_dict(self) -> dict:
        return {
            "claim": self.claim.to_dict(),
            "ground_truth": self.ground_truth,
            "abs_error": self.abs_error,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "NumericMismatch":
        return cls(
            claim=TaggedClaim.from_dict(payload["claim"]),
            ground_truth=float(payload["ground_truth"]),
            abs_error=float(payload["abs_error"]),
        )


@dataclass
class VerificationReport:
    """Per-constraint outcome for one candidate narrative."""

    numeric_mismatches: list[NumericMismatch] = field(default_factory=list)
    unknown_references: list[TaggedClaim] = field(default_factory=list)
    missing_features: list[str] = field(default_factory=list)
    untagged_numerals: list[Span] = field(default_factory=list)
    malformed_tags: list[Span] = field(default_factory=list)
    strict_untagged: bool = True
    style_scores: PreferenceVector | None = None
    style_deviations: tuple[float, float, float, float] | None = None
    failing_style_dims: list[str] = field(default_factory=list)
    passed_style: bool = True

    @property
    def passed_faithfulness(self) -> bool:
        if self.numeric_mismatches or self.unknown_references:
            return False
        if self.strict_untagged and self.untagged_numerals:
            return False
        return True

    @property
    def passed_completeness(self) -> bool:
        return not self.missing_features

    @property
    def passed_all(self) -> bool:
        return self.passed_faithfulness and self.passed_completeness and self.passed_style

    @property
    def violation_count(self) -> int:
        return sum(
            1
            for passed in (self.passed_faithfulness, self.passed_completeness, self.passed_style)
            if not passed
        )

    def to_dict(self) -> dict:
        return {
            "numeric_mismatches": [m.to_dict() for m in self.numeric_mismatches],
            "unknown_references": [c.to_dict() for c in self.unknown_references],
            "missing_features": list(self.missing_features),
            "untagged_numerals": [list(s) for s in self.untagged_numerals],
            "malformed_tags": [list(s) for s in self.malformed_tags],
            "strict_untagged": self.strict_untagged,
            "style_scores": self.style_scores.as_dict() if self.style_scores else None,
            "style_deviations": list(self.style_deviations)
            if self.style_deviations
            else None,
            "failing_style_dims": list(self.failing_style_dims),
            "passed_faithfulness": self.passed_faithfulness,
            "passed_completeness": self.passed_completeness,
            "passed_style": self.passed_style,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "VerificationReport":
        return cls(
            numeric_mismatches=[
                NumericMismatch.from_dict(m) for m in payload.get("numeric_mismatches", [])
            ],
            unknown_references=[
                TaggedClaim.from_dict(c) for c in payload.get("unknown_references", [])
            ],
            missing_features=list(payload.get("missing_features", [])),
            untagged_numerals=[tuple(s) for s in payload.get("untagged_numerals", [])],
            malformed_tags=[tuple(s) for s in payload.get("malformed_tags", [])],
            strict_untagged=payload.get("strict_untagged", True),
            style_scores=(
                PreferenceVector.from_dict(payload["style_scores"])
                if payload.get("style_scores")
                else None
            ),
            style_deviations=(
                tuple(payload["style_deviations"])
                if payload.get("style_deviations")
                else None
            ),
            failing_style_dims=list(payload.get("failing_style_dims", [])),
            passed_style=payload.get("passed_style", True),
        )


def parse_claims(tagged_text: str) -> tuple[list[TaggedClaim], list[Span]]:
    """Single left-to-right scan. Well-formed tags become claims;
    ``{{...}}`` blocks that fail the grammar are reported as malformed,
    never silently dropped."""
    claims: list[TaggedClaim] = []
    malformed: list[Span] = []
    for block in BLOCK_RE.finditer(tagged_text):
        match = TAG_RE.fullmatch(block.group(0))
        if match is None:
            malformed.append(block.span())
            continue
        claims.append(
            TaggedClaim(
                kind=TagKind(match.group(1)),
                feature=match.group(2),
                value=float(match.group(3)),
                span=block.span(),
            )
        )
    return claims, malformed


def _ground_truth(claim: TaggedClaim, artifact: ExplanationArtifact) -> float | None:
    if claim.kind is TagKind.CUR:
        state = artifact.feature_map.get(claim.feature)
        return None if state is None else state.current_value
    if claim.kind is TagKind.TGT:
        change = artifact.counterfactual_map.get(claim.feature)
        return None if change is None else change.target_value
    if claim.kind is TagKind.IMP:
        attribution = artifact.attribution_map.get(claim.feature)
        return None if attribution is None else attribution.impact
    if claim.kind is TagKind.PRB:
        if claim.feature == INSTANCE_PROBABILITY:
            return artifact.prediction.probability
        change = artifact.counterfactual_map.get(claim.feature)
        return None if change is None else change.probability_shift
    return None


def check_faithfulness(
    claims: Sequence[TaggedClaim],
    artifact: ExplanationArtifact,
    cfg: FaithfulnessConfig,
) -> VerificationReport:
    """Resolve each claim against the artifact; a mismatch is recorded
    iff the absolute error exceeds the kind's tolerance."""
    report = VerificationReport(strict_untagged=cfg.strict_untagged_numerals)
    for claim in claims:
        truth = _ground_truth(claim, artifact)
        if truth is None:
            report.unknown_references.append(claim)
            continue
        error = abs(claim.value - truth)
        if error > cfg.tolerance(claim.kind):
            report.numeric_mismatches.append(
                NumericMismatch(claim=claim, ground_truth=truth, abs_error=error)
            )
    return report


def check_completeness(
    claims: Sequence[TaggedClaim], artifact: ExplanationArtifact
) -> VerificationReport:
    """Counterfactual features never named by any tag are missing."""
    referenced = {claim.feature for claim in claims}
    missing = [
        change.feature
        for change in artifact.counterfactual
        if change.feature not in referenced
    ]
    return VerificationReport(missing_features=missing)


def scan_untagged_numerals(
    tagged_text: str, claims: Sequence[TaggedClaim]
) -> list[Span]:
    """Decimal numerals outside every claim span. Integers used as
    line-initial list markers ("1.", "2.") are exempt."""
    covered = [claim.span for claim in claims]
    spans: list[Span] = []
    for match in NUMERAL_RE.finditer(tagged_text):
        start, end = match.span()
        if any(s <= start and end <= e for s, e in covered):
            continue
        if _is_list_marker(tagged_text, start, end, match.group(0)):
            continue
        spans.append((start, end))
    return spans


def _is_list_marker(text: str, start: int, end: int, numeral: str) -> bool:
    if "." in numeral:
        return False
    if end >= len(text) or text[end] != ".":
        return False
    after = end + 1
    if after < len(text) and text[after] not in " \t\n":
        return False
    line_start = text.rfind("\n", 0, start) + 1
    return text[line_start:start].strip() == ""


def verify_narrative(
    tagged_text: str,
    artifact: ExplanationArtifact,
    cfg: FaithfulnessConfig | None = None,
) -> VerificationReport:
    """Full deterministic pass: parse, faithfulness, completeness,
    untagged-numeral scan. Style fields are merged in by the caller."""
    cfg = cfg or FaithfulnessConfig()
    claims, malformed = parse_claims(tagged_text)
    report = check_faithfulness(claims, artifact, cfg)
    completeness = check_completeness(claims, artifact)
    return replace(
        report,
        missing_features=completeness.missing_features,
        untagged_numerals=scan_untagged_numerals(tagged_text, claims),
        malformed_tags=malformed,
    )


def attach_style(
    report: VerificationReport,
    scores: PreferenceVector,
    deviations: Sequence[float],
    failing_dims: Sequence[str],
) -> VerificationReport:
    report.style_scores = scores
    report.style_deviations = tuple(float(d) for d in deviations)
    report.failing_style_dims = list(failing_dims)
    report.passed_style = not failing_dims
    return report
