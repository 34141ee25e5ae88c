"""Bounded four-dimensional style state and its update dynamics.

The style state lives in [0,1]^4 over a fixed dimension order
(technicality, verbosity, depth, actionability). Feedback arrives as a
bounded delta vector and is folded in with a fixed step size, clipped
back into the unit box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

DIMENSIONS = ("technicality", "verbosity", "depth", "actionability")

ORDINAL_VALUES = {"low": 0.1, "medium": 0.5, "high": 0.9}


def ordinal_to_value(level: str) -> float:
    try:
        return ORDINAL_VALUES[level.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown ordinal level {level!r}") from None


@dataclass(frozen=True)
class PreferenceVector:
    """Point in the style space; every component must stay in [0,1]."""

    technicality: float
    verbosity: float
    depth: float
    actionability: float

    def __post_init__(self):
        for dim in DIMENSIONS:
            v = getattr(self, dim)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"{dim} must be in [0,1], got {v}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.technicality, self.verbosity, self.depth, self.actionability)

    def as_dict(self) -> dict[str, float]:
        return {dim: getattr(self, dim) for dim in DIMENSIONS}

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "PreferenceVector":
        if len(values) != 4:
            raise ValueError("expected exactly 4 components")
        return cls(*(float(v) for v in values))

    @classmethod
    def from_dict(cls, payload: Mapping[str, float]) -> "PreferenceVector":
        return cls(**{dim: float(payload[dim]) for dim in DIMENSIONS})


BASELINE = PreferenceVector(0.5, 0.5, 0.5, 0.5)


@dataclass(frozen=True)
class FeedbackDelta:
    """Bounded per-dimension adjustment parsed from one piece of feedback."""

    deltas: tuple[float, float, float, float]
    raw_feedback: str = ""

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        if len(self.deltas) != 4:
            raise ValueError("expected exactly 4 delta components")
        for d in self.deltas:
            if not (math.isfinite(d) and -1.0 <= d <= 1.0):
                raise ValueError(f"delta component must be in [-1,1], got {d}")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(DIMENSIONS, self.deltas))

    @classmethod
    def from_dict(cls, payload: Mapping[str, float], raw_feedback: str = "") -> "FeedbackDelta":
        return cls(
            deltas=tuple(float(payload[dim]) for dim in DIMENSIONS),
            raw_feedback=raw_feedback,
        )


@dataclass(frozen=True)
class Persona:
    """Archetypal audience profile: a named prior over the style space."""

    name: str
    description: str
    target: PreferenceVector
    ordinal_levels: tuple[str, str, str, str]

    def __post_init__(self):
        levels = tuple(lv.strip().lower() for lv in self.ordinal_levels)
        object.__setattr__(self, "ordinal_levels", levels)
        expected = tuple(ordinal_to_value(lv) for lv in levels)
        if self.target.as_tuple() != expected:
            raise ValueError(
                f"persona target {self.target.as_tuple()} does not match "
                f"ordinal levels {levels}"
            )

    @classmethod
    def from_levels(
        cls, name: str, description: str, levels: Sequence[str]
    ) -> "Persona":
        levels = tuple(lv.strip().lower() for lv in levels)
        if len(levels) != 4:
            raise ValueError("expected 4 ordinal levels")
        target = PreferenceVector.from_sequence([ordinal_to_value(lv) for lv in levels])
        return cls(name=name, description=description, target=target, ordinal_levels=levels)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "target": self.target.as_dict(),
            "ordinal_levels": list(self.ordinal_levels),
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "Persona":
        return cls.from_levels(
            name=payload["name"],
            description=payload.get("description", ""),
            levels=payload["ordinal_levels"],
        )


@dataclass(frozen=True)
class CpmConfig:
    """Step size for feedback updates and the convergence band around a
    target profile."""

    step_size: float = 0.2
    convergence_threshold: float = 0.15

    def __post_init__(self):
        if not 0.0 < self.step_size <= 1.0:
            raise ValueError("step_size must be in (0, 1]")
        if not 0.0 < self.convergence_threshold < 1.0:
            raise ValueError("convergence_threshold must be in (0, 1)")


def update(s: PreferenceVector, delta: FeedbackDelta, cfg: CpmConfig) -> PreferenceVector:
    """One feedback step: clip(s + step_size * delta) componentwise."""
    stepped = [
        min(1.0, max(0.0, v + cfg.step_size * d))
        for v, d in zip(s.as_tuple(), delta.deltas)
    ]
    return PreferenceVector.from_sequence(stepped)


def init_from_persona(persona: Persona) -> PreferenceVector:
    return persona.target


def has_converged(s: PreferenceVector, target: PreferenceVector, cfg: CpmConfig) -> bool:
    """True when the largest per-dimension deviation is within threshold."""
    dev = max(abs(a - b) for a, b in zip(s.as_tuple(), target.as_tuple()))
    return dev <= cfg.convergence_threshold


def distance_from_baseline(s: PreferenceVector, baseline: PreferenceVector = BASELINE) -> float:
    return math.sqrt(
        sum((a - b) ** 2 for a, b in zip(s.as_tuple(), baseline.as_tuple()))
    )


BUILTIN_PERSONAS: dict[str, Persona] = {
    p.name: p
    for p in (
        Persona.from_levels(
            "patient",
            "A person receiving a health risk assessment about themselves; "
            "wants plain language and concrete next steps.",
            ("low", "medium", "low", "high"),
        ),
        Persona.from_levels(
            "clinician",
            "A medical professional reviewing the model output for a case; "
            "wants exact quantities and mechanism-level reasoning, briefly.",
            ("high", "low", "high", "medium"),
        ),
        Persona.from_levels(
            "loan_applicant",
            "An applicant told about their loan decision; wants an accessible "
            "account of what mattered and what they could change.",
            ("low", "medium", "medium", "high"),
        ),
        Persona.from_levels(
            "bank_officer",
            "A credit officer auditing the decision; wants precise figures "
            "and compact reporting.",
            ("high", "low", "medium", "medium"),
        ),
    )
}


def resolve_persona(name_or_payload) -> Persona:
    """Accept a builtin persona name, a mapping, or a Persona."""
    if isinstance(name_or_payload, Persona):
        return name_or_payload
    if isinstance(name_or_payload, str):
        key = name_or_payload.strip().lower()
        if key in BUILTIN_PERSONAS:
            return BUILTIN_PERSONAS[key]
        raise ValueError(f"unknown persona {name_or_payload!r}")
    if isinstance(name_or_payload, Mapping):
        return Persona.from_dict(name_or_payload)
    raise TypeError(f"cannot resolve persona from {type(name_or_payload)!r}")
