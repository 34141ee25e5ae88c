"""Structured explanation artifacts and desk-scale analytic oracles.

The artifact is the authoritative substrate for the whole pipeline:
narratives may rephrase its contents but never re-derive or alter its
numbers. The linear-model helpers in this module exist so that test
fixtures carry exactly known attributions and counterfactuals without
depending on any external explainer library.
"""

from __future__ import annotations

import itertools
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

NUMERIC = "numeric"
CATEGORICAL = "categorical-encoded"

DOMAINS = ("healthcare", "finance", "other")

MAX_GRID_COMBINATIONS = 1_000_000


class GridTooLargeError(ValueError):
    """Counterfactual candidate grid exceeds the enumeration bound."""


def _as_tuple(items, cls):
    return tuple(x if isinstance(x, cls) else cls(**x) for x in items)


@dataclass(frozen=True)
class FeatureState:
    """One input feature of the explained instance, in natural units."""

    name: str
    current_value: float
    unit: str | None = None
    kind: str = NUMERIC


@dataclass(frozen=True)
class Prediction:
    label: str
    probability: float


@dataclass(frozen=True)
class Attribution:
    """Signed contribution of one feature to the prediction."""

    feature: str
    impact: float


@dataclass(frozen=True)
class CounterfactualChange:
    """One feature edit of the counterfactual, with its marginal effect
    on the predicted probability."""

    feature: str
    target_value: float
    probability_shift: float


@dataclass(frozen=True)
class ExplanationArtifact:
    """Immutable bundle of instance, prediction, attributions and
    counterfactual changes for a single explained decision."""

    instance_id: str
    domain: str
    features: tuple[FeatureState, ...]
    prediction: Prediction
    attributions: tuple[Attribution, ...] = ()
    counterfactual: tuple[CounterfactualChange, ...] = ()
    model_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", _as_tuple(self.features, FeatureState))
        object.__setattr__(self, "attributions", _as_tuple(self.attributions, Attribution))
        object.__setattr__(
            self, "counterfactual", _as_tuple(self.counterfactual, CounterfactualChange)
        )
        if isinstance(self.prediction, dict):
            object.__setattr__(self, "prediction", Prediction(**self.prediction))

    @property
    def feature_map(self) -> dict[str, FeatureState]:
        return {f.name: f for f in self.features}

    @property
    def attribution_map(self) -> dict[str, Attribution]:
        return {a.feature: a for a in self.attributions}

    @property
    def counterfactual_map(self) -> dict[str, CounterfactualChange]:
        return {c.feature: c for c in self.counterfactual}


@dataclass
class ValidationResult:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def validate_artifact(artifact: ExplanationArtifact) -> ValidationResult:
    """Check referential integrity and value bounds.

    Violations are data, not faults: callers decide whether to reject.
    """
    violations: list[str] = []
    seen: set[str] = set()
    for f in artifact.features:
        if not f.name:
            violations.append("empty feature name")
            continue
        if f.name in seen:
            violations.append(f"duplicate feature {f.name}")
        seen.add(f.name)
        if not math.isfinite(f.current_value):
            violations.append(f"non-finite value for feature {f.name}")

    if not 0.0 <= artifact.prediction.probability <= 1.0:
        violations.append("probability out of range")

    if artifact.domain not in DOMAINS:
        violations.append(f"unknown domain {artifact.domain}")

    names = {f.name for f in artifact.features}
    referenced: set[str] = set()
    for a in artifact.attributions:
        if a.feature in referenced:
            violations.append(f"duplicate attribution for {a.feature}")
        referenced.add(a.feature)
        if a.feature not in names:
            violations.append(f"unknown feature {a.feature}")
        if not math.isfinite(a.impact):
            violations.append(f"non-finite impact for {a.feature}")

    cf_seen: set[str] = set()
    for c in artifact.counterfactual:
        if c.feature in cf_seen:
            violations.append(f"duplicate counterfactual for {c.feature}")
        cf_seen.add(c.feature)
        if c.feature not in names:
            violations.append(f"unknown feature {c.feature}")
            continue
        current = artifact.feature_map[c.feature].current_value
        if c.target_value == current:
            violations.append(f"counterfactual target equals current value for {c.feature}")
        shifted = artifact.prediction.probability + c.probability_shift
        if not -1e-9 <= shifted <= 1.0 + 1e-9:
            violations.append(f"counterfactual probability out of range for {c.feature}")

    return ValidationResult(ok=not violations, violations=violations)


# ---------------------------------------------------------------------------
# Analytic fixture oracles (linear model family)
# ---------------------------------------------------------------------------


def linear_shapley(
    weights: Sequence[float], means: Sequence[float], x: Sequence[float]
) -> list[float]:
    """Exact per-feature attribution of a linear value function under
    feature independence: contribution_i = w_i * (x_i - mean_i)."""
    if not (len(weights) == len(means) == len(x)):
        raise ValueError("weights, means and x must have equal length")
    values = list(weights) + list(means) + list(x)
    if not all(math.isfinite(v) for v in values):
        raise ValueError("inputs must be finite")
    return [w * (xi - mu) for w, mu, xi in zip(weights, means, x)]


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-min(z, 700.0)))
    e = math.exp(max(z, -700.0))
    return e / (1.0 + e)


@dataclass(frozen=True)
class LinearModelSpec:
    """Logistic-over-linear scorer with explicit weights, so every
    fixture number is analytically derivable."""

    weights: Mapping[str, float]
    bias: float = 0.0
    positive_label: str = "positive"
    negative_label: str = "negative"
    threshold: float = 0.5
    scales: Mapping[str, float] | None = None

    def logit(self, values: Mapping[str, float]) -> float:
        return self.bias + sum(w * values[name] for name, w in self.weights.items())

    def probability(self, values: Mapping[str, float]) -> float:
        return _sigmoid(self.logit(values))

    def label(self, values: Mapping[str, float]) -> str:
        if self.probability(values) >= self.threshold:
            return self.positive_label
        return self.negative_label

    def scale(self, feature: str) -> float:
        if self.scales is None:
            return 1.0
        return float(self.scales.get(feature, 1.0))


@dataclass
class CounterfactualSearchResult:
    changes: tuple[CounterfactualChange, ...]
    feasible: bool

    def __iter__(self):
        return iter(self.changes)


def brute_force_counterfactual(
    model: LinearModelSpec,
    artifact: ExplanationArtifact,
    grid: Mapping[str, Sequence[float]],
    desired_label: str,
) -> CounterfactualSearchResult:
    """Exhaustively search the candidate grid for the smallest change set
    that flips the model's label to ``desired_label``.

    Minimality is the number of modified features; ties break on the
    smallest L2 distance in standardized units, then enumeration order.
    """
    base = {f.name: f.current_value for f in artifact.features}
    if model.label(base) == desired_label:
        return CounterfactualSearchResult(changes=(), feasible=True)

    feature_order = sorted(grid)
    combos = 1
    for name in feature_order:
        candidates = grid[name]
        if not candidates:
            raise ValueError(f"empty candidate grid for {name}")
        combos *= len(candidates)
    if combos > MAX_GRID_COMBINATIONS:
        raise GridTooLargeError(f"grid too large: {combos} combinations")

    best: tuple[int, float] | None = None
    best_values: dict[str, float] | None = None
    for combo in itertools.product(*(grid[name] for name in feature_order)):
        values = dict(base)
        changed: list[str] = []
        dist_sq = 0.0
        for name, candidate in zip(feature_order, combo):
            if candidate != base[name]:
                changed.append(name)
                step = (candidate - base[name]) / model.scale(name)
                dist_sq += step * step
            values[name] = candidate
        if not changed or model.label(values) != desired_label:
            continue
        key = (len(changed), math.sqrt(dist_sq))
        if best is None or key < best:
            best = key
            best_values = {name: values[name] for name in changed}

    if best_values is None:
        return CounterfactualSearchResult(changes=(), feasible=False)

    base_probability = artifact.prediction.probability
    changes = []
    for name in sorted(best_values):
        marginal = dict(base)
        marginal[name] = best_values[name]
        shift = model.probability(marginal) - base_probability
        changes.append(
            CounterfactualChange(
                feature=name, target_value=best_values[name], probability_shift=shift
            )
        )
    return CounterfactualSearchResult(changes=tuple(changes), feasible=True)


# ---------------------------------------------------------------------------
# Wire format
# ---------------------------------------------------------------------------


def artifact_to_dict(artifact: ExplanationArtifact) -> dict:
    return {
        "instance_id": artifact.instance_id,
        "domain": artifact.domain,
        "features": [
            {"name": f.name, "value": f.current_value, "unit": f.unit, "kind": f.kind}
            for f in artifact.features
        ],
        "prediction": {
            "label": artifact.prediction.label,
            "probability": artifact.prediction.probability,
        },
        "attributions": [
            {"feature": a.feature, "impact": a.impact} for a in artifact.attributions
        ],
        "counterfactual": [
            {
                "feature": c.feature,
                "target_value": c.target_value,
                "probability_shift": c.probability_shift,
            }
            for c in artifact.counterfactual
        ],
        "model_id": artifact.model_id,
    }


def artifact_from_dict(payload: Mapping) -> ExplanationArtifact:
    features = tuple(
        FeatureState(
            name=f["name"],
            current_value=float(f["value"]),
            unit=f.get("unit"),
            kind=f.get("kind", NUMERIC),
        )
        for f in payload.get("features", [])
    )
    prediction = Prediction(
        label=payload["prediction"]["label"],
        probability=float(payload["prediction"]["probability"]),
    )
    attributions = tuple(
        Attribution(feature=a["feature"], impact=float(a["impact"]))
        for a in payload.get("attributions", [])
    )
    counterfactual = tuple(
        CounterfactualChange(
            feature=c["feature"],
            target_value=float(c["target_value"]),
            probability_shift=float(c["probability_shift"]),
        )
        for c in payload.get("counterfactual", [])
    )
    return ExplanationArtifact(
        instance_id=payload.get("instance_id", ""),
        domain=payload.get("domain", "other"),
        features=features,
        prediction=prediction,
        attributions=attributions,
        counterfactual=counterfactual,
        model_id=payload.get("model_id", ""),
    )


def read_artifact(path: str | Path) -> ExplanationArtifact:
    with open(path, "r", encoding="utf-8") as handle:
        return artifact_from_dict(json.load(handle))


def write_artifact(artifact: ExplanationArtifact, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(artifact_to_dict(artifact), handle, indent=2)
        handle.write("\n")


# ---------------------------------------------------------------------------
# Synthetic instances for batch evaluation and demos
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticFeature:
    name: str
    mean: float
    std: float
    unit: str | None = None


def synthesize_artifacts(
    model: LinearModelSpec,
    features: Sequence[SyntheticFeature],
    count: int,
    seed: int = 0,
    domain: str = "other",
    model_id: str = "linear-fixture",
    grid_offsets: Sequence[float] = (-2.0, -1.0, 0.0, 1.0, 2.0),
) -> list[ExplanationArtifact]:
    """Draw random instances through the fixture model and package them
    as fully self-consistent artifacts (exact attributions, brute-force
    counterfactual toward the opposite label)."""
    rng = random.Random(seed)
    weights = [model.weights[f.name] for f in features]
    means = [f.mean for f in features]
    artifacts = []
    for i in range(count):
        x = [f.mean + f.std * rng.gauss(0.0, 1.0) for f in features]
        values = {f.name: xi for f, xi in zip(features, x)}
        probability = model.probability(values)
        label = model.label(values)
        impacts = linear_shapley(weights, means, x)
        feature_states = tuple(
            FeatureState(name=f.name, current_value=round(xi, 4), unit=f.unit)
            for f, xi in zip(features, x)
        )
        artifact = ExplanationArtifact(
            instance_id=f"{domain}-{i:04d}",
            domain=domain,
            features=feature_states,
            prediction=Prediction(label=label, probability=round(probability, 4)),
            attributions=tuple(
                Attribution(feature=f.name, impact=round(phi, 4))
                for f, phi in zip(features, impacts)
            ),
            model_id=model_id,
        )
        desired = (
            model.negative_label if label == model.positive_label else model.positive_label
        )
        grid = {
            f.name: sorted(
                {round(f.mean + k * f.std, 4) for k in grid_offsets}
                | {artifact.feature_map[f.name].current_value}
            )
            for f in features
        }
        search = brute_force_counterfactual(model, artifact, grid, desired)
        changes = tuple(
            CounterfactualChange(
                feature=c.feature,
                target_value=c.target_value,
                probability_shift=round(c.probability_shift, 4),
            )
            for c in search.changes
        )
        artifact = ExplanationArtifact(
            instance_id=artifact.instance_id,
            domain=artifact.domain,
            features=artifact.features,
            prediction=artifact.prediction,
            attributions=artifact.attributions,
            counterfactual=changes,
            model_id=artifact.model_id,
        )
        artifacts.append(artifact)
    return artifacts


def top_risk(artifacts: Iterable[ExplanationArtifact], n: int) -> list[ExplanationArtifact]:
    """Highest predicted probability first; stable on ties."""
    ranked = sorted(
        artifacts, key=lambda a: (-a.prediction.probability, a.instance_id)
    )
    return ranked[:n]
