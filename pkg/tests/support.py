"""Shared helpers for the test suite: random artifact generation,
ground-truth narrative rendering, and independent brute-force oracles.

The oracles re-derive expected values by enumeration or naive scans and
never call the implementation paths they check.
"""

from __future__ import annotations

import itertools
import json
import math
import random

import numpy as np

from xnarr.explanations import (
    Attribution,
    CounterfactualChange,
    ExplanationArtifact,
    FeatureState,
    Prediction,
    validate_artifact,
)
from xnarr.generation import INSTANCE_PROBABILITY, TagKind, render_tag

FEATURE_POOL = ("alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta")


def make_random_artifact(rng: random.Random, max_features: int = 6) -> ExplanationArtifact:
    """Random valid artifact; every number bounded so tolerance tests
    stay far from float round-off."""
    n = rng.randint(2, max_features)
    names = rng.sample(FEATURE_POOL, n)
    features = [
        FeatureState(name, round(rng.uniform(-50.0, 150.0), 3)) for name in names
    ]
    probability = round(rng.uniform(0.05, 0.95), 3)
    attr_names = rng.sample(names, rng.randint(0, n))
    attributions = [
        Attribution(name, round(rng.uniform(-0.5, 0.5), 3)) for name in attr_names
    ]
    cf_names = rng.sample(names, rng.randint(0, n))
    counterfactual = []
    feature_map = {f.name: f for f in features}
    for name in cf_names:
        offset = round(rng.uniform(0.5, 25.0), 3) * rng.choice((-1.0, 1.0))
        shift = round(rng.uniform(-probability, 1.0 - probability), 3)
        shift = min(1.0 - probability, max(-probability, shift))
        counterfactual.append(
            CounterfactualChange(
                feature=name,
                target_value=feature_map[name].current_value + offset,
                probability_shift=shift,
            )
        )
    artifact = ExplanationArtifact(
        instance_id=f"rand-{rng.getrandbits(32):08x}",
        domain=rng.choice(("healthcare", "finance", "other")),
        features=features,
        prediction=Prediction(rng.choice(("high_risk", "low_risk")), probability),
        attributions=attributions,
        counterfactual=counterfactual,
        model_id="fixture",
    )
    assert validate_artifact(artifact).ok, validate_artifact(artifact).violations
    return artifact


def ground_truth_claims(artifact: ExplanationArtifact) -> list[tuple[TagKind, str, float]]:
    """Every claim the artifact supports, as (kind, feature, value)."""
    claims: list[tuple[TagKind, str, float]] = [
        (TagKind.PRB, INSTANCE_PROBABILITY, artifact.prediction.probability)
    ]
    claims.extend((TagKind.CUR, f.name, f.current_value) for f in artifact.features)
    claims.extend((TagKind.IMP, a.feature, a.impact) for a in artifact.attributions)
    for change in artifact.counterfactual:
        claims.append((TagKind.TGT, change.feature, change.target_value))
        claims.append((TagKind.PRB, change.feature, change.probability_shift))
    return claims


def narrative_from_claims(claims: list[tuple[TagKind, str, float]]) -> str:
    """Digit-free filler around one tag per claim."""
    parts = [
        f"the {kind.value.lower()} reading for {feature} sits at "
        + render_tag(kind, feature, value)
        for kind, feature, value in claims
    ]
    return "According to the record, " + "; and ".join(parts) + "."


def faithful_narrative(artifact: ExplanationArtifact) -> str:
    return narrative_from_claims(ground_truth_claims(artifact))


def judge_reply(preference) -> str:
    """Judge JSON echoing a preference vector (always aligned)."""
    return json.dumps(preference.as_dict())


# ---------------------------------------------------------------------------
# Independent oracles
# ---------------------------------------------------------------------------


def shapley_enumeration(weights, means, x):
    """Full subset enumeration of the linear value function
    v(S) = sum_{j in S} w_j x_j + sum_{j not in S} w_j mu_j."""
    n = len(weights)

    def value(subset: set[int]) -> float:
        return sum(weights[j] * (x[j] if j in subset else means[j]) for j in range(n))

    phis = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        total = 0.0
        for r in range(len(others) + 1):
            for combo in itertools.combinations(others, r):
                coalition = set(combo)
                weight = (
                    math.factorial(r) * math.factorial(n - r - 1) / math.factorial(n)
                )
                total += weight * (value(coalition | {i}) - value(coalition))
        phis.append(total)
    return phis


def rank_oracle(values):
    """O(n^2) average ranks: 1 + #smaller + (#equal - 1) / 2."""
    return [
        1
        + sum(1 for w in values if w < v)
        + (sum(1 for w in values if w == v) - 1) / 2
        for v in values
    ]


def pearson_oracle(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    vx = sum((x - mx) ** 2 for x in xs)
    vy = sum((y - my) ** 2 for y in ys)
    return cov / math.sqrt(vx * vy)


def permutation_oracle(records, observed_diff):
    """Exhaustive enumeration of variant labelings with the same
    skip-empty and add-one conventions as the implementation contract."""
    from xnarr.evaluation import style_metrics

    by_pid: dict[str, list] = {}
    for r in records:
        by_pid.setdefault(r.participant_id, []).append(r)
    pids = sorted(by_pid)
    hits = 0
    valid = 0
    for assignment in itertools.product((True, False), repeat=len(pids)):
        v1 = [r for pid, flag in zip(pids, assignment) if flag for r in by_pid[pid]]
        v2 = [r for pid, flag in zip(pids, assignment) if not flag for r in by_pid[pid]]
        if not v1 or not v2:
            continue
        valid += 1
        diff = style_metrics(v1).align - style_metrics(v2).align
        if abs(diff) >= abs(observed_diff) - 1e-12:
            hits += 1
    return (1 + hits) / (1 + valid)


def brute_force_top_k(index, query: str, k: int):
    """Full cosine scan with the documented ordering."""
    qv = np.array(index.embedder.embed(query))
    scored = [
        (float(np.dot(np.array(c.vector), qv)), c.doc_id, c.chunk_index, c)
        for c in index.chunks
    ]
    scored.sort(key=lambda t: (-t[0], t[1], t[2]))
    return scored[:k]
