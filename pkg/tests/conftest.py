from __future__ import annotations

import pytest

from xnarr.explanations import (
    Attribution,
    CounterfactualChange,
    ExplanationArtifact,
    FeatureState,
    Prediction,
    validate_artifact,
)


@pytest.fixture
def sample_artifact() -> ExplanationArtifact:
    artifact = ExplanationArtifact(
        instance_id="patient_0042",
        domain="healthcare",
        features=[
            FeatureState("glucose", 148.0, unit="mg/dL"),
            FeatureState("bmi", 33.6),
            FeatureState("age", 50.0, unit="years"),
            FeatureState("pressure", 72.0, unit="mm Hg"),
        ],
        prediction=Prediction("diabetic", 0.81),
        attributions=[
            Attribution("glucose", 0.30),
            Attribution("bmi", 0.12),
            Attribution("age", 0.05),
            Attribution("pressure", -0.02),
        ],
        counterfactual=[
            CounterfactualChange("glucose", 120.0, -0.23),
            CounterfactualChange("bmi", 27.5, -0.11),
        ],
        model_id="mlp_demo_v1",
    )
    assert validate_artifact(artifact).ok
    return artifact
