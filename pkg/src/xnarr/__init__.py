"""Closed-loop engine turning structured model explanations into
verified, personalized natural-language narratives."""

from .explanations import (
    Attribution,
    CounterfactualChange,
    ExplanationArtifact,
    FeatureState,
    LinearModelSpec,
    Prediction,
    artifact_from_dict,
    artifact_to_dict,
    brute_force_counterfactual,
    linear_shapley,
    validate_artifact,
)
from .preference import (
    BASELINE,
    DIMENSIONS,
    CpmConfig,
    FeedbackDelta,
    Persona,
    PreferenceVector,
    has_converged,
    init_from_persona,
    update,
)
from .orchestrator import Engine, LoopConfig, SessionState
from .verification import FaithfulnessConfig, VerificationReport, verify_narrative

__version__ = "0.1.0"

__all__ = [
    "Attribution",
    "BASELINE",
    "CounterfactualChange",
    "CpmConfig",
    "DIMENSIONS",
    "Engine",
    "ExplanationArtifact",
    "FaithfulnessConfig",
    "FeatureState",
    "FeedbackDelta",
    "LinearModelSpec",
    "LoopConfig",
    "Persona",
    "Prediction",
    "PreferenceVector",
    "SessionState",
    "VerificationReport",
    "artifact_from_dict",
    "artifact_to_dict",
    "brute_force_counterfactual",
    "has_converged",
    "init_from_persona",
    "linear_shapley",
    "update",
    "validate_artifact",
    "verify_narrative",
    "__version__",
]
