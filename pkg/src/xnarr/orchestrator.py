"""Closed-loop session engine.

A session owns one artifact, one persona, and the evolving preference
state. Each turn: translate feedback, update the preference vector,
then generate a narrative inside a rejection-refinement loop that keeps
regenerating with corrective feedback until faithfulness, completeness
and style alignment all pass or the attempt budget runs out. A
single-pass mode generates once and reports the checks without ever
enforcing them.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import ProfileLockedError, SessionError
from .explanations import (
    ExplanationArtifact,
    artifact_from_dict,
    artifact_to_dict,
    validate_artifact,
)
from .feedback import FeedbackEvent, apply_feedback, lexicon_translate, translate_feedback
from .generation import NarrativeCandidate, build_prompt
from .preference import (
    CpmConfig,
    FeedbackDelta,
    Persona,
    PreferenceVector,
    init_from_persona,
)
from .providers import ChatMessage, ChatProvider, ChatRequest
from .retrieval import CorpusIndex, RetrievalResult, formulate_queries
from .style import StyleConfig, check_alignment, score_style
from .templates import TemplateSet
from .verification import FaithfulnessConfig, VerificationReport, attach_style, verify_narrative

MODES = ("full", "single_pass")
STATUSES = ("active", "confirmed", "failed")


@dataclass(frozen=True)
class LoopConfig:
    refinement_budget: int = 10
    rag_enabled: bool = False
    retrieval_k: int = 4
    query_attribution_count: int = 3

    def __post_init__(self):
        if self.refinement_budget < 1:
            raise ValueError("refinement_budget must be >= 1")


@dataclass
class AttemptRecord:
    candidate: NarrativeCandidate
    report: VerificationReport

    def to_dict(self) -> dict:
        return {"candidate": self.candidate.to_dict(), "report": self.report.to_dict()}

    @classmethod
    def from_dict(cls, payload: dict) -> "AttemptRecord":
        return cls(
            candidate=NarrativeCandidate.from_dict(payload["candidate"]),
            report=VerificationReport.from_dict(payload["report"]),
        )


@dataclass
class GenerationOutcome:
    """Result of one refinement loop; ``steps`` only on success."""

    success: bool
    candidate: NarrativeCandidate
    report: VerificationReport
    attempts: int
    steps: int | None = None
    last_report: VerificationReport | None = None
    attempt_records: list[AttemptRecord] = field(default_factory=list)


@dataclass
class TurnRecord:
    feedback: str | None
    s_before: PreferenceVector
    s_after: PreferenceVector
    attempts: list[AttemptRecord]
    final_index: int
    success: bool

    @property
    def narrative(self) -> NarrativeCandidate:
        return self.attempts[self.final_index].candidate

    @property
    def report(self) -> VerificationReport:
        return self.attempts[self.final_index].report

    def to_dict(self) -> dict:
        return {
            "feedback": self.feedback,
            "s_before": self.s_before.as_dict(),
            "s_after": self.s_after.as_dict(),
            "attempts": [a.to_dict() for a in self.attempts],
            "final_index": self.final_index,
            "success": self.success,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TurnRecord":
        return cls(
            feedback=payload.get("feedback"),
            s_before=PreferenceVector.from_dict(payload["s_before"]),
            s_after=PreferenceVector.from_dict(payload["s_after"]),
            attempts=[AttemptRecord.from_dict(a) for a in payload["attempts"]],
            final_index=payload["final_index"],
            success=payload["success"],
        )


@dataclass
class SessionState:
    session_id: str
    user_id: str
    artifact: ExplanationArtifact
    persona: Persona
    preference: PreferenceVector
    initial_preference: PreferenceVector
    status: str = "active"
    mode: str = "full"
    rag_enabled: bool = False
    turn_log: list[TurnRecord] = field(default_factory=list)
    feedback_history: list[FeedbackEvent] = field(default_factory=list)
    cpm_config: CpmConfig = field(default_factory=CpmConfig)

    @property
    def has_validated_narrative(self) -> bool:
        return any(turn.success for turn in self.turn_log)

    @property
    def attempt_count(self) -> int:
        return sum(len(turn.attempts) for turn in self.turn_log)

    @property
    def latest_turn(self) -> TurnRecord | None:
        return self.turn_log[-1] if self.turn_log else None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "user_id": self.user_id,
            "status": self.status,
            "mode": self.mode,
            "rag_enabled": self.rag_enabled,
            "artifact": artifact_to_dict(self.artifact),
            "persona": self.persona.to_dict(),
            "preference": self.preference.as_dict(),
            "initial_preference": self.initial_preference.as_dict(),
            "cpm_config": {
                "step_size": self.cpm_config.step_size,
                "convergence_threshold": self.cpm_config.convergence_threshold,
            },
            "turns": [turn.to_dict() for turn in self.turn_log],
            "feedback_history": [event.to_dict() for event in self.feedback_history],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "SessionState":
        return cls(
            session_id=payload["session_id"],
            user_id=payload.get("user_id", payload["session_id"]),
            artifact=artifact_from_dict(payload["artifact"]),
            persona=Persona.from_dict(payload["persona"]),
            preference=PreferenceVector.from_dict(payload["preference"]),
            initial_preference=PreferenceVector.from_dict(payload["initial_preference"]),
            status=payload.get("status", "active"),
            mode=payload.get("mode", "full"),
            rag_enabled=payload.get("rag_enabled", False),
            turn_log=[TurnRecord.from_dict(t) for t in payload.get("turns", [])],
            feedback_history=[
                FeedbackEvent.from_dict(e) for e in payload.get("feedback_history", [])
            ],
            cpm_config=CpmConfig(**payload.get("cpm_config", {})),
        )


class Engine:
    """Wires providers, verifiers and stores into the session loop."""

    def __init__(
        self,
        generator: ChatProvider,
        judge: ChatProvider,
        translator: ChatProvider | Callable[[str], FeedbackDelta] | None = None,
        templates: TemplateSet | None = None,
        cpm_config: CpmConfig | None = None,
        faithfulness_config: FaithfulnessConfig | None = None,
        style_config: StyleConfig | None = None,
        loop_config: LoopConfig | None = None,
        index: CorpusIndex | None = None,
        sessions_dir: str | Path | None = None,
        profiles_dir: str | Path | None = None,
        seed: int | None = None,
        generator_model: str = "generator",
        judge_model: str = "judge",
        translator_model: str = "translator",
        generator_temperature: float = 0.7,
        judge_temperature: float = 0.0,
    ):
        self.generator = generator
        self.judge = judge
        self.translator = translator
        self.templates = templates or TemplateSet()
        self.cpm_config = cpm_config or CpmConfig()
        self.faithfulness_config = faithfulness_config or FaithfulnessConfig()
        self.style_config = style_config or StyleConfig()
        self.loop_config = loop_config or LoopConfig()
        self.index = index
        self.sessions_dir = Path(sessions_dir) if sessions_dir else None
        self.profiles_dir = Path(profiles_dir) if profiles_dir else None
        self.seed = seed
        self.generator_model = generator_model
        self.judge_model = judge_model
        self.translator_model = translator_model
        self.generator_temperature = generator_temperature
        self.judge_temperature = judge_temperature
        # deterministic ids under a fixed seed, unique within a run otherwise
        self._id_rng = random.Random(seed)

    # -- session lifecycle -------------------------------------------------

    def start_session(
        self,
        artifact: ExplanationArtifact,
        persona: Persona,
        mode: str = "full",
        rag_enabled: bool | None = None,
        session_id: str | None = None,
        user_id: str | None = None,
        initial_preference: PreferenceVector | None = None,
    ) -> SessionState:
        """Open a session. The style state starts from the persona prior
        unless ``initial_preference`` seeds it (e.g. a frozen profile
        from an earlier session)."""
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        check = validate_artifact(artifact)
        if not check.ok:
            raise ValueError("invalid artifact: " + "; ".join(check.violations))
        if session_id is None:
            session_id = f"s{self._id_rng.getrandbits(48):012x}"
        preference = initial_preference or init_from_persona(persona)
        session = SessionState(
            session_id=session_id,
            user_id=user_id or session_id,
            artifact=artifact,
            persona=persona,
            preference=preference,
            initial_preference=preference,
            mode=mode,
            rag_enabled=self.loop_config.rag_enabled if rag_enabled is None else rag_enabled,
            cpm_config=self.cpm_config,
        )
        outcome = self.generate_validated(session)
        self._log_turn(session, feedback=None, s_before=preference, outcome=outcome)
        self._persist(session)
        return session

    def run_turn(self, session: SessionState, feedback_text: str) -> GenerationOutcome:
        """Translate feedback, update the preference state, regenerate."""
        if session.status == "confirmed":
            raise ProfileLockedError("profile locked")
        if session.status != "active":
            raise SessionError("session not active")
        if not feedback_text.strip():
            raise ValueError("empty feedback")
        s_before = session.preference
        delta = self.translate(feedback_text)
        apply_feedback(session, delta, self.cpm_config)
        outcome = self.generate_validated(session)
        self._log_turn(session, feedback=feedback_text, s_before=s_before, outcome=outcome)
        self._persist(session)
        return outcome

    def confirm(self, session: SessionState) -> dict:
        """Freeze the profile; requires at least one validated narrative."""
        if session.status == "confirmed":
            raise SessionError("already confirmed")
        if session.status != "active":
            raise SessionError("session not active")
        if not session.has_validated_narrative:
            raise SessionError("no validated narrative to confirm")
        session.status = "confirmed"
        profile = {
            "user_id": session.user_id,
            "session_id": session.session_id,
            "persona": session.persona.name,
            "preference": session.preference.as_dict(),
        }
        if self.profiles_dir is not None:
            self.profiles_dir.mkdir(parents=True, exist_ok=True)
            path = self.profiles_dir / f"{session.user_id}.json"
            path.write_text(json.dumps(profile, indent=2) + "\n", encoding="utf-8")
        self._persist(session)
        return profile

    def generate_for(
        self,
        artifact: ExplanationArtifact,
        preference: PreferenceVector,
        persona: Persona | None = None,
        mode: str = "full",
        rag_enabled: bool | None = None,
    ) -> GenerationOutcome:
        """One refinement loop for an arbitrary preference point without
        session bookkeeping (used by batch evaluation loops)."""
        from .preference import BUILTIN_PERSONAS

        session = SessionState(
            session_id="ephemeral",
            user_id="ephemeral",
            artifact=artifact,
            persona=persona or BUILTIN_PERSONAS["patient"],
            preference=preference,
            initial_preference=preference,
            mode=mode,
            rag_enabled=self.loop_config.rag_enabled if rag_enabled is None else rag_enabled,
            cpm_config=self.cpm_config,
        )
        return self.generate_validated(session)

    def translate(self, feedback_text: str) -> FeedbackDelta:
        if self.translator is None:
            return lexicon_translate(feedback_text)
        if callable(getattr(self.translator, "complete", None)):
            return translate_feedback(
                feedback_text,
                self.translator,
                self.templates,
                model_name=self.translator_model,
                seed=self.seed,
            )
        return self.translator(feedback_text)

    # -- generation loop ---------------------------------------------------

    def retrieve_evidence(self, session: SessionState) -> list[RetrievalResult]:
        """Evidence is artifact-determined, so it is fetched once per
        turn, not per refinement attempt."""
        if not session.rag_enabled or self.index is None:
            return []
        results: list[RetrievalResult] = []
        seen: set[tuple[str, int]] = set()
        for query in formulate_queries(
            session.artifact, top_attributions=self.loop_config.query_attribution_count
        ):
            for result in self.index.search(query, k=self.loop_config.retrieval_k):
                key = (result.chunk.doc_id, result.chunk.chunk_index)
                if key not in seen:
                    seen.add(key)
                    results.append(result)
        return results

    def generate_validated(self, session: SessionState) -> GenerationOutcome:
        """Generate -> verify -> style-check, refining with corrective
        feedback until all constraints pass or the budget is spent.

        In single_pass mode exactly one generation happens and its report
        is informational only. On budget exhaustion the session fails and
        the best attempt (fewest violated constraints, ties -> latest) is
        returned for display, clearly unvalidated.
        """
        if session.status != "active":
            raise SessionError("session not active")
        evidence = self.retrieve_evidence(session)
        citations = tuple(r.chunk.source_citation for r in evidence)
        budget = 1 if session.mode == "single_pass" else self.loop_config.refinement_budget

        attempts: list[AttemptRecord] = []
        corrective: VerificationReport | None = None
        corrective_text: str | None = None
        for attempt_index in range(1, budget + 1):
            bundle = build_prompt(
                session.artifact,
                session.preference,
                self.templates,
                evidence=evidence,
                corrective=corrective,
                corrective_source_text=corrective_text,
            )
            request = ChatRequest(
                model_name=self.generator_model,
                messages=(
                    ChatMessage("system", bundle.system_prompt),
                    ChatMessage("user", bundle.user_prompt),
                ),
                temperature=self.generator_temperature,
                seed=self.seed,
            )
            response = self.generator.complete(request)
            candidate = NarrativeCandidate.from_tagged(
                response.content,
                attempt_index=attempt_index,
                preference_used=session.preference,
                evidence_citations=citations,
            )
            report = verify_narrative(
                candidate.tagged_text, session.artifact, self.faithfulness_config
            )
            score = score_style(
                candidate,
                self.judge,
                self.templates,
                self.style_config,
                model_name=self.judge_model,
                temperature=self.judge_temperature,
                seed=self.seed,
            )
            alignment = check_alignment(score, session.preference, self.style_config)
            attach_style(report, score.scores, alignment.deviations, alignment.failing_dims)
            attempts.append(AttemptRecord(candidate=candidate, report=report))

            if session.mode == "single_pass":
                return GenerationOutcome(
                    success=True,
                    candidate=candidate,
                    report=report,
                    attempts=1,
                    steps=1,
                    last_report=report,
                    attempt_records=attempts,
                )
            if report.passed_all:
                return GenerationOutcome(
                    success=True,
                    candidate=candidate,
                    report=report,
                    attempts=attempt_index,
                    steps=attempt_index,
                    last_report=report,
                    attempt_records=attempts,
                )
            corrective = report
            corrective_text = candidate.tagged_text

        best = min(
            range(len(attempts)),
            key=lambda i: (attempts[i].report.violation_count, -i),
        )
        session.status = "failed"
        return GenerationOutcome(
            success=False,
            candidate=attempts[best].candidate,
            report=attempts[best].report,
            attempts=len(attempts),
            steps=None,
            last_report=attempts[-1].report,
            attempt_records=attempts,
        )

    # -- bookkeeping ---------------------------------------------------------

    def _log_turn(
        self,
        session: SessionState,
        feedback: str | None,
        s_before: PreferenceVector,
        outcome: GenerationOutcome,
    ) -> None:
        final_index = next(
            i
            for i, record in enumerate(outcome.attempt_records)
            if record.candidate is outcome.candidate
        )
        # single_pass narratives only count as validated if the (unenforced)
        # checks happen to pass; confirm() relies on this flag
        success = outcome.success and outcome.report.passed_all
        session.turn_log.append(
            TurnRecord(
                feedback=feedback,
                s_before=s_before,
                s_after=session.preference,
                attempts=outcome.attempt_records,
                final_index=final_index,
                success=success,
            )
        )

    def _persist(self, session: SessionState) -> None:
        if self.sessions_dir is None:
            return
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        path = self.sessions_dir / f"{session.session_id}.json"
        path.write_text(
            json.dumps(session.to_dict(), indent=2) + "\n", encoding="utf-8"
        )

    def load_session(self, session_id: str) -> SessionState:
        if self.sessions_dir is None:
            raise FileNotFoundError("no sessions directory configured")
        path = self.sessions_dir / f"{session_id}.json"
        if not path.exists():
            raise FileNotFoundError(f"unknown session {session_id}")
        return SessionState.from_dict(json.loads(path.read_text(encoding="utf-8")))


def replay_preference(session: SessionState) -> PreferenceVector:
    """Re-apply the recorded deltas from the initial vector; must land
    exactly on the session's current preference."""
    from .preference import update as apply_update

    current = session.initial_preference
    for event in session.feedback_history:
        current = apply_update(current, event.delta, session.cpm_config)
    return current
