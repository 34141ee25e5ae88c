"""Batch evaluation machinery.

Three families: (1) judge-driven convergence of the preference state
toward a target persona, with a deterministic simulated judge for CI;
(2) an ablation harness comparing the full refinement loop against a
single-pass baseline on the same inputs; (3) ordinal agreement metrics
between human ratings and generation levels (nMAE, nBias, Align,
Spearman's rho, and a participant-level permutation test).
"""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ProviderError
from .explanations import ExplanationArtifact
from .generation import NarrativeCandidate
from .preference import (
    BASELINE,
    DIMENSIONS,
    CpmConfig,
    FeedbackDelta,
    Persona,
    PreferenceVector,
    has_converged,
    update,
)

VARIANTS = ("V1", "V2")
ABLATION_MODES = ("baseline", "full")

FeedbackSource = Callable[[PreferenceVector, "NarrativeCandidate | None"], FeedbackDelta]


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------


@dataclass
class ConvergenceRun:
    persona: Persona
    s_trajectory: list[PreferenceVector]
    T: int
    converged: bool
    efficiency: float | None

    def __post_init__(self):
        assert self.T == len(self.s_trajectory) - 1


def simulated_judge(target: PreferenceVector, cfg: CpmConfig) -> FeedbackSource:
    """Quantized proportional feedback: each dimension asks for exactly
    the remaining gap, clamped to the delta bounds."""

    def judge(s: PreferenceVector, narrative=None) -> FeedbackDelta:
        deltas = tuple(
            min(1.0, max(-1.0, (t - v) / cfg.step_size))
            for v, t in zip(s.as_tuple(), target.as_tuple())
        )
        return FeedbackDelta(deltas=deltas, raw_feedback="simulated")

    return judge


def llm_persona_judge(
    persona: Persona,
    provider,
    templates,
    translator: Callable[[str], FeedbackDelta],
    model_name: str = "judge",
    temperature: float = 0.0,
    seed: int | None = None,
) -> FeedbackSource:
    """Opt-in feedback source: a judge model roleplays the persona,
    writes natural-language feedback on the narrative, and the feedback
    is translated into a bounded delta like real user input."""
    from .providers import ChatMessage, ChatRequest
    from .templates import render_template

    level_lines = "\n".join(
        f"- {dim}: {level}"
        for dim, level in zip(DIMENSIONS, persona.ordinal_levels)
    )
    system = render_template(
        templates.text("persona_judge_system.txt"),
        persona_description=persona.description or persona.name,
        persona_instructions=level_lines,
    )

    def source(s: PreferenceVector, narrative: "NarrativeCandidate | None") -> FeedbackDelta:
        text = narrative.display_text if narrative is not None else "(no narrative yet)"
        request = ChatRequest(
            model_name=model_name,
            messages=(ChatMessage("system", system), ChatMessage("user", text)),
            temperature=temperature,
            seed=seed,
        )
        reply = provider.complete(request)
        return translator(reply.content)

    return source


def efficiency_score(
    T: int, w_star: PreferenceVector, w0: PreferenceVector = BASELINE
) -> float | None:
    """Refinement iterations per unit of Euclidean distance travelled
    from the neutral baseline; undefined for a zero-length journey."""
    if T < 0:
        raise ValueError("T must be >= 0")
    distance = float(
        np.linalg.norm(np.array(w_star.as_tuple()) - np.array(w0.as_tuple()))
    )
    if distance < 1e-9:
        return None
    return T / distance


def run_convergence(
    persona: Persona,
    s0: PreferenceVector,
    feedback_source: FeedbackSource,
    cpm_config: CpmConfig | None = None,
    max_iters: int = 25,
    narrator: Callable[[PreferenceVector], "NarrativeCandidate | None"] | None = None,
) -> ConvergenceRun:
    """Iterate (generate -> feedback -> update -> convergence check)
    until the state sits within threshold of the persona target."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    cfg = cpm_config or CpmConfig()
    trajectory = [s0]
    s = s0
    converged = has_converged(s, persona.target, cfg)
    while not converged and len(trajectory) - 1 < max_iters:
        narrative = narrator(s) if narrator is not None else None
        delta = feedback_source(s, narrative)
        s = update(s, delta, cfg)
        trajectory.append(s)
        converged = has_converged(s, persona.target, cfg)
    T = len(trajectory) - 1
    efficiency = efficiency_score(T, s) if converged else None
    return ConvergenceRun(
        persona=persona,
        s_trajectory=trajectory,
        T=T,
        converged=converged,
        efficiency=efficiency,
    )


# ---------------------------------------------------------------------------
# Ablation
# ---------------------------------------------------------------------------


@dataclass
class AblationRow:
    dataset: str
    model: str
    mode: str
    faith_rate: float
    comp_rate: float
    align_rate: float
    avg_steps: float | None
    fail_rate: float
    runs: int = 0
    errors: int = 0

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "model": self.model,
            "mode": self.mode,
            "faith_rate": self.faith_rate,
            "comp_rate": self.comp_rate,
            "align_rate": self.align_rate,
            "avg_steps": self.avg_steps,
            "fail_rate": self.fail_rate,
            "runs": self.runs,
            "errors": self.errors,
        }


def run_ablation(
    engine_source,
    instances: Sequence[ExplanationArtifact],
    personas: Sequence[Persona],
    modes: Sequence[str] = ABLATION_MODES,
    trials: int = 1,
    dataset: str = "",
    model: str = "",
) -> list[AblationRow]:
    """Run every (instance, persona, trial) cell in each mode and
    aggregate constraint pass rates, refinement steps over successes,
    and failure rate. Provider faults are recorded per run, never
    aborting the batch.

    ``engine_source`` is an Engine or a zero-argument factory (handy when
    scripted providers must be rebuilt per run).
    """
    if not instances or not personas:
        raise ValueError("instances and personas must be non-empty")
    rows = []
    for mode in modes:
        if mode not in ABLATION_MODES:
            raise ValueError(f"unknown ablation mode {mode!r}")
        session_mode = "single_pass" if mode == "baseline" else "full"
        faith = comp = align = fails = runs = errors = 0
        steps: list[int] = []
        for artifact, persona, _ in itertools.product(
            instances, personas, range(trials)
        ):
            engine = engine_source() if callable(engine_source) else engine_source
            try:
                session = engine.start_session(artifact, persona, mode=session_mode)
            except ProviderError:
                errors += 1
                continue
            turn = session.turn_log[-1]
            report = turn.report
            runs += 1
            faith += report.passed_faithfulness
            comp += report.passed_completeness
            align += report.passed_style
            if report.passed_all:
                steps.append(turn.final_index + 1)
            else:
                fails += 1
        if runs == 0:
            raise ProviderError(f"every run errored in mode {mode!r}")
        rows.append(
            AblationRow(
                dataset=dataset,
                model=model,
                mode=mode,
                faith_rate=faith / runs,
                comp_rate=comp / runs,
                align_rate=align / runs,
                avg_steps=(sum(steps) / len(steps)) if steps else None,
                fail_rate=fails / runs,
                runs=runs,
                errors=errors,
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Ordinal agreement metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvaluationRecord:
    """One human rating of one narrative dimension against the ordinal
    generation level (both encoded 0/1/2)."""

    participant_id: str
    variant: str
    persona: str
    dimension: str
    rating: int
    level: int

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.dimension not in DIMENSIONS:
            raise ValueError(f"unknown dimension {self.dimension!r}")
        if self.rating not in (0, 1, 2) or self.level not in (0, 1, 2):
            raise ValueError("rating and level must be encoded 0/1/2")


@dataclass(frozen=True)
class StyleMetrics:
    count: int
    nmae: float
    nbias: float
    align: float


def style_metrics(records: Sequence[EvaluationRecord]) -> StyleMetrics:
    """Normalized ordinal agreement; the factor 2 is the maximum
    possible deviation on the 0/1/2 scale, so nMAE sits in [0,1] and
    nBias in [-1,1]. Align is 1 - nMAE by definition."""
    if not records:
        raise ValueError("no records")
    n = len(records)
    abs_sum = sum(abs(r.rating - r.level) for r in records)
    signed_sum = sum(r.rating - r.level for r in records)
    nmae = abs_sum / (2 * n)
    nbias = signed_sum / (2 * n)
    return StyleMetrics(count=n, nmae=nmae, nbias=nbias, align=1 - nmae)


def spearman_rho(pairs: Sequence[tuple[float, float]]) -> float:
    """Pearson correlation of average-tie ranks."""
    if len(pairs) < 2:
        raise ValueError("need at least 2 pairs")
    x = np.array([p[0] for p in pairs], dtype=float)
    y = np.array([p[1] for p in pairs], dtype=float)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ValueError("degenerate input: a variable is constant")
    rx = _average_ranks(x)
    ry = _average_ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    sorted_values = values[order]
    while i < len(values):
        j = i
        while j < len(values) and sorted_values[j] == sorted_values[i]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # 1-based average rank
        i = j
    return ranks


@dataclass(frozen=True)
class PermutationResult:
    observed_diff: float
    p_value: float
    draws: int
    exact: bool


def permutation_test(
    records: Sequence[EvaluationRecord], permutations: int = 10_000, seed: int = 0
) -> PermutationResult:
    """Participant-level permutation of variant labels.

    The statistic is Align(V1) - Align(V2). Every permutation reassigns
    each participant's label uniformly, moving all of that participant's
    ratings together; labelings that empty either side are skipped. When
    the full labeling space fits within ``permutations`` it is
    enumerated exactly instead of sampled. Two-sided p-value with the
    add-one correction.
    """
    by_participant: dict[str, list[EvaluationRecord]] = {}
    for record in records:
        by_participant.setdefault(record.participant_id, []).append(record)
    participants = sorted(by_participant)
    observed_v1 = {
        p for p in participants if by_participant[p][0].variant == "V1"
    }
    for p in participants:
        variants = {r.variant for r in by_participant[p]}
        if len(variants) != 1:
            raise ValueError(f"participant {p} appears under both variants")
    n_v1 = len(observed_v1)
    n_v2 = len(participants) - n_v1
    if n_v1 < 2 or n_v2 < 2:
        raise ValueError("need at least 2 participants per variant")

    abs_sums = np.array(
        [sum(abs(r.rating - r.level) for r in by_participant[p]) for p in participants],
        dtype=float,
    )
    counts = np.array([len(by_participant[p]) for p in participants], dtype=float)
    observed_mask = np.array([p in observed_v1 for p in participants])

    def stat(mask: np.ndarray) -> np.ndarray:
        sums_v1 = mask @ abs_sums
        counts_v1 = mask @ counts
        sums_v2 = abs_sums.sum() - sums_v1
        counts_v2 = counts.sum() - counts_v1
        with np.errstate(divide="ignore", invalid="ignore"):
            return sums_v2 / (2 * counts_v2) - sums_v1 / (2 * counts_v1)

    observed = float(stat(observed_mask.astype(float).reshape(1, -1))[0])

    n = len(participants)
    if 2**n <= permutations:
        bits = np.array(list(itertools.product((0.0, 1.0), repeat=n)))
        exact = True
    else:
        rng = np.random.default_rng(seed)
        bits = rng.integers(0, 2, size=(permutations, n)).astype(float)
        exact = False
    counts_v1 = bits @ counts
    valid = (counts_v1 > 0) & (counts_v1 < counts.sum())
    stats = stat(bits[valid])
    hits = int(np.sum(np.abs(stats) >= abs(observed) - 1e-12))
    p_value = (1 + hits) / (1 + len(stats))
    return PermutationResult(
        observed_diff=observed, p_value=p_value, draws=len(stats), exact=exact
    )


# ---------------------------------------------------------------------------
# Ratings I/O
# ---------------------------------------------------------------------------

RATINGS_HEADER = ("participant_id", "variant", "persona", "dimension", "rating", "level")


def read_records_csv(path: str | Path) -> list[EvaluationRecord]:
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        missing = set(RATINGS_HEADER) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"ratings CSV is missing columns: {sorted(missing)}")
        return [
            EvaluationRecord(
                participant_id=row["participant_id"],
                variant=row["variant"],
                persona=row["persona"],
                dimension=row["dimension"],
                rating=int(row["rating"]),
                level=int(row["level"]),
            )
            for row in reader
        ]


def write_records_csv(records: Iterable[EvaluationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RATINGS_HEADER)
        for r in records:
            writer.writerow(
                (r.participant_id, r.variant, r.persona, r.dimension, r.rating, r.level)
            )
