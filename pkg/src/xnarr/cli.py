"""Command-line interface.

Subcommands: ``explain`` (one artifact -> validated narrative),
``chat`` (interactive feedback loop), ``evaluate`` (ablation +
convergence batch with report files and figures), ``metrics`` (ratings
CSV -> agreement metrics), ``serve`` (REST service). Exit codes:
0 success, 1 operational failure, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .config import build_engine, config_from_dict
from .errors import ProviderError, SessionError
from .evaluation import (
    ABLATION_MODES,
    PermutationResult,
    llm_persona_judge,
    run_ablation,
    run_convergence,
    simulated_judge,
    spearman_rho,
    style_metrics,
    permutation_test,
)
from .explanations import (
    LinearModelSpec,
    SyntheticFeature,
    read_artifact,
    synthesize_artifacts,
    top_risk,
)
from .evaluation import read_records_csv
from .orchestrator import GenerationOutcome, SessionState
from .preference import BASELINE, DIMENSIONS, Persona, resolve_persona
from .reports import write_ablation_report, write_convergence_report, write_metrics_report

DEMO_MODEL = LinearModelSpec(
    weights={"glucose": 0.035, "bmi": 0.09, "age": 0.02, "pressure": 0.008},
    bias=-9.0,
    positive_label="elevated_risk",
    negative_label="typical_risk",
    scales={"glucose": 30.0, "bmi": 7.0, "age": 12.0, "pressure": 12.0},
)
DEMO_FEATURES = (
    SyntheticFeature("glucose", mean=120.0, std=30.0, unit="mg/dL"),
    SyntheticFeature("bmi", mean=30.0, std=7.0),
    SyntheticFeature("age", mean=45.0, std=12.0, unit="years"),
    SyntheticFeature("pressure", mean=72.0, std=12.0, unit="mm Hg"),
)


def _engine_from_config(config_path: str | None, overrides: tuple[str, ...] = ()):
    if config_path:
        payload = json.loads(Path(config_path).read_text(encoding="utf-8"))
    else:
        payload = {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep or not key:
            raise click.UsageError(f"--set expects section.key=value, got {item!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = payload
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = value
    config = config_from_dict(payload)
    return build_engine(config), config


set_option = click.option(
    "--set",
    "overrides",
    multiple=True,
    metavar="KEY=VALUE",
    help="override a config key by dotted path, e.g. --set cpm.step_size=0.1",
)


def _load_persona(value: str) -> Persona:
    if value.endswith(".json") and Path(value).exists():
        return Persona.from_dict(json.loads(Path(value).read_text(encoding="utf-8")))
    return resolve_persona(value)


def _print_outcome(session: SessionState, outcome: GenerationOutcome) -> None:
    report = outcome.report
    click.echo(outcome.candidate.display_text)
    click.echo("")
    status = "validated" if outcome.success and report.passed_all else "NOT VALIDATED"
    click.echo(f"[{status}] attempts={outcome.attempts} steps={outcome.steps}")
    click.echo(
        "checks: "
        f"faithfulness={'pass' if report.passed_faithfulness else 'FAIL'} "
        f"completeness={'pass' if report.passed_completeness else 'FAIL'} "
        f"style={'pass' if report.passed_style else 'FAIL'}"
    )
    click.echo("preference: " + json.dumps(session.preference.as_dict()))


@click.group()
def main() -> None:
    """Personalized, verified narratives from structured explanations."""


@main.command()
@click.option("--artifact", "artifact_path", required=True, type=click.Path(exists=True))
@click.option("--persona", required=True, help="builtin persona name or persona JSON file")
@click.option("--mode", type=click.Choice(["full", "single_pass"]), default="full")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--rag/--no-rag", default=None)
@click.option("--json", "as_json", is_flag=True, help="emit the full session JSON")
@set_option
def explain(artifact_path, persona, mode, config_path, rag, as_json, overrides) -> None:
    """Generate one validated narrative for an artifact file."""
    try:
        engine, _ = _engine_from_config(config_path, overrides)
        artifact = read_artifact(artifact_path)
        persona_obj = _load_persona(persona)
        session = engine.start_session(artifact, persona_obj, mode=mode, rag_enabled=rag)
    except (ProviderError, SessionError, ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    turn = session.turn_log[-1]
    outcome = GenerationOutcome(
        success=session.status != "failed",
        candidate=turn.narrative,
        report=turn.report,
        attempts=len(turn.attempts),
        steps=(turn.final_index + 1) if turn.success else None,
        attempt_records=turn.attempts,
    )
    if as_json:
        click.echo(json.dumps(session.to_dict(), indent=2))
    else:
        _print_outcome(session, outcome)
    if session.status == "failed":
        sys.exit(1)


@main.command()
@click.option("--artifact", "artifact_path", required=True, type=click.Path(exists=True))
@click.option("--persona", required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--rag/--no-rag", default=None)
@set_option
def chat(artifact_path, persona, config_path, rag, overrides) -> None:
    """Interactive loop: read feedback lines, /confirm to freeze,
    /quit to leave."""
    try:
        engine, _ = _engine_from_config(config_path, overrides)
        artifact = read_artifact(artifact_path)
        persona_obj = _load_persona(persona)
        session = engine.start_session(artifact, persona_obj, rag_enabled=rag)
    except (ProviderError, SessionError, ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    turn = session.turn_log[-1]
    click.echo(turn.narrative.display_text)
    click.echo("preference: " + json.dumps(session.preference.as_dict()))
    if session.status == "failed":
        click.echo("generation failed within budget; session closed", err=True)
        sys.exit(1)
    while True:
        try:
            line = click.prompt("feedback", prompt_suffix="> ", default="", show_default=False)
        except (EOFError, click.exceptions.Abort):
            break
        line = line.strip()
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        if line == "/confirm":
            try:
                profile = engine.confirm(session)
            except SessionError as exc:
                click.echo(f"error: {exc}", err=True)
                continue
            click.echo("profile confirmed: " + json.dumps(profile["preference"]))
            break
        try:
            outcome = engine.run_turn(session, line)
        except (ProviderError, SessionError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            if session.status != "active":
                sys.exit(1)
            continue
        click.echo(outcome.candidate.display_text)
        click.echo("preference: " + json.dumps(session.preference.as_dict()))
    sys.exit(0)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--artifacts", "artifact_paths", multiple=True, type=click.Path(exists=True))
@click.option("--instances", default=10, show_default=True, help="synthetic instance count")
@click.option("--top", default=0, help="keep only the N highest-risk instances")
@click.option("--personas", default="patient,clinician", show_default=True)
@click.option("--modes", default=",".join(ABLATION_MODES), show_default=True)
@click.option("--trials", default=1, show_default=True)
@click.option("--dataset", default="synthetic", show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--max-iters", default=25, show_default=True)
@click.option(
    "--judge",
    "judge_kind",
    type=click.Choice(["simulated", "llm"]),
    default="simulated",
    show_default=True,
    help="feedback source for the convergence loop",
)
@set_option
def evaluate(
    config_path,
    out_dir,
    artifact_paths,
    instances,
    top,
    personas,
    modes,
    trials,
    dataset,
    seed,
    max_iters,
    judge_kind,
    overrides,
) -> None:
    """Ablation (full loop vs single-pass) and simulated-judge
    convergence; writes CSV/JSON reports and figures."""
    try:
        engine, config = _engine_from_config(config_path, overrides)
        persona_list = [_load_persona(name.strip()) for name in personas.split(",") if name.strip()]
        if artifact_paths:
            artifact_list = [read_artifact(p) for p in artifact_paths]
        else:
            artifact_list = synthesize_artifacts(
                DEMO_MODEL, DEMO_FEATURES, count=instances, seed=seed, domain="healthcare"
            )
        if top:
            artifact_list = top_risk(artifact_list, top)
        mode_list = [m.strip() for m in modes.split(",") if m.strip()]
        rows = run_ablation(
            engine,
            artifact_list,
            persona_list,
            modes=mode_list,
            trials=trials,
            dataset=dataset,
            model=config.generator.model if config.generator.kind == "ollama" else "offline",
        )
        runs = []
        for persona in persona_list:
            if judge_kind == "llm":
                source = llm_persona_judge(
                    persona, engine.judge, engine.templates, translator=engine.translate
                )
                probe = artifact_list[0]
                narrator = lambda s, a=probe, p=persona: (  # noqa: E731
                    engine.generate_for(a, s, persona=p).candidate
                )
            else:
                source = simulated_judge(persona.target, engine.cpm_config)
                narrator = None
            runs.append(
                run_convergence(
                    persona,
                    s0=BASELINE,
                    feedback_source=source,
                    cpm_config=engine.cpm_config,
                    max_iters=max_iters,
                    narrator=narrator,
                )
            )
    except (ProviderError, SessionError, ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    paths = write_ablation_report(rows, out_dir)
    for row in rows:
        click.echo(
            f"{row.dataset}/{row.mode}: Faith {row.faith_rate:.2f} "
            f"Comp {row.comp_rate:.2f} Align {row.align_rate:.2f} "
            f"Steps {row.avg_steps if row.avg_steps is not None else '-'} "
            f"Fail {row.fail_rate:.2f}"
        )
    conv_paths = write_convergence_report(runs, out_dir)
    click.echo(f"reports written: {paths['csv']}, {conv_paths['csv']}")


@main.command()
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--permutations", default=10_000, show_default=True)
@click.option("--seed", default=0, show_default=True)
def metrics(ratings_path, out_dir, permutations, seed) -> None:
    """Agreement metrics from a ratings CSV
    (participant_id,variant,persona,dimension,rating,level)."""
    try:
        records = read_records_csv(ratings_path)
        if not records:
            raise ValueError("ratings file is empty")
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    groups: list[dict] = []

    def group_row(name: str, subset) -> dict:
        m = style_metrics(subset)
        row = {
            "group": name,
            "nMAE": m.nmae,
            "nBias": m.nbias,
            "Align": m.align,
            "rho": None,
            "p_value": None,
        }
        pairs = [(r.rating, r.level) for r in subset]
        try:
            row["rho"] = spearman_rho(pairs)
        except ValueError:
            pass
        return row

    overall = group_row("overall", records)
    groups.append(overall)
    for variant in ("V1", "V2"):
        subset = [r for r in records if r.variant == variant]
        if subset:
            groups.append(group_row(variant, subset))
    for dimension in DIMENSIONS:
        subset = [r for r in records if r.dimension == dimension]
        if subset:
            groups.append(group_row(dimension.capitalize(), subset))

    permutation: PermutationResult | None = None
    participants_by_variant = {
        v: {r.participant_id for r in records if r.variant == v} for v in ("V1", "V2")
    }
    if all(len(p) >= 2 for p in participants_by_variant.values()):
        permutation = permutation_test(records, permutations=permutations, seed=seed)

    click.echo(f"nMAE {overall['nMAE']:.4f}")
    click.echo(f"nBias {overall['nBias']:.4f}")
    click.echo(f"Align {overall['Align']:.4f}")
    if overall["rho"] is not None:
        click.echo(f"rho {overall['rho']:.4f}")
    if permutation is not None:
        click.echo(
            f"permutation diff(V1-V2) {permutation.observed_diff:+.4f} "
            f"p={permutation.p_value:.4f} ({permutation.draws} draws"
            f"{', exact' if permutation.exact else ''})"
        )
    else:
        click.echo("permutation test skipped: need >= 2 participants per variant")

    if out_dir:
        summary = {
            "groups": groups,
            "permutation": (
                {
                    "observed_diff": permutation.observed_diff,
                    "p_value": permutation.p_value,
                    "draws": permutation.draws,
                    "exact": permutation.exact,
                }
                if permutation
                else None
            ),
        }
        paths = write_metrics_report(summary, out_dir)
        click.echo(f"reports written: {paths['csv']}")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", default=None, type=int)
@set_option
def serve(config_path, host, port, overrides) -> None:
    """Run the REST service."""
    from .service import serve as run_service

    try:
        engine, config = _engine_from_config(config_path, overrides)
    except (ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    default_host, _, default_port = config.listen_address.partition(":")
    run_service(engine, host=host or default_host, port=port or int(default_port))


if __name__ == "__main__":
    main()
