"""Report writers: CSV + JSON tables with companion figures.

Every evaluation path emits machine-readable tables and renders the
matching matplotlib figure next to them, so a batch run leaves a
self-contained report directory.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .evaluation import AblationRow, ConvergenceRun  # noqa: E402
from .preference import DIMENSIONS  # noqa: E402

ABLATION_COLUMNS = ("Dataset", "Model", "Mode", "Faith", "Comp", "Align", "Steps", "Fail")
METRICS_COLUMNS = ("Group", "nMAE", "nBias", "Align", "rho", "p_value")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def write_ablation_report(rows: Sequence[AblationRow], out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "ablation.csv"
    lines = [",".join(ABLATION_COLUMNS)]
    for row in rows:
        lines.append(
            ",".join(
                (
                    row.dataset,
                    row.model,
                    row.mode,
                    _fmt(row.faith_rate),
                    _fmt(row.comp_rate),
                    _fmt(row.align_rate),
                    _fmt(row.avg_steps),
                    _fmt(row.fail_rate),
                )
            )
        )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    json_path = out_dir / "ablation.json"
    json_path.write_text(
        json.dumps([row.to_dict() for row in rows], indent=2) + "\n", encoding="utf-8"
    )

    figure_path = out_dir / "ablation_rates.png"
    fig, ax = plt.subplots(figsize=(7, 4))
    labels = [f"{row.dataset or 'run'}\n{row.mode}" for row in rows]
    x = range(len(rows))
    width = 0.27
    ax.bar([i - width for i in x], [r.faith_rate for r in rows], width, label="Faith")
    ax.bar(list(x), [r.comp_rate for r in rows], width, label="Comp")
    ax.bar([i + width for i in x], [r.align_rate for r in rows], width, label="Align")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("pass rate")
    ax.legend()
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "json": json_path, "figure": figure_path}


def write_convergence_report(
    runs: Sequence[ConvergenceRun], out_dir: str | Path, max_trajectories: int = 50
) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "convergence.csv"
    lines = ["Persona,Iterations,Converged,Efficiency," + ",".join(DIMENSIONS)]
    for run in runs:
        final = run.s_trajectory[-1]
        lines.append(
            ",".join(
                (
                    run.persona.name,
                    str(run.T),
                    str(run.converged).lower(),
                    _fmt(run.efficiency),
                    *(_fmt(getattr(final, dim)) for dim in DIMENSIONS),
                )
            )
        )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    json_path = out_dir / "convergence.json"
    json_path.write_text(
        json.dumps(
            [
                {
                    "persona": run.persona.name,
                    "iterations": run.T,
                    "converged": run.converged,
                    "efficiency": run.efficiency,
                    "trajectory": [s.as_dict() for s in run.s_trajectory],
                }
                for run in runs
            ],
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    figure_path = out_dir / "convergence.png"
    fig, (ax_traj, ax_hist) = plt.subplots(1, 2, figsize=(9, 4))
    for run in runs[:max_trajectories]:
        deviations = [
            max(
                abs(a - b)
                for a, b in zip(s.as_tuple(), run.persona.target.as_tuple())
            )
            for s in run.s_trajectory
        ]
        ax_traj.plot(range(len(deviations)), deviations, alpha=0.5, linewidth=1)
    ax_traj.set_xlabel("iteration")
    ax_traj.set_ylabel("max deviation from target")
    ax_traj.set_title("feedback trajectories")
    ax_hist.hist([run.T for run in runs], bins=range(0, max((r.T for r in runs), default=1) + 2))
    ax_hist.set_xlabel("iterations to converge")
    ax_hist.set_ylabel("runs")
    ax_hist.set_title("iteration counts")
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "json": json_path, "figure": figure_path}


def write_metrics_report(summary: dict, out_dir: str | Path) -> dict[str, Path]:
    """``summary`` carries 'groups' rows (Group/nMAE/nBias/Align/rho) and
    an optional 'permutation' block."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    lines = [",".join(METRICS_COLUMNS)]
    for group in summary["groups"]:
        lines.append(
            ",".join(
                (
                    group["group"],
                    _fmt(group.get("nMAE")),
                    _fmt(group.get("nBias")),
                    _fmt(group.get("Align")),
                    _fmt(group.get("rho")),
                    _fmt(group.get("p_value")),
                )
            )
        )
    csv_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    json_path = out_dir / "metrics.json"
    json_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")

    figure_path = out_dir / "alignment_by_group.png"
    fig, ax = plt.subplots(figsize=(7, 4))
    names = [g["group"] for g in summary["groups"]]
    aligns = [g.get("Align") or 0.0 for g in summary["groups"]]
    ax.bar(names, aligns)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("Align")
    ax.tick_params(axis="x", labelrotation=30)
    fig.tight_layout()
    fig.savefig(figure_path, dpi=120)
    plt.close(fig)
    return {"csv": csv_path, "json": json_path, "figure": figure_path}
