from __future__ import annotations

import hashlib
import json

from xnarr.evaluation import AblationRow, run_convergence, simulated_judge
from xnarr.generation import build_prompt
from xnarr.preference import BASELINE, BUILTIN_PERSONAS, CpmConfig, PreferenceVector
from xnarr.reports import (
    write_ablation_report,
    write_convergence_report,
    write_metrics_report,
)
from xnarr.templates import TemplateSet

TS = TemplateSet()

# bump these together with any template edit; they pin the prompt version
TEMPLATE_FINGERPRINT = "76eb4666a7f5b1bd498be80d45acb7d8302e7ca78be33b3884196cb98ab44bfb"
PROMPT_SNAPSHOT = "21792f07bc00de8341980760dc68be5b32b408f9dc2d19452945715e990e0fa2"


class TestPromptSnapshot:
    def test_template_fingerprint_pinned(self):
        assert TS.fingerprint() == TEMPLATE_FINGERPRINT

    def test_prompt_snapshot(self, sample_artifact):
        bundle = build_prompt(sample_artifact, PreferenceVector(0.9, 0.3, 0.7, 0.1), TS)
        digest = hashlib.sha256(
            (bundle.system_prompt + "\x00" + bundle.user_prompt).encode("utf-8")
        ).hexdigest()
        assert digest == PROMPT_SNAPSHOT


def _rows():
    return [
        AblationRow(
            dataset="demo", model="offline", mode="baseline",
            faith_rate=0.97, comp_rate=0.85, align_rate=0.60,
            avg_steps=None, fail_rate=0.4, runs=20,
        ),
        AblationRow(
            dataset="demo", model="offline", mode="full",
            faith_rate=1.0, comp_rate=1.0, align_rate=0.95,
            avg_steps=1.4, fail_rate=0.05, runs=20,
        ),
    ]


class TestAblationReport:
    def test_writes_csv_json_figure(self, tmp_path):
        paths = write_ablation_report(_rows(), tmp_path)
        lines = paths["csv"].read_text().splitlines()
        assert lines[0] == "Dataset,Model,Mode,Faith,Comp,Align,Steps,Fail"
        assert lines[1] == "demo,offline,baseline,0.9700,0.8500,0.6000,,0.4000"
        assert lines[2].startswith("demo,offline,full,1.0000,1.0000,0.9500,1.4000")
        payload = json.loads(paths["json"].read_text())
        assert payload[1]["avg_steps"] == 1.4
        assert paths["figure"].stat().st_size > 0


class TestConvergenceReport:
    def test_writes_trajectories(self, tmp_path):
        cfg = CpmConfig()
        runs = [
            run_convergence(
                persona, BASELINE, simulated_judge(persona.target, cfg), cfg
            )
            for persona in BUILTIN_PERSONAS.values()
        ]
        paths = write_convergence_report(runs, tmp_path)
        lines = paths["csv"].read_text().splitlines()
        assert lines[0].startswith("Persona,Iterations,Converged,Efficiency")
        assert len(lines) == 1 + len(runs)
        payload = json.loads(paths["json"].read_text())
        assert payload[0]["converged"] is True
        assert paths["figure"].stat().st_size > 0


class TestMetricsReport:
    def test_writes_summary(self, tmp_path):
        summary = {
            "groups": [
                {"group": "V1", "nMAE": 0.221, "nBias": 0.029, "Align": 0.779, "rho": 0.841},
                {"group": "V2", "nMAE": 0.248, "nBias": 0.057, "Align": 0.752, "rho": 0.801},
            ],
            "permutation": {"observed_diff": 0.027, "p_value": 0.57, "draws": 100, "exact": False},
        }
        paths = write_metrics_report(summary, tmp_path)
        lines = paths["csv"].read_text().splitlines()
        assert lines[0] == "Group,nMAE,nBias,Align,rho,p_value"
        assert lines[1] == "V1,0.2210,0.0290,0.7790,0.8410,"
        assert paths["figure"].stat().st_size > 0
