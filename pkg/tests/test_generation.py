from __future__ import annotations

import re

import pytest
from hypothesis import given, strategies as st

from xnarr.generation import (
    TAG_RE,
    NarrativeCandidate,
    TagKind,
    build_prompt,
    format_decimal,
    render_tag,
    strip_tags,
)
from xnarr.preference import PreferenceVector
from xnarr.templates import TemplateSet
from xnarr.verification import (
    FaithfulnessConfig,
    parse_claims,
    verify_narrative,
)

TS = TemplateSet()

finite_floats = st.floats(allow_nan=False, allow_infinity=False)


class TestRenderTag:
    def test_integral_value(self):
        assert render_tag(TagKind.CUR, "glucose", 148) == "{{CUR|glucose|148}}"

    def test_instance_probability_placeholder(self):
        assert render_tag(TagKind.PRB, "_", -0.23) == "{{PRB|_|-0.23}}"

    def test_fraction(self):
        assert render_tag(TagKind.IMP, "bmi", 0.12) == "{{IMP|bmi|0.12}}"

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            format_decimal(float("nan"))
        with pytest.raises(ValueError):
            format_decimal(float("inf"))

    @given(finite_floats)
    def test_decimal_round_trip(self, value):
        assert float(format_decimal(value)) == value

    @given(
        st.sampled_from(list(TagKind)),
        st.sampled_from(["glucose", "_", "x_y", "Bmi2"]),
        finite_floats,
    )
    def test_render_parse_identity(self, kind, feature, value):
        claims, malformed = parse_claims(render_tag(kind, feature, value))
        assert malformed == []
        assert len(claims) == 1
        assert claims[0].kind is kind
        assert claims[0].feature == feature
        assert claims[0].value == value


class TestStripTags:
    def test_single_substitution(self):
        assert strip_tags("risk is {{PRB|_|0.81}}") == "risk is 0.81"

    def test_identity_on_plain_text(self):
        text = "nothing to see here"
        assert strip_tags(text) == text

    def test_trailing_unit(self):
        assert strip_tags("{{CUR|glucose|148}} mg/dL") == "148 mg/dL"

    def test_malformed_left_verbatim(self):
        assert strip_tags("{{CUR|glucose}} stays") == "{{CUR|glucose}} stays"

    def test_idempotent(self):
        text = "a {{IMP|bmi|0.12}} b {{oops}} c"
        once = strip_tags(text)
        assert strip_tags(once) == once

    def test_no_residual_grammar_match(self, sample_artifact):
        from support import faithful_narrative

        stripped = strip_tags(faithful_narrative(sample_artifact))
        assert TAG_RE.search(stripped) is None


class TestBuildPrompt:
    def pref(self, technicality=0.5):
        return PreferenceVector(technicality, 0.5, 0.5, 0.5)

    def test_high_technicality_band_selected(self, sample_artifact):
        bundle = build_prompt(sample_artifact, self.pref(0.9), TS)
        assert TS.rubric["technicality"][4] in bundle.system_prompt
        assert TS.rubric["technicality"][0] not in bundle.system_prompt

    def test_low_technicality_band_selected(self, sample_artifact):
        bundle = build_prompt(sample_artifact, self.pref(0.1), TS)
        assert TS.rubric["technicality"][0] in bundle.system_prompt

    def test_payload_exactly_once(self, sample_artifact):
        bundle = build_prompt(sample_artifact, self.pref(), TS)
        assert bundle.user_prompt.count('"instance_id": "patient_0042"') == 1

    def test_no_optional_sections_by_default(self, sample_artifact):
        bundle = build_prompt(sample_artifact, self.pref(), TS)
        assert not bundle.includes_evidence
        assert bundle.corrective_feedback is None
        assert "SUPPORTING EVIDENCE" not in bundle.system_prompt
        assert "CORRECTIONS REQUIRED" not in bundle.system_prompt

    def test_corrective_missing_feature_directive(self, sample_artifact):
        report = verify_narrative(
            "no tags at all here", sample_artifact, FaithfulnessConfig()
        )
        assert "bmi" in report.missing_features
        bundle = build_prompt(sample_artifact, self.pref(), TS, corrective=report)
        assert "bmi" in bundle.system_prompt
        assert "must be explicitly referenced" in bundle.system_prompt

    def test_corrective_numeric_directive(self, sample_artifact):
        report = verify_narrative(
            "weight {{IMP|bmi|0.4}}", sample_artifact, FaithfulnessConfig()
        )
        bundle = build_prompt(sample_artifact, self.pref(), TS, corrective=report)
        assert "{{IMP|bmi|0.4}}" in bundle.system_prompt
        assert "0.12" in bundle.system_prompt  # the true value is named

    def test_evidence_block_with_citation(self, sample_artifact):
        from xnarr.retrieval import CorpusIndex

        index = CorpusIndex.from_documents(
            [("d", "glucose raises risk", "Journal A")], chunk_size=8, overlap=0
        )
        evidence = index.search("glucose", k=1)
        bundle = build_prompt(sample_artifact, self.pref(), TS, evidence=evidence)
        assert bundle.includes_evidence
        assert "[source: Journal A]" in bundle.system_prompt

    def test_deterministic(self, sample_artifact):
        a = build_prompt(sample_artifact, self.pref(0.7), TS)
        b = build_prompt(sample_artifact, self.pref(0.7), TS)
        assert a == b


class TestNarrativeCandidate:
    def test_from_tagged_strips(self, sample_artifact):
        candidate = NarrativeCandidate.from_tagged(
            "risk {{PRB|_|0.81}}", attempt_index=1,
            preference_used=PreferenceVector(0.5, 0.5, 0.5, 0.5),
        )
        assert candidate.display_text == "risk 0.81"

    def test_dict_round_trip(self):
        candidate = NarrativeCandidate.from_tagged(
            "x {{CUR|a|1}}", attempt_index=2,
            preference_used=PreferenceVector(0.1, 0.2, 0.3, 0.4),
            evidence_citations=("c1",),
        )
        assert NarrativeCandidate.from_dict(candidate.to_dict()) == candidate


class TestTemplateSet:
    def test_fingerprint_stable(self):
        assert TemplateSet().fingerprint() == TS.fingerprint()
        assert re.fullmatch(r"[0-9a-f]{64}", TS.fingerprint())

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            TemplateSet(tmp_path)
