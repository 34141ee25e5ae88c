from __future__ import annotations

import json
import random

import pytest

from support import (
    faithful_narrative,
    ground_truth_claims,
    make_random_artifact,
    narrative_from_claims,
)
from xnarr.generation import TagKind
from xnarr.verification import (
    FaithfulnessConfig,
    VerificationReport,
    check_completeness,
    check_faithfulness,
    parse_claims,
    scan_untagged_numerals,
    verify_narrative,
)


class TestParseClaims:
    def test_two_tags(self):
        claims, malformed = parse_claims("{{CUR|glucose|148}} and {{TGT|glucose|120}}")
        assert malformed == []
        assert [(c.kind, c.feature, c.value) for c in claims] == [
            (TagKind.CUR, "glucose", 148.0),
            (TagKind.TGT, "glucose", 120.0),
        ]

    def test_arity_violation_is_malformed(self):
        claims, malformed = parse_claims("{{CUR|glucose}}")
        assert claims == []
        assert malformed == [(0, 15)]

    def test_empty_input(self):
        assert parse_claims("") == ([], [])

    def test_unknown_kind_is_malformed(self):
        claims, malformed = parse_claims("{{FOO|x|1}}")
        assert claims == []
        assert len(malformed) == 1

    def test_spans_delimit_tags(self):
        text = "ab {{IMP|bmi|0.12}} cd"
        claims, _ = parse_claims(text)
        start, end = claims[0].span
        assert text[start:end] == "{{IMP|bmi|0.12}}"

    def test_round_trip_from_ground_truth(self, sample_artifact):
        claims, malformed = parse_claims(faithful_narrative(sample_artifact))
        assert malformed == []
        assert [(c.kind, c.feature, c.value) for c in claims] == ground_truth_claims(
            sample_artifact
        )


class TestFaithfulness:
    def test_within_tolerance_passes(self, sample_artifact):
        claims, _ = parse_claims("{{IMP|bmi|0.15}}")
        report = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert report.numeric_mismatches == []

    def test_beyond_tolerance_fails(self, sample_artifact):
        claims, _ = parse_claims("{{IMP|bmi|0.20}}")
        report = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert len(report.numeric_mismatches) == 1
        mismatch = report.numeric_mismatches[0]
        assert mismatch.ground_truth == 0.12
        assert mismatch.abs_error == pytest.approx(0.08)

    def test_unknown_feature(self, sample_artifact):
        claims, _ = parse_claims("{{CUR|cholesterol|50}}")
        report = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert [c.feature for c in report.unknown_references] == ["cholesterol"]

    def test_feature_without_counterfactual_slot(self, sample_artifact):
        # age exists but has no counterfactual entry, so TGT cannot resolve
        claims, _ = parse_claims("{{TGT|age|40}}")
        report = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert [c.feature for c in report.unknown_references] == ["age"]

    def test_probability_kinds(self, sample_artifact):
        text = "{{PRB|_|0.81}} then {{PRB|glucose|-0.23}}"
        claims, _ = parse_claims(text)
        report = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert report.numeric_mismatches == []
        assert report.unknown_references == []

    def test_per_kind_tolerance_override(self, sample_artifact):
        claims, _ = parse_claims("{{CUR|glucose|150}}")  # off by 2 natural units
        strict = check_faithfulness(claims, sample_artifact, FaithfulnessConfig())
        assert len(strict.numeric_mismatches) == 1
        wide = check_faithfulness(
            claims,
            sample_artifact,
            FaithfulnessConfig(per_kind_tolerance={TagKind.CUR: 5.0}),
        )
        assert wide.numeric_mismatches == []


class TestCompleteness:
    def test_missing_feature(self, sample_artifact):
        claims, _ = parse_claims("{{TGT|glucose|120}}")
        report = check_completeness(claims, sample_artifact)
        assert report.missing_features == ["bmi"]

    def test_any_tag_kind_counts(self, sample_artifact):
        claims, _ = parse_claims("{{TGT|glucose|120}} {{IMP|bmi|0.12}}")
        report = check_completeness(claims, sample_artifact)
        assert report.missing_features == []

    def test_vacuous_without_counterfactual(self, sample_artifact):
        from dataclasses import replace

        bare = replace(sample_artifact, counterfactual=())
        report = check_completeness([], bare)
        assert report.missing_features == []
        assert report.passed_completeness

    def test_equals_brute_force_set_difference(self):
        rng = random.Random(29)
        for _ in range(200):
            artifact = make_random_artifact(rng)
            pool = ground_truth_claims(artifact)
            chosen = [pool[i] for i in range(len(pool)) if rng.random() < 0.5]
            claims, _ = parse_claims(narrative_from_claims(chosen))
            report = check_completeness(claims, artifact)
            referenced = {feature for _, feature, _ in chosen}
            expected = [
                c.feature
                for c in artifact.counterfactual
                if c.feature not in referenced
            ]
            assert report.missing_features == expected


class TestUntaggedNumerals:
    def test_bare_number_flagged(self):
        claims, _ = parse_claims("risk is 0.81")
        spans = scan_untagged_numerals("risk is 0.81", claims)
        assert spans == [(8, 12)]

    def test_tagged_number_not_flagged(self):
        text = "risk is {{PRB|_|0.81}}"
        claims, _ = parse_claims(text)
        assert scan_untagged_numerals(text, claims) == []

    def test_list_marker_exempt(self):
        text = "1. First point\n2. Second point"
        assert scan_untagged_numerals(text, []) == []

    def test_decimal_at_line_start_not_exempt(self):
        text = "1.5 units is the dose"
        assert scan_untagged_numerals(text, []) == [(0, 3)]

    def test_digit_inside_identifier_not_flagged(self):
        assert scan_untagged_numerals("feature bp2 went up", []) == []

    def test_number_inside_malformed_tag_flagged(self):
        text = "{{CUR|glucose|148"
        claims, malformed = parse_claims(text)
        assert claims == [] and malformed == []
        assert scan_untagged_numerals(text, claims) == [(14, 17)]


class TestVerifyNarrative:
    def test_faithful_narrative_passes_everything(self, sample_artifact):
        report = verify_narrative(faithful_narrative(sample_artifact), sample_artifact)
        assert report.passed_faithfulness
        assert report.passed_completeness
        assert report.passed_all

    def test_strict_mode_fails_on_bare_number(self, sample_artifact):
        text = faithful_narrative(sample_artifact) + " Overall score 7 out of ten."
        strict = verify_narrative(text, sample_artifact, FaithfulnessConfig())
        assert not strict.passed_faithfulness
        relaxed = verify_narrative(
            text, sample_artifact, FaithfulnessConfig(strict_untagged_numerals=False)
        )
        assert relaxed.passed_faithfulness

    def test_malformed_tag_recorded(self, sample_artifact):
        text = faithful_narrative(sample_artifact) + " {{CUR|glucose}}"
        report = verify_narrative(text, sample_artifact)
        assert len(report.malformed_tags) == 1

    def test_deterministic_byte_identical(self, sample_artifact):
        text = faithful_narrative(sample_artifact) + " and 3 extra {{IMP|bmi|0.9}}"
        a = verify_narrative(text, sample_artifact)
        b = verify_narrative(text, sample_artifact)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_dict_round_trip(self, sample_artifact):
        text = faithful_narrative(sample_artifact) + " and 3 extra {{IMP|bmi|0.9}} {{oops}}"
        report = verify_narrative(text, sample_artifact)
        restored = VerificationReport.from_dict(report.to_dict())
        assert restored.to_dict() == report.to_dict()


class TestFaultInjection:
    def test_soundness_near_tolerance(self):
        """Perturbing one tag by tolerance+0.01 must always reject; by
        tolerance-0.01 must always accept."""
        rng = random.Random(41)
        cfg = FaithfulnessConfig()
        for _ in range(150):
            artifact = make_random_artifact(rng)
            claims = ground_truth_claims(artifact)
            index = rng.randrange(len(claims))
            sign = rng.choice((-1.0, 1.0))

            for epsilon, should_pass in ((0.04, True), (0.06, False)):
                perturbed = list(claims)
                kind, feature, value = perturbed[index]
                perturbed[index] = (kind, feature, value + sign * epsilon)
                report = verify_narrative(
                    narrative_from_claims(perturbed), artifact, cfg
                )
                assert report.passed_faithfulness is should_pass, (
                    artifact.instance_id,
                    perturbed[index],
                    report.numeric_mismatches,
                )
