/** Bundled sample artifacts for the picker (same as the service's
 * samples/ directory). */

import type { ArtifactPayload } from "./types.js";

export const SAMPLE_ARTIFACTS: Record<string, ArtifactPayload> = {
  "diabetes risk (healthcare)": {
    instance_id: "patient_0042",
    domain: "healthcare",
    features: [
      { name: "glucose", value: 148.0, unit: "mg/dL", kind: "numeric" },
      { name: "bmi", value: 33.6, unit: null, kind: "numeric" },
      { name: "age", value: 50.0, unit: "years", kind: "numeric" },
      { name: "pressure", value: 72.0, unit: "mm Hg", kind: "numeric" },
    ],
    prediction: { label: "diabetic", probability: 0.81 },
    attributions: [
      { feature: "glucose", impact: 0.3 },
      { feature: "bmi", impact: 0.12 },
      { feature: "age", impact: 0.05 },
      { feature: "pressure", impact: -0.02 },
    ],
    counterfactual: [
      { feature: "glucose", target_value: 120.0, probability_shift: -0.23 },
      { feature: "bmi", target_value: 27.5, probability_shift: -0.11 },
    ],
    model_id: "mlp_diabetes_v1",
  },
  "loan default (finance)": {
    instance_id: "applicant_1877",
    domain: "finance",
    features: [
      { name: "monthly_income", value: 2800.0, unit: "USD", kind: "numeric" },
      { name: "debt_ratio", value: 0.62, unit: null, kind: "numeric" },
      { name: "credit_years", value: 3.0, unit: "years", kind: "numeric" },
      { name: "open_accounts", value: 9.0, unit: null, kind: "numeric" },
    ],
    prediction: { label: "default_risk", probability: 0.67 },
    attributions: [
      { feature: "debt_ratio", impact: 0.21 },
      { feature: "monthly_income", impact: 0.18 },
      { feature: "credit_years", impact: 0.07 },
      { feature: "open_accounts", impact: -0.03 },
    ],
    counterfactual: [
      { feature: "debt_ratio", target_value: 0.35, probability_shift: -0.22 },
      { feature: "monthly_income", target_value: 3600.0, probability_shift: -0.12 },
    ],
    model_id: "mlp_credit_v1",
  },
};

export const PERSONAS = [
  "patient",
  "clinician",
  "loan_applicant",
  "bank_officer",
] as const;
