/** Payload shapes of the session REST API, mirrored verbatim. */

export const DIMENSIONS = [
  "technicality",
  "verbosity",
  "depth",
  "actionability",
] as const;

export type Dimension = (typeof DIMENSIONS)[number];

export type PreferenceVector = Record<Dimension, number>;

export interface NarrativePayload {
  tagged_text: string;
  display_text: string;
  attempt_index: number;
  preference_used: PreferenceVector;
  evidence_citations: string[];
  validated: boolean;
}

export interface ClaimPayload {
  kind: string;
  feature: string;
  value: number;
  span: [number, number];
}

export interface MismatchPayload {
  claim: ClaimPayload;
  ground_truth: number;
  abs_error: number;
}

export interface ReportPayload {
  numeric_mismatches: MismatchPayload[];
  unknown_references: ClaimPayload[];
  missing_features: string[];
  untagged_numerals: [number, number][];
  malformed_tags: [number, number][];
  strict_untagged: boolean;
  style_scores: PreferenceVector | null;
  style_deviations: number[] | null;
  failing_style_dims: string[];
  passed_faithfulness: boolean;
  passed_completeness: boolean;
  passed_style: boolean;
}

export interface SessionPayload {
  session_id: string;
  status: "active" | "confirmed" | "failed";
  mode: string;
  rag_enabled: boolean;
  persona: string;
  s: PreferenceVector;
  target: PreferenceVector;
  attempts: number;
  turns: number;
  narrative: NarrativePayload | null;
  report: ReportPayload | null;
}

export interface TurnPayload {
  feedback: string | null;
  s_before: PreferenceVector;
  s_after: PreferenceVector;
  final_index: number;
  success: boolean;
  attempts: { candidate: { display_text: string } }[];
}

export interface HistoryPayload {
  session_id: string;
  turns: TurnPayload[];
  feedback_history: {
    s_before: PreferenceVector;
    delta: PreferenceVector;
    raw_feedback: string;
    s_after: PreferenceVector;
  }[];
}

export interface ProfilePayload {
  profile: {
    user_id: string;
    session_id: string;
    persona: string;
    preference: PreferenceVector;
  };
  status: string;
}

export interface ArtifactPayload {
  instance_id: string;
  domain: string;
  features: { name: string; value: number; unit: string | null; kind: string }[];
  prediction: { label: string; probability: number };
  attributions: { feature: string; impact: number }[];
  counterfactual: {
    feature: string;
    target_value: number;
    probability_shift: number;
  }[];
  model_id: string;
}

export interface StartRequest {
  artifact: ArtifactPayload;
  persona: string | object;
  mode?: string;
  rag?: boolean | null;
}
