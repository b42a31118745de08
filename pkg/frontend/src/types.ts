/** Shared types mirroring the annotation service API. */

export type AnnotationLabel =
  | "not_related"
  | "related_not_duplicate"
  | "semantically_equivalent"
  | "exact_copy";

/** Keyboard order: key "1" posts LABELS[0], ... key "4" posts LABELS[3]. */
export const LABELS: AnnotationLabel[] = [
  "not_related",
  "related_not_duplicate",
  "semantically_equivalent",
  "exact_copy",
];

export const LABEL_TITLES: Record<AnnotationLabel, string> = {
  not_related: "Not related",
  related_not_duplicate: "Related, not duplicate",
  semantically_equivalent: "Semantically equivalent",
  exact_copy: "Exact copy",
};

export interface PairView {
  pair_id: string;
  dataset: string;
  bench_id: string;
  corpus_id: string;
  repo_path: string | null;
  est_j: number;
  exact_j: number;
  suggested: string | null;
  bench_text: string;
  corpus_text: string;
  status: string;
}

export interface NextPairResponse {
  pair: PairView | null;
  remaining: number;
}

export interface LabelRecord {
  pair_id: string;
  annotator: string;
  label: AnnotationLabel;
  ts: string;
}

export interface SubmitResponse {
  record: LabelRecord;
  pair_status: string;
}

export interface ConflictView extends PairView {
  labels: LabelRecord[];
}

export interface AdjudicationResponse {
  final: {
    pair_id: string;
    final_label: AnnotationLabel;
    resolved_by: string;
    adjudicator_id: string | null;
  };
}

export interface Progress {
  pairs_total: number;
  fully_labeled: number;
  labels_submitted: number;
  conflicts_open: number;
  resolved_agreement: number;
  resolved_third_annotator: number;
  duplicate_pairs: number;
  kappa_4class: number | null;
  kappa_binary: number | null;
  per_annotator: Record<string, { assigned: number; submitted: number }>;
}
