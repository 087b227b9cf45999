/** Payload shapes mirrored from the project's JSON endpoints. */

export interface DocumentSummary {
  id: string;
  group: string;
  word_count: number;
}

export interface DocumentFull extends DocumentSummary {
  text: string;
}

export interface InitialCode {
  code_name: string;
  description: string;
  quote: string;
  source_doc: string;
  index: number;
}

export interface CodeSet {
  source_doc: string;
  codes: InitialCode[];
  warnings: string[];
}

export interface QuoteRef {
  quote: string;
  source_doc: string;
}

export interface UniqueCode {
  uid: string;
  code_name: string;
  description: string;
  quotes: QuoteRef[];
  members: string[];
  merge_rationales: string[];
}

export interface MergeDecision {
  id: number;
  target: string;
  matched: string;
  verdict: boolean;
  round: number;
  rationale: string | null;
  review: string | null;
}

export interface SaturationReport {
  total_codes: number;
  unique_codes: number;
  ratio: number;
  rounds: number;
  per_round_sizes: number[];
}

export interface Theme {
  id: string;
  name: string;
  description: string;
  code_indices: number[];
}

export interface ThemeSet {
  themes: Theme[];
  unassigned: number[];
  warnings: string[];
}

export interface ParentTheme {
  name: string;
  description: string;
  subtheme_indices: number[];
}

export interface Hierarchy {
  subthemes: Theme[];
  parents: ParentTheme[];
  flags: string[];
}

export type Verdict = "verbatim" | "modified_ellipsis" | "modified_edit" | "fabricated";

export interface AuditRecord {
  code_ref: string;
  quote: string;
  verdict: Verdict;
  matched_doc: string | null;
  evidence: {
    spans: [number, number][];
    fragments: string[];
    score: number | null;
  };
}

export interface AuditArtifact {
  seed: number;
  sample: number | null;
  records: AuditRecord[];
  summary: {
    counts: Record<string, number>;
    percentages: Record<string, number>;
    sample_size: number;
  };
}

export type StageStatus = "pending" | "done" | "failed" | "stale";

export interface ProjectState {
  stages: Record<string, StageStatus>;
  config: Record<string, unknown>;
}

export interface ReviewResult {
  stale: string[];
  trail_index: number;
  [key: string]: unknown;
}
