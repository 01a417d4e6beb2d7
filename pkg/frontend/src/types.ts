// Payload shapes of the weakaudit service API. Field names mirror the JSON
// exactly; every number the UI shows comes straight from one of these fields.

export type Verdict = "pending" | "spurious" | "benign";

export interface MetricsPayload {
  overall_accuracy: number;
  per_class_accuracy: Record<string, number>;
  per_group_accuracy: Record<string, Record<string, number>>;
  confusion: number[][];
  class_labels: string[];
}

export interface DisparityPayload {
  attribute: string;
  group_a: string;
  group_b: string;
  accuracy_a: number;
  accuracy_b: number;
  disparity: number;
}

export interface DisparityReductionPayload {
  attribute: string;
  group_a: string;
  group_b: string;
  before: number;
  after: number;
  reduction: number | null;
}

export interface WeakspotPayload {
  pivotal_id: string;
  true_class: string;
  predicted_class: string;
  radius: number;
  perplexity: number;
  neighbor_ids: string[];
}

export interface GridRowPayload {
  radius: number;
  perplexity_threshold: number;
  weakspot_count: number;
  pivotal_ids: string[];
  weakspots?: WeakspotPayload[];
}

export interface GridPayload {
  rows: GridRowPayload[];
}

export interface AssociationPayload {
  object_label: string;
  predicted_class: string;
  support: number;
  mean_relevance: number;
  evidence_ids: string[];
}

export interface HistoryEntryPayload {
  verdict: string;
  reviewer: string;
  timestamp: string;
}

export interface ReviewItemPayload {
  key: [string, string];
  association: AssociationPayload;
  verdict: Verdict;
  history: HistoryEntryPayload[];
}

export interface ShortlistEntryPayload {
  object_label: string;
  predicted_class: string;
  support: number;
  mean_relevance: number;
  verdict: string;
}

export interface PairSummaryPayload {
  true_class: string;
  predicted_class: string;
  count: number;
  pivotal_ids: string[];
}

export interface AuditReportPayload {
  baseline_metrics: MetricsPayload;
  disparities: DisparityPayload[];
  weakspots: WeakspotPayload[];
  pair_summary: PairSummaryPayload[];
  grid: GridPayload;
  associations: AssociationPayload[];
  shortlist: ShortlistEntryPayload[];
  settings: Record<string, unknown>;
}

export interface ProcurementSummaryPayload {
  planned: number;
  fulfilled_batches: number;
  failures: { request_id: string; error: string }[];
  added_count: number;
  per_channel: Record<string, number>;
  augmentation_fraction: number | null;
  skipped_missing_caption: number;
}

export interface EnhanceReportPayload {
  before_metrics: MetricsPayload;
  after_metrics: MetricsPayload;
  before_disparities: DisparityPayload[];
  after_disparities: DisparityPayload[];
  disparity_reductions: DisparityReductionPayload[];
  procurement: ProcurementSummaryPayload;
  grid_before: GridPayload;
  grid_after: GridPayload;
  weakspot_count_before: number;
  weakspot_count_after: number;
  settings: Record<string, unknown>;
}

export interface ReportEnvelope {
  audit: AuditReportPayload | null;
  enhance: EnhanceReportPayload | null;
}

export interface WeakspotListing {
  radius: number;
  perplexity_threshold: number;
  count: number;
  weakspots: WeakspotPayload[];
}

export interface ScenePayload {
  environment: string;
  venue?: string;
}

export interface ObjectTagPayload {
  label: string;
  relevance: number;
}

export interface RecordPayload {
  id: string;
  split: string;
  true_class: string;
  attributes: Record<string, string>;
  caption?: string;
  scene?: ScenePayload;
  objects?: ObjectTagPayload[];
  provenance: string;
}

export interface WeakspotDetail {
  weakspot: WeakspotPayload;
  record: RecordPayload | null;
}

export interface AssociationListing {
  count: number;
  items: ReviewItemPayload[];
}

export interface PromptEntryPayload {
  text: string;
  purpose: string;
  target_class: string;
  pivotal_id: string | null;
  tags: string[];
}

export interface PromptListing {
  count: number;
  skipped_missing_caption: number;
  entries: PromptEntryPayload[];
}

export interface MetricsEnvelope {
  before: MetricsPayload;
  before_disparities: DisparityPayload[];
  after: MetricsPayload | null;
  after_disparities: DisparityPayload[] | null;
  disparity_reductions: DisparityReductionPayload[] | null;
}

export type QueueSort = "support" | "relevance" | "verdict";

export interface WeakspotFilters {
  d?: number;
  tperp?: number;
  trueClass?: string;
  predictedClass?: string;
}
