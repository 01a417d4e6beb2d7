// Shared payload builders for tests: minimal but shape-complete API responses.

import type {
  AuditReportPayload,
  DisparityPayload,
  DisparityReductionPayload,
  EnhanceReportPayload,
  GridPayload,
  MetricsEnvelope,
  MetricsPayload,
  PromptEntryPayload,
  PromptListing,
  RecordPayload,
  ReportEnvelope,
  ReviewItemPayload,
  Verdict,
  WeakspotListing,
  WeakspotPayload,
} from "../src/types.js";

export function metricsPayload(overall = 95.0): MetricsPayload {
  return {
    overall_accuracy: overall,
    per_class_accuracy: { class_0: overall, class_1: overall },
    per_group_accuracy: { group: { a: overall, b: overall } },
    confusion: [
      [10, 0],
      [0, 10],
    ],
    class_labels: ["class_0", "class_1"],
  };
}

export function disparity(before = 6.08): DisparityPayload {
  return {
    attribute: "group",
    group_a: "a",
    group_b: "b",
    accuracy_a: 90.0,
    accuracy_b: 90.0 - before,
    disparity: before,
  };
}

export function reduction(
  before = 6.08,
  after = 1.38,
  value: number | null = 77.3,
): DisparityReductionPayload {
  return {
    attribute: "group",
    group_a: "a",
    group_b: "b",
    before,
    after,
    reduction: value,
  };
}

export function weakspot(id = "px-1", perplexity = 0.25): WeakspotPayload {
  return {
    pivotal_id: id,
    true_class: "class_0",
    predicted_class: "class_1",
    radius: 0.55,
    perplexity,
    neighbor_ids: ["n-1", "n-2", "n-3"],
  };
}

export function grid(counts: number[] = [4, 2]): GridPayload {
  return {
    rows: counts.map((count, index) => ({
      radius: 0.4 + index * 0.15,
      perplexity_threshold: 0.5,
      weakspot_count: count,
      pivotal_ids: [],
    })),
  };
}

export function auditReport(): AuditReportPayload {
  return {
    baseline_metrics: metricsPayload(),
    disparities: [disparity()],
    weakspots: [weakspot()],
    pair_summary: [
      {
        true_class: "class_0",
        predicted_class: "class_1",
        count: 1,
        pivotal_ids: ["px-1"],
      },
    ],
    grid: grid(),
    associations: [],
    shortlist: [],
    settings: {},
  };
}

export function enhanceReport(): EnhanceReportPayload {
  return {
    before_metrics: metricsPayload(95.0),
    after_metrics: metricsPayload(97.5),
    before_disparities: [disparity(6.08)],
    after_disparities: [disparity(1.38)],
    disparity_reductions: [reduction()],
    procurement: {
      planned: 10,
      fulfilled_batches: 10,
      failures: [],
      added_count: 200,
      per_channel: { synthetic: 200 },
      augmentation_fraction: 25.0,
      skipped_missing_caption: 0,
    },
    grid_before: grid([4, 2]),
    grid_after: grid([0, 0]),
    weakspot_count_before: 4,
    weakspot_count_after: 0,
    settings: {},
  };
}

export function reviewItem(
  objectLabel: string,
  predictedClass: string,
  support: number,
  meanRelevance: number,
  verdict: Verdict = "pending",
  evidenceIds: string[] = [],
): ReviewItemPayload {
  return {
    key: [objectLabel, predictedClass],
    association: {
      object_label: objectLabel,
      predicted_class: predictedClass,
      support,
      mean_relevance: meanRelevance,
      evidence_ids: evidenceIds,
    },
    verdict,
    history: [],
  };
}

export function record(id = "r-1", overrides: Partial<RecordPayload> = {}): RecordPayload {
  return {
    id,
    split: "test",
    true_class: "class_0",
    attributes: { group: "a" },
    caption: "a class 0 with a prop",
    provenance: "benchmark",
    ...overrides,
  };
}

export function listing(spots: WeakspotPayload[] = []): WeakspotListing {
  return {
    radius: 0.55,
    perplexity_threshold: 0.5,
    count: spots.length,
    weakspots: spots,
  };
}

export function promptEntry(
  text: string,
  targetClass = "class_1",
  tags: string[] = [],
  purpose = "mitigation",
): PromptEntryPayload {
  return { text, purpose, target_class: targetClass, pivotal_id: null, tags };
}

export function promptListing(entries: PromptEntryPayload[] = []): PromptListing {
  return { count: entries.length, skipped_missing_caption: 0, entries };
}

export function reportEnvelope(withEnhance = false): ReportEnvelope {
  return { audit: auditReport(), enhance: withEnhance ? enhanceReport() : null };
}

export function metricsEnvelope(withAfter = false): MetricsEnvelope {
  return {
    before: metricsPayload(95.0),
    before_disparities: [disparity()],
    after: withAfter ? metricsPayload(97.5) : null,
    after_disparities: withAfter ? [disparity(1.38)] : null,
    disparity_reductions: withAfter ? [reduction()] : null,
  };
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason?: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason?: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}
