// View state and actions. The store never invents numbers: everything it
// holds is the last successful API response, and a failed write rolls the
// optimistic change back before surfacing the error.

import { ApiError } from "./api.js";
import type {
  AssociationListing,
  EnhanceReportPayload,
  MetricsEnvelope,
  PromptListing,
  QueueSort,
  RecordPayload,
  ReportEnvelope,
  ReviewItemPayload,
  Verdict,
  WeakspotDetail,
  WeakspotFilters,
  WeakspotListing,
  WeakspotPayload,
} from "./types.js";

// Structural view of ReviewApi so tests can hand in plain-object fakes.
export interface ApiLike {
  report(): Promise<ReportEnvelope>;
  weakspots(filters?: WeakspotFilters): Promise<WeakspotListing>;
  weakspot(pivotalId: string): Promise<WeakspotDetail>;
  associations(verdict?: Verdict): Promise<AssociationListing>;
  setVerdict(
    objectLabel: string,
    predictedClass: string,
    verdict: Verdict,
    reviewer: string,
  ): Promise<ReviewItemPayload>;
  prompts(): Promise<PromptListing>;
  enhance(): Promise<EnhanceReportPayload>;
  metrics(): Promise<MetricsEnvelope>;
}

export interface EvidenceEntry {
  id: string;
  weakspot: WeakspotPayload | null;
  record: RecordPayload | null;
}

export interface Banner {
  message: string;
  canRetry: boolean;
}

export interface ViewState {
  phase: "loading" | "ready" | "unavailable";
  report: ReportEnvelope | null;
  queue: ReviewItemPayload[];
  sort: QueueSort;
  selected: ReviewItemPayload | null;
  evidence: EvidenceEntry[];
  evidenceLoading: boolean;
  weakspotListing: WeakspotListing | null;
  filters: WeakspotFilters;
  gridView: "before" | "after";
  prompts: PromptListing | null;
  metrics: MetricsEnvelope | null;
  reviewer: string;
  banner: Banner | null;
  busy: { verdict: boolean; enhance: boolean };
}

export function initialState(): ViewState {
  return {
    phase: "loading",
    report: null,
    queue: [],
    sort: "support",
    selected: null,
    evidence: [],
    evidenceLoading: false,
    weakspotListing: null,
    filters: {},
    gridView: "before",
    prompts: null,
    metrics: null,
    reviewer: "",
    banner: null,
    busy: { verdict: false, enhance: false },
  };
}

// Triage order: undecided rows first, then what was flagged, then cleared.
const VERDICT_RANK: Record<Verdict, number> = { pending: 0, spurious: 1, benign: 2 };

function keyCompare(a: ReviewItemPayload, b: ReviewItemPayload): number {
  return (
    a.key[0].localeCompare(b.key[0]) || a.key[1].localeCompare(b.key[1])
  );
}

export function sortQueue(
  items: readonly ReviewItemPayload[],
  sort: QueueSort,
): ReviewItemPayload[] {
  const copy = [...items];
  switch (sort) {
    case "support":
      copy.sort(
        (a, b) => b.association.support - a.association.support || keyCompare(a, b),
      );
      break;
    case "relevance":
      copy.sort(
        (a, b) =>
          b.association.mean_relevance - a.association.mean_relevance ||
          keyCompare(a, b),
      );
      break;
    case "verdict":
      copy.sort(
        (a, b) => VERDICT_RANK[a.verdict] - VERDICT_RANK[b.verdict] || keyCompare(a, b),
      );
      break;
  }
  return copy;
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return err.status > 0 ? `${err.message} (HTTP ${err.status})` : err.message;
  }
  return String(err);
}

function sameKey(item: ReviewItemPayload, objectLabel: string, predictedClass: string): boolean {
  return item.key[0] === objectLabel && item.key[1] === predictedClass;
}

export class ReviewStore {
  private state: ViewState = initialState();
  private readonly listeners = new Set<() => void>();
  private lastFailed: (() => Promise<void>) | null = null;
  private selectionSeq = 0;

  constructor(private readonly api: ApiLike) {}

  getState(): ViewState {
    return this.state;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private patch(changes: Partial<ViewState>): void {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) listener();
  }

  async initialize(): Promise<void> {
    this.patch({ phase: "loading", banner: null });
    try {
      const [report, associations, prompts, metrics, weakspotListing] =
        await Promise.all([
          this.api.report(),
          this.api.associations(),
          this.api.prompts(),
          this.api.metrics(),
          this.api.weakspots({}),
        ]);
      this.patch({
        phase: "ready",
        report,
        queue: sortQueue(associations.items, this.state.sort),
        prompts,
        metrics,
        weakspotListing,
        banner: null,
      });
    } catch (err) {
      this.lastFailed = () => this.initialize();
      this.patch({
        phase: "unavailable",
        banner: { message: describe(err), canRetry: true },
      });
    }
  }

  setSort(sort: QueueSort): void {
    this.patch({ sort, queue: sortQueue(this.state.queue, sort) });
  }

  setReviewer(reviewer: string): void {
    this.patch({ reviewer });
  }

  setGridView(view: "before" | "after"): void {
    this.patch({ gridView: view });
  }

  async select(objectLabel: string, predictedClass: string): Promise<void> {
    const item =
      this.state.queue.find((i) => sameKey(i, objectLabel, predictedClass)) ?? null;
    const token = ++this.selectionSeq;
    this.patch({ selected: item, evidence: [], evidenceLoading: item !== null });
    if (!item) return;
    const evidence: EvidenceEntry[] = await Promise.all(
      item.association.evidence_ids.map(async (id) => {
        try {
          const detail = await this.api.weakspot(id);
          return { id, weakspot: detail.weakspot, record: detail.record };
        } catch {
          // evidence that is not itself a weakspot pivot has no detail view
          return { id, weakspot: null, record: null };
        }
      }),
    );
    if (token === this.selectionSeq) {
      this.patch({ evidence, evidenceLoading: false });
    }
  }

  async applyVerdict(
    objectLabel: string,
    predictedClass: string,
    verdict: Verdict,
  ): Promise<void> {
    const reviewer = this.state.reviewer.trim();
    if (!reviewer) {
      this.patch({
        banner: {
          message: "enter a reviewer name before recording verdicts",
          canRetry: false,
        },
      });
      return;
    }
    const previous = this.state.queue.find((i) =>
      sameKey(i, objectLabel, predictedClass),
    );
    if (!previous) return;

    const optimistic: ReviewItemPayload = { ...previous, verdict };
    const swap = (items: ReviewItemPayload[], next: ReviewItemPayload) =>
      items.map((i) => (sameKey(i, objectLabel, predictedClass) ? next : i));
    this.patch({
      queue: swap(this.state.queue, optimistic),
      selected:
        this.state.selected && sameKey(this.state.selected, objectLabel, predictedClass)
          ? optimistic
          : this.state.selected,
      busy: { ...this.state.busy, verdict: true },
      banner: null,
    });

    let confirmed: ReviewItemPayload;
    try {
      confirmed = await this.api.setVerdict(
        objectLabel,
        predictedClass,
        verdict,
        reviewer,
      );
    } catch (err) {
      // roll back to the pre-click row; the service never saw the change
      this.lastFailed = () => this.applyVerdict(objectLabel, predictedClass, verdict);
      this.patch({
        queue: swap(this.state.queue, previous),
        selected:
          this.state.selected &&
          sameKey(this.state.selected, objectLabel, predictedClass)
            ? previous
            : this.state.selected,
        busy: { ...this.state.busy, verdict: false },
        banner: { message: describe(err), canRetry: true },
      });
      return;
    }

    this.patch({
      queue: sortQueue(swap(this.state.queue, confirmed), this.state.sort),
      selected:
        this.state.selected && sameKey(this.state.selected, objectLabel, predictedClass)
          ? confirmed
          : this.state.selected,
      busy: { ...this.state.busy, verdict: false },
    });
    // the verdict persisted; a failed preview refresh must not undo it
    await this.refreshPrompts();
  }

  async refreshPrompts(): Promise<void> {
    try {
      const prompts = await this.api.prompts();
      this.patch({ prompts });
    } catch (err) {
      this.lastFailed = () => this.refreshPrompts();
      this.patch({
        banner: {
          message: `prompt preview refresh failed: ${describe(err)}`,
          canRetry: true,
        },
      });
    }
  }

  async applyWeakspotFilters(filters: WeakspotFilters): Promise<void> {
    this.patch({ filters });
    try {
      const weakspotListing = await this.api.weakspots(filters);
      this.patch({ weakspotListing, banner: null });
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // unswept (d, tperp) pair: an empty result, not a retryable fault
        this.patch({
          weakspotListing: null,
          banner: { message: describe(err), canRetry: false },
        });
      } else {
        this.lastFailed = () => this.applyWeakspotFilters(filters);
        this.patch({ banner: { message: describe(err), canRetry: true } });
      }
    }
  }

  async runEnhance(): Promise<void> {
    this.patch({ busy: { ...this.state.busy, enhance: true }, banner: null });
    try {
      await this.api.enhance();
      const [report, metrics, prompts] = await Promise.all([
        this.api.report(),
        this.api.metrics(),
        this.api.prompts(),
      ]);
      this.patch({
        report,
        metrics,
        prompts,
        busy: { ...this.state.busy, enhance: false },
      });
    } catch (err) {
      this.lastFailed = () => this.runEnhance();
      this.patch({
        busy: { ...this.state.busy, enhance: false },
        banner: { message: describe(err), canRetry: true },
      });
    }
  }

  async retry(): Promise<void> {
    const action = this.lastFailed;
    if (!action) return;
    this.lastFailed = null;
    this.patch({ banner: null });
    await action();
  }
}
