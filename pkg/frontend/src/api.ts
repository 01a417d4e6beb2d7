// Typed client for the weakaudit service. The UI talks to the service only
// through this module; the base URL is its single piece of configuration.

import type {
  AssociationListing,
  EnhanceReportPayload,
  MetricsEnvelope,
  PromptListing,
  ReportEnvelope,
  ReviewItemPayload,
  Verdict,
  WeakspotDetail,
  WeakspotFilters,
  WeakspotListing,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

function errorMessage(payload: unknown, response: Response): string {
  if (payload && typeof payload === "object") {
    const body = payload as Record<string, unknown>;
    if (typeof body.error === "string") return body.error;
    if (typeof body.detail === "string") return body.detail;
    if (Array.isArray(body.detail)) {
      // FastAPI validation errors arrive as a list of {loc, msg, type}
      return body.detail
        .map((entry) =>
          entry && typeof entry === "object" && "msg" in entry
            ? String((entry as { msg: unknown }).msg)
            : JSON.stringify(entry),
        )
        .join("; ");
    }
  }
  return `${response.status} ${response.statusText}`.trim();
}

export class ReviewApi {
  private readonly fetchImpl: FetchLike;

  constructor(
    private readonly baseUrl: string = "",
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${String(err)}`);
    }
    const text = await response.text();
    let payload: unknown = null;
    if (text) {
      try {
        payload = JSON.parse(text);
      } catch {
        payload = null; // non-JSON body; fall back to the status line
      }
    }
    if (!response.ok) {
      throw new ApiError(response.status, errorMessage(payload, response));
    }
    return payload as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  report(): Promise<ReportEnvelope> {
    return this.request("/api/report");
  }

  weakspots(filters: WeakspotFilters = {}): Promise<WeakspotListing> {
    const query = new URLSearchParams();
    if (filters.d !== undefined) query.set("d", String(filters.d));
    if (filters.tperp !== undefined) query.set("tperp", String(filters.tperp));
    if (filters.trueClass) query.set("true_class", filters.trueClass);
    if (filters.predictedClass) query.set("predicted_class", filters.predictedClass);
    const suffix = query.toString();
    return this.request(`/api/weakspots${suffix ? `?${suffix}` : ""}`);
  }

  weakspot(pivotalId: string): Promise<WeakspotDetail> {
    return this.request(`/api/weakspots/${encodeURIComponent(pivotalId)}`);
  }

  associations(verdict?: Verdict): Promise<AssociationListing> {
    const suffix = verdict ? `?verdict=${encodeURIComponent(verdict)}` : "";
    return this.request(`/api/associations${suffix}`);
  }

  setVerdict(
    objectLabel: string,
    predictedClass: string,
    verdict: Verdict,
    reviewer: string,
  ): Promise<ReviewItemPayload> {
    const path =
      `/api/associations/${encodeURIComponent(objectLabel)}` +
      `/${encodeURIComponent(predictedClass)}/verdict`;
    return this.post(path, { verdict, reviewer });
  }

  prompts(): Promise<PromptListing> {
    return this.request("/api/prompts");
  }

  enhance(): Promise<EnhanceReportPayload> {
    return this.post("/api/enhance", {});
  }

  metrics(): Promise<MetricsEnvelope> {
    return this.request("/api/metrics/before-after");
  }
}
