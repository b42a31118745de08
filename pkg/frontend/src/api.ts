/**
 * Typed client for the annotation service.
 *
 * The UI goes through this module for every byte of state it displays;
 * nothing is computed client-side. GET requests retry once on transient
 * network failure (they are idempotent); mutations never auto-retry.
 */

import type {
  AdjudicationResponse,
  AnnotationLabel,
  ConflictView,
  LabelRecord,
  NextPairResponse,
  Progress,
  SubmitResponse,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  /** Populated on duplicate-submission rejections (HTTP 409). */
  readonly existing: LabelRecord | null;

  constructor(status: number, message: string, existing: LabelRecord | null = null) {
    super(message);
    this.status = status;
    this.existing = existing;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `${response.status} ${response.statusText}`;
  let existing: LabelRecord | null = null;
  try {
    const body = await response.json();
    if (typeof body.detail === "string") message = body.detail;
    else if (typeof body.error === "string") message = body.error;
    if (body.existing) existing = body.existing as LabelRecord;
  } catch {
    /* non-JSON error body; keep the status line */
  }
  return new ApiError(response.status, message, existing);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async get<T>(path: string, retries = 1): Promise<T> {
    for (;;) {
      try {
        const response = await fetch(this.baseUrl + path);
        if (!response.ok) throw await parseError(response);
        return (await response.json()) as T;
      } catch (err) {
        if (err instanceof ApiError || retries <= 0) throw err;
        retries -= 1;
      }
    }
  }

  private async post<T>(path: string, payload: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  nextPair(annotator: string): Promise<NextPairResponse> {
    return this.get(`/api/pairs/next?annotator=${encodeURIComponent(annotator)}`);
  }

  submitLabel(pairId: string, annotator: string,
              label: AnnotationLabel): Promise<SubmitResponse> {
    return this.post("/api/labels", { pair_id: pairId, annotator, label });
  }

  conflicts(): Promise<{ conflicts: ConflictView[] }> {
    return this.get("/api/conflicts");
  }

  adjudicate(pairId: string, adjudicator: string,
             label: AnnotationLabel): Promise<AdjudicationResponse> {
    return this.post("/api/adjudications",
                     { pair_id: pairId, adjudicator, label });
  }

  progress(): Promise<Progress> {
    return this.get("/api/progress");
  }

  async exportLabels(): Promise<LabelRecord[]> {
    const response = await fetch(this.baseUrl + "/api/labels/export");
    if (!response.ok) throw await parseError(response);
    const text = await response.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as LabelRecord);
  }
}
