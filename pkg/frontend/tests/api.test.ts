import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { MockService, makePair } from "./mock_service.js";

let service: MockService;
let client: ApiClient;

beforeEach(() => {
  service = new MockService([makePair(0), makePair(1)], ["alice", "bob"]);
  vi.stubGlobal("fetch", service.fetch);
  client = new ApiClient();
});

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("ApiClient", () => {
  it("fetches the next pending pair with both texts", async () => {
    const next = await client.nextPair("alice");
    expect(next.remaining).toBe(2);
    expect(next.pair?.pair_id).toBe("p000");
    expect(next.pair?.bench_text).toBe("left text 0");
    expect(next.pair?.corpus_text).toBe("right text 0");
  });

  it("url-encodes the annotator id", async () => {
    await client.nextPair("a b/c");
    expect(service.exchanges[0].path).toContain("annotator=a%20b%2Fc");
  });

  it("posts labels and returns the stored record", async () => {
    const result = await client.submitLabel("p000", "alice", "exact_copy");
    expect(result.record).toMatchObject({
      pair_id: "p000", annotator: "alice", label: "exact_copy",
    });
    expect(result.pair_status).toBe("flagged");
  });

  it("surfaces duplicate submissions as 409 with the existing record", async () => {
    await client.submitLabel("p000", "alice", "exact_copy");
    const err = await client.submitLabel("p000", "alice", "not_related")
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.existing?.label).toBe("exact_copy");
  });

  it("surfaces unassigned-annotator rejections verbatim", async () => {
    const err = await client.submitLabel("p000", "ghost", "exact_copy")
      .catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.message).toContain("not assigned");
  });

  it("adjudication rejections carry the service detail", async () => {
    const err = await client.adjudicate("p000", "judge", "exact_copy")
      .catch((e) => e);
    expect(err.status).toBe(409);
    expect(err.message).toContain("not awaiting adjudication");
  });

  it("parses the labels export stream", async () => {
    await client.submitLabel("p000", "alice", "exact_copy");
    await client.submitLabel("p000", "bob", "not_related");
    const rows = await client.exportLabels();
    expect(rows).toHaveLength(2);
    expect(rows[1]).toMatchObject({ annotator: "bob", label: "not_related" });
  });

  it("retries idempotent GETs once on network failure", async () => {
    let calls = 0;
    vi.stubGlobal("fetch", async (input: RequestInfo | URL, init?: RequestInit) => {
      calls += 1;
      if (calls === 1) throw new TypeError("network down");
      return service.fetch(input, init);
    });
    const progress = await new ApiClient().progress();
    expect(calls).toBe(2);
    expect(progress.pairs_total).toBe(2);
  });

  it("does not retry mutations", async () => {
    let calls = 0;
    vi.stubGlobal("fetch", async () => {
      calls += 1;
      throw new TypeError("network down");
    });
    await expect(new ApiClient().submitLabel("p000", "alice", "exact_copy"))
      .rejects.toThrow("network down");
    expect(calls).toBe(1);
  });
});
