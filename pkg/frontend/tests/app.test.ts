// @vitest-environment happy-dom
import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { App } from "../src/app.js";
import { ApiClient } from "../src/api.js";
import { MockService, makePair } from "./mock_service.js";

let service: MockService;
let app: App;
let root: HTMLElement;

function progressShown(): string {
  return root.querySelector(".progress-text")?.textContent ?? "";
}

function lastProgressResponse(): any {
  const hits = service.exchanges.filter((e) => e.path === "/api/progress");
  return hits[hits.length - 1]?.body;
}

beforeEach(async () => {
  service = new MockService(
    [makePair(0, { suggested: "exact_copy_hint", corpus_text: "left text 0" }),
     makePair(1), makePair(2)],
    ["alice", "bob"]);
  vi.stubGlobal("fetch", service.fetch);
  document.body.innerHTML = '<div id="app"></div>';
  root = document.getElementById("app") as HTMLElement;
  localStorage.setItem("detectleak.annotator", "alice");
  app = new App(root, new ApiClient());
  await app.start();
});

afterEach(() => {
  app.stop();
  vi.unstubAllGlobals();
  localStorage.clear();
});

describe("annotation flow", () => {
  it("renders the pending pair with byte-faithful texts", () => {
    const panes = root.querySelectorAll(".pane-body");
    expect(panes[0].textContent).toBe("left text 0");
    expect(panes[1].textContent).toBe("left text 0");
    expect(root.textContent).toContain("texts byte-identical");
  });

  it("shows four buttons mapped one-to-one onto the labels", () => {
    const buttons = [...root.querySelectorAll(".label-button")];
    expect(buttons.map((b) => (b as HTMLElement).dataset.label)).toEqual([
      "not_related", "related_not_duplicate",
      "semantically_equivalent", "exact_copy"]);
  });

  it("pressing key 4 posts exact_copy and advances", async () => {
    document.dispatchEvent(new KeyboardEvent("keydown", { key: "4" }));
    await vi.waitFor(() => {
      const posts = service.exchanges.filter(
        (e) => e.method === "POST" && e.path === "/api/labels");
      expect(posts).toHaveLength(1);
    });
    const pair = service.pairs.get("p000")!;
    expect(pair.records.get("alice")?.label).toBe("exact_copy");
    await vi.waitFor(() => {
      expect(root.querySelector(".pane-body")?.textContent)
        .toBe("left text 1");
    });
  });

  it("clicking a button submits that label", async () => {
    const button = root.querySelector(
      '[data-label="semantically_equivalent"]') as HTMLElement;
    button.click();
    await vi.waitFor(() => {
      expect(service.pairs.get("p000")!.records.get("alice")?.label)
        .toBe("semantically_equivalent");
    });
  });

  it("displayed progress equals the service response, never local math", async () => {
    await app.submit("exact_copy");
    const body = lastProgressResponse();
    expect(progressShown()).toContain(
      `${body.labels_submitted}/${body.pairs_total * 2} labels`);
    expect(progressShown()).toContain(`${body.conflicts_open} conflicts open`);
    expect(progressShown()).toContain(
      `${body.duplicate_pairs} duplicates confirmed`);
  });

  it("rejection surfaces the service message without losing the pair", async () => {
    service.pairs.get("p000")!.records.set("alice", {
      pair_id: "p000", annotator: "alice", label: "exact_copy", ts: "t" });
    await app.submit("not_related");
    expect(root.querySelector(".error")?.textContent)
      .toContain("already labeled");
    expect(root.querySelector(".pane-body")?.textContent).toBe("left text 0");
  });

  it("shows the empty-queue state after the last pair", async () => {
    for (let i = 0; i < 3; i++) await app.submit("exact_copy");
    expect(root.textContent).toContain("Queue empty");
  });
});

describe("adjudication flow", () => {
  async function plantConflict() {
    service.handle("POST", "/api/labels",
                   { pair_id: "p001", annotator: "alice",
                     label: "semantically_equivalent" });
    service.handle("POST", "/api/labels",
                   { pair_id: "p001", annotator: "bob",
                     label: "related_not_duplicate" });
    localStorage.setItem("detectleak.annotator", "carol");
    await app.switchView("conflicts");
  }

  it("lists the conflicted pair with both prior labels and texts", async () => {
    await plantConflict();
    const card = root.querySelector(".conflict-card")!;
    expect(card.textContent).toContain("alice: Semantically equivalent");
    expect(card.textContent).toContain("bob: Related, not duplicate");
    expect(card.querySelectorAll(".pane-body")[0].textContent)
      .toBe("left text 1");
  });

  it("adjudicating removes the pair from the queue", async () => {
    await plantConflict();
    await app.adjudicate("p001", "semantically_equivalent");
    expect(service.pairs.get("p001")!.adjudication?.label)
      .toBe("semantically_equivalent");
    expect(root.textContent).toContain("No conflicts to adjudicate");
  });

  it("identity violations are displayed inline", async () => {
    await plantConflict();
    localStorage.setItem("detectleak.annotator", "alice");
    await app.adjudicate("p001", "exact_copy");
    expect(root.querySelector(".error")?.textContent)
      .toContain("distinct from the two first-round annotators");
    expect(root.querySelector(".conflict-card")).not.toBeNull();
  });

  it("empty conflict queue shows the empty state", async () => {
    await app.switchView("conflicts");
    expect(root.textContent).toContain("No conflicts to adjudicate");
  });
});
