/**
 * Annotation UI: label assigned pairs one by one, then work the conflict
 * queue as an adjudicator. Every count shown on screen comes from a
 * service response; the client computes nothing itself.
 */

import { ApiClient, ApiError } from "./api.js";
import { tokenDiff } from "./diff.js";
import { LABELS, LABEL_TITLES } from "./types.js";
import type { AnnotationLabel, ConflictView, PairView, Progress } from "./types.js";

const IDENTITY_KEY = "detectleak.annotator";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Render one text pane; concatenated segment text is byte-faithful. */
function renderPane(title: string, meta: string, own: string,
                    other: string): HTMLElement {
  const pane = el("div", "pane");
  pane.appendChild(el("div", "pane-title", title));
  pane.appendChild(el("div", "pane-meta", meta));
  const body = el("pre", "pane-body");
  const [segments] = tokenDiff(own, other);
  if (segments.length === 0) {
    body.appendChild(el("span", "muted", "(empty after normalization)"));
  }
  for (const segment of segments) {
    const span = el("span", segment.changed ? "tok-changed" : undefined);
    span.textContent = segment.text;
    body.appendChild(span);
  }
  const wrap = el("div", "pane-scroll collapsed");
  wrap.appendChild(body);
  pane.appendChild(wrap);
  const toggle = el("button", "link-button", "expand");
  toggle.addEventListener("click", () => {
    const collapsed = wrap.classList.toggle("collapsed");
    toggle.textContent = collapsed ? "expand" : "collapse";
  });
  pane.appendChild(toggle);
  return pane;
}

function pairPanes(pair: PairView): HTMLElement {
  const row = el("div", "panes");
  row.appendChild(renderPane(
    `benchmark · ${pair.dataset}`, pair.bench_id,
    pair.bench_text, pair.corpus_text));
  row.appendChild(renderPane(
    `corpus · ${pair.repo_path ?? "unknown repo"}`, pair.corpus_id,
    pair.corpus_text, pair.bench_text));
  return row;
}

export class App {
  private readonly client: ApiClient;
  private readonly root: HTMLElement;
  private view: "annotate" | "conflicts" = "annotate";
  private current: PairView | null = null;
  private remaining = 0;
  private progress: Progress | null = null;
  private conflictQueue: ConflictView[] = [];
  private errorText = "";
  private noticeText = "";
  private keyHandler = (event: KeyboardEvent) => this.onKey(event);

  constructor(root: HTMLElement, client: ApiClient) {
    this.root = root;
    this.client = client;
  }

  get annotator(): string {
    return localStorage.getItem(IDENTITY_KEY) ?? "";
  }

  set annotator(value: string) {
    localStorage.setItem(IDENTITY_KEY, value);
  }

  async start(): Promise<void> {
    document.addEventListener("keydown", this.keyHandler);
    await this.refresh();
  }

  stop(): void {
    document.removeEventListener("keydown", this.keyHandler);
  }

  /** Reload everything the active view displays from the service. */
  async refresh(): Promise<void> {
    try {
      this.progress = await this.client.progress();
      if (this.view === "annotate" && this.annotator) {
        const next = await this.client.nextPair(this.annotator);
        this.current = next.pair;
        this.remaining = next.remaining;
      } else if (this.view === "conflicts") {
        this.conflictQueue = (await this.client.conflicts()).conflicts;
      }
    } catch (err) {
      this.errorText = err instanceof Error ? err.message : String(err);
    }
    this.render();
  }

  private onKey(event: KeyboardEvent): void {
    if (this.view !== "annotate" || !this.current) return;
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "INPUT") return;
    const slot = Number.parseInt(event.key, 10);
    if (slot >= 1 && slot <= LABELS.length) {
      void this.submit(LABELS[slot - 1]);
    }
  }

  async submit(label: AnnotationLabel): Promise<void> {
    if (!this.current || !this.annotator) return;
    this.errorText = "";
    try {
      const result = await this.client.submitLabel(
        this.current.pair_id, this.annotator, label);
      this.noticeText =
        `recorded ${LABEL_TITLES[result.record.label]} for ` +
        `${result.record.pair_id} (pair now ${result.pair_status})`;
      await this.refresh();
    } catch (err) {
      // Rejections (duplicate, unassigned) surface verbatim; the session
      // and the current pair stay put.
      this.errorText = err instanceof ApiError
        ? err.message : `request failed: ${err}`;
      this.render();
    }
  }

  async adjudicate(pairId: string, label: AnnotationLabel): Promise<void> {
    if (!this.annotator) return;
    this.errorText = "";
    try {
      const result = await this.client.adjudicate(pairId, this.annotator, label);
      this.noticeText =
        `final label ${LABEL_TITLES[result.final.final_label]} fixed for ` +
        result.final.pair_id;
      await this.refresh();
    } catch (err) {
      this.errorText = err instanceof ApiError
        ? err.message : `request failed: ${err}`;
      this.render();
    }
  }

  async switchView(view: "annotate" | "conflicts"): Promise<void> {
    this.view = view;
    this.errorText = "";
    this.noticeText = "";
    await this.refresh();
  }

  // ---- rendering --------------------------------------------------------

  render(): void {
    this.root.replaceChildren(
      this.renderHeader(),
      this.renderBanner(),
      this.view === "annotate" ? this.renderAnnotate() : this.renderConflicts(),
    );
  }

  private renderHeader(): HTMLElement {
    const header = el("header");
    header.appendChild(el("h1", undefined, "detectleak review"));

    const identity = el("div", "identity");
    identity.appendChild(el("label", undefined, "annotator id"));
    const input = el("input");
    input.id = "annotator-input";
    input.value = this.annotator;
    input.placeholder = "your id";
    input.addEventListener("change", () => {
      this.annotator = input.value.trim();
      void this.refresh();
    });
    identity.appendChild(input);
    header.appendChild(identity);

    const tabs = el("nav", "tabs");
    for (const view of ["annotate", "conflicts"] as const) {
      const count = view === "conflicts" && this.progress
        ? ` (${this.progress.conflicts_open})` : "";
      const tab = el("button",
                     this.view === view ? "tab active" : "tab",
                     view + count);
      tab.dataset.view = view;
      tab.addEventListener("click", () => void this.switchView(view));
      tabs.appendChild(tab);
    }
    header.appendChild(tabs);
    header.appendChild(this.renderProgress());
    return header;
  }

  private renderProgress(): HTMLElement {
    const box = el("div", "progress");
    if (!this.progress) return box;
    const p = this.progress;
    const done = p.labels_submitted;
    const total = p.pairs_total * 2;
    const bar = el("div", "progress-bar");
    const fill = el("div", "progress-fill");
    fill.style.width = total > 0 ? `${Math.round((done / total) * 100)}%` : "0%";
    bar.appendChild(fill);
    box.appendChild(bar);
    box.appendChild(el(
      "div", "progress-text",
      `${done}/${total} labels · ${p.fully_labeled}/${p.pairs_total} pairs ` +
      `labeled · ${p.conflicts_open} conflicts open · ` +
      `${p.duplicate_pairs} duplicates confirmed`));
    return box;
  }

  private renderBanner(): HTMLElement {
    const banner = el("div", "banner");
    if (this.errorText) {
      banner.appendChild(el("div", "error", this.errorText));
    }
    if (this.noticeText) {
      banner.appendChild(el("div", "notice", this.noticeText));
    }
    return banner;
  }

  private renderAnnotate(): HTMLElement {
    const main = el("main");
    if (!this.annotator) {
      main.appendChild(el("div", "empty-state",
                          "Enter your annotator id to begin."));
      return main;
    }
    if (!this.current) {
      main.appendChild(el("div", "empty-state",
                          "Queue empty — no pairs awaiting your label."));
      return main;
    }
    const pair = this.current;
    const meta = el("div", "pair-meta");
    meta.appendChild(el("span", "chip", `pair ${pair.pair_id.slice(0, 12)}`));
    meta.appendChild(el("span", "chip", `Jaccard ${pair.exact_j.toFixed(3)}`));
    if (pair.suggested === "exact_copy_hint") {
      meta.appendChild(el("span", "chip hint",
                          "texts byte-identical (hint only)"));
    }
    meta.appendChild(el("span", "chip", `${this.remaining} left`));
    main.appendChild(meta);
    main.appendChild(pairPanes(pair));
    main.appendChild(this.labelButtons(
      (label) => void this.submit(label)));
    return main;
  }

  private labelButtons(onPick: (label: AnnotationLabel) => void): HTMLElement {
    const row = el("div", "labels");
    LABELS.forEach((label, index) => {
      const button = el("button", "label-button");
      button.dataset.label = label;
      button.appendChild(el("span", "key", String(index + 1)));
      button.appendChild(el("span", undefined, LABEL_TITLES[label]));
      button.addEventListener("click", () => onPick(label));
      row.appendChild(button);
    });
    return row;
  }

  private renderConflicts(): HTMLElement {
    const main = el("main");
    if (this.conflictQueue.length === 0) {
      main.appendChild(el("div", "empty-state",
                          "No conflicts to adjudicate."));
      return main;
    }
    for (const conflict of this.conflictQueue) {
      const card = el("section", "conflict-card");
      const meta = el("div", "pair-meta");
      meta.appendChild(el("span", "chip", `pair ${conflict.pair_id.slice(0, 12)}`));
      for (const record of conflict.labels) {
        meta.appendChild(el(
          "span", "chip label-chip",
          `${record.annotator}: ${LABEL_TITLES[record.label]}`));
      }
      card.appendChild(meta);
      card.appendChild(pairPanes(conflict));
      card.appendChild(this.labelButtons(
        (label) => void this.adjudicate(conflict.pair_id, label)));
      main.appendChild(card);
    }
    return main;
  }
}

export function mount(root: HTMLElement, baseUrl = ""): App {
  const app = new App(root, new ApiClient(baseUrl));
  void app.start();
  return app;
}

declare global {
  interface Window {
    detectleakApp?: App;
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  window.detectleakApp = mount(document.getElementById("app") as HTMLElement);
}
