/**
 * Application wiring: login form, annotation loop, live correction
 * display, skip picker, and optional reviewer controls.
 *
 * The server is the source of truth: reloading mid-session re-creates
 * the session (idempotent on the server) and resumes at the first
 * unanswered item.
 */

import { ApiClient, ServiceError } from "./api.js";
import type { NextItem } from "./api.js";
import type { ItemState, SkipReason } from "./state.js";
import { marksArray, newItemState, toggleToken, markAll } from "./state.js";
import {
  renderCorrectionPanel,
  renderProgress,
  renderSkipPicker,
  renderSource,
  renderTokens,
  renderDone,
} from "./view.js";

interface AppElements {
  login: HTMLElement;
  annotate: HTMLElement;
  source: HTMLElement;
  tokens: HTMLElement;
  correction: HTMLElement;
  skipPicker: HTMLElement;
  progress: HTMLElement;
  status: HTMLElement;
  submit: HTMLButtonElement;
  next: HTMLButtonElement;
  skip: HTMLButtonElement;
  markAllButton: HTMLButtonElement;
}

type Phase = "marking" | "corrected";

class App {
  private readonly api: ApiClient;
  private sessionId = "";
  private state: ItemState | null = null;
  private phase: Phase = "marking";
  private reviewerId: string | null = null;

  constructor(private readonly ui: AppElements, baseUrl = "") {
    this.api = new ApiClient(baseUrl);
  }

  async start(annotatorId: string, sessionPhase: string, reviewerId: string): Promise<void> {
    this.reviewerId = reviewerId.trim() || null;
    const session = await this.api.createSession(annotatorId, sessionPhase);
    this.sessionId = session.session_id;
    this.ui.login.hidden = true;
    this.ui.annotate.hidden = false;
    await this.advance();
  }

  private async advance(): Promise<void> {
    const next: NextItem = await this.api.nextItem(this.sessionId);
    renderProgress(this.ui.progress, next.progress);
    if (next.done) {
      renderDone(this.ui.annotate, next.progress);
      return;
    }
    this.state = newItemState(next.item_id!, next.source!, next.tokens!);
    this.phase = "marking";
    this.ui.skipPicker.hidden = true;
    this.setStatus("");
    renderCorrectionPanel(this.ui.correction, null, null);
    this.redraw();
  }

  private redraw(): void {
    if (!this.state) return;
    renderSource(this.ui.source, this.state.source);
    renderTokens(this.ui.tokens, this.state, {
      onToggle: (index) => this.handleToggle(index),
    });
    const marking = this.phase === "marking";
    this.ui.submit.hidden = !marking;
    this.ui.skip.hidden = !marking;
    this.ui.markAllButton.hidden = !marking;
    this.ui.next.hidden = marking;
  }

  private handleToggle(index: number): void {
    if (!this.state || this.phase !== "marking") return;
    this.state = toggleToken(this.state, index);
    this.redraw();
  }

  private setStatus(text: string): void {
    this.ui.status.textContent = text;
  }

  async submit(): Promise<void> {
    if (!this.state) return;
    const item = this.state;
    try {
      const response = await this.api.submitMarks(
        this.sessionId,
        item.itemId,
        marksArray(item),
      );
      this.phase = "corrected";
      renderCorrectionPanel(
        this.ui.correction,
        response.correction ?? null,
        response.warning ?? null,
        this.reviewerId ? (correct) => this.review(item.itemId, correct) : undefined,
      );
      if (response.correction === undefined && response.warning === undefined) {
        // nothing marked: no correction round-trip, go straight on
        await this.advance();
        return;
      }
      this.redraw();
    } catch (error) {
      this.setStatus(error instanceof ServiceError ? error.message : String(error));
    }
  }

  private async review(itemId: string, correct: boolean): Promise<void> {
    try {
      await this.api.submitReview(itemId, this.reviewerId!, correct);
      this.setStatus(`review stored: ${correct ? "yes" : "no"}`);
    } catch (error) {
      this.setStatus(error instanceof ServiceError ? error.message : String(error));
    }
  }

  async next(): Promise<void> {
    await this.advance();
  }

  toggleSkipPicker(): void {
    this.ui.skipPicker.hidden = !this.ui.skipPicker.hidden;
  }

  async skip(reason: SkipReason): Promise<void> {
    if (!this.state) return;
    try {
      await this.api.skipItem(this.sessionId, this.state.itemId, reason);
      await this.advance();
    } catch (error) {
      this.setStatus(error instanceof ServiceError ? error.message : String(error));
    }
  }

  markAllTokens(): void {
    if (!this.state || this.phase !== "marking") return;
    this.state = markAll(this.state);
    this.redraw();
  }
}

export function bootstrap(root: Document = document): App {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = root.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
  };

  const ui: AppElements = {
    login: byId("login"),
    annotate: byId("annotate"),
    source: byId("source"),
    tokens: byId("tokens"),
    correction: byId("correction"),
    skipPicker: byId("skip-picker"),
    progress: byId("progress"),
    status: byId("status"),
    submit: byId<HTMLButtonElement>("submit"),
    next: byId<HTMLButtonElement>("next"),
    skip: byId<HTMLButtonElement>("skip"),
    markAllButton: byId<HTMLButtonElement>("mark-all"),
  };

  const app = new App(ui);
  renderSkipPicker(ui.skipPicker, { onSkip: (reason) => void app.skip(reason) });
  ui.skipPicker.hidden = true;

  byId<HTMLFormElement>("login-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const annotator = byId<HTMLInputElement>("annotator-id").value.trim();
    const phase = byId<HTMLSelectElement>("phase").value;
    const reviewer = byId<HTMLInputElement>("reviewer-id").value;
    if (annotator) void app.start(annotator, phase, reviewer);
  });
  ui.submit.addEventListener("click", () => void app.submit());
  ui.next.addEventListener("click", () => void app.next());
  ui.skip.addEventListener("click", () => app.toggleSkipPicker());
  ui.markAllButton.addEventListener("click", () => app.markAllTokens());
  return app;
}

if (typeof document !== "undefined" && document.getElementById("login")) {
  bootstrap();
}
