/**
 * DOM rendering. One clickable element per hypothesis token; marked
 * tokens get the `marked` class (blue border in styles.css). The
 * correction panel shows the server's retranslation verbatim as text;
 * a degraded response becomes a dismissible notice that never blocks
 * the Next button.
 */

import type { ItemState, SkipReason } from "./state.js";
import { SKIP_REASONS } from "./state.js";
import type { Progress } from "./api.js";

export interface ViewHandlers {
  onToggle(index: number): void;
  onSubmit(): void;
  onNext(): void;
  onSkip(reason: SkipReason): void;
  onMarkAll(): void;
  onReview?(correct: boolean): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderTokens(
  container: HTMLElement,
  state: ItemState,
  handlers: Pick<ViewHandlers, "onToggle">,
): void {
  container.replaceChildren();
  state.tokens.forEach((token, index) => {
    const button = el("button", "token", token);
    button.type = "button";
    button.dataset.index = String(index);
    if (state.marked[index]) button.classList.add("marked");
    button.addEventListener("click", () => handlers.onToggle(index));
    container.appendChild(button);
  });
}

export function renderSource(container: HTMLElement, source: string): void {
  container.textContent = source;
}

export function renderProgress(container: HTMLElement, progress: Progress): void {
  const done = progress.answered;
  container.textContent =
    `${done} of ${progress.total} answered, ${progress.skipped} skipped`;
}

export function renderCorrectionPanel(
  container: HTMLElement,
  correction: string | null,
  warning: string | null,
  onReview?: (correct: boolean) => void,
): void {
  container.replaceChildren();
  container.hidden = correction === null && warning === null;
  if (correction !== null) {
    container.appendChild(el("div", "correction-label", "Corrected translation:"));
    container.appendChild(el("div", "correction-text", correction));
    if (onReview) {
      const controls = el("div", "review-controls");
      const label = el("span", "review-label", "Is this correction right?");
      const yes = el("button", "review-yes", "Yes");
      const no = el("button", "review-no", "No");
      yes.type = "button";
      no.type = "button";
      yes.addEventListener("click", () => onReview(true));
      no.addEventListener("click", () => onReview(false));
      controls.append(label, yes, no);
      container.appendChild(controls);
    }
  }
  if (warning !== null) {
    container.appendChild(el("div", "correction-warning", warning));
  }
}

export function renderSkipPicker(
  container: HTMLElement,
  handlers: Pick<ViewHandlers, "onSkip">,
): void {
  container.replaceChildren();
  for (const reason of SKIP_REASONS) {
    const button = el("button", "skip-reason", reason);
    button.type = "button";
    button.addEventListener("click", () => handlers.onSkip(reason));
    container.appendChild(button);
  }
}

export function renderDone(root: HTMLElement, progress: Progress): void {
  root.replaceChildren();
  root.appendChild(el("h2", undefined, "All items answered."));
  const summary = el("p");
  renderProgress(summary, progress);
  root.appendChild(summary);
}
