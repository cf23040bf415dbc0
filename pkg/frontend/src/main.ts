import { AnnotationClient } from "./api.js";
import { canSubmit, SessionFlow, type FlowState } from "./state.js";
import type { LabelAgree, Naturalness, OriginGuess } from "./types.js";

const NATURALNESS_KEYS: Record<string, Naturalness> = {
  "1": "natural",
  "2": "strange",
  "3": "unnatural",
};
const AGREE_KEYS: Record<string, LabelAgree> = { a: "agree", d: "disagree" };
const ORIGIN_KEYS: Record<string, OriginGuess> = { h: "human", m: "machine" };

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
}

function markSelected(group: string, value: string | null): void {
  for (const button of document.querySelectorAll<HTMLButtonElement>(
    `button[data-group="${group}"]`,
  )) {
    button.classList.toggle("selected", button.dataset.value === value);
  }
}

function render(state: FlowState): void {
  const progress = el("progress");
  progress.textContent = `${state.progress.done} / ${state.progress.total}`;

  el("card").hidden = state.phase !== "annotating";
  el("done-banner").hidden = state.phase !== "done";
  const errorBox = el("error");
  errorBox.hidden = !state.error;
  errorBox.textContent = state.error ?? "";

  if (state.item) {
    el("item-text").textContent = state.item.text;
    el("item-label").textContent = state.item.label;
  }
  markSelected("naturalness", state.draft.naturalness);
  markSelected("labelAgree", state.draft.labelAgree);
  markSelected("correction", state.draft.correction);
  markSelected("originGuess", state.draft.originGuess);
  el("correction-row").hidden = state.draft.labelAgree !== "disagree";
  (el("submit") as HTMLButtonElement).disabled = !canSubmit(state.draft);
}

export function boot(): void {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session") ?? "";
  const token = params.get("annotator") ?? "";
  if (!sessionId || !token) {
    el("error").hidden = false;
    el("error").textContent =
      "open this page with ?session=<id>&annotator=<token>";
    return;
  }

  const flow = new SessionFlow(new AnnotationClient(sessionId, token), render);

  for (const button of document.querySelectorAll<HTMLButtonElement>(
    "button[data-group]",
  )) {
    button.addEventListener("click", () => {
      flow.setRating(
        button.dataset.group as "naturalness" | "labelAgree" | "originGuess" | "correction",
        button.dataset.value as never,
      );
    });
  }
  el("submit").addEventListener("click", () => void flow.submit());
  const comment = el("comment") as HTMLTextAreaElement;
  comment.addEventListener("input", () => flow.setComment(comment.value));

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLTextAreaElement) {
      return;
    }
    const key = event.key.toLowerCase();
    if (key in NATURALNESS_KEYS) {
      flow.setRating("naturalness", NATURALNESS_KEYS[key] as Naturalness);
    } else if (key in AGREE_KEYS) {
      flow.setRating("labelAgree", AGREE_KEYS[key] as LabelAgree);
    } else if (key in ORIGIN_KEYS) {
      flow.setRating("originGuess", ORIGIN_KEYS[key] as OriginGuess);
    } else if (key === "enter") {
      void flow.submit();
    }
  });

  void flow.start();
}

if (typeof document !== "undefined" && document.getElementById("card")) {
  boot();
}
