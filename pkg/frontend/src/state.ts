import { AnnotationClient, ApiError } from "./api.js";
import type {
  ItemView,
  JudgmentPayload,
  LabelAgree,
  Naturalness,
  OriginGuess,
  Progress,
  SentimentLabel,
} from "./types.js";

export interface Draft {
  naturalness: Naturalness | null;
  labelAgree: LabelAgree | null;
  originGuess: OriginGuess | null;
  correction: SentimentLabel | null;
  comment: string;
}

export function emptyDraft(): Draft {
  return {
    naturalness: null,
    labelAgree: null,
    originGuess: null,
    correction: null,
    comment: "",
  };
}

export function correctionRequired(draft: Draft): boolean {
  return draft.labelAgree === "disagree";
}

/** The client-side submit gate: all three ratings set, and a corrected
 * label present exactly when the annotator disagreed. */
export function canSubmit(draft: Draft): boolean {
  if (!draft.naturalness || !draft.labelAgree || !draft.originGuess) {
    return false;
  }
  if (correctionRequired(draft)) {
    return draft.correction !== null;
  }
  return draft.correction === null;
}

export function toPayload(itemId: string, draft: Draft): JudgmentPayload {
  if (!canSubmit(draft)) {
    throw new Error("draft is incomplete: correction required on disagree");
  }
  return {
    item_id: itemId,
    naturalness: draft.naturalness as Naturalness,
    label_agree: draft.labelAgree as LabelAgree,
    origin_guess: draft.originGuess as OriginGuess,
    correction: draft.correction,
    comment: draft.comment.trim() || null,
  };
}

export type Phase = "loading" | "annotating" | "done" | "error";

export interface FlowState {
  phase: Phase;
  item: ItemView | null;
  draft: Draft;
  progress: Progress;
  error: string | null;
}

/** Drives one annotator through a session: fetch next item, collect a
 * draft judgment, submit, repeat until the server reports done. */
export class SessionFlow {
  state: FlowState = {
    phase: "loading",
    item: null,
    draft: emptyDraft(),
    progress: { done: 0, total: 0 },
    error: null,
  };

  constructor(
    private readonly client: AnnotationClient,
    private readonly onChange: (state: FlowState) => void = () => {},
  ) {}

  private update(patch: Partial<FlowState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.update({ phase: "loading", error: null });
    try {
      const next = await this.client.nextItem();
      if (next.done || next.item === null) {
        this.update({ phase: "done", item: null, progress: next.progress });
      } else {
        this.update({
          phase: "annotating",
          item: next.item,
          draft: emptyDraft(),
          progress: next.progress,
        });
      }
    } catch (exc) {
      this.update({ phase: "error", error: describeError(exc) });
    }
  }

  setRating<K extends "naturalness" | "labelAgree" | "originGuess" | "correction">(
    field: K,
    value: Draft[K],
  ): void {
    const draft = { ...this.state.draft, [field]: value };
    if (field === "labelAgree" && value === "agree") {
      draft.correction = null;
    }
    this.update({ draft });
  }

  setComment(comment: string): void {
    this.update({ draft: { ...this.state.draft, comment } });
  }

  /** Returns true if the judgment was accepted. A blocked draft never
   * leaves the client. */
  async submit(): Promise<boolean> {
    const item = this.state.item;
    if (this.state.phase !== "annotating" || item === null) {
      return false;
    }
    if (!canSubmit(this.state.draft)) {
      this.update({
        error: "select all three ratings; a corrected label is required when you disagree",
      });
      return false;
    }
    try {
      const result = await this.client.submit(toPayload(item.item_id, this.state.draft));
      this.update({ progress: result.progress, error: null });
      await this.loadNext();
      return true;
    } catch (exc) {
      // Keep the draft so the annotator can fix or retry.
      this.update({ error: describeError(exc) });
      return false;
    }
  }
}

function describeError(exc: unknown): string {
  if (exc instanceof ApiError) {
    return exc.detail;
  }
  if (exc instanceof Error) {
    return exc.message;
  }
  return String(exc);
}
