export type Naturalness = "natural" | "strange" | "unnatural";
export type LabelAgree = "agree" | "disagree";
export type OriginGuess = "human" | "machine";
export type SentimentLabel = "positive" | "negative" | "neutral";

/** What the API shows an annotator. There is deliberately no provenance slot. */
export interface ItemView {
  item_id: string;
  text: string;
  label: string;
  position: number;
}

export interface Progress {
  done: number;
  total: number;
}

export interface NextResponse {
  done: boolean;
  item: ItemView | null;
  progress: Progress;
}

export interface JudgmentPayload {
  item_id: string;
  naturalness: Naturalness;
  label_agree: LabelAgree;
  origin_guess: OriginGuess;
  correction: SentimentLabel | null;
  comment: string | null;
}

export interface SubmitResponse {
  accepted: boolean;
  progress: Progress;
}
