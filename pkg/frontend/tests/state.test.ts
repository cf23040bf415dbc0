import { describe, expect, it } from "vitest";

import { canSubmit, correctionRequired, emptyDraft, toPayload } from "../src/state.js";
import type { Draft } from "../src/state.js";

function fullDraft(overrides: Partial<Draft> = {}): Draft {
  return {
    naturalness: "natural",
    labelAgree: "agree",
    originGuess: "human",
    correction: null,
    comment: "",
    ...overrides,
  };
}

describe("submit gate", () => {
  it("rejects an empty draft", () => {
    expect(canSubmit(emptyDraft())).toBe(false);
  });

  it("accepts a complete agree draft", () => {
    expect(canSubmit(fullDraft())).toBe(true);
  });

  it("rejects when any rating is missing", () => {
    expect(canSubmit(fullDraft({ naturalness: null }))).toBe(false);
    expect(canSubmit(fullDraft({ labelAgree: null }))).toBe(false);
    expect(canSubmit(fullDraft({ originGuess: null }))).toBe(false);
  });

  it("requires a correction exactly when disagreeing", () => {
    const disagree = fullDraft({ labelAgree: "disagree" });
    expect(correctionRequired(disagree)).toBe(true);
    expect(canSubmit(disagree)).toBe(false);
    expect(canSubmit({ ...disagree, correction: "negative" })).toBe(true);
  });

  it("rejects a stray correction on agree", () => {
    expect(canSubmit(fullDraft({ correction: "positive" }))).toBe(false);
  });
});

describe("toPayload", () => {
  it("throws on a blocked draft", () => {
    expect(() =>
      toPayload("item-0001", fullDraft({ labelAgree: "disagree" })),
    ).toThrow(/correction required/);
  });

  it("normalizes a blank comment to null", () => {
    const payload = toPayload("item-0001", fullDraft({ comment: "   " }));
    expect(payload.comment).toBeNull();
    expect(payload.item_id).toBe("item-0001");
  });

  it("keeps the corrected label on disagree", () => {
    const payload = toPayload(
      "item-0002",
      fullDraft({ labelAgree: "disagree", correction: "neutral", comment: "odd" }),
    );
    expect(payload.correction).toBe("neutral");
    expect(payload.comment).toBe("odd");
  });
});
