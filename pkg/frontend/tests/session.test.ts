import { describe, expect, it } from "vitest";

import { AnnotationClient, ApiError } from "../src/api.js";
import { SessionFlow } from "../src/state.js";
import type { JudgmentPayload, Naturalness } from "../src/types.js";
import { FakeServer } from "./fake_server.js";

const SESSION = "sess-1";
const TOKEN = "tok-abc";

function makeFlow(server: FakeServer): SessionFlow {
  return new SessionFlow(new AnnotationClient(SESSION, TOKEN, server.fetch));
}

describe("scripted 10-item session", () => {
  it("completes the session and the export equals what was entered", async () => {
    const server = new FakeServer(SESSION, TOKEN, 10);
    const flow = makeFlow(server);
    await flow.start();

    const entered: JudgmentPayload[] = [];
    const naturalness: Naturalness[] = ["natural", "strange", "unnatural"];
    for (let i = 0; i < 10; i += 1) {
      expect(flow.state.phase).toBe("annotating");
      const item = flow.state.item;
      expect(item).not.toBeNull();
      flow.setRating("naturalness", naturalness[i % 3] as Naturalness);
      if (i % 4 === 0) {
        flow.setRating("labelAgree", "disagree");
        flow.setRating("correction", "neutral");
      } else {
        flow.setRating("labelAgree", "agree");
      }
      flow.setRating("originGuess", i % 2 ? "machine" : "human");
      flow.setComment(i === 5 ? "borderline case" : "");
      entered.push({
        item_id: item!.item_id,
        naturalness: naturalness[i % 3] as Naturalness,
        label_agree: i % 4 === 0 ? "disagree" : "agree",
        origin_guess: i % 2 ? "machine" : "human",
        correction: i % 4 === 0 ? "neutral" : null,
        comment: i === 5 ? "borderline case" : null,
      });
      expect(await flow.submit()).toBe(true);
    }

    expect(flow.state.phase).toBe("done");
    expect(flow.state.progress).toEqual({ done: 10, total: 10 });
    expect(server.export()).toEqual(entered);
  });

  it("never shows provenance to the annotator", async () => {
    const server = new FakeServer(SESSION, TOKEN, 3);
    const flow = makeFlow(server);
    await flow.start();
    expect(flow.state.item).not.toBeNull();
    expect(Object.keys(flow.state.item as object)).not.toContain("provenance");
  });
});

describe("disagree without correction", () => {
  it("is blocked client-side before any request is sent", async () => {
    const server = new FakeServer(SESSION, TOKEN, 2);
    const flow = makeFlow(server);
    await flow.start();
    const requestsAfterLoad = server.requestCount;

    flow.setRating("naturalness", "natural");
    flow.setRating("labelAgree", "disagree");
    flow.setRating("originGuess", "machine");
    expect(await flow.submit()).toBe(false);
    expect(server.requestCount).toBe(requestsAfterLoad);
    expect(flow.state.error).toMatch(/corrected label/);
    expect(server.judgments.size).toBe(0);
  });

  it("is rejected server-side when forced via a raw request", async () => {
    const server = new FakeServer(SESSION, TOKEN, 2);
    const client = new AnnotationClient(SESSION, TOKEN, server.fetch);
    const forced: JudgmentPayload = {
      item_id: "item-0000",
      naturalness: "natural",
      label_agree: "disagree",
      origin_guess: "machine",
      correction: null,
      comment: null,
    };
    await expect(client.submit(forced)).rejects.toThrow(ApiError);
    await expect(client.submit(forced)).rejects.toThrow(/correction_required/);
    expect(server.judgments.size).toBe(0);
  });

  it("choosing agree clears a stale correction", async () => {
    const server = new FakeServer(SESSION, TOKEN, 1);
    const flow = makeFlow(server);
    await flow.start();
    flow.setRating("labelAgree", "disagree");
    flow.setRating("correction", "positive");
    flow.setRating("labelAgree", "agree");
    expect(flow.state.draft.correction).toBeNull();
  });
});

describe("error handling", () => {
  it("keeps the draft when the server rejects a judgment", async () => {
    const server = new FakeServer(SESSION, TOKEN, 2);
    const flow = makeFlow(server);
    await flow.start();
    flow.setRating("naturalness", "waffles" as Naturalness);
    flow.setRating("labelAgree", "agree");
    flow.setRating("originGuess", "human");
    expect(await flow.submit()).toBe(false);
    expect(flow.state.error).toMatch(/bad naturalness/);
    expect(flow.state.phase).toBe("annotating");
    expect(flow.state.draft.labelAgree).toBe("agree");
  });

  it("surfaces a bad annotator token", async () => {
    const server = new FakeServer(SESSION, TOKEN, 2);
    const flow = new SessionFlow(
      new AnnotationClient(SESSION, "wrong-token", server.fetch),
    );
    await flow.start();
    expect(flow.state.phase).toBe("error");
    expect(flow.state.error).toMatch(/invalid annotator token/);
  });
});
