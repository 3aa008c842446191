/**
 * SessionController unit tests against a scripted fake API: optimistic
 * chat with rollback, the rating gate, client-side validation mirroring,
 * and refresh restore.
 */

import { describe, expect, it } from "vitest";

import { ApiError } from "../src/api.js";
import {
  SessionController,
  canChat,
  canRate,
  exchangesRemaining,
  normalizedLabel,
  validateRating,
  type SessionApi,
  type SessionState,
} from "../src/session.js";
import type { RatingView, SessionView, TurnView } from "../src/types.js";

function sessionView(overrides: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "s-1",
    agent_id: "agent-a",
    annotator: "expert-1",
    status: "open",
    turns: [],
    n_expert_turns: 0,
    min_turns: 3,
    rating: null,
    automated_scores: null,
    ...overrides,
  };
}

function ratingView(conformity: number): RatingView {
  return {
    session_id: "s-1",
    agent_id: "agent-a",
    annotator: "expert-1",
    conformity,
    normalized: conformity / 10,
    justification: "solid",
    item_agreement: {},
    timestamp: 0,
  };
}

/** Fake API whose per-method behavior each test scripts. */
class FakeApi implements SessionApi {
  calls: string[] = [];
  nextTurn: () => Promise<TurnView> = async () => ({
    expert: "q",
    agent: "a",
    n_expert_turns: 1,
  });
  nextRating: () => Promise<SessionView> = async () =>
    sessionView({ status: "rated", rating: ratingView(87), automated_scores: { profile: 9 } });

  async createSession(agentId: string, annotator: string): Promise<SessionView> {
    this.calls.push(`create:${agentId}:${annotator}`);
    return sessionView({ agent_id: agentId, annotator });
  }
  async getSession(sessionId: string): Promise<SessionView> {
    this.calls.push(`get:${sessionId}`);
    return sessionView({
      session_id: sessionId,
      turns: [{ expert: "hello", agent: "hi there" }],
      n_expert_turns: 1,
    });
  }
  async postTurn(sessionId: string, text: string): Promise<TurnView> {
    this.calls.push(`turn:${sessionId}:${text}`);
    return this.nextTurn();
  }
  async submitRating(sessionId: string): Promise<SessionView> {
    this.calls.push(`rate:${sessionId}`);
    return this.nextRating();
  }
  async closeSession(sessionId: string): Promise<SessionView> {
    this.calls.push(`close:${sessionId}`);
    return sessionView({ status: "closed" });
  }
}

async function openController(api: FakeApi = new FakeApi()) {
  const controller = new SessionController(api);
  await controller.open("agent-a", "expert-1");
  return { controller, api };
}

describe("opening and restoring", () => {
  it("adopts the service view on open", async () => {
    const { controller } = await openController();
    const state = controller.getState();
    expect(state.phase).toBe("open");
    expect(state.sessionId).toBe("s-1");
    expect(state.minTurns).toBe(3);
    expect(state.turns).toEqual([]);
  });

  it("restore rebuilds transcript and counter from the service", async () => {
    const api = new FakeApi();
    const controller = new SessionController(api);
    await controller.restore("s-9");
    const state = controller.getState();
    expect(api.calls).toEqual(["get:s-9"]);
    expect(state.sessionId).toBe("s-9");
    expect(state.turns).toHaveLength(1);
    expect(exchangesRemaining(state)).toBe(2);
  });

  it("failed open resets to idle with a notice", async () => {
    const api = new FakeApi();
    api.createSession = async () => {
      throw new ApiError(403, "agent 'x' is not in the candidate set");
    };
    const controller = new SessionController(api);
    await expect(controller.open("x", "expert-1")).rejects.toThrow(ApiError);
    const state = controller.getState();
    expect(state.phase).toBe("idle");
    expect(state.notice).toContain("candidate set");
  });
});

describe("chat exchanges", () => {
  it("shows the optimistic bubble while in flight, then lands the exchange", async () => {
    const api = new FakeApi();
    let resolveTurn!: (t: TurnView) => void;
    api.nextTurn = () => new Promise<TurnView>((res) => (resolveTurn = res));
    const { controller } = await openController(api);

    const states: SessionState[] = [];
    controller.subscribe((s) => states.push(s));

    const sending = controller.send("how do you study?");
    const inFlight = controller.getState();
    expect(inFlight.pending).toBe("how do you study?");
    expect(inFlight.busy).toBe(true);
    expect(canChat(inFlight)).toBe(false);

    resolveTurn({ expert: "how do you study?", agent: "with flashcards", n_expert_turns: 1 });
    await sending;

    const done = controller.getState();
    expect(done.pending).toBeNull();
    expect(done.turns).toEqual([{ expert: "how do you study?", agent: "with flashcards" }]);
    expect(done.busy).toBe(false);
  });

  it("rolls the bubble back and posts a notice when the backend fails", async () => {
    const api = new FakeApi();
    api.nextTurn = async () => {
      throw new ApiError(502, "agent backend failure; retry this turn");
    };
    const { controller } = await openController(api);

    await expect(controller.send("hello?")).rejects.toThrow(ApiError);
    const state = controller.getState();
    expect(state.pending).toBeNull();
    expect(state.turns).toEqual([]); // the exchange never happened
    expect(state.notice).toContain("retry this turn");
    expect(canChat(state)).toBe(true); // re-sendable
  });

  it("counts one exchange per completed round trip", async () => {
    const { controller } = await openController();
    await controller.send("one");
    await controller.send("two");
    expect(controller.getState().turns).toHaveLength(2);
    expect(exchangesRemaining(controller.getState())).toBe(1);
  });

  it("ignores sends on rated or closed sessions", async () => {
    const api = new FakeApi();
    const { controller } = await openController(api);
    await controller.send("one");
    await controller.send("two");
    await controller.send("three");
    await controller.rate({ conformity: 87, justification: "ok", item_agreement: {} });
    expect(canChat(controller.getState())).toBe(false);

    const before = api.calls.length;
    await controller.send("after rating");
    expect(api.calls.length).toBe(before); // no request left the client
  });
});

describe("rating gate and validation", () => {
  it("keeps the form locked until the minimum exchanges are reached", async () => {
    const { controller } = await openController();
    expect(canRate(controller.getState())).toBe(false);
    await controller.send("one");
    await controller.send("two");
    expect(canRate(controller.getState())).toBe(false);
    await controller.send("three");
    expect(canRate(controller.getState())).toBe(true);
  });

  it("mirrors the service's validation rules client-side", async () => {
    const { controller } = await openController();
    const state = controller.getState();

    expect(validateRating(state, { conformity: 87, justification: "ok", item_agreement: {} }))
      .toEqual(["3 more exchanges required before rating"]);

    await controller.send("one");
    await controller.send("two");
    await controller.send("three");
    const ready = controller.getState();

    expect(validateRating(ready, { conformity: 87, justification: "ok", item_agreement: {} }))
      .toEqual([]);
    expect(validateRating(ready, { conformity: 0, justification: "ok", item_agreement: {} }))
      .toEqual(["conformity must be an integer from 1 to 100"]);
    expect(validateRating(ready, { conformity: 101, justification: "ok", item_agreement: {} }))
      .toHaveLength(1);
    expect(validateRating(ready, { conformity: 44.5, justification: "ok", item_agreement: {} }))
      .toHaveLength(1);
    expect(validateRating(ready, { conformity: 87, justification: "   ", item_agreement: {} }))
      .toEqual(["justification must not be empty"]);
    expect(
      validateRating(ready, { conformity: 87, justification: "ok", item_agreement: { age: 9 } }),
    ).toEqual(['agreement for "age" must be 1-5']);
  });

  it("refuses a doomed request without calling the service", async () => {
    const api = new FakeApi();
    const { controller } = await openController(api);
    await expect(
      controller.rate({ conformity: 87, justification: "", item_agreement: {} }),
    ).rejects.toThrow(/justification|exchanges/);
    expect(api.calls.filter((c) => c.startsWith("rate:"))).toHaveLength(0);
    expect(controller.getState().notice).toContain("required before rating");
  });

  it("locks the session and reveals automated scores after rating", async () => {
    const { controller } = await openController();
    await controller.send("one");
    await controller.send("two");
    await controller.send("three");
    await controller.rate({ conformity: 87, justification: "consistent", item_agreement: {} });

    const state = controller.getState();
    expect(state.phase).toBe("rated");
    expect(state.rating?.normalized).toBe(8.7);
    expect(state.automatedScores).toEqual({ profile: 9 });
    expect(canRate(state)).toBe(false);
    expect(canChat(state)).toBe(false);
  });

  it("surfaces server policy rejections verbatim", async () => {
    const api = new FakeApi();
    api.nextRating = async () => {
      throw new ApiError(409, "session s-1 already has its rating");
    };
    const { controller } = await openController(api);
    await controller.send("one");
    await controller.send("two");
    await controller.send("three");
    await expect(
      controller.rate({ conformity: 87, justification: "ok", item_agreement: {} }),
    ).rejects.toThrow(ApiError);
    expect(controller.getState().notice).toBe("session s-1 already has its rating");
    expect(controller.getState().phase).toBe("open"); // unchanged
  });
});

describe("closing and display helpers", () => {
  it("close moves the session to closed", async () => {
    const { controller } = await openController();
    await controller.close();
    expect(controller.getState().phase).toBe("closed");
    expect(canChat(controller.getState())).toBe(false);
  });

  it("normalizedLabel renders the /10 display form", () => {
    expect(normalizedLabel(87)).toBe("8.7/10");
    expect(normalizedLabel(100)).toBe("10.0/10");
    expect(normalizedLabel(5)).toBe("0.5/10");
  });
});
