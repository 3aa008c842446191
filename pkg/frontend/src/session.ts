/**
 * DOM-free session state machine behind the annotation page.
 *
 * Owns everything the panes render: the chat transcript with one optimistic
 * in-flight bubble (rolled back on failure), the exchange counter against the
 * rating minimum, client-side rating validation that mirrors the service's
 * policy (the service stays authoritative), and the notice banner. The page
 * subscribes and re-renders; tests drive it with a fake API.
 */

import type { AnnotationApi } from "./api.js";
import { ApiError } from "./api.js";
import type { ChatTurn, RatingInput, RatingView, SessionStatus } from "./types.js";

export interface SessionState {
  phase: "idle" | "opening" | SessionStatus;
  sessionId: string | null;
  agentId: string | null;
  /** Completed exchanges (expert turn answered by the agent). */
  turns: ChatTurn[];
  /** Expert message awaiting its reply: the optimistic bubble. */
  pending: string | null;
  minTurns: number;
  rating: RatingView | null;
  /** null until the service reveals them (only after rating). */
  automatedScores: Record<string, number> | null;
  /** Error banner; cleared by the next successful action. */
  notice: string | null;
  /** True while a request is in flight (disables inputs). */
  busy: boolean;
}

export type SessionApi = Pick<
  AnnotationApi,
  "createSession" | "getSession" | "postTurn" | "submitRating" | "closeSession"
>;

const INITIAL: SessionState = {
  phase: "idle",
  sessionId: null,
  agentId: null,
  turns: [],
  pending: null,
  minTurns: 0,
  rating: null,
  automatedScores: null,
  notice: null,
  busy: false,
};

/** Exchanges still required before the rating form may unlock. */
export function exchangesRemaining(state: SessionState): number {
  return Math.max(0, state.minTurns - state.turns.length);
}

/** Rating form is usable: session open, minimum met, nothing in flight. */
export function canRate(state: SessionState): boolean {
  return state.phase === "open" && exchangesRemaining(state) === 0 && !state.busy;
}

/** Chat input is usable: session open and no exchange in flight. */
export function canChat(state: SessionState): boolean {
  return state.phase === "open" && !state.busy;
}

/**
 * Client-side mirror of the service's rating policy. Returns human-readable
 * problems, empty when the form would be accepted. The service re-checks
 * everything; this only exists so the UI never sends a doomed request.
 */
export function validateRating(state: SessionState, input: RatingInput): string[] {
  const problems: string[] = [];
  const remaining = exchangesRemaining(state);
  if (remaining > 0) {
    problems.push(`${remaining} more exchange${remaining === 1 ? "" : "s"} required before rating`);
  }
  if (!Number.isInteger(input.conformity) || input.conformity < 1 || input.conformity > 100) {
    problems.push("conformity must be an integer from 1 to 100");
  }
  if (input.justification.trim() === "") {
    problems.push("justification must not be empty");
  }
  for (const [item, level] of Object.entries(input.item_agreement)) {
    if (!Number.isInteger(level) || level < 1 || level > 5) {
      problems.push(`agreement for "${item}" must be 1-5`);
    }
  }
  return problems;
}

export class SessionController {
  private state: SessionState = { ...INITIAL };
  private listeners: Array<(state: SessionState) => void> = [];

  constructor(private readonly api: SessionApi) {}

  getState(): SessionState {
    return this.state;
  }

  subscribe(listener: (state: SessionState) => void): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  /** Open a fresh session with a candidate agent. */
  async open(agentId: string, annotator: string): Promise<void> {
    this.set({ ...INITIAL, phase: "opening", agentId, busy: true });
    try {
      const view = await this.api.createSession(agentId, annotator);
      this.absorb(view);
    } catch (err) {
      this.set({ ...INITIAL, notice: describe(err) });
      throw err;
    }
  }

  /** Restore an existing session (page reload): transcript and counter. */
  async restore(sessionId: string): Promise<void> {
    this.set({ ...INITIAL, phase: "opening", busy: true });
    try {
      const view = await this.api.getSession(sessionId);
      this.absorb(view);
    } catch (err) {
      this.set({ ...INITIAL, notice: describe(err) });
      throw err;
    }
  }

  /**
   * Send one expert message. The bubble appears immediately; on failure it is
   * rolled back and the notice explains why, leaving the text re-sendable.
   */
  async send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (trimmed === "" || !canChat(this.state) || this.state.sessionId === null) {
      return;
    }
    this.set({ ...this.state, pending: trimmed, busy: true, notice: null });
    try {
      const turn = await this.api.postTurn(this.state.sessionId, trimmed);
      this.set({
        ...this.state,
        turns: [...this.state.turns, { expert: turn.expert, agent: turn.agent }],
        pending: null,
        busy: false,
      });
    } catch (err) {
      // rollback: the exchange never happened on the server
      this.set({ ...this.state, pending: null, busy: false, notice: describe(err) });
      throw err;
    }
  }

  /** Submit the rating form. Refuses client-side anything the server would. */
  async rate(input: RatingInput): Promise<void> {
    const problems = validateRating(this.state, input);
    if (problems.length > 0 || this.state.sessionId === null) {
      this.set({ ...this.state, notice: problems.join("; ") });
      throw new Error(problems.join("; "));
    }
    this.set({ ...this.state, busy: true, notice: null });
    try {
      const view = await this.api.submitRating(this.state.sessionId, input);
      this.absorb(view);
    } catch (err) {
      this.set({ ...this.state, busy: false, notice: describe(err) });
      throw err;
    }
  }

  /** Abandon an unrated session. */
  async close(): Promise<void> {
    if (this.state.sessionId === null) return;
    this.set({ ...this.state, busy: true });
    try {
      const view = await this.api.closeSession(this.state.sessionId);
      this.absorb(view);
    } catch (err) {
      this.set({ ...this.state, busy: false, notice: describe(err) });
      throw err;
    }
  }

  /** Adopt the service's view of the session as the new local state. */
  private absorb(view: {
    session_id: string;
    agent_id: string;
    status: SessionStatus;
    turns: ChatTurn[];
    min_turns: number;
    rating: RatingView | null;
    automated_scores: Record<string, number> | null;
  }): void {
    this.set({
      phase: view.status,
      sessionId: view.session_id,
      agentId: view.agent_id,
      turns: [...view.turns],
      pending: null,
      minTurns: view.min_turns,
      rating: view.rating,
      automatedScores: view.automated_scores,
      notice: null,
      busy: false,
    });
  }

  private set(state: SessionState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    if (err.isNetworkFailure) return `service unreachable: ${err.detail}`;
    if (err.isAuthFailure) return "authentication failed: check the token";
    return err.detail;
  }
  return err instanceof Error ? err.message : String(err);
}

/** "87" -> "8.7/10": the display form of a just-submitted conformity score. */
export function normalizedLabel(conformity: number): string {
  return `${(conformity / 10).toFixed(1)}/10`;
}
