/**
 * Wire types for the annotation service REST API.
 * Field names mirror the service's JSON exactly.
 */

/** One row of GET /candidates. Automated scores are never included. */
export interface CandidateView {
  agent_id: string;
  profile_text: string;
  n_sessions: number;
}

/** One completed expert/agent exchange. */
export interface ChatTurn {
  expert: string;
  agent: string;
}

export type SessionStatus = "open" | "rated" | "closed";

export interface RatingView {
  session_id: string;
  agent_id: string;
  annotator: string;
  /** 1-100 conformity score as entered. */
  conformity: number;
  /** conformity / 10, the scale the pipeline scores use. */
  normalized: number;
  justification: string;
  item_agreement: Record<string, number>;
  timestamp: number;
}

/** Session state as the service reports it (POST/GET /sessions...). */
export interface SessionView {
  session_id: string;
  agent_id: string;
  annotator: string;
  status: SessionStatus;
  turns: ChatTurn[];
  n_expert_turns: number;
  min_turns: number;
  rating: RatingView | null;
  /** Hidden (null) by the service until the session is rated. */
  automated_scores: Record<string, number> | null;
}

/** Response of POST /sessions/{id}/turns. */
export interface TurnView {
  expert: string;
  agent: string;
  n_expert_turns: number;
}

/** Response of GET /export: per-agent expert means, a ready gold standard. */
export interface ExportView {
  schema: string;
  min_turns: number;
  agents: Record<
    string,
    { expert_mean: number; n_ratings: number; ratings: RatingView[] }
  >;
}

/** Fields of the rating form before submission. */
export interface RatingInput {
  conformity: number;
  justification: string;
  item_agreement: Record<string, number>;
}
