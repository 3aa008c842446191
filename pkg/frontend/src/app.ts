/**
 * DOM glue for the annotation page: connection form, candidate list, and the
 * three working panes (profile | chat | rating). All state transitions live
 * in SessionController; this file only renders and forwards events.
 */

import { AnnotationApi, ApiError } from "./api.js";
import {
  SessionController,
  canChat,
  canRate,
  exchangesRemaining,
  normalizedLabel,
  type SessionState,
} from "./session.js";
import type { CandidateView } from "./types.js";

const STORAGE_KEY = "studentsim-annotation-ui";

interface StoredConfig {
  baseUrl: string;
  token: string;
  annotator: string;
  ratedAgents: string[];
}

let api: AnnotationApi | null = null;
let controller: SessionController | null = null;
let candidates: CandidateView[] = [];
let config: StoredConfig = { baseUrl: "http://127.0.0.1:8100", token: "", annotator: "", ratedAgents: [] };

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function loadConfig(): void {
  try {
    const raw = localStorage.getItem(STORAGE_KEY);
    if (raw) config = { ...config, ...JSON.parse(raw) };
  } catch {
    /* corrupted storage: keep defaults */
  }
}

function saveConfig(): void {
  localStorage.setItem(STORAGE_KEY, JSON.stringify(config));
}

// -- connection ---------------------------------------------------------------

async function connect(): Promise<void> {
  config.baseUrl = ($("base-url") as HTMLInputElement).value.trim();
  config.token = ($("token") as HTMLInputElement).value.trim();
  config.annotator = ($("annotator") as HTMLInputElement).value.trim();
  if (!config.baseUrl || !config.token || !config.annotator) {
    setConnectError("base URL, token, and annotator name are all required");
    return;
  }
  saveConfig();
  api = new AnnotationApi({ baseUrl: config.baseUrl, token: config.token });
  controller = new SessionController(api);
  controller.subscribe(renderSession);
  try {
    candidates = await api.listCandidates();
  } catch (err) {
    if (err instanceof ApiError && err.isAuthFailure) {
      setConnectError("authentication failed: check the token");
    } else if (err instanceof ApiError && err.isNetworkFailure) {
      setConnectError(`service unreachable at ${config.baseUrl} - is it running?`);
    } else {
      setConnectError(err instanceof Error ? err.message : String(err));
    }
    return;
  }
  setConnectError("");
  $("connect-screen").hidden = true;
  $("workspace").hidden = false;
  renderCandidates();
  const restoreId = decodeURIComponent(location.hash.slice(1));
  if (restoreId) {
    await controller.restore(restoreId).catch(() => {
      location.hash = "";
    });
  }
}

function setConnectError(message: string): void {
  const el = $("connect-error");
  el.textContent = message;
  el.hidden = message === "";
}

// -- candidate list -------------------------------------------------------------

function renderCandidates(): void {
  const list = $("candidate-list");
  list.replaceChildren();
  if (candidates.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-state";
    empty.textContent = "No candidate agents are available in this run.";
    list.appendChild(empty);
    return;
  }
  for (const candidate of candidates) {
    const row = document.createElement("button");
    row.className = "candidate-row";
    const rated = config.ratedAgents.includes(candidate.agent_id);
    row.innerHTML = `<span class="cid"></span><span class="cstatus"></span>`;
    (row.querySelector(".cid") as HTMLElement).textContent = candidate.agent_id;
    (row.querySelector(".cstatus") as HTMLElement).textContent = rated
      ? "rated by me"
      : candidate.n_sessions > 0
        ? `${candidate.n_sessions} session(s)`
        : "unrated";
    row.addEventListener("click", () => {
      void openSession(candidate);
    });
    list.appendChild(row);
  }
}

async function openSession(candidate: CandidateView): Promise<void> {
  if (!controller) return;
  $("profile-text").textContent = candidate.profile_text;
  try {
    await controller.open(candidate.agent_id, config.annotator);
    location.hash = encodeURIComponent(controller.getState().sessionId ?? "");
  } catch {
    /* notice already set by the controller */
  }
}

// -- session panes -----------------------------------------------------------------

function renderSession(state: SessionState): void {
  renderNotice(state);
  renderChat(state);
  renderRating(state);
  // keep the profile pane in sync when restoring by hash
  if (state.agentId) {
    const candidate = candidates.find((c) => c.agent_id === state.agentId);
    if (candidate) $("profile-text").textContent = candidate.profile_text;
    $("session-title").textContent = `${state.agentId} - ${state.sessionId ?? ""} (${state.phase})`;
  } else {
    $("session-title").textContent = "no session";
  }
}

function renderNotice(state: SessionState): void {
  const banner = $("notice");
  banner.textContent = state.notice ?? "";
  banner.hidden = state.notice === null;
}

function renderChat(state: SessionState): void {
  const log = $("chat-log");
  log.replaceChildren();
  for (const turn of state.turns) {
    log.appendChild(bubble("expert", turn.expert));
    log.appendChild(bubble("agent", turn.agent));
  }
  if (state.pending !== null) {
    const el = bubble("expert", state.pending);
    el.classList.add("pending");
    log.appendChild(el);
  }
  log.scrollTop = log.scrollHeight;

  const input = $("chat-input") as HTMLTextAreaElement;
  const send = $("chat-send") as HTMLButtonElement;
  const enabled = canChat(state);
  input.disabled = !enabled;
  send.disabled = !enabled;
  input.placeholder =
    state.phase === "rated" || state.phase === "closed"
      ? `session ${state.phase}; no further messages`
      : "Message the student agent...";
}

function bubble(who: "expert" | "agent", text: string): HTMLElement {
  const el = document.createElement("div");
  el.className = `bubble ${who}`;
  el.textContent = text;
  return el;
}

function renderRating(state: SessionState): void {
  const counter = $("turn-counter");
  const remaining = exchangesRemaining(state);
  counter.textContent =
    state.sessionId === null
      ? ""
      : remaining > 0
        ? `${state.turns.length}/${state.minTurns} exchanges - ${remaining} more before rating unlocks`
        : `${state.turns.length}/${state.minTurns} exchanges - rating unlocked`;

  const form = $("rating-form") as HTMLFieldSetElement;
  form.disabled = !canRate(state);

  const confirmation = $("rating-confirmation");
  if (state.rating) {
    confirmation.hidden = false;
    $("rating-summary").textContent =
      `Conformity ${state.rating.conformity}/100 recorded as ${normalizedLabel(state.rating.conformity)}.`;
    const scores = $("automated-scores");
    scores.replaceChildren();
    // revealed by the service only after the rating is locked in
    for (const [kind, value] of Object.entries(state.automatedScores ?? {})) {
      const row = document.createElement("li");
      row.textContent = `${kind}: ${value.toFixed(2)}`;
      scores.appendChild(row);
    }
    if (state.agentId && !config.ratedAgents.includes(state.agentId)) {
      config.ratedAgents.push(state.agentId);
      saveConfig();
      renderCandidates();
    }
  } else {
    confirmation.hidden = true;
  }
}

async function submitRatingForm(): Promise<void> {
  if (!controller) return;
  const conformity = Number(($("conformity") as HTMLInputElement).value);
  const justification = ($("justification") as HTMLTextAreaElement).value;
  const agreement: Record<string, number> = {};
  for (const select of document.querySelectorAll<HTMLSelectElement>(".agreement")) {
    if (select.value !== "") agreement[select.name] = Number(select.value);
  }
  try {
    await controller.rate({ conformity, justification, item_agreement: agreement });
  } catch {
    /* problems are already on the notice banner */
  }
}

// -- wiring ------------------------------------------------------------------------

export function start(): void {
  loadConfig();
  ($("base-url") as HTMLInputElement).value = config.baseUrl;
  ($("token") as HTMLInputElement).value = config.token;
  ($("annotator") as HTMLInputElement).value = config.annotator;

  $("connect").addEventListener("click", () => void connect());
  $("chat-send").addEventListener("click", () => {
    const input = $("chat-input") as HTMLTextAreaElement;
    const text = input.value;
    input.value = "";
    void controller?.send(text).catch(() => {
      input.value = text; // rolled back: leave the message re-sendable
    });
  });
  $("rating-submit").addEventListener("click", () => void submitRatingForm());
  $("session-close").addEventListener("click", () => void controller?.close());
}

start();
