"""Expert annotation service.

Serves a finished run read-only and collects expert judgments on the
selected candidate agents over REST:

    GET  /candidates                  list candidates (profile text, no scores)
    POST /sessions                    open a chat session with one candidate
    GET  /sessions/{id}               session state (refresh-safe restore)
    POST /sessions/{id}/turns         one expert message -> agent reply (atomic pair)
    POST /sessions/{id}/rating        submit the single conformity rating
    POST /sessions/{id}/close         abandon a session without rating
    GET  /export                      per-agent mean expert scores (gold standard)

Every endpoint requires the shared bearer token. Automated scores for an
agent are withheld until the session has been rated, so annotators judge
blind. Sessions and ratings are persisted to an append-only JSONL event log
that is replayed on startup; pipeline artifacts are never modified.

A rating is accepted only after the session has at least ``min_turns``
expert exchanges; the raw 1-100 conformity score is normalized to the 1-10
scale used everywhere else by dividing by ten.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from pydantic import BaseModel, Field

from .errors import GatewayError, StorageError
from .gateway import ChatMessage, GenConfig, HttpBackend, LlmGateway, StubBackend
from .pipeline import CandidateSet, Pipeline, load_run_config
from .profiles import StudentProfile, render_profile
from .prompts import student_system
from . import store as filestore

DEFAULT_MIN_TURNS = 15
AGREEMENT_LEVELS = (1, 2, 3, 4, 5)
STATUS_OPEN = "open"
STATUS_RATED = "rated"
STATUS_CLOSED = "closed"


@dataclass
class Session:
    session_id: str
    agent_id: str
    annotator: str
    status: str = STATUS_OPEN
    turns: list = field(default_factory=list)  # {"expert": str, "agent": str}
    rating: dict | None = None

    @property
    def n_expert_turns(self) -> int:
        return len(self.turns)

    def to_dict(self, min_turns: int, scores: dict | None) -> dict:
        d = {
            "session_id": self.session_id,
            "agent_id": self.agent_id,
            "annotator": self.annotator,
            "status": self.status,
            "turns": list(self.turns),
            "n_expert_turns": self.n_expert_turns,
            "min_turns": min_turns,
            "rating": self.rating,
            "automated_scores": None,
        }
        if self.status == STATUS_RATED and scores is not None:
            d["automated_scores"] = scores
        return d


class AnnotationLog:
    """Append-only JSONL event log with startup replay.

    Each accepted event is one line, flushed and fsynced before the request
    returns. A torn final line (crash mid-append) is dropped on replay; a
    malformed line anywhere else is a storage error.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, event: dict) -> None:
        line = json.dumps(event, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")
                handle.flush()
                os.fsync(handle.fileno())

    def replay(self) -> list[dict]:
        if not self.path.exists():
            return []
        events = []
        lines = self.path.read_text(encoding="utf-8").splitlines()
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                events.append(json.loads(line))
            except json.JSONDecodeError as exc:
                if lineno == len(lines):
                    break  # torn final append; the event never happened
                raise StorageError(f"{self.path}:{lineno}: malformed event: {exc}") from exc
        return events


class AnnotationService:
    """In-memory session state over a finished run, backed by the event log."""

    def __init__(
        self,
        run_dir,
        gateway: LlmGateway,
        min_turns: int = DEFAULT_MIN_TURNS,
        clock=time.time,
        log_path=None,
    ):
        self.run_dir = Path(run_dir)
        self.gateway = gateway
        self.min_turns = min_turns
        self.clock = clock
        files = Pipeline.FILES
        for key in ("profiles", "candidates", "propagation"):
            if not (self.run_dir / files[key]).exists():
                raise StorageError(
                    f"{self.run_dir / files[key]}: missing; point the service at a finished run"
                )
        profiles = filestore.load_records(self.run_dir / files["profiles"], StudentProfile)
        self.profiles = {p.id: p for p in profiles}
        self.profile_texts = {}
        self.candidates = CandidateSet.from_dict(
            filestore.load_json(self.run_dir / files["candidates"])
        )
        propagation = filestore.load_json(self.run_dir / files["propagation"])
        self.scores = {
            agent: {
                "profile": propagation["kinds"]["profile"]["values"][agent],
                "behavior": propagation["kinds"]["behavior"]["values"][agent],
            }
            for agent in self.candidates.ids
        }
        self.log = AnnotationLog(Path(log_path) if log_path else self.run_dir / "annotations.jsonl")
        self.sessions: dict[str, Session] = {}
        self._session_locks: dict[str, threading.Lock] = {}
        self._state_lock = threading.Lock()
        self._next_session = 1
        for event in self.log.replay():
            self._apply(event)

    # - event sourcing -

    def _apply(self, event: dict) -> None:
        kind = event.get("event")
        if kind == "session":
            session = Session(
                session_id=event["session_id"],
                agent_id=event["agent_id"],
                annotator=event["annotator"],
            )
            self.sessions[session.session_id] = session
            self._session_locks[session.session_id] = threading.Lock()
            number = int(session.session_id.split("-")[1])
            self._next_session = max(self._next_session, number + 1)
        elif kind == "turn":
            session = self.sessions[event["session_id"]]
            session.turns.append({"expert": event["expert"], "agent": event["agent"]})
        elif kind == "rating":
            session = self.sessions[event["session_id"]]
            session.rating = event["rating"]
            session.status = STATUS_RATED
        elif kind == "close":
            self.sessions[event["session_id"]].status = STATUS_CLOSED
        else:
            raise StorageError(f"unknown event type {kind!r} in {self.log.path}")

    # - read side -

    def profile_text(self, agent_id: str) -> str:
        if agent_id not in self.profile_texts:
            self.profile_texts[agent_id] = render_profile(self.profiles[agent_id]).text
        return self.profile_texts[agent_id]

    def list_candidates(self) -> list[dict]:
        by_agent: dict[str, int] = {}
        for session in self.sessions.values():
            by_agent[session.agent_id] = by_agent.get(session.agent_id, 0) + 1
        return [
            {
                "agent_id": agent,
                "profile_text": self.profile_text(agent),
                "n_sessions": by_agent.get(agent, 0),
            }
            for agent in self.candidates.ids
        ]

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise HTTPException(404, f"unknown session {session_id!r}") from None

    def session_view(self, session: Session) -> dict:
        return session.to_dict(self.min_turns, self.scores.get(session.agent_id))

    # - write side -

    def create_session(self, agent_id: str, annotator: str) -> Session:
        if agent_id not in self.profiles:
            raise HTTPException(404, f"unknown agent {agent_id!r}")
        if agent_id not in self.candidates:
            raise HTTPException(
                403, f"agent {agent_id!r} is not in the candidate set; only candidates are annotated"
            )
        with self._state_lock:
            session = Session(
                session_id=f"s-{self._next_session}", agent_id=agent_id, annotator=annotator
            )
            self._next_session += 1
            self.log.append(
                {
                    "event": "session",
                    "session_id": session.session_id,
                    "agent_id": agent_id,
                    "annotator": annotator,
                }
            )
            self.sessions[session.session_id] = session
            self._session_locks[session.session_id] = threading.Lock()
        return session

    def post_turn(self, session_id: str, text: str) -> dict:
        session = self.get_session(session_id)
        with self._session_locks[session_id]:
            if session.status != STATUS_OPEN:
                raise HTTPException(409, f"session {session_id} is {session.status}; no further turns")
            messages = [ChatMessage("system", student_system(self.profile_text(session.agent_id)))]
            for turn in session.turns:
                messages.append(ChatMessage("user", turn["expert"]))
                messages.append(ChatMessage("assistant", turn["agent"]))
            messages.append(ChatMessage("user", text))
            try:
                reply = self.gateway.chat(messages)
            except GatewayError as exc:
                # Nothing was recorded; the annotator can simply retry.
                raise HTTPException(502, f"agent backend failure: {exc}") from exc
            self.log.append(
                {"event": "turn", "session_id": session_id, "expert": text, "agent": reply}
            )
            session.turns.append({"expert": text, "agent": reply})
            return {"expert": text, "agent": reply, "n_expert_turns": session.n_expert_turns}

    def submit_rating(
        self, session_id: str, conformity: int, justification: str, item_agreement: dict
    ) -> dict:
        session = self.get_session(session_id)
        with self._session_locks[session_id]:
            if session.status == STATUS_RATED:
                raise HTTPException(409, f"session {session_id} already has its rating")
            if session.status == STATUS_CLOSED:
                raise HTTPException(409, f"session {session_id} is closed")
            if session.n_expert_turns < self.min_turns:
                raise HTTPException(
                    403,
                    f"rating requires at least {self.min_turns} expert turns; "
                    f"session has {session.n_expert_turns}",
                )
            if not justification.strip():
                raise HTTPException(422, "justification must be non-empty")
            for item, level in item_agreement.items():
                if level not in AGREEMENT_LEVELS:
                    raise HTTPException(
                        422, f"item_agreement[{item!r}] must be in {list(AGREEMENT_LEVELS)}, got {level}"
                    )
            rating = {
                "session_id": session_id,
                "agent_id": session.agent_id,
                "annotator": session.annotator,
                "conformity": conformity,
                "normalized": conformity / 10.0,
                "justification": justification,
                "item_agreement": dict(item_agreement),
                "timestamp": self.clock(),
            }
            self.log.append({"event": "rating", "session_id": session_id, "rating": rating})
            session.rating = rating
            session.status = STATUS_RATED
            return self.session_view(session)

    def close_session(self, session_id: str) -> dict:
        session = self.get_session(session_id)
        with self._session_locks[session_id]:
            if session.status == STATUS_RATED:
                raise HTTPException(409, f"session {session_id} is rated; it cannot be closed")
            if session.status != STATUS_CLOSED:
                self.log.append({"event": "close", "session_id": session_id})
                session.status = STATUS_CLOSED
            return self.session_view(session)

    def export(self) -> dict:
        per_agent: dict[str, list[dict]] = {}
        for session in self.sessions.values():
            if session.status == STATUS_RATED and session.rating:
                per_agent.setdefault(session.agent_id, []).append(session.rating)
        agents = {}
        for agent, ratings in sorted(per_agent.items()):
            normalized = [r["normalized"] for r in ratings]
            agents[agent] = {
                "expert_mean": sum(normalized) / len(normalized),
                "n_ratings": len(ratings),
                "ratings": ratings,
            }
        return {"schema": "annotation-export/v1", "min_turns": self.min_turns, "agents": agents}


# -- REST layer ------------------------------------------------------------------------


class SessionCreate(BaseModel):
    agent_id: str
    annotator: str = Field(min_length=1)


class TurnCreate(BaseModel):
    text: str = Field(min_length=1)


class RatingCreate(BaseModel):
    conformity: int = Field(ge=1, le=100)
    justification: str
    item_agreement: dict[str, int] = Field(default_factory=dict)


def build_app(
    run_dir,
    token: str,
    min_turns: int = DEFAULT_MIN_TURNS,
    backend_name: str = "stub",
    base_url: str | None = None,
    api_key: str | None = None,
    gateway: LlmGateway | None = None,
    clock=time.time,
    log_path=None,
) -> FastAPI:
    """Assemble the FastAPI app over one finished run directory."""
    if not token:
        raise StorageError("the annotation service requires a non-empty bearer token")
    if gateway is None:
        config = load_run_config(Path(run_dir) / Pipeline.FILES["config"], out_dir=str(run_dir))
        if backend_name == "http":
            backend = HttpBackend(base_url or config.base_url, api_key=api_key or config.api_key)
        else:
            backend = StubBackend(embedding_dim=config.embedding_dim)
        gateway = LlmGateway(
            backend,
            GenConfig(
                model=config.model,
                embedding_model=config.embedding_model,
                temperature=config.temperature,
                timeout=config.timeout,
                retries=config.retries,
            ),
            parallelism=config.parallelism,
        )
    service = AnnotationService(
        run_dir, gateway, min_turns=min_turns, clock=clock, log_path=log_path
    )

    async def require_token(request: Request) -> None:
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(401, "missing or invalid bearer token")

    app = FastAPI(title="studentsim annotation service", dependencies=[Depends(require_token)])
    app.state.service = service

    @app.get("/candidates")
    def candidates() -> list[dict]:
        return service.list_candidates()

    @app.post("/sessions", status_code=201)
    def create_session(body: SessionCreate) -> dict:
        session = service.create_session(body.agent_id, body.annotator)
        return service.session_view(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        return service.session_view(service.get_session(session_id))

    @app.post("/sessions/{session_id}/turns")
    def post_turn(session_id: str, body: TurnCreate) -> dict:
        return service.post_turn(session_id, body.text)

    @app.post("/sessions/{session_id}/rating")
    def submit_rating(session_id: str, body: RatingCreate) -> dict:
        return service.submit_rating(
            session_id, body.conformity, body.justification, body.item_agreement
        )

    @app.post("/sessions/{session_id}/close")
    def close_session(session_id: str) -> dict:
        return service.close_session(session_id)

    @app.get("/export")
    def export() -> dict:
        return service.export()

    return app
