"""Uniform boundary to chat-completion and text-embedding backends.

Two backends share one interface: ``HttpBackend`` speaks a
chat-completions-style JSON API (messages array in, choices out; same shape
for embeddings), and ``StubBackend`` is a deterministic, referentially
transparent stand-in whose chat output is a pure function of
(messages, config) — the thing that makes desk-scale end-to-end runs
bit-reproducible.

Error taxonomy: transport failures that persist past the retry budget raise
``TransientError``; a reachable endpoint answering with non-2xx status or a
malformed payload raises ``BackendError``. Both are ``GatewayError`` s.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import BackendError, ConfigError, TransientError

API_KEY_ENV_VAR = "STUDENTSIM_API_KEY"
DEFAULT_EMBEDDING_MODEL = "bge-m3"
DEFAULT_PARALLELISM = 4

# Marker appended to re-ask prompts after unparseable output. The stub keys
# scripted retry behavior off the number of these markers in the message
# list, so "fail twice then succeed" scenarios stay pure functions.
REASK_NUDGE = "[format-reminder]"

VALID_ROLES = ("system", "user", "assistant")


@dataclass
class ChatMessage:
    role: str
    content: str

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass
class GenConfig:
    """Decoding and transport knobs for one backend call family."""

    model: str = "stub-chat"
    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    temperature: float | None = None  # None = backend default settings
    options: dict = field(default_factory=dict)
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.retries < 0:
            raise ConfigError(f"retries must be >= 0, got {self.retries}")


@dataclass
class EmbeddingVector:
    """Raw (pre-normalization) sentence embedding."""

    values: np.ndarray
    model: str

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


def validate_messages(messages: list[ChatMessage]) -> None:
    """Enforce: non-empty, known roles, user/assistant alternation after any
    leading system messages."""
    if not messages:
        raise ValueError("messages must be non-empty")
    for i, m in enumerate(messages):
        if m.role not in VALID_ROLES:
            raise ValueError(f"messages[{i}]: unknown role {m.role!r}")
        if not isinstance(m.content, str) or not m.content:
            raise ValueError(f"messages[{i}]: content must be non-empty text")
    body = [m for m in messages if m.role != "system"]
    head = messages[: len(messages) - len(body)]
    if any(m.role != "system" for m in head):
        raise ValueError("system messages must precede user/assistant turns")
    for i, m in enumerate(body):
        expected = "user" if i % 2 == 0 else "assistant"
        if m.role != expected:
            raise ValueError(
                f"conversation must alternate user/assistant; turn {i} is {m.role!r}"
            )


class LlmGateway:
    """Validating, rate-limited front door shared by all agent roles.

    Bounded parallelism: at most ``parallelism`` calls are in flight at once
    (admission only — calls themselves are independent).
    """

    def __init__(self, backend, config: GenConfig | None = None, parallelism: int = DEFAULT_PARALLELISM):
        if parallelism < 1:
            raise ConfigError(f"parallelism must be >= 1, got {parallelism}")
        self.backend = backend
        self.config = config or GenConfig()
        self._gate = threading.BoundedSemaphore(parallelism)
        self._lock = threading.Lock()
        self.chat_calls = 0
        self.embed_calls = 0

    def chat(self, messages: list[ChatMessage], config: GenConfig | None = None) -> str:
        validate_messages(messages)
        cfg = config or self.config
        with self._gate:
            text = self.backend.chat(messages, cfg)
        with self._lock:
            self.chat_calls += 1
        return text

    def embed(self, text: str, config: GenConfig | None = None) -> EmbeddingVector:
        if not text:
            raise ValueError("cannot embed empty text")
        cfg = config or self.config
        with self._gate:
            values = np.asarray(self.backend.embed(text, cfg), dtype=float)
        if values.ndim != 1 or not np.all(np.isfinite(values)):
            raise BackendError(f"backend returned a malformed embedding (shape {values.shape})")
        with self._lock:
            self.embed_calls += 1
        return EmbeddingVector(values=values, model=cfg.embedding_model)


class HttpBackend:
    """Chat-completions-style JSON HTTP client.

    Retries apply to transport-level failures only (connection errors,
    timeouts); an endpoint that answers at all but with a non-2xx status or
    an unexpected payload is a backend error and is not retried. A single
    logical call never blocks past timeout x (retries + 1).
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        transport=None,
        sleep=time.sleep,
        clock=time.monotonic,
    ):
        if not base_url:
            raise ConfigError("base_url must be set for the HTTP backend")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR, "")
        if transport is None:
            import requests

            transport = requests
            self._transport_errors = (requests.RequestException,)
        else:
            self._transport_errors = (ConnectionError, TimeoutError, OSError)
        self.transport = transport
        self._sleep = sleep
        self._clock = clock

    def _headers(self) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def _post(self, path: str, payload: dict, config: GenConfig) -> dict:
        url = f"{self.base_url}{path}"
        deadline = self._clock() + config.timeout * (config.retries + 1)
        last_error: Exception | None = None
        for attempt in range(config.retries + 1):
            remaining = deadline - self._clock()
            if remaining <= 0:
                break
            try:
                response = self.transport.post(
                    url,
                    json=payload,
                    headers=self._headers(),
                    timeout=min(config.timeout, remaining),
                )
            except self._transport_errors as exc:
                last_error = exc
                backoff = min(0.1 * 2**attempt, max(0.0, deadline - self._clock()))
                if attempt < config.retries and backoff > 0:
                    self._sleep(backoff)
                continue
            if not 200 <= response.status_code < 300:
                raise BackendError(f"{url} answered HTTP {response.status_code}")
            try:
                return response.json()
            except ValueError as exc:
                raise BackendError(f"{url} returned non-JSON payload") from exc
        raise TransientError(
            f"{url} unreachable after {config.retries + 1} attempts: {last_error}"
        )

    def chat(self, messages: list[ChatMessage], config: GenConfig) -> str:
        payload = {"model": config.model, "messages": [m.to_dict() for m in messages]}
        if config.temperature is not None:
            payload["temperature"] = config.temperature
        payload.update(config.options)
        body = self._post("/chat/completions", payload, config)
        try:
            return body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected chat payload shape: {body!r:.200}") from exc

    def embed(self, text: str, config: GenConfig) -> np.ndarray:
        payload = {"model": config.embedding_model, "input": text}
        body = self._post("/embeddings", payload, config)
        try:
            return np.asarray(body["data"][0]["embedding"], dtype=float)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise BackendError(f"unexpected embedding payload shape: {body!r:.200}") from exc


_ROLE_TAG = re.compile(r"^ROLE:\s*(\S+)", re.MULTILINE)
_PROFILE_ID = re.compile(r"\bid:\s*(sp-[0-9a-f]+)")


def _digest(*parts: str) -> int:
    h = hashlib.sha256("\x1f".join(parts).encode()).digest()
    return int.from_bytes(h[:8], "big")


class StubBackend:
    """Deterministic offline backend.

    Dispatch order for chat:

    1. ``canned`` — exact match on the last user message.
    2. ``scripts[role]`` — a list indexed by how many re-ask markers appear
       in the conversation so far (so attempt 1 gets index 0, the first
       re-ask gets index 1, ...; the last entry repeats).
    3. A built-in schema-valid responder per role tag (questioner / student /
       dialogue / scorer-profile / scorer-behavior / expert).

    Scorer responses are keyed by the profile id quoted in the prompt:
    ids in ``high_ids`` score 9 (profile round) and 10 (behavior round),
    every other id hashes to 1-8. Embeddings are hash-seeded Gaussian
    vectors of fixed dimension.
    """

    def __init__(
        self,
        canned: dict[str, str] | None = None,
        scripts: dict[str, list[str]] | None = None,
        high_ids: set[str] | None = None,
        embedding_dim: int = 256,
    ):
        if embedding_dim < 1:
            raise ConfigError(f"embedding_dim must be >= 1, got {embedding_dim}")
        self.canned = dict(canned or {})
        self.scripts = {k: list(v) for k, v in (scripts or {}).items()}
        self.high_ids = set(high_ids or ())
        self.embedding_dim = embedding_dim

    # -- chat ---------------------------------------------------------------

    def chat(self, messages: list[ChatMessage], config: GenConfig) -> str:
        last_user = next((m.content for m in reversed(messages) if m.role == "user"), "")
        if last_user in self.canned:
            return self.canned[last_user]

        role = "generic"
        for m in messages:
            if m.role == "system":
                tag = _ROLE_TAG.search(m.content)
                if tag:
                    role = tag.group(1)
                break

        if role in self.scripts and self.scripts[role]:
            script = self.scripts[role]
            nudges = sum(m.content.count(REASK_NUDGE) for m in messages)
            return script[min(nudges, len(script) - 1)]

        seed = _digest(
            role,
            config.model,
            str(config.temperature),
            *(f"{m.role}:{m.content}" for m in messages),
        )
        return self._default_response(role, messages, seed)

    def _default_response(self, role: str, messages: list[ChatMessage], seed: int) -> str:
        profile_id = ""
        for m in messages:
            found = _PROFILE_ID.search(m.content)
            if found:
                profile_id = found.group(1)
                break

        if role == "questioner":
            return json.dumps(
                {
                    "questions": [
                        "Your profile pairs your age with your academic standing; walk me through that timeline.",
                        "Your questionnaire answers and your personality description could be read as pulling in different directions; how do both hold at once?",
                        "One of the obstacles you reported seems at odds with your stated motivation; can you reconcile them?",
                    ]
                }
            )
        if role == "student":
            return f"Speaking as the student described, here is my honest account (case {seed % 9973})."
        if role == "dialogue":
            return f"That reminds me of something about my studies I wanted to share (turn note {seed % 9973})."
        if role in ("scorer-profile", "scorer-behavior"):
            if profile_id and profile_id in self.high_ids:
                score = 9 if role == "scorer-profile" else 10
            elif profile_id:
                score = 1 + _digest(role, profile_id) % 8
            else:
                score = 1 + seed % 10
            return json.dumps(
                {"score": score, "explanation": f"Deterministic {role} judgment (case {seed % 9973})."}
            )
        if role == "expert":
            return f"As the advisor in this session, I will keep probing (note {seed % 9973})."
        return f"OK (case {seed % 9973})."

    # -- embeddings ----------------------------------------------------------

    def embed(self, text: str, config: GenConfig) -> np.ndarray:
        seed = _digest("embed", config.embedding_model, text)
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.embedding_dim)
