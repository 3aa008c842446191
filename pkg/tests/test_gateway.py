import random

import numpy as np
import pytest

from studentsim.errors import BackendError, ConfigError, GatewayError, TransientError
from studentsim.gateway import (
    REASK_NUDGE,
    ChatMessage,
    GenConfig,
    HttpBackend,
    LlmGateway,
    StubBackend,
    validate_messages,
)


def msgs(*pairs):
    return [ChatMessage(role, content) for role, content in pairs]


# -- message validation -------------------------------------------------------


def test_validate_accepts_system_then_alternation():
    validate_messages(
        msgs(("system", "s"), ("user", "u1"), ("assistant", "a1"), ("user", "u2"))
    )


def test_validate_rejects_empty_list():
    with pytest.raises(ValueError):
        validate_messages([])


def test_validate_rejects_unknown_role():
    with pytest.raises(ValueError):
        validate_messages(msgs(("robot", "hi")))


def test_validate_rejects_empty_content():
    with pytest.raises(ValueError):
        validate_messages(msgs(("user", "")))


def test_validate_rejects_system_after_user():
    with pytest.raises(ValueError):
        validate_messages(msgs(("user", "u"), ("system", "late")))


def test_validate_rejects_broken_alternation():
    with pytest.raises(ValueError):
        validate_messages(msgs(("user", "u1"), ("user", "u2")))


# -- stub backend --------------------------------------------------------------


def test_canned_rule():
    gw = LlmGateway(StubBackend(canned={"ping": "pong"}))
    assert gw.chat(msgs(("user", "ping"))) == "pong"


def test_stub_chat_is_deterministic():
    gw = LlmGateway(StubBackend())
    conversation = msgs(("system", "ROLE: student\nBe the student."), ("user", "why?"))
    assert gw.chat(conversation) == gw.chat(conversation)


def test_stub_chat_varies_with_input():
    gw = LlmGateway(StubBackend())
    a = gw.chat(msgs(("system", "ROLE: student\n."), ("user", "first question")))
    b = gw.chat(msgs(("system", "ROLE: student\n."), ("user", "second question")))
    assert a != b


def test_scripted_responses_step_on_reask_markers():
    stub = StubBackend(scripts={"scorer-profile": ["garbage", '{"score": 6, "explanation": "ok"}']})
    gw = LlmGateway(stub)
    base = msgs(("system", "ROLE: scorer-profile\n."), ("user", "score this"))
    assert gw.chat(base) == "garbage"
    retry = base + msgs(("assistant", "garbage"), ("user", f"{REASK_NUDGE} emit JSON"))
    assert gw.chat(retry) == '{"score": 6, "explanation": "ok"}'


def test_high_ids_drive_scorer_output():
    stub = StubBackend(high_ids={"sp-00000000000000aa"})
    gw = LlmGateway(stub)

    def score_for(pid, role):
        import json

        raw = gw.chat(msgs(("system", f"ROLE: {role}\n."), ("user", f"id: {pid}\nscore it")))
        return json.loads(raw)["score"]

    assert score_for("sp-00000000000000aa", "scorer-profile") == 9
    assert score_for("sp-00000000000000aa", "scorer-behavior") == 10
    for pid in ("sp-00000000000000bb", "sp-00000000000000cc"):
        assert 1 <= score_for(pid, "scorer-profile") <= 8
        assert 1 <= score_for(pid, "scorer-behavior") <= 8


def test_embed_shape_and_determinism():
    gw = LlmGateway(StubBackend(embedding_dim=32))
    v = gw.embed("hello")
    assert v.dimension == 32
    assert np.all(np.isfinite(v.values))
    assert np.array_equal(v.values, gw.embed("hello").values)


def test_embed_distinct_texts_differ():
    # Hash-seeded embeddings must separate distinct inputs; check 1,000 pairs.
    stub = StubBackend(embedding_dim=64)
    cfg = GenConfig()
    rng = random.Random(0)
    alphabet = "abcdefghijklmnopqrstuvwxyz "
    for _ in range(1000):
        a = "".join(rng.choice(alphabet) for _ in range(20))
        b = "".join(rng.choice(alphabet) for _ in range(21))
        assert not np.array_equal(stub.embed(a, cfg), stub.embed(b, cfg))


def test_gateway_counts_calls():
    gw = LlmGateway(StubBackend())
    gw.chat(msgs(("user", "one")))
    gw.chat(msgs(("user", "two")))
    gw.embed("three")
    assert gw.chat_calls == 2
    assert gw.embed_calls == 1


def test_gateway_rejects_empty_embed_text():
    with pytest.raises(ValueError):
        LlmGateway(StubBackend()).embed("")


# -- HTTP backend ---------------------------------------------------------------


class FakeResponse:
    def __init__(self, status_code, body):
        self.status_code = status_code
        self._body = body

    def json(self):
        if isinstance(self._body, Exception):
            raise self._body
        return self._body


class FakeTransport:
    """Scripted transport: each entry is an Exception to raise or a response."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers, "timeout": timeout})
        outcome = self.outcomes[min(len(self.calls) - 1, len(self.outcomes) - 1)]
        if isinstance(outcome, Exception):
            raise outcome
        return outcome


class FakeClock:
    def __init__(self):
        self.now = 0.0

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.now += seconds


def chat_body(text):
    return FakeResponse(200, {"choices": [{"message": {"content": text}}]})


def make_backend(transport, clock=None):
    clock = clock or FakeClock()
    return HttpBackend(
        "http://llm.test/v1", api_key="sk-test", transport=transport, sleep=clock.sleep, clock=clock
    )


def test_http_chat_payload_and_response():
    transport = FakeTransport([chat_body("hi there")])
    backend = make_backend(transport)
    out = backend.chat(msgs(("user", "hello")), GenConfig(model="m1", temperature=0.3))
    assert out == "hi there"
    call = transport.calls[0]
    assert call["url"] == "http://llm.test/v1/chat/completions"
    assert call["json"]["model"] == "m1"
    assert call["json"]["temperature"] == 0.3
    assert call["json"]["messages"] == [{"role": "user", "content": "hello"}]
    assert call["headers"]["Authorization"] == "Bearer sk-test"


def test_http_omits_temperature_when_unset():
    transport = FakeTransport([chat_body("ok")])
    make_backend(transport).chat(msgs(("user", "x")), GenConfig())
    assert "temperature" not in transport.calls[0]["json"]


def test_http_embed_parses_vector():
    transport = FakeTransport([FakeResponse(200, {"data": [{"embedding": [1.0, 2.0]}]})])
    vec = make_backend(transport).embed("text", GenConfig())
    assert np.array_equal(vec, [1.0, 2.0])
    assert transport.calls[0]["url"] == "http://llm.test/v1/embeddings"


def test_unreachable_endpoint_gives_transient_error_after_all_attempts():
    transport = FakeTransport([ConnectionError("refused")])
    backend = make_backend(transport)
    with pytest.raises(TransientError):
        backend.chat(msgs(("user", "x")), GenConfig(retries=2, timeout=10.0))
    assert len(transport.calls) == 3  # initial try + 2 retries


def test_non_2xx_is_backend_error_without_retry():
    transport = FakeTransport([FakeResponse(500, {})])
    with pytest.raises(BackendError):
        make_backend(transport).chat(msgs(("user", "x")), GenConfig(retries=3))
    assert len(transport.calls) == 1


def test_malformed_payload_is_backend_error():
    transport = FakeTransport([FakeResponse(200, {"unexpected": True})])
    with pytest.raises(BackendError):
        make_backend(transport).chat(msgs(("user", "x")), GenConfig())


def test_non_json_body_is_backend_error():
    transport = FakeTransport([FakeResponse(200, ValueError("not json"))])
    with pytest.raises(BackendError):
        make_backend(transport).chat(msgs(("user", "x")), GenConfig())


def test_transient_and_backend_errors_are_both_gateway_errors():
    assert issubclass(TransientError, GatewayError)
    assert issubclass(BackendError, GatewayError)
    assert not issubclass(BackendError, TransientError)


def test_total_time_never_exceeds_budget():
    # Every attempt burns the full per-call timeout; the loop must stop at
    # timeout * (retries + 1) even though retries alone would allow more.
    clock = FakeClock()

    class SlowTransport(FakeTransport):
        def post(self, url, **kwargs):
            clock.now += kwargs.get("timeout") or 0
            return super().post(url, **kwargs)

    transport = SlowTransport([TimeoutError("slow")])
    backend = make_backend(transport, clock)
    cfg = GenConfig(retries=5, timeout=1.0)
    with pytest.raises(TransientError):
        backend.chat(msgs(("user", "x")), cfg)
    assert clock.now <= cfg.timeout * (cfg.retries + 1) + 1e-9


def test_retry_succeeds_after_transient_failures():
    transport = FakeTransport([ConnectionError("x"), ConnectionError("y"), chat_body("late")])
    backend = make_backend(transport)
    assert backend.chat(msgs(("user", "x")), GenConfig(retries=2, timeout=10.0)) == "late"
    assert len(transport.calls) == 3


def test_config_validation():
    with pytest.raises(ConfigError):
        GenConfig(timeout=0)
    with pytest.raises(ConfigError):
        GenConfig(retries=-1)
    with pytest.raises(ConfigError):
        HttpBackend("")
