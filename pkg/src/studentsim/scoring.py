"""Two-round consistency scoring of student agents.

Round 1 (profile): a questioning agent extracts potential contradictions
from the profile, the student agent defends each probe, and a profile
scorer judges the defense as one integer 1-10 plus an explanation.

Round 2 (behavior): a dialogue agent holds an open-ended conversation with
the student agent for a fixed number of exchanges (default 15), and a
behavior scorer judges the whole transcript on the same 1-10 scale.

Scorer and questioner outputs must be JSON; unparseable output triggers a
bounded re-ask (default 2) before the profile is recorded as failed and
excluded downstream — a bad profile never aborts the run.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import prompts
from .errors import GatewayError, ScorerParseError, ScoringError
from .gateway import REASK_NUDGE, ChatMessage, LlmGateway
from .profiles import StudentProfile, render_profile

DEFAULT_N_TURNS = 15
DEFAULT_REASKS = 2
SCORE_MIN, SCORE_MAX = 1, 10


@dataclass
class ScoringInstruction:
    kind: str  # "profile" | "behavior"
    prompt: str
    schema: str
    version: str = prompts.PROMPT_VERSION


@dataclass
class QuestionSet:
    profile_id: str
    questions: list[str]


@dataclass
class ResponseSet:
    profile_id: str
    answers: list[str]


@dataclass
class Transcript:
    profile_id: str
    purpose: str  # "probe" | "behavior" | "expert_session"
    turns: list[list[str]] = field(default_factory=list)  # [role, text] pairs

    @property
    def n_exchanges(self) -> int:
        return len(self.turns) // 2

    def to_dict(self) -> dict:
        return {"profile_id": self.profile_id, "purpose": self.purpose, "turns": self.turns}

    @classmethod
    def from_dict(cls, d: dict) -> "Transcript":
        return cls(d["profile_id"], d["purpose"], [list(t) for t in d["turns"]])


@dataclass
class ScoreRecord:
    profile_id: str
    kind: str  # "profile" | "behavior"
    phase: str  # "initial" | "propagated" | "expert"
    value: float
    explanation: str
    scorer: str
    timestamp: float
    repetition: int | None = None

    def to_dict(self) -> dict:
        d = {
            "profile_id": self.profile_id,
            "kind": self.kind,
            "phase": self.phase,
            "value": self.value,
            "explanation": self.explanation,
            "scorer": self.scorer,
            "timestamp": self.timestamp,
        }
        if self.repetition is not None:
            d["repetition"] = self.repetition
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreRecord":
        return cls(
            profile_id=d["profile_id"],
            kind=d["kind"],
            phase=d["phase"],
            value=d["value"],
            explanation=d["explanation"],
            scorer=d["scorer"],
            timestamp=d["timestamp"],
            repetition=d.get("repetition"),
        )


def profile_instruction() -> ScoringInstruction:
    return ScoringInstruction(
        kind="profile",
        prompt=prompts.SCORER_PROFILE_SYSTEM,
        schema='{"score": <integer 1-10>, "explanation": <string>}',
    )


def behavior_instruction() -> ScoringInstruction:
    return ScoringInstruction(
        kind="behavior",
        prompt=prompts.SCORER_BEHAVIOR_SYSTEM,
        schema='{"score": <integer 1-10>, "explanation": <string>}',
    )


# -- parsing ------------------------------------------------------------------


def _json_objects(raw: str):
    """Yield every JSON object parseable from some '{' in raw, left to right."""
    decoder = json.JSONDecoder()
    idx = raw.find("{")
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(raw, idx)
        except ValueError:
            pass
        else:
            if isinstance(obj, dict):
                yield obj
        idx = raw.find("{", idx + 1)


def parse_scorer_output(raw: str) -> tuple[int, str]:
    """Extract the first JSON object carrying an integer score in [1, 10] and
    a non-empty explanation; tolerant of surrounding prose and code fences."""
    saw_out_of_range = False
    for obj in _json_objects(raw):
        if "score" not in obj:
            continue
        score = obj["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            continue
        if isinstance(score, float) and not score.is_integer():
            continue
        score = int(score)
        explanation = obj.get("explanation")
        if not isinstance(explanation, str) or not explanation.strip():
            continue
        if not SCORE_MIN <= score <= SCORE_MAX:
            saw_out_of_range = True
            continue
        return score, explanation
    if saw_out_of_range:
        raise ScorerParseError(
            f"scorer emitted a score outside [{SCORE_MIN}, {SCORE_MAX}]: {raw!r:.200}"
        )
    raise ScorerParseError(f"no scorer JSON object found in: {raw!r:.200}")


def parse_question_output(raw: str) -> list[str]:
    """Extract {"questions": [...]} — a non-empty list of non-empty strings."""
    for obj in _json_objects(raw):
        questions = obj.get("questions")
        if (
            isinstance(questions, list)
            and questions
            and all(isinstance(q, str) and q.strip() for q in questions)
        ):
            return [q.strip() for q in questions]
    raise ScorerParseError(f"no question-list JSON object found in: {raw!r:.200}")


# -- agent calls ----------------------------------------------------------------


def _chat_with_reasks(gateway: LlmGateway, messages: list[ChatMessage], parse, reasks: int, what: str):
    convo = list(messages)
    last_error: ScorerParseError | None = None
    for _ in range(reasks + 1):
        raw = gateway.chat(convo)
        try:
            return parse(raw)
        except ScorerParseError as exc:
            last_error = exc
            convo = convo + [
                ChatMessage("assistant", raw),
                ChatMessage("user", prompts.REASK_TEMPLATE.format(nudge=REASK_NUDGE)),
            ]
    raise ScoringError(f"{what}: output unparseable after {reasks + 1} attempts: {last_error}")


def _tagged_profile_block(profile: StudentProfile) -> str:
    return f"id: {profile.id}\n\n{render_profile(profile).text}"


def generate_questions(
    gateway: LlmGateway, profile: StudentProfile, reasks: int = DEFAULT_REASKS
) -> QuestionSet:
    """Round 1, step 1: probe the profile for potential contradictions."""
    messages = [
        ChatMessage("system", prompts.QUESTIONER_SYSTEM),
        ChatMessage("user", _tagged_profile_block(profile)),
    ]
    questions = _chat_with_reasks(
        gateway, messages, parse_question_output, reasks, f"questioner({profile.id})"
    )
    return QuestionSet(profile_id=profile.id, questions=questions)


def collect_defenses(
    gateway: LlmGateway, profile: StudentProfile, questions: QuestionSet
) -> ResponseSet:
    """Round 1, step 2: the student agent answers each probe in character."""
    if not questions.questions:
        raise ValueError("question set must be non-empty")
    system = ChatMessage("system", prompts.student_system(render_profile(profile).text))
    answers = [
        gateway.chat([system, ChatMessage("user", question)])
        for question in questions.questions
    ]
    return ResponseSet(profile_id=profile.id, answers=answers)


def score_profile(
    gateway: LlmGateway,
    profile: StudentProfile,
    questions: QuestionSet,
    responses: ResponseSet,
    instruction: ScoringInstruction | None = None,
    repetition: int | None = None,
    reasks: int = DEFAULT_REASKS,
    clock=time.time,
) -> ScoreRecord:
    """Round 1, step 3: judge the defense against the profile (Θ_p call)."""
    instruction = instruction or profile_instruction()
    if instruction.kind != "profile":
        raise ValueError(f"instruction.kind must be 'profile', got {instruction.kind!r}")
    if len(responses.answers) != len(questions.questions):
        raise ValueError(
            f"{len(responses.answers)} answers for {len(questions.questions)} questions"
        )
    exchange = "\n\n".join(
        f"Q{i + 1}: {q}\nA{i + 1}: {a}"
        for i, (q, a) in enumerate(zip(questions.questions, responses.answers))
    )
    body = f"{_tagged_profile_block(profile)}\n\n## Probing exchange\n{exchange}"
    if repetition is not None:
        body += f"\n\nrepetition: {repetition}"
    value, explanation = _chat_with_reasks(
        gateway,
        [ChatMessage("system", instruction.prompt), ChatMessage("user", body)],
        parse_scorer_output,
        reasks,
        f"profile-scorer({profile.id})",
    )
    return ScoreRecord(
        profile_id=profile.id,
        kind="profile",
        phase="initial",
        value=value,
        explanation=explanation,
        scorer=f"scorer-profile/{instruction.version}",
        timestamp=clock(),
        repetition=repetition,
    )


def run_behavior_dialogue(
    gateway: LlmGateway,
    profile: StudentProfile,
    n_turns: int = DEFAULT_N_TURNS,
    repetition: int | None = None,
) -> Transcript:
    """Round 2, step 1: hold an open-ended conversation of exactly n_turns
    dialogue-agent/student exchanges.

    On a backend failure mid-dialogue the partial transcript is attached to
    the raised ScoringError so callers can persist it.
    """
    if n_turns < 1:
        raise ValueError(f"n_turns must be >= 1, got {n_turns}")
    opening = prompts.dialogue_opening(profile.id)
    if repetition is not None:
        opening += f"\nrepetition: {repetition}"
    dialogue_view = [ChatMessage("system", prompts.DIALOGUE_SYSTEM), ChatMessage("user", opening)]
    student_view = [ChatMessage("system", prompts.student_system(render_profile(profile).text))]
    transcript = Transcript(profile_id=profile.id, purpose="behavior")
    try:
        for _ in range(n_turns):
            prompt = gateway.chat(dialogue_view)
            transcript.turns.append(["dialogue", prompt])
            student_view.append(ChatMessage("user", prompt))
            reply = gateway.chat(student_view)
            transcript.turns.append(["student", reply])
            student_view.append(ChatMessage("assistant", reply))
            dialogue_view.append(ChatMessage("assistant", prompt))
            dialogue_view.append(ChatMessage("user", reply))
    except GatewayError as exc:
        raise ScoringError(
            f"behavior dialogue for {profile.id} failed mid-run: {exc}",
            partial_transcript=transcript,
        ) from exc
    return transcript


def score_behavior(
    gateway: LlmGateway,
    profile: StudentProfile,
    transcript: Transcript,
    instruction: ScoringInstruction | None = None,
    repetition: int | None = None,
    reasks: int = DEFAULT_REASKS,
    clock=time.time,
) -> ScoreRecord:
    """Round 2, step 2: judge the whole conversation against the profile (Θ_b)."""
    instruction = instruction or behavior_instruction()
    if instruction.kind != "behavior":
        raise ValueError(f"instruction.kind must be 'behavior', got {instruction.kind!r}")
    if transcript.purpose != "behavior":
        raise ValueError(f"transcript.purpose must be 'behavior', got {transcript.purpose!r}")
    dialogue = "\n".join(f"{role}: {text}" for role, text in transcript.turns)
    body = f"{_tagged_profile_block(profile)}\n\n## Conversation\n{dialogue}"
    if repetition is not None:
        body += f"\n\nrepetition: {repetition}"
    value, explanation = _chat_with_reasks(
        gateway,
        [ChatMessage("system", instruction.prompt), ChatMessage("user", body)],
        parse_scorer_output,
        reasks,
        f"behavior-scorer({profile.id})",
    )
    return ScoreRecord(
        profile_id=profile.id,
        kind="behavior",
        phase="initial",
        value=value,
        explanation=explanation,
        scorer=f"scorer-behavior/{instruction.version}",
        timestamp=clock(),
        repetition=repetition,
    )
