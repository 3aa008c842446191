"""
Two-round consistency scoring
=============================

Each profile is vetted by dialogue. Round one probes the written profile:
a questioner drafts three pointed questions, the student agent defends its
answers in character, and a scorer grades the defense 1-10. Round two
ignores the sheet and watches behavior: a dialogue agent holds a 15-exchange
conversation with the student, and a scorer grades how consistently the
student stayed in character. Both rounds repeat (twice by default) and the
repetitions are averaged.

This demo runs against the deterministic stub backend, so it is fast,
offline, and reproducible. Point GenConfig/HttpBackend at any
chat-completions server to run the same code against a real model.
"""

from studentsim import (
    GenConfig,
    LlmGateway,
    StubBackend,
    collect_defenses,
    generate_questions,
    run_behavior_dialogue,
    sample_profile,
    score_behavior,
    score_profile,
)

profile = sample_profile("demo:0")

# The stub backend replies deterministically; profiles listed in high_ids
# are scored as strong performers (9 for the profile round, 10 for behavior).
backend = StubBackend(high_ids={profile.id})
gateway = LlmGateway(backend, GenConfig())

# -- round one: probe the profile ------------------------------------------------
questions = generate_questions(gateway, profile)
print("probe questions:")
for q in questions.questions:
    print(f"  - {q}")

defenses = collect_defenses(gateway, profile, questions)
print(f"\nfirst defense: {defenses.answers[0][:90]}...")

profile_score = score_profile(gateway, profile, questions, defenses, repetition=0)
print(f"\nprofile-consistency score: {profile_score.value}/10")
print(f"scorer explanation:        {profile_score.explanation[:70]}")

# -- round two: watch behavior ----------------------------------------------------
transcript = run_behavior_dialogue(gateway, profile, n_turns=15, repetition=0)
print(f"\nbehavior dialogue: {transcript.n_exchanges} exchanges")
print(f"  agent opener:  {transcript.turns[0][1][:60]}...")
print(f"  student reply: {transcript.turns[1][1][:60]}...")

behavior_score = score_behavior(gateway, profile, transcript, repetition=0)
print(f"\nbehavior-consistency score: {behavior_score.value}/10")

# Every LLM call went through one gateway, which counts usage.
print(f"\nchat calls for one repetition of each round: {gateway.chat_calls}")
