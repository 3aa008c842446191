"""
Expert annotation sessions
==========================

Automated scores select candidates; human experts validate them. The
annotation service exposes a finished run's candidates for live chat
sessions: an expert converses with the agent (which answers in character
from its profile), and only after a minimum number of exchanges may the
expert submit a conformity rating. Automated scores stay hidden until the
rating is in, so the expert's judgment is never anchored. Every event is
appended to a JSONL log, so a restarted service replays its full state.

This demo drives the service objects in process. Over HTTP the same flow is

    studentsim serve --out run --token SECRET --port 8100
    curl -H 'Authorization: Bearer SECRET' localhost:8100/candidates
    curl -H 'Authorization: Bearer SECRET' -X POST localhost:8100/sessions \
         -d '{"agent_id": "...", "annotator": "expert-1"}'
    ...

and the bundled web frontend (frontend/) wraps it in a three-pane UI.
"""

import pathlib
import tempfile

from studentsim import GenConfig, LlmGateway, RunConfig, StubBackend, run_pipeline
from studentsim.service import AnnotationService

workdir = pathlib.Path(tempfile.mkdtemp(prefix="studentsim-demo-"))

# The service needs a finished run to know who the candidates are.
result = run_pipeline(
    RunConfig(seed=5, n_profiles=10, stub_high_count=3, out_dir=str(workdir / "run"))
)
gateway = LlmGateway(StubBackend(), GenConfig())
service = AnnotationService(result.out_dir, gateway, min_turns=5)

candidates = service.list_candidates()
print(f"candidates offered for annotation: {[c['agent_id'] for c in candidates]}")
print("(automated scores are deliberately absent from this listing)")

# Open a session and chat. Below min_turns, rating attempts are refused.
agent = candidates[0]["agent_id"]
session = service.create_session(agent, annotator="expert-1")
sid = session.session_id
print(f"\nsession {sid} with {agent}")

for i in range(5):
    turn = service.post_turn(sid, f"Tell me about your study habits, part {i + 1}.")
    if i == 0:
        print(f"  expert: Tell me about your study habits, part 1.")
        print(f"  agent:  {turn['agent'][:70]}...")

view = service.submit_rating(
    sid,
    conformity=84,
    justification="Answers stayed consistent with the stated persona.",
    item_agreement={"age": 5, "major": 4},
)
print(f"\nrating submitted: {view['rating']['conformity']}/100 "
      f"(normalized {view['rating']['normalized']})")
print(f"automated scores revealed after rating: {view['automated_scores']}")

# The export aggregates expert means per agent - directly consumable as a
# gold standard by the metrics (see demo 04).
export = service.export()
print(f"\nexport: {export['agents']}")

# Restarting the service replays the append-only event log.
revived = AnnotationService(result.out_dir, gateway, min_turns=5)
print(f"after replay: session count = {len(revived.sessions)}, "
      f"status = {revived.sessions[sid].status}")
