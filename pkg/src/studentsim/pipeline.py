"""End-to-end run orchestration.

A run is a directory of flat artifacts produced by seven stages:

    generate -> score -> graph -> propagate -> filter -> rank -> report

Each stage reads its inputs from disk and writes its outputs back to disk,
so any stage can be (re)run on its own. A manifest in ``metadata.json``
records content hashes of every stage's inputs and outputs; ``run`` skips a
stage whose recorded input hashes still match (resumability) and re-runs it
otherwise. Wall-clock timings go to a separate ``timings.json`` so that two
runs with the same config produce byte-identical artifacts everywhere else.

Profiles whose scoring fails are excluded from the graph and counted in the
manifest rather than aborting the run.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import default_catalog, load_catalog
from .errors import ConfigError, GatewayError, ScoringError, StorageError
from .gateway import DEFAULT_EMBEDDING_MODEL, GenConfig, HttpBackend, LlmGateway, StubBackend
from .graph import (
    ScoreVector,
    build_graph,
    edge_list,
    fixed_point,
    graph_summary,
    normalize_adjacency,
    normalize_embedding,
    propagate,
)
from .metrics import (
    DEFAULT_GRADE_CUTS,
    DEFAULT_RELEVANCE_THRESHOLD,
    GoldStandard,
    build_report,
    rank_agents,
    render_report,
)
from .profiles import StudentProfile, render_profile, sample_profile
from .prompts import PROMPT_VERSION, prompt_bundle_hash
from .scoring import (
    ScoreRecord,
    Transcript,
    collect_defenses,
    generate_questions,
    run_behavior_dialogue,
    score_behavior,
    score_profile,
)
from . import store

STAGE_ORDER = ["generate", "score", "graph", "propagate", "filter", "rank", "report"]
CANDIDATE_RULES = ("both", "either", "average")
SCORE_KINDS = ("profile", "behavior")


# -- configuration -------------------------------------------------------------------


@dataclass
class RunConfig:
    """Everything a run depends on, minus the output directory.

    ``out_dir`` is deliberately excluded from serialization and hashing: it
    says where artifacts live, not what they contain, and two runs of the
    same config in different directories must be byte-identical.
    """

    seed: int = 0
    n_profiles: int = 559
    catalog_path: str | None = None
    max_item_gap: int = 1
    backend: str = "stub"  # "stub" | "http"
    base_url: str | None = None
    api_key: str | None = None
    model: str = "stub-chat"
    embedding_model: str = DEFAULT_EMBEDDING_MODEL
    embedding_dim: int = 256  # offline backend only
    temperature: float | None = None
    timeout: float = 30.0
    retries: int = 2
    parallelism: int = 4
    reasks: int = 2
    profile_repetitions: int = 2
    behavior_repetitions: int = 2
    n_turns: int = 15
    theta: float = 0.8
    alpha: float = 0.5
    max_iterations: int = 50
    tol: float = 1e-9
    tau: float = 8.0
    candidate_rule: str = "both"
    metric_ks: list[int] | None = None  # None -> [5, n_candidates]
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
    grade_cuts: tuple = DEFAULT_GRADE_CUTS
    gold_path: str | None = None
    stub_high_count: int | None = None  # offline backend: how many agents score high
    out_dir: str = "run"

    def validate(self) -> None:
        problems = []
        if self.n_profiles < 1:
            problems.append(f"n_profiles must be >= 1, got {self.n_profiles}")
        if self.backend not in ("stub", "http"):
            problems.append(f"backend must be 'stub' or 'http', got {self.backend!r}")
        if self.backend == "http" and not self.base_url:
            problems.append("base_url is required for the http backend")
        if self.catalog_path is not None and not Path(self.catalog_path).exists():
            problems.append(f"catalog_path does not exist: {self.catalog_path}")
        if self.gold_path is not None and not Path(self.gold_path).exists():
            problems.append(f"gold_path does not exist: {self.gold_path}")
        if self.max_item_gap < 0:
            problems.append(f"max_item_gap must be >= 0, got {self.max_item_gap}")
        if self.embedding_dim < 1:
            problems.append(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.timeout <= 0:
            problems.append(f"timeout must be positive, got {self.timeout}")
        if self.retries < 0:
            problems.append(f"retries must be >= 0, got {self.retries}")
        if self.parallelism < 1:
            problems.append(f"parallelism must be >= 1, got {self.parallelism}")
        if self.reasks < 0:
            problems.append(f"reasks must be >= 0, got {self.reasks}")
        if self.profile_repetitions < 1 or self.behavior_repetitions < 1:
            problems.append("both repetition counts must be >= 1")
        if self.n_turns < 1:
            problems.append(f"n_turns must be >= 1, got {self.n_turns}")
        if not -1.0 <= self.theta <= 1.0:
            problems.append(f"theta must be in [-1, 1], got {self.theta}")
        if not 0.0 <= self.alpha < 1.0:
            problems.append(f"alpha must be in [0, 1), got {self.alpha}")
        if self.max_iterations < 1:
            problems.append(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.tol < 0:
            problems.append(f"tol must be >= 0, got {self.tol}")
        if not 1.0 < self.tau < 10.0:
            problems.append(f"tau must lie strictly between 1 and 10, got {self.tau}")
        if self.candidate_rule not in CANDIDATE_RULES:
            problems.append(f"candidate_rule must be one of {CANDIDATE_RULES}, got {self.candidate_rule!r}")
        if self.metric_ks is not None and any(k < 1 for k in self.metric_ks):
            problems.append(f"every metric K must be >= 1, got {self.metric_ks}")
        if self.stub_high_count is not None and not 0 <= self.stub_high_count <= self.n_profiles:
            problems.append(
                f"stub_high_count must be in [0, n_profiles], got {self.stub_high_count}"
            )
        if problems:
            raise ConfigError("invalid run config: " + "; ".join(problems))

    def to_dict(self) -> dict:
        d = {}
        for f in fields(self):
            if f.name == "out_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = list(value)
            d[f.name] = value
        return d

    @classmethod
    def from_dict(cls, d: dict, out_dir: str | None = None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        kwargs = dict(d)
        if "grade_cuts" in kwargs and kwargs["grade_cuts"] is not None:
            kwargs["grade_cuts"] = tuple(kwargs["grade_cuts"])
        if out_dir is not None:
            kwargs["out_dir"] = out_dir
        return cls(**kwargs)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()[:16]

    @property
    def run_id(self) -> str:
        return "run-" + self.config_hash[:8]


def load_run_config(path, out_dir: str | None = None) -> RunConfig:
    try:
        raw = store.load_json(path)
    except StorageError as exc:
        raise ConfigError(f"cannot load run config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: run config must be a JSON object")
    config = RunConfig.from_dict(raw, out_dir=out_dir)
    config.validate()
    return config


# -- candidate filtering -------------------------------------------------------------


@dataclass
class CandidateSet:
    """Agents whose propagated scores clear the acceptance bar."""

    ids: list[str]  # ascending id order; ranking is a separate concern
    tau: float
    rule: str
    n_pool: int
    scores: dict  # id -> {"profile": float, "behavior": float}

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, agent_id: str) -> bool:
        return agent_id in self.scores

    def to_dict(self) -> dict:
        return {
            "ids": list(self.ids),
            "tau": self.tau,
            "rule": self.rule,
            "n_pool": self.n_pool,
            "scores": self.scores,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CandidateSet":
        return cls(
            ids=list(d["ids"]),
            tau=d["tau"],
            rule=d["rule"],
            n_pool=d["n_pool"],
            scores=d["scores"],
        )


def filter_candidates(
    profile_scores: dict[str, float],
    behavior_scores: dict[str, float],
    tau: float,
    rule: str = "both",
) -> CandidateSet:
    """Keep agents scoring strictly above tau.

    "both" requires profile AND behavior above the bar (the default,
    strictest reading), "either" requires one, "average" tests the mean of
    the two. Increasing tau can only shrink the set.
    """
    if rule not in CANDIDATE_RULES:
        raise ConfigError(f"candidate_rule must be one of {CANDIDATE_RULES}, got {rule!r}")
    if not 1.0 < tau < 10.0:
        raise ConfigError(f"tau must lie strictly between 1 and 10, got {tau}")
    if set(profile_scores) != set(behavior_scores):
        raise ValueError("profile and behavior scores must cover the same agents")
    kept = []
    for agent in profile_scores:
        p, b = profile_scores[agent], behavior_scores[agent]
        if rule == "both":
            ok = p > tau and b > tau
        elif rule == "either":
            ok = p > tau or b > tau
        else:
            ok = (p + b) / 2.0 > tau
        if ok:
            kept.append(agent)
    kept.sort()
    return CandidateSet(
        ids=kept,
        tau=float(tau),
        rule=rule,
        n_pool=len(profile_scores),
        scores={
            a: {"profile": float(profile_scores[a]), "behavior": float(behavior_scores[a])}
            for a in kept
        },
    )


# -- gold standards ------------------------------------------------------------------


def synthesize_gold(agent_ids: list[str], seed: int) -> dict[str, float]:
    """Hash-derived stand-in expert means on the 1-10 scale, for runs that
    have no human annotation export yet. Clearly labeled wherever used."""
    out = {}
    for agent_id in agent_ids:
        h = hashlib.sha256(f"expert-gold\x1f{seed}\x1f{agent_id}".encode()).digest()
        frac = int.from_bytes(h[:8], "big") / 2**64
        out[agent_id] = round(1.0 + 9.0 * frac, 4)
    return out


def load_gold(path) -> dict[str, float]:
    """Read expert means from either a plain ``{"expert_means": {...}}`` file
    or an annotation-service export (``{"agents": {id: {"expert_mean": x}}}``)."""
    raw = store.load_json(path)
    if isinstance(raw, dict) and "expert_means" in raw:
        means = raw["expert_means"]
    elif isinstance(raw, dict) and "agents" in raw:
        means = {a: info["expert_mean"] for a, info in raw["agents"].items()}
    else:
        raise StorageError(
            f"{path}: expected an 'expert_means' mapping or an annotation export with 'agents'"
        )
    if not isinstance(means, dict) or not means:
        raise StorageError(f"{path}: gold standard is empty")
    return {str(a): float(v) for a, v in means.items()}


# -- the pipeline --------------------------------------------------------------------


@dataclass
class PipelineResult:
    config: RunConfig
    out_dir: Path
    metadata: dict
    executed: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)


class Pipeline:
    """Stage runner over one output directory. See the module docstring."""

    FILES = {
        "config": "config.json",
        "profiles": "profiles.jsonl",
        "transcripts": "transcripts.jsonl",
        "scores_initial": "scores_initial.jsonl",
        "scores_aggregated": "scores_aggregated.json",
        "scoring_errors": "scoring_errors.jsonl",
        "embeddings": "embeddings.npy",
        "graph": "graph.json",
        "edges": "edges.jsonl",
        "propagation": "propagation.json",
        "scores_csv": "scores.csv",
        "candidates": "candidates.json",
        "rankings": "rankings.json",
        "gold": "gold.json",
        "report": "report.json",
        "report_text": "report.txt",
        "metadata": "metadata.json",
        "timings": "timings.json",
    }

    def __init__(self, config: RunConfig):
        config.validate()
        self.config = config
        self.out_dir = Path(config.out_dir)
        self._gateway_instance: LlmGateway | None = None
        # Fixed timestamps under the offline backend keep reruns byte-identical.
        self._clock = (lambda: 0.0) if config.backend == "stub" else time.time

    # - plumbing -

    def path(self, key: str) -> Path:
        return self.out_dir / self.FILES[key]

    def _gateway(self) -> LlmGateway:
        if self._gateway_instance is None:
            if self.config.backend == "stub":
                backend = StubBackend(embedding_dim=self.config.embedding_dim)
            else:
                backend = HttpBackend(self.config.base_url, api_key=self.config.api_key)
            self._gateway_instance = LlmGateway(
                backend,
                GenConfig(
                    model=self.config.model,
                    embedding_model=self.config.embedding_model,
                    temperature=self.config.temperature,
                    timeout=self.config.timeout,
                    retries=self.config.retries,
                ),
                parallelism=self.config.parallelism,
            )
        return self._gateway_instance

    def _stage_config(self, stage: str) -> dict:
        """The config fields a stage's outputs actually depend on; changing
        anything else must not invalidate the stage."""
        c = self.config
        backend_fields = {
            "backend": c.backend,
            "base_url": c.base_url,
            "model": c.model,
            "temperature": c.temperature,
        }
        if stage == "generate":
            return {
                "seed": c.seed,
                "n_profiles": c.n_profiles,
                "catalog_path": c.catalog_path,
                "max_item_gap": c.max_item_gap,
            }
        if stage == "score":
            return {
                **backend_fields,
                "reasks": c.reasks,
                "profile_repetitions": c.profile_repetitions,
                "behavior_repetitions": c.behavior_repetitions,
                "n_turns": c.n_turns,
                "stub_high_count": c.stub_high_count,
            }
        if stage == "graph":
            return {
                "backend": c.backend,
                "base_url": c.base_url,
                "embedding_model": c.embedding_model,
                "embedding_dim": c.embedding_dim,
                "theta": c.theta,
            }
        if stage == "propagate":
            return {"alpha": c.alpha, "max_iterations": c.max_iterations, "tol": c.tol}
        if stage == "filter":
            return {"tau": c.tau, "candidate_rule": c.candidate_rule}
        if stage == "rank":
            return {}
        if stage == "report":
            return {
                "metric_ks": c.metric_ks,
                "relevance_threshold": c.relevance_threshold,
                "grade_cuts": list(c.grade_cuts),
                "gold_path": c.gold_path,
                "seed": c.seed,
            }
        raise ValueError(f"unknown stage {stage!r}")

    def _stage_files(self, stage: str) -> tuple[list[str], list[str]]:
        """(input file keys, output file keys) for a stage."""
        table = {
            "generate": ([], ["profiles"]),
            "score": (
                ["profiles"],
                ["transcripts", "scores_initial", "scores_aggregated", "scoring_errors"],
            ),
            "graph": (["profiles", "scores_aggregated"], ["embeddings", "graph", "edges"]),
            "propagate": (
                ["embeddings", "graph", "scores_aggregated"],
                ["propagation", "scores_csv"],
            ),
            "filter": (["propagation"], ["candidates"]),
            "rank": (["propagation", "scores_aggregated", "candidates"], ["rankings"]),
            "report": (
                ["propagation", "scores_aggregated", "candidates"],
                ["gold", "report", "report_text"],
            ),
        }
        return table[stage]

    def _input_hashes(self, stage: str) -> dict[str, str] | None:
        """Current content hashes of everything the stage depends on, or
        None if a required input file is missing."""
        hashes = {
            "config:" + stage: hashlib.sha256(
                json.dumps(self._stage_config(stage), sort_keys=True).encode()
            ).hexdigest()[:16]
        }
        input_keys, _ = self._stage_files(stage)
        for key in input_keys:
            p = self.path(key)
            if not p.exists():
                return None
            hashes[self.FILES[key]] = store.file_hash(p)
        if stage == "generate" and self.config.catalog_path:
            hashes["catalog"] = store.file_hash(self.config.catalog_path)
        if stage == "report" and self.config.gold_path:
            hashes["gold_input"] = store.file_hash(self.config.gold_path)
        return hashes

    def _load_metadata(self) -> dict:
        p = self.path("metadata")
        if p.exists():
            return store.load_json(p)
        return {"schema": "run-metadata/v1", "stages": {}}

    def _stage_fresh(self, metadata: dict, stage: str) -> bool:
        entry = metadata["stages"].get(stage)
        if entry is None:
            return False
        current = self._input_hashes(stage)
        if current is None or current != entry.get("inputs"):
            return False
        for name, recorded in entry.get("outputs", {}).items():
            p = self.out_dir / name
            if not p.exists() or store.file_hash(p) != recorded:
                return False
        return True

    def _require_inputs(self, stage: str) -> None:
        input_keys, _ = self._stage_files(stage)
        missing = [self.FILES[k] for k in input_keys if not self.path(k).exists()]
        if missing:
            raise StorageError(
                f"stage '{stage}' is missing inputs {missing}; run the earlier stages first"
            )

    # - the stages -

    def _run_generate(self) -> dict:
        c = self.config
        catalog = load_catalog(c.catalog_path) if c.catalog_path else default_catalog()
        profiles = [
            sample_profile(f"{c.seed}:{i}", catalog=catalog, max_item_gap=c.max_item_gap)
            for i in range(c.n_profiles)
        ]
        store.save_records(profiles, self.path("profiles"))
        return {"n_profiles": len(profiles)}

    def _run_score(self) -> dict:
        c = self.config
        profiles = store.load_records(self.path("profiles"), StudentProfile)
        gateway = self._gateway()
        if c.backend == "stub" and c.stub_high_count:
            gateway.backend.high_ids = set(sorted(p.id for p in profiles)[: c.stub_high_count])

        transcripts: list[dict] = []
        records: list[ScoreRecord] = []
        errors: list[dict] = []
        n_dialogues = 0
        for profile in profiles:
            try:
                for rep in range(1, c.profile_repetitions + 1):
                    questions = generate_questions(gateway, profile, reasks=c.reasks)
                    responses = collect_defenses(gateway, profile, questions)
                    records.append(
                        score_profile(
                            gateway,
                            profile,
                            questions,
                            responses,
                            repetition=rep,
                            reasks=c.reasks,
                            clock=self._clock,
                        )
                    )
                    turns = []
                    for q, a in zip(questions.questions, responses.answers):
                        turns.append(["questioner", q])
                        turns.append(["student", a])
                    probe = Transcript(profile_id=profile.id, purpose="probe", turns=turns)
                    transcripts.append({"repetition": rep, **probe.to_dict()})
                    n_dialogues += 1
                for rep in range(1, c.behavior_repetitions + 1):
                    transcript = run_behavior_dialogue(
                        gateway, profile, n_turns=c.n_turns, repetition=rep
                    )
                    records.append(
                        score_behavior(
                            gateway,
                            profile,
                            transcript,
                            repetition=rep,
                            reasks=c.reasks,
                            clock=self._clock,
                        )
                    )
                    transcripts.append({"repetition": rep, **transcript.to_dict()})
                    n_dialogues += 1
            except (ScoringError, GatewayError) as exc:
                errors.append({"profile_id": profile.id, "error": str(exc)})
                records = [r for r in records if r.profile_id != profile.id]
                transcripts = [t for t in transcripts if t["profile_id"] != profile.id]

        failed = {e["profile_id"] for e in errors}
        aggregated: dict[str, dict[str, float]] = {k: {} for k in SCORE_KINDS}
        for profile in profiles:
            if profile.id in failed:
                continue
            for kind in SCORE_KINDS:
                values = [
                    r.value for r in records if r.profile_id == profile.id and r.kind == kind
                ]
                aggregated[kind][profile.id] = float(np.mean(values))

        store.save_jsonl(transcripts, self.path("transcripts"))
        store.save_records(records, self.path("scores_initial"))
        store.save_json(
            {
                "kinds": aggregated,
                "repetitions": {
                    "profile": c.profile_repetitions,
                    "behavior": c.behavior_repetitions,
                },
                "excluded": sorted(failed),
            },
            self.path("scores_aggregated"),
        )
        store.save_jsonl(errors, self.path("scoring_errors"))
        return {
            "n_profiles_scored": len(profiles) - len(failed),
            "n_profiles_failed": len(failed),
            "n_dialogues": n_dialogues,
            "n_score_records": len(records),
        }

    def _run_graph(self) -> dict:
        c = self.config
        profiles = store.load_records(self.path("profiles"), StudentProfile)
        aggregated = store.load_json(self.path("scores_aggregated"))
        scored = set(aggregated["kinds"]["profile"])
        nodes = [p for p in profiles if p.id in scored]
        if not nodes:
            raise StorageError("no successfully scored profiles; cannot build a graph")
        gateway = self._gateway()
        embeddings = np.stack(
            [normalize_embedding(gateway.embed(render_profile(p).text).values) for p in nodes]
        )
        graph = build_graph([p.id for p in nodes], embeddings, theta=c.theta)
        np.save(self.path("embeddings"), embeddings)
        store.save_json(
            {
                "node_ids": graph.node_ids,
                "theta": graph.threshold,
                "summary": graph_summary(graph),
            },
            self.path("graph"),
        )
        store.save_jsonl(edge_list(graph), self.path("edges"))
        return {"n_nodes": graph.n_nodes, "n_edges": graph.n_edges}

    def _rebuild_graph(self):
        meta = store.load_json(self.path("graph"))
        embeddings = np.load(self.path("embeddings"))
        return build_graph(meta["node_ids"], embeddings, theta=meta["theta"])

    def _run_propagate(self) -> dict:
        c = self.config
        graph = self._rebuild_graph()
        normalized = normalize_adjacency(graph)
        aggregated = store.load_json(self.path("scores_aggregated"))
        kinds_out: dict[str, dict] = {}
        counts: dict[str, dict] = {}
        csv_rows: list[dict] = []
        for kind in SCORE_KINDS:
            initial_map = aggregated["kinds"][kind]
            s0 = ScoreVector(
                node_ids=graph.node_ids,
                values=np.array([initial_map[a] for a in graph.node_ids]),
                kind=kind,
                phase="initial",
            )
            result, stats = propagate(
                s0, normalized, alpha=c.alpha, max_iterations=c.max_iterations, tol=c.tol
            )
            reference = fixed_point(s0, normalized, alpha=c.alpha)
            gap = float(np.max(np.abs(result.values - reference.values)))
            kinds_out[kind] = {
                "values": result.as_mapping(),
                "iterations": stats.iterations,
                "residual": stats.residual,
                "fixed_point_gap": gap,
            }
            counts[kind] = {
                "iterations": stats.iterations,
                "residual": stats.residual,
                "fixed_point_gap": gap,
            }
            for agent in graph.node_ids:
                csv_rows.append(
                    {"id": agent, "kind": kind, "phase": "initial", "value": initial_map[agent]}
                )
            for agent in graph.node_ids:
                csv_rows.append(
                    {
                        "id": agent,
                        "kind": kind,
                        "phase": "propagated",
                        "value": kinds_out[kind]["values"][agent],
                    }
                )
        store.save_json(
            {
                "alpha": c.alpha,
                "max_iterations": c.max_iterations,
                "tol": c.tol,
                "kinds": kinds_out,
            },
            self.path("propagation"),
        )
        store.save_csv(csv_rows, self.path("scores_csv"), ["id", "kind", "phase", "value"])
        return counts

    def _run_filter(self) -> dict:
        propagation = store.load_json(self.path("propagation"))
        candidates = filter_candidates(
            propagation["kinds"]["profile"]["values"],
            propagation["kinds"]["behavior"]["values"],
            tau=self.config.tau,
            rule=self.config.candidate_rule,
        )
        store.save_json(candidates.to_dict(), self.path("candidates"))
        return {"n_candidates": len(candidates), "n_pool": candidates.n_pool}

    def _score_sources(self) -> dict[str, dict[str, float]] | None:
        """The six rankable score mappings (initial/propagated x kind/avg),
        restricted to the candidate set. None when there are no candidates."""
        aggregated = store.load_json(self.path("scores_aggregated"))
        propagation = store.load_json(self.path("propagation"))
        candidates = CandidateSet.from_dict(store.load_json(self.path("candidates")))
        if not candidates.ids:
            return None
        ids = candidates.ids
        sources: dict[str, dict[str, float]] = {}
        for phase, maps in (
            ("initial", aggregated["kinds"]),
            ("propagated", {k: propagation["kinds"][k]["values"] for k in SCORE_KINDS}),
        ):
            for kind in SCORE_KINDS:
                sources[f"{kind}-{phase}"] = {a: float(maps[kind][a]) for a in ids}
            sources[f"avg-{phase}"] = {
                a: (float(maps["profile"][a]) + float(maps["behavior"][a])) / 2.0 for a in ids
            }
        return sources

    def _run_rank(self) -> dict:
        sources = self._score_sources()
        if sources is None:
            store.save_json(
                {"note": "no candidates cleared the threshold", "sources": {}},
                self.path("rankings"),
            )
            return {"n_sources": 0, "n_ranked": 0}
        rankings = {name: rank_agents(scores).ids for name, scores in sorted(sources.items())}
        store.save_json(
            {"sources": rankings, "scores": {k: sources[k] for k in sorted(sources)}},
            self.path("rankings"),
        )
        return {"n_sources": len(rankings), "n_ranked": len(next(iter(rankings.values())))}

    def _run_report(self) -> dict:
        c = self.config
        sources = self._score_sources()
        if sources is None:
            message = (
                f"no candidates cleared tau={c.tau} under rule '{c.candidate_rule}'; "
                "nothing to evaluate"
            )
            store.save_json({"source": "none", "expert_means": {}}, self.path("gold"))
            store.save_json({"note": message}, self.path("report"))
            store.save_text(message + "\n", self.path("report_text"))
            return {"gold_source": "none", "n_gold": 0}

        candidate_ids = sorted(next(iter(sources.values())))
        if c.gold_path:
            means = load_gold(c.gold_path)
            means = {a: v for a, v in means.items() if a in set(candidate_ids)}
            if not means:
                raise ConfigError(
                    f"gold standard at {c.gold_path} covers none of the {len(candidate_ids)} candidates"
                )
            gold_source = "file"
        else:
            means = synthesize_gold(candidate_ids, c.seed)
            gold_source = "synthetic"
        store.save_json(
            {"source": gold_source, "expert_means": means}, self.path("gold")
        )
        gold = GoldStandard.from_expert_means(
            means, relevance_threshold=c.relevance_threshold, grade_cuts=c.grade_cuts
        )
        initial = {k: sources[f"{k}-initial"] for k in SCORE_KINDS}
        propagated = {k: sources[f"{k}-propagated"] for k in SCORE_KINDS}
        report = build_report(
            sources,
            gold,
            ks=c.metric_ks,
            initial_scores=initial,
            propagated_scores=propagated,
        )
        if gold_source == "synthetic":
            report.notes.append(
                "gold standard is synthetic (hash-derived); supply gold_path for real expert means"
            )
        store.save_json(report.to_dict(), self.path("report"))
        store.save_text(render_report(report) + "\n", self.path("report_text"))
        return {"gold_source": gold_source, "n_gold": len(means)}

    # - driving -

    def run(self, stages: list[str] | None = None, resume: bool = True) -> PipelineResult:
        requested = list(STAGE_ORDER) if stages is None else list(stages)
        unknown = [s for s in requested if s not in STAGE_ORDER]
        if unknown:
            raise ConfigError(f"unknown stages {unknown}; valid stages are {STAGE_ORDER}")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        store.save_json(self.config.to_dict(), self.path("config"))

        metadata = self._load_metadata()
        metadata.update(
            {
                "run_id": self.config.run_id,
                "config_hash": self.config.config_hash,
                "package_version": __version__,
                "prompt_version": PROMPT_VERSION,
                "prompt_bundle_hash": prompt_bundle_hash(),
                "stage_order": STAGE_ORDER,
            }
        )
        timings = {}
        timings_path = self.path("timings")
        if timings_path.exists():
            timings = store.load_json(timings_path)

        runners = {
            "generate": self._run_generate,
            "score": self._run_score,
            "graph": self._run_graph,
            "propagate": self._run_propagate,
            "filter": self._run_filter,
            "rank": self._run_rank,
            "report": self._run_report,
        }
        result = PipelineResult(config=self.config, out_dir=self.out_dir, metadata=metadata)
        for stage in STAGE_ORDER:
            if stage not in requested:
                continue
            if resume and self._stage_fresh(metadata, stage):
                result.skipped.append(stage)
                continue
            self._require_inputs(stage)
            gateway = self._gateway_instance
            chat_before = gateway.chat_calls if gateway else 0
            embed_before = gateway.embed_calls if gateway else 0
            started = time.perf_counter()
            counts = runners[stage]()
            elapsed = time.perf_counter() - started
            gateway = self._gateway_instance
            _, output_keys = self._stage_files(stage)
            metadata["stages"][stage] = {
                "inputs": self._input_hashes(stage),
                "outputs": {self.FILES[k]: store.file_hash(self.path(k)) for k in output_keys},
                "counts": counts,
                "usage": {
                    "chat_calls": (gateway.chat_calls - chat_before) if gateway else 0,
                    "embed_calls": (gateway.embed_calls - embed_before) if gateway else 0,
                },
            }
            store.save_json(metadata, self.path("metadata"))
            timings[stage] = round(elapsed, 6)
            store.save_json(timings, timings_path)
            result.executed.append(stage)
        store.save_json(metadata, self.path("metadata"))
        result.metadata = metadata
        return result


def run_pipeline(
    config: RunConfig, stages: list[str] | None = None, resume: bool = True
) -> PipelineResult:
    """Run (or resume) the whole pipeline in config.out_dir."""
    return Pipeline(config).run(stages=stages, resume=resume)


# -- post-hoc analysis ----------------------------------------------------------------


def analyze_run(
    out_dir,
    kinds: tuple = SCORE_KINDS,
    phase: str = "propagated",
    seed: int = 0,
    n_trees: int = 100,
) -> dict:
    """Fit attribute-importance forests against a finished run's scores and
    compare attribute distributions between the full population and the
    selected candidates. Writes CSV/JSON artifacts under <out_dir>/analysis."""
    from .analysis import (  # local import: keeps pipeline import light
        distribution_report,
        fit_forest,
        one_hot_encode,
        relative_importance,
    )

    out_dir = Path(out_dir)
    if phase not in ("initial", "propagated"):
        raise ConfigError(f"phase must be 'initial' or 'propagated', got {phase!r}")
    pipeline_files = Pipeline.FILES
    config = load_run_config(out_dir / pipeline_files["config"], out_dir=str(out_dir))
    catalog = load_catalog(config.catalog_path) if config.catalog_path else default_catalog()
    profiles = store.load_records(out_dir / pipeline_files["profiles"], StudentProfile)
    propagation = store.load_json(out_dir / pipeline_files["propagation"])
    aggregated = store.load_json(out_dir / pipeline_files["scores_aggregated"])
    candidates = CandidateSet.from_dict(store.load_json(out_dir / pipeline_files["candidates"]))

    by_id = {p.id: p for p in profiles}
    node_ids = sorted(aggregated["kinds"]["profile"]) if phase == "initial" else None
    analysis_dir = out_dir / "analysis"
    analysis_dir.mkdir(parents=True, exist_ok=True)

    summary: dict = {"phase": phase, "seed": seed, "n_trees": n_trees, "kinds": {}}
    for kind in kinds:
        if phase == "propagated":
            score_map = propagation["kinds"][kind]["values"]
        else:
            score_map = aggregated["kinds"][kind]
        ids = node_ids if node_ids is not None else sorted(score_map)
        population = [by_id[a] for a in ids]
        matrix = one_hot_encode(population, catalog)
        y = np.array([score_map[a] for a in ids])
        model = fit_forest(matrix, y, n_trees=n_trees, seed=seed, target_name=f"{kind}-{phase}")
        ranking = relative_importance(model, matrix)
        store.save_csv(
            [
                {
                    "feature": e["feature"],
                    "category": e["category"],
                    "raw": e["raw"],
                    "relative": e["relative"],
                }
                for e in ranking.entries
            ],
            analysis_dir / f"importance_{kind}.csv",
            ["feature", "category", "raw", "relative"],
        )
        summary["kinds"][kind] = {
            "forest": model.summary(),
            "top_features": ranking.top(10),
        }

    if candidates.ids:
        selected = [by_id[a] for a in candidates.ids]
        shift = distribution_report(profiles, selected, catalog)
        store.save_csv(
            shift.to_csv_rows(),
            analysis_dir / "distribution.csv",
            ["category", "feature", "value", "initial_frequency", "selected_frequency", "delta"],
        )
        summary["distribution"] = {
            "n_initial": shift.n_initial,
            "n_selected": shift.n_selected,
            "csv": "distribution.csv",
        }
    else:
        summary["distribution"] = {"note": "no candidates; distribution comparison skipped"}

    store.save_json(summary, analysis_dir / "analysis.json")
    return summary
