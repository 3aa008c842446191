"""Simulated-student agent pipeline: profile sampling, consistency scoring,
graph-based score propagation, candidate selection, ranking evaluation,
feature-importance analysis, and an expert annotation service."""

__version__ = "0.1.0"

from .catalog import AttributeCatalog, default_catalog, load_catalog, save_catalog
from .errors import (
    AnalysisError,
    BackendError,
    ConfigError,
    GatewayError,
    ProfileValidationError,
    ScorerParseError,
    ScoringError,
    StorageError,
    StudentSimError,
    TransientError,
)
from .gateway import ChatMessage, GenConfig, HttpBackend, LlmGateway, StubBackend
from .graph import (
    ScoreVector,
    SimilarityGraph,
    build_graph,
    fixed_point,
    graph_summary,
    normalize_adjacency,
    normalize_embedding,
    propagate,
)
from .metrics import (
    GoldStandard,
    RankingReport,
    build_report,
    improvement_pct,
    mae,
    ndcg_at_k,
    pairwise_accuracy,
    precision_at_k,
    rank_agents,
    render_report,
)
from .pipeline import (
    CandidateSet,
    Pipeline,
    PipelineResult,
    RunConfig,
    analyze_run,
    filter_candidates,
    load_run_config,
    run_pipeline,
    synthesize_gold,
)
from .profiles import (
    StudentProfile,
    render_profile,
    sample_profile,
    validate_profile,
)
from .scoring import (
    QuestionSet,
    ResponseSet,
    ScoreRecord,
    Transcript,
    collect_defenses,
    generate_questions,
    parse_scorer_output,
    run_behavior_dialogue,
    score_behavior,
    score_profile,
)

__all__ = [
    "__version__",
    "AttributeCatalog",
    "default_catalog",
    "load_catalog",
    "save_catalog",
    "StudentSimError",
    "ConfigError",
    "ProfileValidationError",
    "GatewayError",
    "TransientError",
    "BackendError",
    "ScorerParseError",
    "ScoringError",
    "AnalysisError",
    "StorageError",
    "ChatMessage",
    "GenConfig",
    "LlmGateway",
    "HttpBackend",
    "StubBackend",
    "SimilarityGraph",
    "ScoreVector",
    "normalize_embedding",
    "build_graph",
    "normalize_adjacency",
    "propagate",
    "fixed_point",
    "graph_summary",
    "GoldStandard",
    "RankingReport",
    "rank_agents",
    "precision_at_k",
    "ndcg_at_k",
    "pairwise_accuracy",
    "mae",
    "improvement_pct",
    "build_report",
    "render_report",
    "RunConfig",
    "Pipeline",
    "PipelineResult",
    "CandidateSet",
    "run_pipeline",
    "filter_candidates",
    "load_run_config",
    "analyze_run",
    "synthesize_gold",
    "StudentProfile",
    "sample_profile",
    "validate_profile",
    "render_profile",
    "QuestionSet",
    "ResponseSet",
    "Transcript",
    "ScoreRecord",
    "generate_questions",
    "collect_defenses",
    "score_profile",
    "run_behavior_dialogue",
    "score_behavior",
    "parse_scorer_output",
]
