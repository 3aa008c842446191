"""Ranking-quality and error metrics against expert gold standards.

Definitions implemented exactly as used downstream:

- precision@K: fraction of the top K that is in the relevant set.
- NDCG@K: position-discounted graded relevance, gain (2^rel - 1)/log2(i+1),
  normalized by the ideal (grade-sorted) ordering of the same agents.
- pairwise accuracy: fraction of unordered agent pairs whose strict order
  agrees between system and gold scores; a tie on either side contributes 0
  (the strict-inequality reading, which is heavily tie-sensitive).
- MAE: mean absolute difference between two aligned score mappings.
- improvement: 100 x (before - after) / before.

Relevance and grades both derive from expert mean scores: the relevant set
is everyone at or above a threshold (default 8 on the 1-10 scale, the same
bar the pipeline's own candidate filter uses), and NDCG grades bin the
means into five levels {0..4} at fixed cut points — raw 1-10 scores in the
2^rel exponent would be numerically extreme.
"""

from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass, field

DEFAULT_RELEVANCE_THRESHOLD = 8.0
DEFAULT_GRADE_CUTS = (2.0, 4.0, 6.0, 8.0)
TIE_BREAK_POLICY = "score-desc-then-id-asc"


@dataclass
class Ranking:
    ids: list[str]  # best first
    scores: dict[str, float]
    tie_break: str = TIE_BREAK_POLICY

    def __len__(self) -> int:
        return len(self.ids)

    def top(self, k: int) -> list[str]:
        return self.ids[:k]


@dataclass
class GoldStandard:
    expert_means: dict[str, float]
    relevant: set[str]
    grades: dict[str, int]
    relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD
    grade_cuts: tuple = DEFAULT_GRADE_CUTS

    @classmethod
    def from_expert_means(
        cls,
        expert_means: dict[str, float],
        relevance_threshold: float = DEFAULT_RELEVANCE_THRESHOLD,
        grade_cuts: tuple = DEFAULT_GRADE_CUTS,
    ) -> "GoldStandard":
        if not expert_means:
            raise ValueError("cannot build a gold standard from an empty set of expert means")
        cuts = tuple(sorted(grade_cuts))
        return cls(
            expert_means=dict(expert_means),
            relevant={a for a, m in expert_means.items() if m >= relevance_threshold},
            grades={a: bisect.bisect_right(cuts, m) for a, m in expert_means.items()},
            relevance_threshold=relevance_threshold,
            grade_cuts=cuts,
        )


def rank_agents(scores: dict[str, float], tie_break: str = TIE_BREAK_POLICY) -> Ranking:
    """Descending by score; equal scores ordered by ascending agent id."""
    if not scores:
        raise ValueError("cannot rank an empty score mapping")
    if tie_break != TIE_BREAK_POLICY:
        raise ValueError(f"unknown tie-break policy {tie_break!r}")
    for agent, value in scores.items():
        if math.isnan(value):
            raise ValueError(f"agent {agent} has NaN score")
    ordered = sorted(scores, key=lambda a: (-scores[a], a))
    return Ranking(ids=ordered, scores=dict(scores), tie_break=tie_break)


def _check_k(ranking: Ranking, k: int) -> None:
    if not 1 <= k <= len(ranking):
        raise ValueError(f"K must be in [1, {len(ranking)}], got {k}")


def precision_at_k(ranking: Ranking, gold: GoldStandard, k: int) -> float:
    _check_k(ranking, k)
    return len(set(ranking.top(k)) & gold.relevant) / k


def _dcg(grades: list[int]) -> float:
    return sum((2**g - 1) / math.log2(i + 1) for i, g in enumerate(grades, start=1))


def ndcg_at_k(ranking: Ranking, gold: GoldStandard, k: int) -> float:
    _check_k(ranking, k)
    grades = [gold.grades.get(a, 0) for a in ranking.ids]
    ideal = sorted(grades, reverse=True)
    idcg = _dcg(ideal[:k])
    if idcg == 0.0:
        warnings.warn("all relevance grades are zero; NDCG defined as 0.0", stacklevel=2)
        return 0.0
    return _dcg([gold.grades.get(a, 0) for a in ranking.top(k)]) / idcg


def pairwise_accuracy(system_scores: dict[str, float], gold_scores: dict[str, float]) -> float:
    if set(system_scores) != set(gold_scores):
        raise ValueError("system and gold score mappings must cover the same agents")
    agents = sorted(system_scores)
    if len(agents) < 2:
        raise ValueError("pairwise accuracy needs at least 2 agents")
    concordant = 0
    total = 0
    for i, a in enumerate(agents):
        for b in agents[i + 1 :]:
            total += 1
            if (system_scores[a] - system_scores[b]) * (gold_scores[a] - gold_scores[b]) > 0:
                concordant += 1
    return concordant / total


def mae(scores_a: dict[str, float], scores_b: dict[str, float]) -> float:
    if set(scores_a) != set(scores_b):
        raise ValueError("score mappings must cover the same agents")
    if not scores_a:
        raise ValueError("cannot compute MAE on an empty agent set")
    return sum(abs(scores_a[a] - scores_b[a]) for a in scores_a) / len(scores_a)


def improvement_pct(before: float, after: float) -> float:
    if before <= 0:
        raise ValueError(f"baseline must be positive, got {before}")
    return 100.0 * (before - after) / before


# -- report assembly ---------------------------------------------------------------


@dataclass
class RankingReport:
    """Precision/NDCG/pairwise-accuracy per score source and K, plus MAE
    before/after propagation per score kind."""

    ks: list[int]
    metrics: dict  # source -> str(K) -> {"precision", "ndcg", "pairwise_accuracy"}
    mae: dict  # kind -> {"initial", "propagated", "improvement_pct"}
    n_agents: int
    relevance_threshold: float
    grade_cuts: tuple
    tie_break: str = TIE_BREAK_POLICY
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "metrics": self.metrics,
            "mae": self.mae,
            "n_agents": self.n_agents,
            "relevance_threshold": self.relevance_threshold,
            "grade_cuts": list(self.grade_cuts),
            "tie_break": self.tie_break,
            "notes": list(self.notes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RankingReport":
        return cls(
            ks=list(d["ks"]),
            metrics=d["metrics"],
            mae=d["mae"],
            n_agents=d["n_agents"],
            relevance_threshold=d["relevance_threshold"],
            grade_cuts=tuple(d["grade_cuts"]),
            tie_break=d.get("tie_break", TIE_BREAK_POLICY),
            notes=list(d.get("notes", [])),
        )


def build_report(
    score_sources: dict[str, dict[str, float]],
    gold: GoldStandard,
    ks: list[int] | None = None,
    initial_scores: dict[str, dict[str, float]] | None = None,
    propagated_scores: dict[str, dict[str, float]] | None = None,
) -> RankingReport:
    """Evaluate every score source against the gold standard.

    Pairwise accuracy at K is computed over the agents the source itself
    puts in its top K (so it varies with K like the positional metrics).
    MAE rows appear for each kind present in both initial and propagated
    mappings, each against the gold expert means.
    """
    if not score_sources:
        raise ValueError("need at least one score source")
    notes: list[str] = []
    sizes = {len(s) for s in score_sources.values()}
    if len(sizes) != 1:
        raise ValueError("all score sources must cover the same agents")
    n_agents = sizes.pop()
    if ks is None:
        ks = [5, n_agents]
    usable_ks = []
    for k in sorted(set(ks)):
        if k > n_agents:
            notes.append(f"K={k} skipped: only {n_agents} agents")
        elif k < 1:
            notes.append(f"K={k} skipped: K must be >= 1")
        else:
            usable_ks.append(k)
    if not usable_ks:
        raise ValueError(f"no usable K in {ks} for {n_agents} agents")

    metrics: dict[str, dict] = {}
    for source, scores in sorted(score_sources.items()):
        ranking = rank_agents(scores)
        per_k: dict[str, dict] = {}
        for k in usable_ks:
            top = ranking.top(k)
            entry = {
                "precision": precision_at_k(ranking, gold, k),
                "ndcg": ndcg_at_k(ranking, gold, k),
            }
            if k >= 2:
                entry["pairwise_accuracy"] = pairwise_accuracy(
                    {a: scores[a] for a in top}, {a: gold.expert_means.get(a, 0.0) for a in top}
                )
            else:
                entry["pairwise_accuracy"] = None
                notes.append(f"pairwise accuracy undefined at K=1 for source {source}")
            per_k[str(k)] = entry
        metrics[source] = per_k

    mae_rows: dict[str, dict] = {}
    for kind in sorted(set(initial_scores or ()) & set(propagated_scores or ())):
        before_map = {a: initial_scores[kind][a] for a in gold.expert_means}
        after_map = {a: propagated_scores[kind][a] for a in gold.expert_means}
        before = mae(before_map, gold.expert_means)
        after = mae(after_map, gold.expert_means)
        mae_rows[kind] = {
            "initial": before,
            "propagated": after,
            "improvement_pct": improvement_pct(before, after) if before > 0 else 0.0,
        }

    return RankingReport(
        ks=usable_ks,
        metrics=metrics,
        mae=mae_rows,
        n_agents=n_agents,
        relevance_threshold=gold.relevance_threshold,
        grade_cuts=gold.grade_cuts,
        notes=notes,
    )


def render_report(report: RankingReport) -> str:
    """Aligned plain-text table: one row per score source, one column block
    per K with Prec. / NDCG / PA, then the MAE comparison."""

    def fmt(v) -> str:
        return "  --  " if v is None else f"{v:6.4f}"

    header = ["Source".ljust(22)]
    for k in report.ks:
        header.append(f"Prec@{k}".rjust(9))
        header.append(f"NDCG@{k}".rjust(9))
        header.append(f"PA@{k}".rjust(9))
    lines = ["".join(header)]
    for source, per_k in report.metrics.items():
        row = [source.ljust(22)]
        for k in report.ks:
            cell = per_k[str(k)]
            row.append(fmt(cell["precision"]).rjust(9))
            row.append(fmt(cell["ndcg"]).rjust(9))
            row.append(fmt(cell["pairwise_accuracy"]).rjust(9))
        lines.append("".join(row))
    if report.mae:
        lines.append("")
        lines.append("Kind".ljust(12) + "MAE initial".rjust(13) + "MAE propagated".rjust(16) + "Improv".rjust(10))
        for kind, row in report.mae.items():
            lines.append(
                kind.ljust(12)
                + f"{row['initial']:.4f}".rjust(13)
                + f"{row['propagated']:.4f}".rjust(16)
                + f"{row['improvement_pct']:+.2f}%".rjust(10)
            )
    lines.append("")
    lines.append(
        f"n_agents={report.n_agents}  relevance>={report.relevance_threshold}  "
        f"grade_cuts={list(report.grade_cuts)}  tie_break={report.tie_break}"
    )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"
