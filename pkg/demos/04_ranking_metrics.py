"""
Ranking metrics against an expert gold standard
===============================================

After scoring and propagation, each score source induces a ranking over the
candidate agents. To compare sources we hold them against expert ratings:
Precision@K (share of the top K that experts deem relevant), NDCG@K
(graded, position-discounted), pairwise accuracy (how many agent pairs the
system orders the same way the experts do), and MAE between system and
expert scores - with the improvement percentage showing how much
propagation moved the system toward the experts.
"""

from studentsim import (
    GoldStandard,
    build_report,
    improvement_pct,
    mae,
    ndcg_at_k,
    pairwise_accuracy,
    precision_at_k,
    rank_agents,
    render_report,
)

# Expert means on a 1-10 scale for six vetted agents. Agents at or above 8.0
# count as relevant; the cutoffs (2, 4, 6, 8) bin the means into grades 0-4.
expert_means = {"a1": 9.1, "a2": 8.4, "a3": 7.2, "a4": 6.8, "a5": 4.9, "a6": 2.2}
gold = GoldStandard.from_expert_means(expert_means)
print(f"relevant agents: {sorted(gold.relevant)}")
print(f"grades:          {dict(sorted(gold.grades.items()))}")

# Two competing score sources: raw initial scores vs propagated scores.
initial = {"a1": 7.9, "a2": 8.8, "a3": 8.1, "a4": 6.0, "a5": 5.8, "a6": 3.0}
propagated = {"a1": 8.9, "a2": 8.5, "a3": 7.4, "a4": 6.5, "a5": 5.2, "a6": 2.8}

for name, scores in [("initial", initial), ("propagated", propagated)]:
    ranking = rank_agents(scores)
    print(f"\n{name}: ranked {ranking.ids}")
    print(f"  Prec@3 = {precision_at_k(ranking, gold, 3):.3f}")
    print(f"  NDCG@3 = {ndcg_at_k(ranking, gold, 3):.3f}")
    print(f"  PA     = {pairwise_accuracy(scores, gold.expert_means):.3f}")

# MAE against the experts, before and after propagation.
before = mae(initial, gold.expert_means)
after = mae(propagated, gold.expert_means)
print(f"\nMAE initial    = {before:.4f}")
print(f"MAE propagated = {after:.4f}")
print(f"improvement    = {improvement_pct(before, after):+.2f}%")

# build_report assembles the full comparison table in one call.
report = build_report(
    {"initial": initial, "propagated": propagated},
    gold,
    ks=[3, 6],
    initial_scores={"profile": initial},
    propagated_scores={"profile": propagated},
)
print("\n" + render_report(report))
