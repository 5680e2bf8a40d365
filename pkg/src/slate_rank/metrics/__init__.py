from .core import auc, gini, mae, merge_scores
from .eval import (MetricsReport, alignment_stats, collect_heads,
                   diversity_eval, evaluate, predict, rank_topk)

__all__ = [
    "MetricsReport", "alignment_stats", "auc", "collect_heads",
    "diversity_eval", "evaluate", "gini", "mae", "merge_scores", "predict",
    "rank_topk",
]
