"""
排序模型模組 (Ranking)

- blocks.py: SE / SE-b block 與消融版本、batch norm
- scoring.py: ScoringModel（univariate / GSF / SERank 系列）
- checkpoint.py: 模型存取
- losses.py: pairwise logistic、λ-weighted pairwise、softmax cross entropy
- metrics.py: NDCG@k 與資料集評估
- flops.py: 前向 FLOPs 估算
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .flops import FlopsReport, compare_flops, count_flops, format_flops
from .losses import (
    LossResult,
    compute_loss,
    pairwise_logistic,
    pairwise_logistic_lambda,
    softmax_ce,
)
from .metrics import (
    MetricReport,
    bootstrap_ci,
    evaluate,
    format_report,
    ndcg_at_k,
    paired_t_test,
)
from .scoring import Mode, ScoringModel, init_model, score

__all__ = [
    "Mode",
    "ScoringModel",
    "init_model",
    "score",
    "save_checkpoint",
    "load_checkpoint",
    "LossResult",
    "compute_loss",
    "pairwise_logistic",
    "pairwise_logistic_lambda",
    "softmax_ce",
    "MetricReport",
    "ndcg_at_k",
    "evaluate",
    "bootstrap_ci",
    "paired_t_test",
    "format_report",
    "FlopsReport",
    "count_flops",
    "compare_flops",
    "format_flops",
]
