"""
模型比較與消融實驗

以相同的種子與訓練設定訓練多個 ModelSpec，並在測試集上報告 NDCG@{1,5,10}
與 bootstrap 信賴區間。
"""

from typing import Dict, List, Optional, Sequence

from pydantic import BaseModel

from ..core.config import CompareConfig
from ..core.errors import ConfigurationError
from ..core.logger_config import get_logger
from ..core.models import ModelSpec, TrainConfig, Variant
from ..core.observability import trace_span
from ..data.letor import Dataset
from ..ranking.metrics import DEFAULT_KS, MetricReport, evaluate, paired_t_test
from ..ranking.scoring import ScoringModel
from ..training.trainer import train

logger = get_logger(__name__)

ABLATION_VARIANTS = (
    Variant.SERANK_B,
    Variant.SERANK_NO_SQUEEZE,
    Variant.SERANK_NO_EXCITATION,
)

SIGNIFICANCE_LEVEL = 0.05


class ComparisonRow(BaseModel):
    model: str
    k: int
    ndcg: float
    ci_low: float
    ci_high: float
    query_count: int
    p_value: Optional[float] = None


def variant_specs(base: ModelSpec, compare: CompareConfig) -> Dict[str, ModelSpec]:
    """由比較設定展開具名的 ModelSpec；gsf 依每個 group 大小各一個"""
    specs: Dict[str, ModelSpec] = {}
    for variant in compare.variants:
        if variant == Variant.GSF:
            for m in compare.group_sizes:
                specs[f"gsf({m})"] = base.model_copy(update={"variant": variant, "group_size": m})
        else:
            specs[variant.value] = base.model_copy(update={"variant": variant})
    return specs


def compare_variants(
    train_ds: Dataset,
    valid_ds: Dataset,
    test_ds: Dataset,
    specs: Dict[str, ModelSpec],
    cfg: TrainConfig,
    ks: Sequence[int] = DEFAULT_KS,
    baseline: Optional[str] = None,
) -> List[ComparisonRow]:
    """
    依序訓練每個模型並在測試集上評估最佳 checkpoint

    每列附上對 baseline（預設為第一個模型）逐查詢 NDCG@k 的配對 t-test p 值；
    baseline 自己那幾列的 p 值為 None。
    """
    baseline = baseline or next(iter(specs), None)
    if baseline is not None and baseline not in specs:
        raise ConfigurationError(f"baseline {baseline!r} is not one of {sorted(specs)}")
    reports: Dict[str, MetricReport] = {}
    for name, spec in specs.items():
        with trace_span(f"experiments.compare.{name}"):
            result = train(ScoringModel.init(spec), train_ds, valid_ds, cfg)
            report = evaluate(result.best_model, test_ds, ks, threads=cfg.threads)
            reports[name] = report.with_intervals(seed=cfg.seed)
        logger.info(f"{name}: test NDCG@{ks[-1]} {report.ndcg_at[ks[-1]]:.6f}")

    rows: List[ComparisonRow] = []
    for name, report in reports.items():
        for k in ks:
            low, high = report.intervals.get(k, (0.0, 0.0))
            p_value = None
            if name != baseline:
                p_value = paired_t_test(report.per_query[k], reports[baseline].per_query[k])
                if p_value < SIGNIFICANCE_LEVEL:
                    logger.info(f"{name} vs {baseline}: NDCG@{k} 差異顯著 (p={p_value:.4g})")
            rows.append(
                ComparisonRow(
                    model=name,
                    k=k,
                    ndcg=report.ndcg_at[k],
                    ci_low=low,
                    ci_high=high,
                    query_count=report.query_count,
                    p_value=p_value,
                )
            )
    return rows


def ablation_suite(
    train_ds: Dataset,
    valid_ds: Dataset,
    test_ds: Dataset,
    base_spec: ModelSpec,
    cfg: TrainConfig,
    ks: Sequence[int] = DEFAULT_KS,
) -> List[ComparisonRow]:
    """SE-b 與移除 squeeze / excitation 的兩個消融版本"""
    specs = {
        variant.value: base_spec.model_copy(update={"variant": variant})
        for variant in ABLATION_VARIANTS
    }
    return compare_variants(train_ds, valid_ds, test_ds, specs, cfg, ks)


def format_table(rows: List[ComparisonRow], scale: float = 1.0) -> str:
    """TSV：每個 (模型, k) 一列；baseline 列的 p_value 欄留空"""
    lines = ["model\tk\tndcg_mean\tci_low\tci_high\tquery_count\tp_value"]
    for row in rows:
        p_value = "" if row.p_value is None else f"{row.p_value:.6g}"
        lines.append(
            f"{row.model}\t{row.k}\t{row.ndcg * scale:.6f}\t"
            f"{row.ci_low * scale:.6f}\t{row.ci_high * scale:.6f}\t{row.query_count}\t{p_value}"
        )
    return "\n".join(lines) + "\n"
