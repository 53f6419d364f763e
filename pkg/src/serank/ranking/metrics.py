"""
排序指標：NDCG@k（Web30K 慣例）

- gain 2^label - 1，位置 p（從 1 起算）的 discount 為 1 / log2(p + 1)
- 分數相同時依原始索引排序（stable）
- IDCG = 0 的查詢回傳 None，由呼叫端計為 skipped
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field
from scipy import stats

from ..core.errors import DimensionError
from ..core.logger_config import get_logger
from ..core.observability import trace_span
from ..data.letor import Dataset, QueryGroup

logger = get_logger(__name__)

DEFAULT_KS = (1, 5, 10)


class MetricReport(BaseModel):
    """資料集層級的 NDCG 報告"""

    ndcg_at: Dict[int, float] = Field(default_factory=dict, description="k → 平均 NDCG@k")
    query_count: int = Field(default=0, description="納入平均的查詢數")
    skipped: int = Field(default=0, description="IDCG = 0 而略過的查詢數")
    per_query: Dict[int, List[float]] = Field(
        default_factory=dict, description="k → 各查詢的 NDCG@k"
    )
    intervals: Dict[int, Tuple[float, float]] = Field(
        default_factory=dict, description="k → bootstrap 信賴區間"
    )

    def with_intervals(
        self, confidence: float = 0.95, resamples: int = 1000, seed: int = 0
    ) -> "MetricReport":
        intervals = {
            k: bootstrap_ci(values, confidence, resamples, seed)
            for k, values in self.per_query.items()
            if values
        }
        return self.model_copy(update={"intervals": intervals})


def _dcg(sorted_labels: np.ndarray, k: int) -> float:
    top = sorted_labels[:k].astype(np.float64)
    discounts = np.log2(np.arange(2, top.shape[0] + 2, dtype=np.float64))
    return float(np.sum((np.power(2.0, top) - 1.0) / discounts))


def ndcg_at_k(scores, labels, k: int) -> Optional[float]:
    """
    單一查詢的 NDCG@k

    Returns:
        float | None: IDCG = 0（沒有相關文件）時為 None
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape or scores.shape[0] < 1:
        raise DimensionError("scores and labels must be equal-length vectors", scores.shape, labels.shape)
    if k < 1:
        raise ValueError("k must be >= 1")
    ideal = _dcg(np.sort(labels)[::-1], k)
    if ideal <= 0.0:
        return None
    order = np.argsort(-scores, kind="stable")
    return _dcg(labels[order], k) / ideal


def query_ndcg(scores, labels, ks: Sequence[int] = DEFAULT_KS) -> Optional[Dict[int, float]]:
    """同一查詢的多個 k；沒有相關文件時為 None"""
    values = {k: ndcg_at_k(scores, labels, k) for k in ks}
    if any(v is None for v in values.values()):
        return None
    return values


def aggregate(
    results: Sequence[Optional[Dict[int, float]]], ks: Sequence[int] = DEFAULT_KS
) -> MetricReport:
    """依序加總逐查詢結果（固定順序，結果與 worker 數無關）"""
    per_query: Dict[int, List[float]] = {k: [] for k in ks}
    skipped = 0
    for result in results:
        if result is None:
            skipped += 1
            continue
        for k in ks:
            per_query[k].append(result[k])
    count = len(results) - skipped
    means = {k: (float(np.sum(per_query[k])) / count if count else 0.0) for k in ks}
    return MetricReport(ndcg_at=means, query_count=count, skipped=skipped, per_query=per_query)


def evaluate(
    model,
    dataset: Dataset,
    ks: Sequence[int] = DEFAULT_KS,
    threads: int = 1,
) -> MetricReport:
    """
    以推論模式逐查詢打分（不套用文件數上限）並計算平均 NDCG

    Args:
        model: ScoringModel
        dataset: 評估資料集
        ks: 截斷位置
        threads: 查詢層級平行的 worker 數
    """
    if dataset.feature_count != model.spec.feature_count:
        raise DimensionError(
            f"model expects {model.spec.feature_count} features, dataset has {dataset.feature_count}"
        )

    def one(group: QueryGroup):
        return query_ndcg(model.score(group.features), group.labels, ks)

    with trace_span("metrics.evaluate"):
        if threads > 1 and len(dataset) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, dataset.groups))
        else:
            results = [one(group) for group in dataset.groups]
    report = aggregate(results, ks)
    if report.skipped:
        logger.warning(f"{report.skipped} 個查詢沒有相關文件，不納入 NDCG 平均")
    return report


def bootstrap_ci(
    values: Sequence[float],
    confidence: float = 0.95,
    resamples: int = 1000,
    seed: int = 0,
) -> Tuple[float, float]:
    """以重抽樣平均值的百分位數估計信賴區間"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("bootstrap needs at least one value")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, values.size, size=(resamples, values.size))
    means = values[picks].mean(axis=1)
    tail = (1.0 - confidence) / 2.0 * 100.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    return float(low), float(high)


def paired_t_test(values: Sequence[float], baseline: Sequence[float]) -> float:
    """
    逐查詢配對的雙尾 t-test，回傳 p 值

    兩組完全相同時回傳 1.0；少於兩個查詢時回傳 nan。
    """
    values = np.asarray(values, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if values.shape != baseline.shape:
        raise DimensionError("paired samples must have the same length", values.shape, baseline.shape)
    if values.size < 2:
        return float("nan")
    if np.array_equal(values, baseline):
        return 1.0
    return float(stats.ttest_rel(values, baseline).pvalue)


def format_report(report: MetricReport, scale: float = 1.0) -> str:
    """TSV：`k<TAB>ndcg_mean<TAB>query_count`"""
    lines = ["k\tndcg_mean\tquery_count"]
    for k in sorted(report.ndcg_at):
        lines.append(f"{k}\t{report.ndcg_at[k] * scale:.6f}\t{report.query_count}")
    return "\n".join(lines) + "\n"
