"""
文件遮蔽穩定性測試

每個查詢以種子化亂數遮蔽 mask_fraction 比例的文件，比較兩種打分方式在存活文件上的 NDCG：
- base: 以完整文件列表打分，再只取存活文件的分數
- masked: 只用存活文件打分
逐文件獨立的模型兩者必然相同；依賴查詢情境的模型差距反映其穩定性。
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field

from ..core.config import derive_seed
from ..core.logger_config import get_logger
from ..core.observability import trace_span
from ..data.letor import Dataset, QueryGroup
from ..ranking.metrics import DEFAULT_KS, aggregate, query_ndcg

logger = get_logger(__name__)


class StabilityReport(BaseModel):
    base_ndcg: Dict[int, float] = Field(default_factory=dict, description="完整情境打分")
    masked_ndcg: Dict[int, float] = Field(default_factory=dict, description="只用存活文件打分")
    mask_fraction: float
    seed: int
    query_count: int = 0
    skipped: int = Field(default=0, description="存活文件為空或沒有相關文件的查詢數")


def survivors(size: int, mask_fraction: float, rng: np.random.Generator) -> np.ndarray:
    """遮蔽 round(fraction · L) 個文件後剩下的索引（遞增排序），可能為空"""
    dropped = int(np.floor(mask_fraction * size + 0.5))
    keep = size - dropped
    if keep <= 0:
        return np.empty(0, dtype=np.int64)
    return np.sort(rng.choice(size, size=keep, replace=False))


def stability_test(
    model,
    dataset: Dataset,
    mask_fraction: float = 0.5,
    seed: int = 0,
    ks: Sequence[int] = DEFAULT_KS,
    threads: int = 1,
) -> StabilityReport:
    """兩種打分方式在相同存活文件集合上的 NDCG 比較"""
    if not 0.0 < mask_fraction < 1.0:
        raise ValueError("mask_fraction must be in (0, 1)")
    base_seed = derive_seed(seed, "stability")

    def one(item: Tuple[int, QueryGroup]):
        index, group = item
        keep = survivors(group.size, mask_fraction, np.random.default_rng([base_seed, index]))
        if keep.size == 0:
            return None
        labels = group.labels[keep]
        base = query_ndcg(model.score(group.features)[keep], labels, ks)
        masked = query_ndcg(model.score(group.features[keep]), labels, ks)
        return base, masked

    with trace_span("experiments.stability"):
        items = list(enumerate(dataset.groups))
        if threads > 1 and len(items) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(one, items))
        else:
            results = [one(item) for item in items]

    def arm(position: int):
        return [None if r is None else r[position] for r in results]

    base_report = aggregate(arm(0), ks)
    masked_report = aggregate(arm(1), ks)
    report = StabilityReport(
        base_ndcg=base_report.ndcg_at,
        masked_ndcg=masked_report.ndcg_at,
        mask_fraction=mask_fraction,
        seed=seed,
        query_count=base_report.query_count,
        skipped=base_report.skipped,
    )
    logger.info(
        f"穩定性測試: {report.query_count} 個查詢, 略過 {report.skipped}, "
        f"遮蔽比例 {mask_fraction}"
    )
    return report


def format_stability(report: StabilityReport, scale: float = 1.0) -> str:
    """TSV：`k<TAB>base_ndcg<TAB>masked_ndcg<TAB>query_count`"""
    lines = ["k\tbase_ndcg\tmasked_ndcg\tquery_count"]
    for k in sorted(report.base_ndcg):
        base = report.base_ndcg[k]
        masked = report.masked_ndcg[k]
        lines.append(f"{k}\t{base * scale:.6f}\t{masked * scale:.6f}\t{report.query_count}")
    return "\n".join(lines) + "\n"
