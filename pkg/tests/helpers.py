"""測試共用的建構函數與 oracle"""

import itertools
from typing import Optional, Sequence

import numpy as np

from serank.core.models import ModelSpec, Variant
from serank.data.letor import Dataset, QueryGroup


def small_spec(variant: Variant, **overrides) -> ModelSpec:
    """10 個特徵、(8, 4) 兩層的小模型"""
    fields = dict(variant=variant, feature_count=10, hidden_widths=[8, 4], shrinkage=2, seed=3)
    fields.update(overrides)
    return ModelSpec(**fields)


def make_dataset(
    rng: np.random.Generator,
    n_queries: int,
    docs: Sequence[int],
    channels: int,
    max_label: int = 4,
) -> Dataset:
    """隨機資料集；每個查詢至少有一個相關文件"""
    groups = []
    for i in range(n_queries):
        size = int(rng.integers(docs[0], docs[1] + 1))
        labels = rng.integers(0, max_label + 1, size=size)
        labels[0] = max(labels[0], 1)
        groups.append(QueryGroup(f"q{i}", rng.normal(size=(size, channels)), labels))
    return Dataset(groups, channels)


def brute_force_ndcg(scores, labels, k: int) -> Optional[float]:
    """枚舉所有排列求 IDCG；DCG 依分數遞減（同分取原始索引）"""

    def dcg(order):
        return sum(
            (2.0 ** labels[doc] - 1.0) / np.log2(position + 2.0)
            for position, doc in enumerate(order[:k])
        )

    n = len(labels)
    ideal = max(dcg(list(p)) for p in itertools.permutations(range(n)))
    if ideal == 0:
        return None
    order = sorted(range(n), key=lambda i: (-scores[i], i))
    return dcg(order) / ideal
