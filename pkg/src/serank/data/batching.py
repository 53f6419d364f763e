"""
查詢批次化

把長度不同的查詢補齊到批次內最大文件數 Lmax，並以 mask 標記有效位置。
補齊位置的特徵與 label 皆為 0；所有模型與損失都會讀取 mask，補值本身不影響結果。
"""

from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from .letor import Dataset, QueryGroup, cap_documents


@dataclass(frozen=True)
class Batch:
    """補齊後的查詢批次"""

    features: np.ndarray  # B × Lmax × C
    labels: np.ndarray  # B × Lmax
    mask: np.ndarray  # B × Lmax
    qids: List[str]

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)


def pad_groups(groups: Sequence[QueryGroup]) -> Batch:
    """將多個查詢補齊成一個 Batch"""
    if not groups:
        raise ValueError("cannot build a batch from zero queries")
    channels = groups[0].features.shape[1]
    max_len = max(g.size for g in groups)
    features = np.zeros((len(groups), max_len, channels))
    labels = np.zeros((len(groups), max_len), dtype=np.int64)
    mask = np.zeros((len(groups), max_len), dtype=bool)
    for i, group in enumerate(groups):
        features[i, : group.size] = group.features
        labels[i, : group.size] = group.labels
        mask[i, : group.size] = True
    return Batch(features, labels, mask, [g.qid for g in groups])


def batch_iter(
    dataset: Dataset,
    batch_size: int,
    seed: int,
    epoch: int = 0,
    doc_cap: Optional[int] = None,
) -> Iterator[Batch]:
    """
    產生一個 epoch 的批次

    查詢順序以 (seed, epoch) 種子化亂數打亂；設定 doc_cap 時，
    每個查詢在該 epoch 內以 (seed, epoch, 查詢位置) 為種子抽樣文件。
    """
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.default_rng([seed, epoch])
    order = rng.permutation(len(dataset.groups))
    for start in range(0, len(order), batch_size):
        chosen = []
        for position in order[start : start + batch_size]:
            group = dataset.groups[position]
            if doc_cap is not None:
                group = cap_documents(group, doc_cap, [seed, epoch, int(position)])
            chosen.append(group)
        yield pad_groups(chosen)
