"""
LETOR / MSLR 格式資料讀取與前處理

格式：`<label> qid:<qid> 1:<v1> 2:<v2> ... [# comment]`，一行一個文件。
文件依 qid 分組（保留檔案順序），缺少的特徵索引補 0。

主要功能：
- parse_letor / serialize_letor：讀寫 LETOR 文字檔
- compute_stats / normalize：以訓練集統計量做逐 channel 標準化
- save_stats / load_stats：統計量以文字檔保存，推論時位元一致地重用
- cap_documents：訓練時每查詢最多保留 max_docs 個文件（隨機、可重現）
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from dotenv import dotenv_values

from ..core.errors import DataParseError, SchemaError
from ..core.logger_config import get_logger

logger = get_logger(__name__)

# 標準差低於此值的 channel 視為常數，標準化後一律為 0
DEGENERATE_STD = 1e-12


@dataclass(frozen=True)
class QueryGroup:
    """單一查詢的文件特徵矩陣 (L×C) 與相關性標籤"""

    qid: str
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2 or features.shape[0] < 1:
            raise SchemaError(f"query {self.qid}: features must be a non-empty L×C matrix")
        if labels.shape != (features.shape[0],):
            raise SchemaError(
                f"query {self.qid}: {labels.shape[0]} labels for {features.shape[0]} documents"
            )
        if np.any(labels < 0):
            raise SchemaError(f"query {self.qid}: labels must be non-negative")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return int(self.features.shape[0])

    @property
    def has_relevant(self) -> bool:
        return bool(np.any(self.labels > 0))

    def subset(self, indices: Sequence[int]) -> "QueryGroup":
        idx = np.asarray(indices, dtype=np.int64)
        return QueryGroup(self.qid, self.features[idx], self.labels[idx])


@dataclass(frozen=True)
class FeatureStats:
    """逐 channel 的平均值與標準差"""

    mean: np.ndarray
    std: np.ndarray

    @property
    def feature_count(self) -> int:
        return int(self.mean.shape[0])


@dataclass(frozen=True)
class Dataset:
    """依查詢分組的資料集"""

    groups: List[QueryGroup]
    feature_count: int
    stats: Optional[FeatureStats] = field(default=None)

    def __post_init__(self):
        for group in self.groups:
            if group.features.shape[1] != self.feature_count:
                raise SchemaError(
                    f"query {group.qid} has {group.features.shape[1]} features, "
                    f"dataset expects {self.feature_count}"
                )

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def document_count(self) -> int:
        return sum(g.size for g in self.groups)


def _parse_line(line: str, line_number: int, feature_count: int):
    tokens = line.split()
    if len(tokens) < 2:
        raise DataParseError("expected '<label> qid:<id> ...'", line_number)
    try:
        label = int(tokens[0])
    except ValueError as e:
        raise DataParseError(f"invalid label {tokens[0]!r}", line_number) from e
    if label < 0:
        raise DataParseError(f"negative label {label}", line_number)
    if not tokens[1].startswith("qid:") or len(tokens[1]) == 4:
        raise DataParseError(f"expected qid:<id>, got {tokens[1]!r}", line_number)
    qid = tokens[1][4:]

    row = np.zeros(feature_count, dtype=np.float64)
    for token in tokens[2:]:
        index_str, sep, value_str = token.partition(":")
        if not sep:
            raise DataParseError(f"expected <index>:<value>, got {token!r}", line_number)
        try:
            index = int(index_str)
            value = float(value_str)
        except ValueError as e:
            raise DataParseError(f"invalid feature {token!r}", line_number) from e
        if index < 1 or index > feature_count:
            raise SchemaError(
                f"line {line_number}: feature index {index} outside 1..{feature_count}"
            )
        row[index - 1] = value
    return label, qid, row


def parse_letor(
    path: Union[str, Path], feature_count: int, drop_irrelevant: bool = False
) -> Dataset:
    """
    讀取 LETOR 格式檔案

    Args:
        path: 檔案路徑
        feature_count: 特徵維度 C
        drop_irrelevant: 是否移除所有 label 皆為 0 的查詢

    Returns:
        Dataset: 依 qid 首次出現順序排列的查詢群組
    """
    path = Path(path)
    rows: Dict[str, List[np.ndarray]] = {}
    labels: Dict[str, List[int]] = {}
    with path.open("r", encoding="utf-8") as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            label, qid, row = _parse_line(line, line_number, feature_count)
            rows.setdefault(qid, []).append(row)
            labels.setdefault(qid, []).append(label)

    groups = [QueryGroup(qid, np.vstack(rows[qid]), np.asarray(labels[qid])) for qid in rows]
    dataset = Dataset(groups, feature_count)
    logger.info(
        f"讀取 {path.name}: {len(dataset)} 個查詢, {dataset.document_count} 個文件"
    )
    return drop_irrelevant_queries(dataset) if drop_irrelevant else dataset


def serialize_letor(dataset: Dataset, path: Union[str, Path]) -> None:
    """將資料集寫回 LETOR 格式（浮點數以 repr 輸出，重新讀取可完全還原）"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for group in dataset.groups:
            for label, row in zip(group.labels, group.features):
                feats = " ".join(f"{i + 1}:{float(v)!r}" for i, v in enumerate(row))
                f.write(f"{int(label)} qid:{group.qid} {feats}\n")


def drop_irrelevant_queries(dataset: Dataset) -> Dataset:
    """移除沒有任何相關文件的查詢"""
    kept = [g for g in dataset.groups if g.has_relevant]
    dropped = len(dataset.groups) - len(kept)
    if dropped:
        logger.info(f"移除 {dropped} 個沒有相關文件的查詢")
    return replace(dataset, groups=kept)


def compute_stats(dataset: Dataset) -> FeatureStats:
    """計算逐 channel 平均值與（母體）標準差"""
    if not dataset.groups:
        raise SchemaError("cannot compute feature stats of an empty dataset")
    stacked = np.vstack([g.features for g in dataset.groups])
    return FeatureStats(mean=stacked.mean(axis=0), std=stacked.std(axis=0))


def normalize(dataset: Dataset, stats: FeatureStats) -> Dataset:
    """
    以給定統計量標準化：(x - mean) / std

    標準差小於 DEGENERATE_STD 的 channel 一律輸出 0。
    """
    if stats.feature_count != dataset.feature_count:
        raise SchemaError(
            f"stats cover {stats.feature_count} channels, dataset has {dataset.feature_count}"
        )
    degenerate = stats.std < DEGENERATE_STD
    if np.any(degenerate):
        logger.warning(f"{int(degenerate.sum())} 個常數 channel 標準化後設為 0")
    safe_std = np.where(degenerate, 1.0, stats.std)

    def transform(features: np.ndarray) -> np.ndarray:
        out = (features - stats.mean) / safe_std
        out[:, degenerate] = 0.0
        return out

    groups = [QueryGroup(g.qid, transform(g.features), g.labels) for g in dataset.groups]
    return Dataset(groups, dataset.feature_count, stats)


def save_stats(stats: FeatureStats, path: Union[str, Path]) -> None:
    """以 `channel = mean std` 文字格式保存統計量"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{i} = {float(m)!r} {float(s)!r}" for i, (m, s) in enumerate(zip(stats.mean, stats.std))
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_stats(path: Union[str, Path]) -> FeatureStats:
    """讀取 save_stats 寫出的統計量"""
    values = dotenv_values(Path(path), interpolate=False)
    count = len(values)
    mean = np.zeros(count)
    std = np.zeros(count)
    for key, value in values.items():
        try:
            index = int(key)
            m_str, s_str = (value or "").split()
            mean[index], std[index] = float(m_str), float(s_str)
        except (ValueError, IndexError) as e:
            raise SchemaError(f"invalid stats entry {key!r} = {value!r}") from e
    return FeatureStats(mean=mean, std=std)


def cap_documents(group: QueryGroup, max_docs: int, rng_seed) -> QueryGroup:
    """
    每查詢最多保留 max_docs 個文件

    超過上限時以種子化亂數均勻抽出不重複的子集合（保留原始相對順序）；
    評估路徑不呼叫此函數。
    """
    if max_docs < 1:
        raise ValueError("max_docs must be >= 1")
    if group.size <= max_docs:
        return group
    rng = np.random.default_rng(rng_seed)
    keep = np.sort(rng.choice(group.size, size=max_docs, replace=False))
    return group.subset(keep)
