"""
種子化的合成排序資料

兩種產生器：
- rankable: 特徵 ~ U[0, 1]，label 為固定隨機線性分數的分級分位數，
  單看文件本身即可完美排序。
- contextual: 第 0 個 channel 是「情境」訊號，查詢內所有文件在該 channel 的
  平均值決定要用 channel 1 還是 channel 2 的值當相關性；單一文件無法可靠
  判斷情境，需要跨文件資訊。
"""

from pathlib import Path
from typing import Dict, Union

import numpy as np

from ..core.config import SyntheticConfig, SyntheticKind, derive_seed
from ..core.logger_config import get_logger
from .letor import Dataset, QueryGroup, serialize_letor

logger = get_logger(__name__)

# rankable 的分級門檻（線性分數的分位數）
RANKABLE_QUANTILES = (0.5, 0.75, 0.9, 0.97)
_REFERENCE_SAMPLES = 20000
MAX_LABEL = 4


class SyntheticGenerator:
    """合成資料產生器；同一 seed 下各 split 共用相同的標記規則"""

    def __init__(
        self,
        kind: SyntheticKind = SyntheticKind.RANKABLE,
        feature_count: int = 20,
        docs_per_query: int = 16,
        seed: int = 0,
    ):
        if kind == SyntheticKind.CONTEXTUAL and feature_count < 3:
            raise ValueError("contextual data needs at least 3 feature channels")
        self.kind = SyntheticKind(kind)
        self.feature_count = feature_count
        self.docs_per_query = docs_per_query
        self.seed = seed

        rule_rng = np.random.default_rng(derive_seed(seed, "synthetic.rule"))
        self.weights = rule_rng.normal(size=feature_count)
        reference = rule_rng.uniform(size=(_REFERENCE_SAMPLES, feature_count)) @ self.weights
        self.thresholds = np.quantile(reference, RANKABLE_QUANTILES)

    def _rankable_query(self, rng: np.random.Generator):
        features = rng.uniform(size=(self.docs_per_query, self.feature_count))
        labels = np.searchsorted(self.thresholds, features @ self.weights, side="right")
        return features, labels

    def _contextual_query(self, rng: np.random.Generator):
        features = rng.uniform(size=(self.docs_per_query, self.feature_count))
        context = rng.integers(0, 2)
        features[:, 0] = rng.normal(loc=context - 0.5, scale=1.0, size=self.docs_per_query)
        # 以實際的查詢平均值決定情境
        target = 1 if features[:, 0].mean() > 0.0 else 2
        labels = np.minimum(np.floor(features[:, target] * (MAX_LABEL + 1)), MAX_LABEL)
        return features, labels.astype(np.int64)

    def generate(self, n_queries: int, split: str = "train") -> Dataset:
        """產生 n_queries 個查詢；不同 split 使用不同的子種子"""
        rng = np.random.default_rng(derive_seed(self.seed, f"synthetic.{split}"))
        make = self._rankable_query if self.kind == SyntheticKind.RANKABLE else self._contextual_query
        groups = []
        for i in range(n_queries):
            features, labels = make(rng)
            groups.append(QueryGroup(f"{split}-{i}", features, labels))
        return Dataset(groups, self.feature_count)


def write_synthetic_splits(
    cfg: SyntheticConfig, out_dir: Union[str, Path], seed: int
) -> Dict[str, Path]:
    """
    產生 train / valid / test 三份 LETOR 檔

    Returns:
        dict: split 名稱 → 檔案路徑
    """
    out_dir = Path(out_dir)
    generator = SyntheticGenerator(cfg.kind, cfg.feature_count, cfg.docs_per_query, seed)
    sizes = {
        "train": cfg.train_queries,
        "valid": cfg.valid_queries,
        "test": cfg.test_queries,
    }
    paths = {}
    for split, n_queries in sizes.items():
        path = out_dir / f"{split}.txt"
        serialize_letor(generator.generate(n_queries, split), path)
        paths[split] = path
    logger.info(f"合成資料 ({cfg.kind.value}) 已寫入 {out_dir}")
    return paths
