"""
資料模組 (LETOR Data)

- letor.py: LETOR 格式讀寫、標準化、文件數上限
- batching.py: 補齊與批次化
- synthetic.py: 種子化的合成資料產生器
"""

from .batching import Batch, batch_iter, pad_groups
from .letor import (
    Dataset,
    FeatureStats,
    QueryGroup,
    cap_documents,
    compute_stats,
    drop_irrelevant_queries,
    load_stats,
    normalize,
    parse_letor,
    save_stats,
    serialize_letor,
)
from .synthetic import SyntheticGenerator, write_synthetic_splits

__all__ = [
    "QueryGroup",
    "Dataset",
    "FeatureStats",
    "Batch",
    "parse_letor",
    "serialize_letor",
    "compute_stats",
    "normalize",
    "save_stats",
    "load_stats",
    "cap_documents",
    "drop_irrelevant_queries",
    "batch_iter",
    "pad_groups",
    "SyntheticGenerator",
    "write_synthetic_splits",
]
