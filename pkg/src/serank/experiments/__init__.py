"""
實驗模組 (Experiments)

- stability.py: 文件遮蔽穩定性測試
- ablation.py: 模型比較與 squeeze / excitation 消融
"""

from .ablation import (
    ComparisonRow,
    ablation_suite,
    compare_variants,
    format_table,
    variant_specs,
)
from .stability import StabilityReport, format_stability, stability_test

__all__ = [
    "StabilityReport",
    "stability_test",
    "format_stability",
    "ComparisonRow",
    "compare_variants",
    "ablation_suite",
    "variant_specs",
    "format_table",
]
