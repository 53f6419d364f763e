"""
前向 FLOPs 估算

計數慣例（一次打分一個查詢的 L 個文件）：
- FC in → out 作用在 R 列：乘加 2·R·in·out，bias R·out（SE 的 FC 沒有 bias）
- relu / sigmoid 作用在 N 個值：N
- pooling L 列 × C channel：L·C；SE 重新加權：L·C
- batch norm：4·L·C
- GSF 以 L 個循環視窗計算，每個文件的 m 個分數加總後平均
"""

from typing import Dict, List, Tuple

from pydantic import BaseModel, Field, ValidationError

from ..core.errors import ConfigurationError
from ..core.models import ModelSpec, Variant


class FlopsReport(BaseModel):
    per_layer: List[Tuple[str, int]] = Field(default_factory=list)
    total: int = 0
    input_shape: Tuple[int, int] = (0, 0)


class _Counter:
    def __init__(self):
        self.rows: List[Tuple[str, int]] = []

    def add(self, name: str, count: int) -> None:
        if count:
            self.rows.append((name, int(count)))

    def fc(self, name: str, rows: int, fan_in: int, fan_out: int, bias: bool = True) -> None:
        self.add(f"{name}.matmul", 2 * rows * fan_in * fan_out)
        if bias:
            self.add(f"{name}.bias", rows * fan_out)

    def se(self, prefix: str, spec: ModelSpec, rows: int, width: int) -> None:
        k = width // spec.shrinkage
        variant = spec.variant
        if variant == Variant.SERANK:
            self.add(f"{prefix}.pool", rows * width)
            self.fc(f"{prefix}.fc1", 1, width, k, bias=False)
            self.add(f"{prefix}.relu", k)
            self.fc(f"{prefix}.fc2", 1, k, width, bias=False)
            self.add(f"{prefix}.gate", width)
        elif variant == Variant.SERANK_NO_SQUEEZE:
            self.fc(f"{prefix}.fc1", rows, width, k, bias=False)
            self.add(f"{prefix}.relu", rows * k)
            self.fc(f"{prefix}.fc2", rows, k, width, bias=False)
            self.add(f"{prefix}.gate", rows * width)
        else:
            self.fc(f"{prefix}.fc1", rows, width, k, bias=False)
            self.add(f"{prefix}.relu", rows * k)
            self.add(f"{prefix}.pool", rows * k)
            self.fc(f"{prefix}.fc2", 1, k, width, bias=False)
            self.add(f"{prefix}.gate", width)
        # 串接版本只搬移資料，不計運算
        if variant != Variant.SERANK_NO_EXCITATION:
            self.add(f"{prefix}.rescale", rows * width)


def count_flops(spec: ModelSpec, length: int, channels: int) -> FlopsReport:
    """計算一個 L × C 查詢的前向 FLOPs"""
    if length < 1 or channels < 1:
        raise ConfigurationError("L and C must be >= 1")
    try:
        spec = ModelSpec.model_validate({**spec.model_dump(), "feature_count": channels})
    except ValidationError as e:
        raise ConfigurationError(f"invalid model spec: {e}") from e

    counter = _Counter()
    rows = length
    concat = spec.variant == Variant.SERANK_NO_EXCITATION
    m = spec.group_size if spec.variant == Variant.GSF else 1
    width = channels * m
    if spec.uses_se and spec.se_on_input:
        counter.se("se_in", spec, rows, width)
        width = 2 * width if concat else width

    for i, hidden in enumerate(spec.hidden_widths):
        counter.fc(f"dense_{i}", rows, width, hidden)
        if spec.batch_norm:
            counter.add(f"bn_{i}", 4 * rows * hidden)
        counter.add(f"dense_{i}.relu", rows * hidden)
        width = hidden
        if spec.uses_se:
            counter.se(f"se_{i}", spec, rows, width)
            width = 2 * width if concat else width

    counter.fc("output", rows, width, m)
    if m > 1:
        # 每個文件 m 個分數：m - 1 次加法與 1 次除法
        counter.add("gsf.aggregate", length * (m - 1) + length)

    total = sum(count for _, count in counter.rows)
    return FlopsReport(per_layer=counter.rows, total=total, input_shape=(length, channels))


def compare_flops(
    specs: Dict[str, ModelSpec], length: int, channels: int, baseline: str
) -> List[Tuple[str, int, float]]:
    """各模型的 FLOPs 與相對 baseline 的倍數"""
    if baseline not in specs:
        raise ConfigurationError(f"baseline {baseline!r} is not among the compared specs")
    totals = {name: count_flops(spec, length, channels).total for name, spec in specs.items()}
    base = totals[baseline]
    return [(name, total, total / base) for name, total in totals.items()]


def format_flops(report: FlopsReport) -> str:
    """TSV：`layer<TAB>flops` 逐層，最後一行 TOTAL"""
    lines = [f"{name}\t{count}" for name, count in report.per_layer]
    lines.append(f"TOTAL\t{report.total}")
    return "\n".join(lines) + "\n"


def format_comparison(rows: List[Tuple[str, int, float]]) -> str:
    lines = ["model\tflops\tratio"]
    lines.extend(f"{name}\t{total}\t{ratio:.2f}" for name, total, ratio in rows)
    return "\n".join(lines) + "\n"
