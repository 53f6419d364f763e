"""
有限差分梯度檢查

以中央差分 (f(x+h) - f(x-h)) / 2h 逐座標比對 backward() 的結果，
回傳最大相對誤差與超出容忍度的座標。
"""

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from .tensor import Node


@dataclass
class GradCheckFailure:
    """單一座標的檢查失敗紀錄"""

    leaf_index: int
    coordinate: Tuple[int, ...]
    analytic: float
    numeric: float
    relative_error: float


@dataclass
class GradCheckReport:
    """梯度檢查結果"""

    max_relative_error: float
    checked: int
    tolerance: float
    failures: List[GradCheckFailure] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures


def grad_check(
    f: Callable[[], Node],
    leaves: Sequence[Node],
    h: float = 1e-5,
    tol: float = 1e-4,
    floor: float = 1e-7,
) -> GradCheckReport:
    """
    比對解析梯度與中央差分

    Args:
        f: 無參數函數，每次呼叫都由 leaves 目前的值重建計算圖並回傳純量 Node
        leaves: 需要檢查的葉節點
        h: 差分步長
        tol: 相對誤差容忍度
        floor: 相對誤差分母的下限；兩者都接近 0 時改看絕對誤差

    Returns:
        GradCheckReport: 最大相對誤差與失敗座標
    """
    for leaf in leaves:
        leaf.zero_grad()
    out = f()
    out.backward()
    analytic = [
        np.zeros_like(leaf.data) if leaf.grad is None else leaf.grad.copy() for leaf in leaves
    ]

    max_error = 0.0
    checked = 0
    failures: List[GradCheckFailure] = []
    for index, leaf in enumerate(leaves):
        for coord in np.ndindex(leaf.data.shape):
            original = leaf.data[coord]
            leaf.data[coord] = original + h
            f_plus = float(f().data.sum())
            leaf.data[coord] = original - h
            f_minus = float(f().data.sum())
            leaf.data[coord] = original

            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(analytic[index][coord])
            error = abs(a - numeric) / max(abs(a), abs(numeric), floor)
            max_error = max(max_error, error)
            checked += 1
            if error > tol:
                failures.append(GradCheckFailure(index, coord, a, numeric, error))

    return GradCheckReport(
        max_relative_error=max_error, checked=checked, tolerance=tol, failures=failures
    )
