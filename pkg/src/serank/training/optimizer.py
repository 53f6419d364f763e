"""Adagrad 與 global-norm gradient clipping"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from ..autodiff.tensor import Node
from ..core.errors import DimensionError


@dataclass
class AdagradState:
    """每個參數一個 accumulator，形狀與參數相同"""

    init_acc: float = 0.1
    accumulators: Dict[str, np.ndarray] = field(default_factory=dict)

    def accumulator(self, name: str, shape) -> np.ndarray:
        if name not in self.accumulators:
            self.accumulators[name] = np.full(shape, self.init_acc, dtype=np.float64)
        return self.accumulators[name]


def adagrad_step(
    params: Mapping[str, Node],
    grads: Mapping[str, Optional[np.ndarray]],
    state: AdagradState,
    lr: float,
) -> None:
    """acc += g²；param -= lr · g / √acc（就地更新）"""
    for name, node in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != node.shape:
            raise DimensionError(f"gradient for {name} has the wrong shape", g.shape, node.shape)
        acc = state.accumulator(name, node.shape)
        acc += g * g
        # acc 為 0 的位置梯度必為 0，不更新
        step = np.divide(g, np.sqrt(acc), out=np.zeros_like(g), where=acc > 0)
        node.data -= lr * step


def global_norm(grads: Mapping[str, Optional[np.ndarray]]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values() if g is not None)))


def clip_by_global_norm(
    grads: Dict[str, Optional[np.ndarray]], clip_norm: float
) -> Dict[str, Optional[np.ndarray]]:
    norm = global_norm(grads)
    if norm <= clip_norm or norm == 0.0:
        return grads
    factor = clip_norm / norm
    return {name: None if g is None else g * factor for name, g in grads.items()}
