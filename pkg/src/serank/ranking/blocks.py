"""
排序模型的基本區塊

所有區塊都接受 (..., L, C) 的文件矩陣與 (..., L) 的 mask。

- squeeze: 以 masked mean / max pooling 彙整查詢內各 channel 的統計量 U
- excite: 兩層瓶頸 FC (C → C/r → C) 產生 channel 權重 s ∈ (0, 1)^C
- se_block: X ⊙ s，s 由整個文件序列 pooling 而來
- se_b_block: 先逐文件降維 (C → C/r, relu)，再 pooling，再升維並經 sigmoid
- 消融版本：移除 pooling（逐文件 excitation）、以串接取代相乘
"""

from typing import Optional

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Node, constant
from ..core.errors import DimensionError
from ..core.models import GateActivation, Pooling

BN_EPSILON = 1e-3


def _gate(x: Node, gate: GateActivation) -> Node:
    return ops.sigmoid(x) if GateActivation(gate) == GateActivation.SIGMOID else ops.relu(x)


def _check_bottleneck(channels: int, w1: Node, w2: Node, shrinkage: Optional[int]) -> None:
    hidden = w1.shape[-1]
    if w1.shape != (channels, hidden) or w2.shape != (hidden, channels):
        raise DimensionError("SE weights do not match the block width", w1.shape, w2.shape)
    if shrinkage is not None and hidden != channels // shrinkage:
        raise DimensionError(
            f"SE bottleneck must be floor(C/r) = {channels // shrinkage}", w1.shape
        )


def dense(x: Node, weight: Node, bias: Node) -> Node:
    return ops.add(ops.matmul(x, weight), bias)


def squeeze(x: Node, mask=None, pooling: Pooling = Pooling.MEAN) -> Node:
    """查詢內逐 channel pooling，(..., L, C) → (..., 1, C)"""
    return ops.reduce(Pooling(pooling).value, x, mask, axis="docs")


def excite(
    u: Node, w1: Node, w2: Node, gate: GateActivation = GateActivation.SIGMOID
) -> Node:
    """s = gate(relu(U · W1) · W2)"""
    if w1.shape[0] != u.shape[-1] or w2.shape[0] != w1.shape[-1]:
        raise DimensionError("excitation weights do not chain", u.shape, w1.shape, w2.shape)
    return _gate(ops.matmul(ops.relu(ops.matmul(u, w1)), w2), gate)


def se_block(
    x: Node,
    mask,
    w1: Node,
    w2: Node,
    pooling: Pooling = Pooling.MEAN,
    gate: GateActivation = GateActivation.SIGMOID,
    shrinkage: Optional[int] = None,
) -> Node:
    """原始 SE block：squeeze → excite → 逐 channel 重新加權"""
    _check_bottleneck(x.shape[-1], w1, w2, shrinkage)
    s = excite(squeeze(x, mask, pooling), w1, w2, gate)
    return ops.mul(x, s)


def se_b_gate(
    x: Node,
    mask,
    w1: Node,
    w2: Node,
    pooling: Pooling = Pooling.MEAN,
    gate: GateActivation = GateActivation.SIGMOID,
) -> Node:
    """SE-b 的 channel 權重：逐文件降維後才 pooling"""
    reduced = ops.relu(ops.matmul(x, w1))
    return _gate(ops.matmul(squeeze(reduced, mask, pooling), w2), gate)


def se_b_block(
    x: Node,
    mask,
    w1: Node,
    w2: Node,
    pooling: Pooling = Pooling.MEAN,
    gate: GateActivation = GateActivation.SIGMOID,
    shrinkage: Optional[int] = None,
) -> Node:
    """SE-b block：FC(C → C/r, relu) → masked pooling → FC(C/r → C) → gate，再與 X 相乘"""
    _check_bottleneck(x.shape[-1], w1, w2, shrinkage)
    return ops.mul(x, se_b_gate(x, mask, w1, w2, pooling, gate))


def se_no_squeeze_block(
    x: Node,
    w1: Node,
    w2: Node,
    gate: GateActivation = GateActivation.SIGMOID,
    shrinkage: Optional[int] = None,
) -> Node:
    """消融：沒有 pooling，每個文件只由自己的向量算出權重"""
    _check_bottleneck(x.shape[-1], w1, w2, shrinkage)
    return ops.mul(x, excite(x, w1, w2, gate))


def se_no_excitation_block(
    x: Node,
    mask,
    w1: Node,
    w2: Node,
    pooling: Pooling = Pooling.MEAN,
    gate: GateActivation = GateActivation.SIGMOID,
    shrinkage: Optional[int] = None,
) -> Node:
    """消融：gate 輸出與區塊輸入串接而非相乘，輸出寬度變為 2C"""
    _check_bottleneck(x.shape[-1], w1, w2, shrinkage)
    s = se_b_gate(x, mask, w1, w2, pooling, gate)
    ones = constant(np.ones(x.shape[:-1] + (1,)))
    return ops.concat(x, ops.mul(ones, s))


def batch_norm_train(x: Node, mask, gamma: Node, beta: Node):
    """
    以 batch 內所有有效文件計算 channel 統計量做 batch norm

    Returns:
        (輸出 Node, batch 平均值, batch 變異數)
    """
    mean = ops.reduce("mean", x, mask, axis="batch_docs")
    centered = ops.sub(x, mean)
    var = ops.reduce("mean", ops.mul(centered, centered), mask, axis="batch_docs")
    inv_std = ops.power(ops.add(var, BN_EPSILON), -0.5)
    out = ops.add(ops.mul(ops.mul(centered, inv_std), gamma), beta)
    return out, mean.data.reshape(-1), var.data.reshape(-1)


def batch_norm_infer(
    x: Node, gamma: Node, beta: Node, moving_mean: np.ndarray, moving_var: np.ndarray
) -> Node:
    """推論時改用 moving average 統計量"""
    shift = constant(-moving_mean)
    scale = constant(1.0 / np.sqrt(moving_var + BN_EPSILON))
    return ops.add(ops.mul(ops.mul(ops.add(x, shift), scale), gamma), beta)
