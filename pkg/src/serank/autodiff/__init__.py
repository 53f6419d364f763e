"""
反向自動微分模組 (Autodiff)

- tensor.py: 計算圖節點 Node 與 Function 基底
- ops.py: 排序模型需要的可微分運算（matmul、逐元素、masked pooling 等）
- gradcheck.py: 中央差分梯度檢查
"""

from .gradcheck import GradCheckReport, grad_check
from .ops import (
    add,
    concat,
    elementwise,
    exp,
    log,
    masked_fill,
    matmul,
    mul,
    neg,
    power,
    reduce,
    relu,
    reshape,
    scatter_rows,
    sigmoid,
    softplus,
    stop_gradient,
    sub,
    sum_,
    take_rows,
)
from .tensor import Function, Node, constant, parameter, zero_grads

__all__ = [
    "Function",
    "Node",
    "constant",
    "parameter",
    "zero_grads",
    "matmul",
    "add",
    "sub",
    "mul",
    "neg",
    "relu",
    "sigmoid",
    "log",
    "exp",
    "softplus",
    "power",
    "sum_",
    "reshape",
    "masked_fill",
    "concat",
    "reduce",
    "take_rows",
    "scatter_rows",
    "elementwise",
    "stop_gradient",
    "grad_check",
    "GradCheckReport",
]
