"""
排序模型所需的可微分運算

只實作模型與損失函數用得到的運算。張量的最後一軸為特徵 (channel)，
倒數第二軸為文件 (document)，可帶一個前導 batch 軸。
二元運算遵循 numpy 廣播規則（例如 1×C 對 L×C 沿文件軸廣播）。
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.errors import DimensionError, InvalidQueryError
from .tensor import Function, Node, constant

# region: 基本運算


class MatMul(Function):
    op = "matmul"

    def forward(self, a, b):
        if b.ndim != 2 or a.ndim < 2 or a.shape[-1] != b.shape[0]:
            raise DimensionError("matmul inner dimensions disagree", a.shape, b.shape)
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        ga = grad @ self.b.T
        a2 = self.a.reshape(-1, self.a.shape[-1])
        g2 = grad.reshape(-1, grad.shape[-1])
        gb = a2.T @ g2
        return ga, gb


def _check_broadcast(a: np.ndarray, b: np.ndarray) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise DimensionError("operands are not broadcastable", a.shape, b.shape) from e


class Add(Function):
    op = "add"

    def forward(self, a, b):
        _check_broadcast(a, b)
        return a + b

    def backward(self, grad):
        return grad, grad


class Mul(Function):
    op = "mul"

    def forward(self, a, b):
        _check_broadcast(a, b)
        self.a, self.b = a, b
        return a * b

    def backward(self, grad):
        return grad * self.b, grad * self.a


class Neg(Function):
    op = "neg"

    def forward(self, x):
        return -x

    def backward(self, grad):
        return (-grad,)


class Relu(Function):
    op = "relu"

    def forward(self, x):
        # relu'(0) = 0
        self.active = x > 0
        return np.where(self.active, x, 0.0)

    def backward(self, grad):
        return (grad * self.active,)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


class Sigmoid(Function):
    op = "sigmoid"

    def forward(self, x):
        self.out = _sigmoid(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out * (1.0 - self.out),)


class Log(Function):
    op = "log"

    def forward(self, x):
        self.x = x
        return np.log(x)

    def backward(self, grad):
        return (grad / self.x,)


class Exp(Function):
    op = "exp"

    def forward(self, x):
        self.out = np.exp(x)
        return self.out

    def backward(self, grad):
        return (grad * self.out,)


class Softplus(Function):
    """log(1 + e^x)，以 logaddexp 計算避免溢位"""

    op = "softplus"

    def forward(self, x):
        self.x = x
        return np.logaddexp(0.0, x)

    def backward(self, grad):
        return (grad * _sigmoid(self.x),)


class Power(Function):
    op = "power"

    def forward(self, x, exponent: float = 1.0):
        self.x, self.exponent = x, exponent
        return np.power(x, exponent)

    def backward(self, grad):
        return (grad * self.exponent * np.power(self.x, self.exponent - 1.0),)


class Sum(Function):
    op = "sum"

    def forward(self, x, axis=None, keepdims: bool = False):
        self.shape, self.axis, self.keepdims = x.shape, axis, keepdims
        return np.asarray(x.sum(axis=axis, keepdims=keepdims))

    def backward(self, grad):
        if self.axis is not None and not self.keepdims:
            grad = np.expand_dims(grad, self.axis)
        return (np.broadcast_to(grad, self.shape).copy(),)


class Reshape(Function):
    op = "reshape"

    def forward(self, x, shape: Tuple[int, ...] = ()):
        self.shape = x.shape
        return x.reshape(shape)

    def backward(self, grad):
        return (grad.reshape(self.shape),)


class MaskedFill(Function):
    op = "masked_fill"

    def forward(self, x, mask=None, value: float = 0.0):
        self.keep = np.broadcast_to(np.asarray(mask, dtype=bool), x.shape)
        return np.where(self.keep, x, value)

    def backward(self, grad):
        return (np.where(self.keep, grad, 0.0),)


class Concat(Function):
    op = "concat"

    def forward(self, *arrays):
        lead = arrays[0].shape[:-1]
        for arr in arrays[1:]:
            if arr.shape[:-1] != lead:
                raise DimensionError("concat needs equal leading shapes", arrays[0].shape, arr.shape)
        self.splits = np.cumsum([arr.shape[-1] for arr in arrays])[:-1]
        return np.concatenate(arrays, axis=-1)

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=-1))


# endregion

# region: 文件軸上的運算


class Reduce(Function):
    """
    在文件軸上做 masked pooling

    axis="docs" 對每個查詢各自 pooling，(..., L, C) → (..., 1, C)；
    axis="batch_docs" 對整個 batch 內所有有效文件 pooling，→ (1, ..., 1, C)。
    max 的反向梯度只送到每個 channel 的第一個 argmax 列。
    """

    op = "reduce"

    def forward(self, x, mode: str = "mean", mask=None, axis: str = "docs"):
        if x.ndim < 2:
            raise DimensionError("reduce needs at least a documents × channels input", x.shape)
        mask = np.ones(x.shape[:-1], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != x.shape[:-1]:
            raise DimensionError("mask shape must match the document axes", mask.shape, x.shape)
        channels = x.shape[-1]
        if axis == "docs":
            x3 = x.reshape(-1, x.shape[-2], channels)
            m3 = mask.reshape(-1, x.shape[-2])
            out_shape = x.shape[:-2] + (1, channels)
        elif axis == "batch_docs":
            x3 = x.reshape(1, -1, channels)
            m3 = mask.reshape(1, -1)
            out_shape = (1,) * (x.ndim - 1) + (channels,)
        else:
            raise ValueError(f"unknown reduce axis {axis!r}")

        counts = m3.sum(axis=1)
        if np.any(counts == 0):
            raise InvalidQueryError("pooling over an empty document mask")

        self.mode, self.in_shape, self.out_shape = mode, x.shape, out_shape
        w = m3[:, :, None]
        if mode == "mean":
            self.weights = w / counts[:, None, None]
            out = (x3 * self.weights).sum(axis=1, keepdims=True)
        elif mode == "max":
            masked = np.where(w, x3, -np.inf)
            # np.argmax 取第一個最大值
            self.index = np.argmax(masked, axis=1)[:, None, :]
            self.x3_shape = x3.shape
            out = np.take_along_axis(masked, self.index, axis=1)
        else:
            raise ValueError(f"unknown reduce mode {mode!r}")
        return out.reshape(out_shape)

    def backward(self, grad):
        g3 = grad.reshape(-1, 1, grad.shape[-1])
        if self.mode == "mean":
            gx = self.weights * g3
        else:
            gx = np.zeros(self.x3_shape)
            np.put_along_axis(gx, self.index, g3, axis=1)
        return (gx.reshape(self.in_shape),)


class TakeRows(Function):
    """沿文件軸取列：(B, L, ...) 與索引 (B, N) → (B, N, ...)"""

    op = "take_rows"

    def forward(self, x, indices=None):
        indices = np.asarray(indices, dtype=np.int64)
        if x.ndim < 2 or indices.ndim != 2 or indices.shape[0] != x.shape[0]:
            raise DimensionError("take_rows needs batched input and (B, N) indices", x.shape, indices.shape)
        self.shape, self.indices = x.shape, indices
        self.batch = np.arange(x.shape[0])[:, None]
        return x[self.batch, indices]

    def backward(self, grad):
        gx = np.zeros(self.shape)
        np.add.at(gx, (self.batch, self.indices), grad)
        return (gx,)


class ScatterRows(Function):
    """TakeRows 的伴隨運算：把 (B, N, ...) 依索引加總到 (B, length, ...)"""

    op = "scatter_rows"

    def forward(self, x, indices=None, length: int = 0):
        indices = np.asarray(indices, dtype=np.int64)
        if x.ndim < 2 or indices.shape != x.shape[:2]:
            raise DimensionError("scatter_rows indices must match the first two axes", x.shape, indices.shape)
        self.indices = indices
        self.batch = np.arange(x.shape[0])[:, None]
        out = np.zeros((x.shape[0], length) + x.shape[2:])
        np.add.at(out, (self.batch, indices), x)
        return out

    def backward(self, grad):
        return (grad[self.batch, self.indices],)


# endregion

# region: 便利函數


def _as_node(value) -> Node:
    return value if isinstance(value, Node) else constant(value)


def matmul(a: Node, b: Node) -> Node:
    return MatMul.apply(_as_node(a), _as_node(b))


def add(a, b) -> Node:
    return Add.apply(_as_node(a), _as_node(b))


def mul(a, b) -> Node:
    return Mul.apply(_as_node(a), _as_node(b))


def neg(x: Node) -> Node:
    return Neg.apply(x)


def sub(a, b) -> Node:
    return add(a, neg(_as_node(b)))


def relu(x: Node) -> Node:
    return Relu.apply(x)


def sigmoid(x: Node) -> Node:
    return Sigmoid.apply(x)


def log(x: Node) -> Node:
    return Log.apply(x)


def exp(x: Node) -> Node:
    return Exp.apply(x)


def softplus(x: Node) -> Node:
    return Softplus.apply(x)


def power(x: Node, exponent: float) -> Node:
    return Power.apply(x, exponent=float(exponent))


def sum_(x: Node, axis=None, keepdims: bool = False) -> Node:
    return Sum.apply(x, axis=axis, keepdims=keepdims)


def reshape(x: Node, shape: Sequence[int]) -> Node:
    return Reshape.apply(x, shape=tuple(shape))


def masked_fill(x: Node, mask, value: float = 0.0) -> Node:
    """mask 為 False 的位置換成常數 value，梯度為 0"""
    return MaskedFill.apply(x, mask=mask, value=float(value))


def concat(*nodes: Node) -> Node:
    return Concat.apply(*nodes)


def reduce(mode: str, x: Node, mask=None, axis: str = "docs") -> Node:
    """masked mean / max pooling，見 Reduce"""
    return Reduce.apply(x, mode=mode, mask=mask, axis=axis)


def take_rows(x: Node, indices: np.ndarray) -> Node:
    return TakeRows.apply(x, indices=indices)


def scatter_rows(x: Node, indices: np.ndarray, length: int) -> Node:
    return ScatterRows.apply(x, indices=indices, length=int(length))


_UNARY = {
    "relu": relu,
    "sigmoid": sigmoid,
    "log": log,
    "exp": exp,
    "neg": neg,
    "softplus": softplus,
}
_BINARY = {"add": add, "mul": mul}


def elementwise(op: str, *args) -> Node:
    """依名稱套用逐元素運算"""
    if op in _UNARY:
        if len(args) != 1:
            raise TypeError(f"{op} takes exactly one operand")
        return _UNARY[op](args[0])
    if op in _BINARY:
        if len(args) != 2:
            raise TypeError(f"{op} takes exactly two operands")
        return _BINARY[op](*args)
    raise ValueError(f"unknown elementwise op {op!r}")


def stop_gradient(x: Node, name: Optional[str] = None) -> Node:
    return constant(x.data.copy(), name=name)


# endregion
