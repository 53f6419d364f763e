"""
反向自動微分的計算圖節點

Node 持有一個 float64 numpy 陣列、產生它的 Function（葉節點為 None）、
父節點參照與梯度累加器。backward() 以迭代式拓撲排序走訪計算圖，
梯度依固定順序累加，相同輸入與權重會得到位元相同的結果。
"""

from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.errors import DimensionError

ArrayLike = Union[np.ndarray, float, int, Sequence[float], Sequence[Sequence[float]]]


def unbroadcast(grad: np.ndarray, to_shape: Tuple[int, ...]) -> np.ndarray:
    """將廣播後的梯度加總回原本的形狀"""
    if grad.shape == to_shape:
        return grad
    while grad.ndim > len(to_shape):
        grad = grad.sum(axis=0)
    for dim, size in enumerate(to_shape):
        if size == 1 and grad.shape[dim] != 1:
            grad = grad.sum(axis=dim, keepdims=True)
    return grad


class Function:
    """
    可微分運算的基底類別

    子類別實作 forward（輸入為 numpy 陣列）與 backward（輸入為輸出端梯度，
    回傳每個輸入的梯度，不需要梯度的位置可回傳 None）。
    """

    op = "function"

    def __init__(self, *inputs: "Node"):
        self.inputs = inputs

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError("Forward pass not implemented for this function")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, *inputs: "Node", **kwargs: Any) -> "Node":
        func = cls(*inputs)
        out = func.forward(*(node.data for node in inputs), **kwargs)
        requires_grad = any(node.requires_grad for node in inputs)
        return Node(out, requires_grad=requires_grad, creator=func)


class Node:
    """計算圖中的可微分值"""

    __slots__ = ("data", "grad", "requires_grad", "creator", "name")

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        creator: Optional[Function] = None,
        name: Optional[str] = None,
    ):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.creator = creator
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def op(self) -> str:
        return "leaf" if self.creator is None else self.creator.op

    @property
    def parents(self) -> Tuple["Node", ...]:
        return () if self.creator is None else tuple(self.creator.inputs)

    @property
    def is_leaf(self) -> bool:
        return self.creator is None

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Node(op={self.op!r}, shape={self.shape}{label})"

    def _topological_order(self) -> List["Node"]:
        order: List[Node] = []
        visited = set()
        stack: List[Tuple[Node, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in reversed(node.parents):
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    def backward(self, grad: Optional[ArrayLike] = None) -> None:
        """
        由此節點反向傳播梯度

        Args:
            grad: 輸出端梯度；純量節點可省略（視為 1）
        """
        if not self.requires_grad:
            return
        if grad is None:
            if self.data.size != 1:
                raise DimensionError("backward() without grad needs a scalar", self.shape)
            seed = np.ones_like(self.data)
        else:
            seed = np.asarray(grad, dtype=np.float64)
            if seed.shape != self.shape:
                raise DimensionError("seed gradient shape mismatch", seed.shape, self.shape)

        pending = {id(self): seed}
        for node in reversed(self._topological_order()):
            g = pending.pop(id(node), None)
            if g is None:
                continue
            node.grad = g.copy() if node.grad is None else node.grad + g
            if node.creator is None:
                continue
            for parent, pg in zip(node.parents, node.creator.backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                pg = unbroadcast(np.asarray(pg, dtype=np.float64), parent.shape)
                key = id(parent)
                pending[key] = pg if key not in pending else pending[key] + pg


def constant(data: ArrayLike, name: Optional[str] = None) -> Node:
    """不需要梯度的常數節點"""
    return Node(data, requires_grad=False, name=name)


def parameter(data: ArrayLike, name: Optional[str] = None) -> Node:
    """需要梯度的葉節點（模型參數）"""
    return Node(data, requires_grad=True, name=name)


def zero_grads(nodes: Iterable[Node]) -> None:
    for node in nodes:
        node.zero_grad()
