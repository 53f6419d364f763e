"""
打分模型 (Scoring Model)

依 ModelSpec 建立參數並對查詢的文件集合打分：

- univariate: 逐文件 DNN
- gsf: 以循環視窗把 m 個文件串接成一組，組內分數再平均回每個文件
- serank / serank_b 及其消融版本: DNN 的每一層（可選擇含原始輸入）後接 SE block

輸入可為單一查詢 (L, C) 或補齊後的批次 (B, L, C)；mask 之外的位置分數為 -inf。
"""

import copy
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..autodiff import ops
from ..autodiff.tensor import Node, constant, parameter
from ..core.errors import ConfigurationError, DimensionError
from ..core.logger_config import get_logger
from ..core.models import ModelSpec, Variant
from . import blocks

logger = get_logger(__name__)


class Mode(str, Enum):
    TRAIN = "train"
    INFER = "infer"


class ScoringModel:
    """模型參數、batch norm 統計量與前向計算"""

    def __init__(
        self,
        spec: ModelSpec,
        parameters: Dict[str, Node],
        buffers: Optional[Dict[str, np.ndarray]] = None,
    ):
        self.spec = spec
        self.parameters = parameters
        self.buffers = buffers if buffers is not None else {}
        expected = parameter_shapes(spec)
        for name, shape in expected.items():
            if name not in parameters:
                raise DimensionError(f"missing parameter {name}")
            if parameters[name].shape != shape:
                raise DimensionError(f"parameter {name} has the wrong shape", parameters[name].shape, shape)
        extra = sorted(set(parameters) - set(expected))
        if extra:
            raise DimensionError(f"unexpected parameters: {', '.join(extra)}")
        for name, shape in buffer_shapes(spec).items():
            self.buffers.setdefault(
                name, np.zeros(shape) if name.endswith("moving_mean") else np.ones(shape)
            )

    @classmethod
    def init(cls, spec: ModelSpec) -> "ScoringModel":
        """以 spec.seed 初始化：權重 Glorot uniform，bias 為 0，BN 的 gamma 為 1"""
        # model_copy / model_construct 不會重新驗證寬度與 shrinkage 的組合
        try:
            spec = ModelSpec.model_validate(spec.model_dump())
        except ValidationError as e:
            raise ConfigurationError(f"invalid model spec: {e}") from e
        rng = np.random.default_rng(spec.seed)
        params: Dict[str, Node] = {}
        for name, shape in parameter_shapes(spec).items():
            if name.endswith(".gamma"):
                value = np.ones(shape)
            elif name.endswith((".b", ".beta")):
                value = np.zeros(shape)
            else:
                limit = np.sqrt(6.0 / (shape[0] + shape[1]))
                value = rng.uniform(-limit, limit, size=shape)
            params[name] = parameter(value, name=name)
        model = cls(spec, params)
        logger.debug(
            f"初始化 {spec.variant.value} 模型: {model.parameter_count} 個參數"
        )
        return model

    @property
    def parameter_count(self) -> int:
        return int(sum(p.data.size for p in self.parameters.values()))

    def trainable(self) -> List[Node]:
        return list(self.parameters.values())

    def copy(self) -> "ScoringModel":
        params = {
            name: parameter(node.data.copy(), name=name) for name, node in self.parameters.items()
        }
        return ScoringModel(self.spec, params, copy.deepcopy(self.buffers))

    # region: 前向計算

    def forward(
        self,
        features: np.ndarray,
        mask: Optional[np.ndarray] = None,
        mode: Mode = Mode.INFER,
        rng: Optional[np.random.Generator] = None,
        momentum: float = 0.99,
    ) -> Node:
        """
        建立計算圖並回傳 (B, L) 的分數節點（mask 外的值無意義但有限）

        train 模式會以 batch 統計量做 batch norm 並更新 moving average，
        GSF 另以 rng 打亂循環視窗的文件順序。
        """
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 3:
            raise DimensionError("forward expects a (B, L, C) batch", x.shape)
        if x.shape[-1] != self.spec.feature_count:
            raise DimensionError(
                f"model expects {self.spec.feature_count} features", x.shape
            )
        mask = np.ones(x.shape[:2], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if mask.shape != x.shape[:2]:
            raise DimensionError("mask must be (B, L)", mask.shape, x.shape)
        mode = Mode(mode)

        if self.spec.variant == Variant.GSF:
            return self._forward_gsf(x, mask, mode, rng, momentum)
        h = constant(x)
        if self.spec.uses_se and self.spec.se_on_input:
            h = self._se(h, mask, "se_in")
        for i in range(len(self.spec.hidden_widths)):
            h = self._hidden(h, mask, i, mode, momentum)
            if self.spec.uses_se:
                h = self._se(h, mask, f"se_{i}")
        out = blocks.dense(h, self.parameters["output.w"], self.parameters["output.b"])
        return ops.reshape(out, x.shape[:2])

    def _hidden(self, h: Node, mask: np.ndarray, i: int, mode: Mode, momentum: float) -> Node:
        p = self.parameters
        h = blocks.dense(h, p[f"dense_{i}.w"], p[f"dense_{i}.b"])
        if self.spec.batch_norm:
            gamma, beta = p[f"bn_{i}.gamma"], p[f"bn_{i}.beta"]
            mean_key, var_key = f"bn_{i}.moving_mean", f"bn_{i}.moving_var"
            if mode == Mode.TRAIN:
                h, mean, var = blocks.batch_norm_train(h, mask, gamma, beta)
                self.buffers[mean_key] = momentum * self.buffers[mean_key] + (1 - momentum) * mean
                self.buffers[var_key] = momentum * self.buffers[var_key] + (1 - momentum) * var
            else:
                h = blocks.batch_norm_infer(
                    h, gamma, beta, self.buffers[mean_key], self.buffers[var_key]
                )
        return ops.relu(h)

    def _se(self, h: Node, mask: np.ndarray, prefix: str) -> Node:
        spec = self.spec
        w1, w2 = self.parameters[f"{prefix}.w1"], self.parameters[f"{prefix}.w2"]
        kwargs = dict(gate=spec.gate_activation, shrinkage=spec.shrinkage)
        if spec.variant == Variant.SERANK:
            return blocks.se_block(h, mask, w1, w2, pooling=spec.pooling, **kwargs)
        if spec.variant == Variant.SERANK_B:
            return blocks.se_b_block(h, mask, w1, w2, pooling=spec.pooling, **kwargs)
        if spec.variant == Variant.SERANK_NO_SQUEEZE:
            return blocks.se_no_squeeze_block(h, w1, w2, **kwargs)
        return blocks.se_no_excitation_block(h, mask, w1, w2, pooling=spec.pooling, **kwargs)

    def _forward_gsf(
        self,
        x: np.ndarray,
        mask: np.ndarray,
        mode: Mode,
        rng: Optional[np.random.Generator],
        momentum: float,
    ) -> Node:
        batch, length, channels = x.shape
        m = self.spec.group_size
        shuffle = rng if mode == Mode.TRAIN else None
        index = gsf_windows(mask.sum(axis=1), length, m, shuffle)
        grouped = ops.reshape(ops.take_rows(constant(x), index), (batch, length, m * channels))
        h = grouped
        for i in range(len(self.spec.hidden_widths)):
            h = self._hidden(h, mask, i, mode, momentum)
        out = blocks.dense(h, self.parameters["output.w"], self.parameters["output.b"])
        per_slot = ops.reshape(out, (batch, length * m))
        # 每個文件恰好出現在 m 個 slot
        total = ops.scatter_rows(per_slot, index, length)
        return total if m == 1 else ops.mul(total, 1.0 / m)

    # endregion

    def score(
        self,
        features: np.ndarray,
        mask: Optional[np.ndarray] = None,
        mode: Mode = Mode.INFER,
        rng: Optional[np.random.Generator] = None,
    ) -> np.ndarray:
        """
        對單一查詢 (L, C) 或批次 (B, L, C) 打分

        Returns:
            np.ndarray: (L,) 或 (B, L)，mask 外為 -inf
        """
        x = np.asarray(features, dtype=np.float64)
        single = x.ndim == 2
        if single:
            x = x[None]
            mask = None if mask is None else np.asarray(mask, dtype=bool)[None]
        if x.ndim != 3:
            raise DimensionError("score expects (L, C) or (B, L, C)", x.shape)
        mask = np.ones(x.shape[:2], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        scores = np.where(mask, self.forward(x, mask, mode, rng).data, -np.inf)
        return scores[0] if single else scores


def gsf_windows(
    lengths: np.ndarray,
    max_length: int,
    group_size: int,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """
    GSF 循環視窗索引，回傳 (B, Lmax * m)

    查詢 b 的第 i 個視窗為 order[(i + j) mod L_b], j = 0..m-1；
    rng 為 None 時 order 為原始順序，否則每個查詢各自打亂。
    補齊位置 i >= L_b 的視窗只指向自己。
    """
    lengths = np.asarray(lengths, dtype=np.int64)
    index = np.repeat(np.arange(max_length), group_size)[None, :].repeat(len(lengths), axis=0)
    offsets = np.arange(group_size)
    for b, n in enumerate(lengths):
        order = rng.permutation(n) if rng is not None else np.arange(n)
        windows = order[(np.arange(n)[:, None] + offsets[None, :]) % n]
        index[b, : n * group_size] = windows.reshape(-1)
    return index


def _layer_widths(spec: ModelSpec) -> List[Tuple[int, int]]:
    """每個隱藏層的 (輸入寬度, 輸出寬度)；no_excitation 的串接讓寬度加倍"""
    concat = spec.variant == Variant.SERANK_NO_EXCITATION
    if spec.variant == Variant.GSF:
        width = spec.feature_count * spec.group_size
    else:
        width = spec.feature_count
        if spec.uses_se and spec.se_on_input and concat:
            width *= 2
    layers = []
    for h in spec.hidden_widths:
        layers.append((width, h))
        width = 2 * h if concat else h
    layers.append((width, spec.group_size if spec.variant == Variant.GSF else 1))
    return layers


def parameter_shapes(spec: ModelSpec) -> Dict[str, Tuple[int, ...]]:
    """依建立順序列出所有參數名稱與形狀"""
    shapes: Dict[str, Tuple[int, ...]] = {}

    def se(prefix: str, width: int) -> None:
        k = width // spec.shrinkage
        shapes[f"{prefix}.w1"] = (width, k)
        shapes[f"{prefix}.w2"] = (k, width)

    if spec.uses_se and spec.se_on_input:
        se("se_in", spec.feature_count)
    layers = _layer_widths(spec)
    for i, (fan_in, fan_out) in enumerate(layers[:-1]):
        shapes[f"dense_{i}.w"] = (fan_in, fan_out)
        shapes[f"dense_{i}.b"] = (fan_out,)
        if spec.batch_norm:
            shapes[f"bn_{i}.gamma"] = (fan_out,)
            shapes[f"bn_{i}.beta"] = (fan_out,)
        if spec.uses_se:
            se(f"se_{i}", fan_out)
    fan_in, fan_out = layers[-1]
    shapes["output.w"] = (fan_in, fan_out)
    shapes["output.b"] = (fan_out,)
    return shapes


def buffer_shapes(spec: ModelSpec) -> Dict[str, Tuple[int, ...]]:
    if not spec.batch_norm:
        return {}
    shapes = {}
    for i, width in enumerate(spec.hidden_widths):
        shapes[f"bn_{i}.moving_mean"] = (width,)
        shapes[f"bn_{i}.moving_var"] = (width,)
    return shapes


def init_model(spec: ModelSpec) -> ScoringModel:
    return ScoringModel.init(spec)


def score(
    model: ScoringModel,
    features: np.ndarray,
    mask: Optional[np.ndarray] = None,
    mode: Mode = Mode.INFER,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    return model.score(features, mask, mode, rng)
