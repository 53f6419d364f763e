"""
排序損失函數

每個函數接受單一查詢的分數 (L,) 或批次分數 (B, L)，回傳對應的純量或 (B,) 逐查詢 loss；
batch loss 一律為逐查詢 loss 的平均（除以 B，被略過的查詢貢獻 0）。

- pairwise_logistic: Σ_{label_i > label_j} log(1 + exp(-(s_i - s_j)))
- pairwise_logistic_lambda: 同上，每對乘上以目前排序計算的 ΔNDCG 權重（視為常數）
- softmax_ce: -Σ_i (g_i / Σ g) · log softmax(s)_i；沒有正 gain 的查詢略過
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..autodiff import ops
from ..autodiff.tensor import Node
from ..core.errors import DimensionError, InvalidQueryError
from ..core.models import Gain, LossKind, LossSpec


@dataclass
class LossResult:
    loss: Node  # 純量
    per_query: Node  # (B,)
    skipped: int


def gains(labels: np.ndarray, gain: Gain = Gain.POW2MINUS1) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.float64)
    return np.power(2.0, labels) - 1.0 if Gain(gain) == Gain.POW2MINUS1 else labels


def _prepare(scores: Node, labels, mask) -> Tuple[Node, np.ndarray, np.ndarray, bool]:
    single = len(scores.shape) == 1
    if single:
        scores = ops.reshape(scores, (1,) + scores.shape)
    labels = np.asarray(labels, dtype=np.float64).reshape(scores.shape)
    mask = (
        np.ones(scores.shape, dtype=bool)
        if mask is None
        else np.asarray(mask, dtype=bool).reshape(scores.shape)
    )
    if len(scores.shape) != 2:
        raise DimensionError("scores must be (L,) or (B, L)", scores.shape)
    if not np.all(mask.any(axis=1)):
        raise InvalidQueryError("every query needs at least one valid document")
    # 補齊位置可能是 ScoringModel.score 給的 -inf
    scores = ops.masked_fill(scores, mask)
    return scores, labels, mask, single


def _finish(per_query: Node, single: bool) -> Node:
    return ops.reshape(per_query, ()) if single else per_query


def _pair_terms(scores: Node) -> Node:
    """(B, L, L) 的 s_i - s_j"""
    batch, length = scores.shape
    return ops.sub(
        ops.reshape(scores, (batch, length, 1)), ops.reshape(scores, (batch, 1, length))
    )


def _pair_mask(labels: np.ndarray, mask: np.ndarray) -> np.ndarray:
    valid = mask[:, :, None] & mask[:, None, :]
    return valid & (labels[:, :, None] > labels[:, None, :])


def pairwise_logistic(scores: Node, labels, mask=None) -> Node:
    scores, labels, mask, single = _prepare(scores, labels, mask)
    weights = _pair_mask(labels, mask).astype(np.float64)
    terms = ops.mul(ops.softplus(ops.neg(_pair_terms(scores))), weights)
    return _finish(ops.sum_(terms, axis=(1, 2)), single)


def lambda_weights(
    scores: np.ndarray,
    labels: np.ndarray,
    mask: np.ndarray,
    gain: Gain = Gain.POW2MINUS1,
    normalize: bool = True,
) -> np.ndarray:
    """
    每對文件交換位置時的 |ΔNDCG|（以目前分數排序，stable tie-break）

    Returns:
        np.ndarray: (B, L, L)，只在 label_i > label_j 的有效對上非零
    """
    g = np.where(mask, gains(labels, gain), 0.0)
    masked = np.where(mask, scores, -np.inf)
    order = np.argsort(-masked, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(scores.shape[1])[None, :] + 1, axis=1)
    discount = 1.0 / np.log2(1.0 + ranks)
    delta = np.abs(g[:, :, None] - g[:, None, :]) * np.abs(
        discount[:, :, None] - discount[:, None, :]
    )
    if normalize:
        ideal = -np.sort(-g, axis=1)
        max_dcg = (ideal / np.log2(np.arange(scores.shape[1]) + 2.0)[None, :]).sum(axis=1)
        delta = delta / np.where(max_dcg > 0, max_dcg, 1.0)[:, None, None]
    return delta * _pair_mask(labels, mask)


def pairwise_logistic_lambda(
    scores: Node,
    labels,
    mask=None,
    gain: Gain = Gain.POW2MINUS1,
    normalize: bool = True,
) -> Node:
    scores, labels, mask, single = _prepare(scores, labels, mask)
    weights = lambda_weights(scores.data, labels, mask, gain, normalize)
    terms = ops.mul(ops.softplus(ops.neg(_pair_terms(scores))), weights)
    return _finish(ops.sum_(terms, axis=(1, 2)), single)


def softmax_ce(scores: Node, labels, mask=None, gain: Gain = Gain.POW2MINUS1) -> Node:
    per_query, _ = _softmax_ce(scores, labels, mask, gain)
    return per_query


def _softmax_ce(scores: Node, labels, mask, gain: Gain):
    scores, labels, mask, single = _prepare(scores, labels, mask)
    g = np.where(mask, gains(labels, gain), 0.0)
    total = g.sum(axis=1)
    skipped = int(np.sum(total <= 0))
    target = g / np.where(total > 0, total, 1.0)[:, None]

    fmask = mask.astype(np.float64)
    shift = np.max(np.where(mask, scores.data, -np.inf), axis=1, keepdims=True)
    # 平移後乘上 mask，補齊位置為 0，exp 後再乘 mask 排除
    z = ops.mul(ops.sub(scores, shift), fmask)
    denom = ops.sum_(ops.mul(ops.exp(z), fmask), axis=1, keepdims=True)
    log_prob = ops.sub(z, ops.log(denom))
    per_query = ops.neg(ops.sum_(ops.mul(log_prob, target), axis=1))
    return _finish(per_query, single), skipped


def compute_loss(spec: LossSpec, scores: Node, labels, mask=None) -> LossResult:
    """依 LossSpec 計算批次 loss（逐查詢平均）"""
    kind = LossKind(spec.kind)
    if len(scores.shape) != 2:
        raise DimensionError("compute_loss expects (B, L) scores", scores.shape)
    skipped = 0
    if kind == LossKind.PAIRWISE_LOGISTIC:
        per_query = pairwise_logistic(scores, labels, mask)
    elif kind == LossKind.PAIRWISE_LOGISTIC_LAMBDA:
        per_query = pairwise_logistic_lambda(
            scores, labels, mask, spec.gain, spec.lambda_normalize
        )
    else:
        per_query, skipped = _softmax_ce(scores, labels, mask, spec.gain)
    loss = ops.mul(ops.sum_(per_query), 1.0 / scores.shape[0])
    return LossResult(loss=loss, per_query=per_query, skipped=skipped)
