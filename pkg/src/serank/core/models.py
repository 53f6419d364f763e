"""
SERank 設定模型定義

以 Pydantic 描述模型結構、損失函數與訓練迴圈的所有可調參數。
預設值對應 Web30K 實驗設定：三層 (64, 32, 16) DNN、shrinkage 2、
batch size 128、Adagrad learning rate 0.5、訓練 30000 步並以 NDCG@5 選模型。
"""

import re
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class Variant(str, Enum):
    """打分模型種類"""

    UNIVARIATE = "univariate"  # 逐文件 DNN，等同 GSF(1)
    GSF = "gsf"  # Groupwise Scoring Function
    SERANK = "serank"  # 原始 SE block
    SERANK_B = "serank_b"  # 先降維再 pooling 的 SE-b block
    SERANK_NO_SQUEEZE = "serank_no_squeeze"  # 消融：移除 pooling
    SERANK_NO_EXCITATION = "serank_no_excitation"  # 消融：相乘改為串接


SE_VARIANTS = frozenset(
    {
        Variant.SERANK,
        Variant.SERANK_B,
        Variant.SERANK_NO_SQUEEZE,
        Variant.SERANK_NO_EXCITATION,
    }
)


class Pooling(str, Enum):
    """Squeeze 的 pooling 方式"""

    MEAN = "mean"
    MAX = "max"


class GateActivation(str, Enum):
    """Excitation 最外層 activation"""

    SIGMOID = "sigmoid"
    RELU = "relu"  # 字面上的雙 ReLU 版本，僅供比較實驗


class LossKind(str, Enum):
    """排序損失函數種類"""

    PAIRWISE_LOGISTIC = "pairwise_logistic"
    PAIRWISE_LOGISTIC_LAMBDA = "pairwise_logistic_lambda"
    SOFTMAX_CE = "softmax_ce"


class Gain(str, Enum):
    """label → gain 對應"""

    IDENTITY = "identity"  # 點擊資料 (0/1)
    POW2MINUS1 = "pow2minus1"  # 分級資料 2^label - 1


def _split_csv(value):
    if isinstance(value, str):
        return [part.strip() for part in value.split(",") if part.strip()]
    return value


class ModelSpec(BaseModel):
    """打分模型的宣告式描述"""

    model_config = ConfigDict(extra="forbid")

    variant: Variant = Field(default=Variant.SERANK_B, description="模型種類")
    feature_count: int = Field(default=136, ge=1, description="輸入特徵維度 C")
    hidden_widths: List[int] = Field(
        default_factory=lambda: [64, 32, 16], description="隱藏層寬度"
    )
    group_size: int = Field(default=1, ge=1, description="GSF 的 group 大小 m")
    shrinkage: int = Field(default=2, ge=1, description="excitation 瓶頸縮減比 r")
    pooling: Pooling = Field(default=Pooling.MEAN, description="squeeze pooling 方式")
    batch_norm: bool = Field(default=False, description="隱藏層是否加 batch norm")
    se_on_input: bool = Field(default=True, description="是否對原始輸入加 SE block")
    gate_activation: GateActivation = Field(
        default=GateActivation.SIGMOID, description="excitation 外層 activation"
    )
    seed: int = Field(default=0, description="參數初始化亂數種子")

    @field_validator("hidden_widths", mode="before")
    @classmethod
    def _parse_widths(cls, value):
        return _split_csv(value)

    @model_validator(mode="after")
    def _check_widths(self):
        if not self.hidden_widths:
            raise ValueError("hidden_widths must not be empty")
        if any(w < 1 for w in self.hidden_widths):
            raise ValueError(f"hidden_widths must be positive: {self.hidden_widths}")
        for width in self.se_widths:
            if width // self.shrinkage < 1:
                raise ValueError(
                    f"shrinkage {self.shrinkage} leaves no bottleneck units for width {width}"
                )
        return self

    @property
    def uses_se(self) -> bool:
        return self.variant in SE_VARIANTS

    @property
    def se_widths(self) -> List[int]:
        """所有帶 SE block 的輸入寬度（依序）"""
        if not self.uses_se:
            return []
        widths = [self.feature_count] if self.se_on_input else []
        return widths + list(self.hidden_widths)


class LossSpec(BaseModel):
    """損失函數設定"""

    model_config = ConfigDict(extra="forbid")

    kind: LossKind = Field(default=LossKind.SOFTMAX_CE, description="損失函數種類")
    gain: Gain = Field(default=Gain.POW2MINUS1, description="label gain 對應")
    lambda_normalize: bool = Field(
        default=True, description="λ-weight 是否除以 maxDCG"
    )


_METRIC_PATTERN = re.compile(r"^ndcg@(\d+)$")


class TrainConfig(BaseModel):
    """訓練迴圈設定"""

    model_config = ConfigDict(extra="forbid")

    # lr = 0 允許，用於「參數不變」的檢查
    learning_rate: float = Field(default=0.5, ge=0.0, description="Adagrad learning rate")
    batch_size: int = Field(default=128, ge=1, description="每批查詢數")
    max_steps: int = Field(default=30000, ge=1, description="訓練步數")
    max_epochs: Optional[int] = Field(
        default=None, ge=1, description="設定時改以 epoch 訓練並使用最後 checkpoint"
    )
    doc_cap: int = Field(default=200, ge=1, description="訓練時每查詢最多文件數")
    eval_every: int = Field(default=500, ge=1, description="每幾步做一次驗證")
    seed: int = Field(default=0, description="批次與取樣亂數種子")
    adagrad_init_acc: float = Field(
        default=0.1, ge=0.0, description="Adagrad accumulator 初始值"
    )
    clip_norm: Optional[float] = Field(
        default=None, gt=0.0, description="global-norm gradient clipping 上限"
    )
    bn_momentum: float = Field(
        default=0.99, ge=0.0, le=1.0, description="batch norm moving average 動量"
    )
    select_metric: str = Field(default="ndcg@5", description="模型選擇指標")
    threads: int = Field(default=1, ge=1, description="驗證時的 worker 數")
    loss: LossSpec = Field(default_factory=LossSpec, description="損失函數設定")

    @field_validator("select_metric")
    @classmethod
    def _check_metric(cls, value):
        if not _METRIC_PATTERN.match(value.lower()):
            raise ValueError(f"select_metric must look like ndcg@k, got {value!r}")
        return value.lower()

    @property
    def select_k(self) -> int:
        return int(_METRIC_PATTERN.match(self.select_metric).group(1))
