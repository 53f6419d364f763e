"""
執行設定 (RunConfig) 與平面設定檔讀取

設定檔為一行一個 `key = value`，key 以點號分段（例如 `model.variant`、
`train.learning_rate`），`#` 之後為註解。檔案以 python-dotenv 的
`dotenv_values` 解析，再交由 Pydantic 做型別轉換與驗證。

所有亂數皆來自單一 `seed`；各子系統以 `derive_seed(seed, tag)` 取得子種子。
"""

import hashlib
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigurationError
from .logger_config import get_logger
from .models import LossSpec, ModelSpec, TrainConfig, Variant

logger = get_logger(__name__)


class SyntheticKind(str, Enum):
    """合成資料產生器種類"""

    RANKABLE = "rankable"  # label 只由文件自身特徵決定
    CONTEXTUAL = "contextual"  # label 取決於查詢內文件分布


class DataConfig(BaseModel):
    """資料集路徑與前處理設定"""

    model_config = ConfigDict(extra="forbid")

    train: Optional[str] = Field(default=None, description="訓練集 LETOR 檔")
    valid: Optional[str] = Field(default=None, description="驗證集 LETOR 檔")
    test: Optional[str] = Field(default=None, description="測試集 LETOR 檔")
    normalize: bool = Field(default=True, description="以訓練集統計量標準化特徵")
    drop_irrelevant: bool = Field(
        default=True, description="移除訓練/驗證集中沒有相關文件的查詢"
    )


class SyntheticConfig(BaseModel):
    """合成資料設定"""

    model_config = ConfigDict(extra="forbid")

    kind: SyntheticKind = Field(default=SyntheticKind.RANKABLE, description="產生器種類")
    train_queries: int = Field(default=5000, ge=1, description="訓練查詢數")
    valid_queries: int = Field(default=500, ge=1, description="驗證查詢數")
    test_queries: int = Field(default=500, ge=1, description="測試查詢數")
    docs_per_query: int = Field(default=16, ge=1, description="每查詢文件數")
    feature_count: int = Field(default=20, ge=3, description="特徵維度")


class CompareConfig(BaseModel):
    """多模型比較設定"""

    model_config = ConfigDict(extra="forbid")

    variants: List[Variant] = Field(
        default_factory=lambda: [
            Variant.UNIVARIATE,
            Variant.GSF,
            Variant.SERANK,
            Variant.SERANK_B,
        ],
        description="要比較的模型種類",
    )
    group_sizes: List[int] = Field(
        default_factory=lambda: [4], description="gsf 要比較的 group 大小"
    )
    baseline: Optional[str] = Field(
        default=None, description="配對 t-test 的基準模型名稱，預設為第一個"
    )

    @field_validator("variants", "group_sizes", mode="before")
    @classmethod
    def _parse_list(cls, value):
        if isinstance(value, str):
            return [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_validator("group_sizes")
    @classmethod
    def _check_group_sizes(cls, value):
        if not value or any(m < 1 for m in value):
            raise ValueError(f"group_sizes must be positive: {value}")
        return value


class OutputConfig(BaseModel):
    """輸出設定"""

    model_config = ConfigDict(extra="forbid")

    dir: str = Field(default="runs/serank", description="輸出目錄")


class RunConfig(BaseModel):
    """CLI 使用的完整設定（各區段的聯集）"""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(default=42, description="唯一的亂數種子")
    threads: int = Field(default=1, ge=1, description="worker 數上限")
    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    loss: LossSpec = Field(default_factory=LossSpec)
    data: DataConfig = Field(default_factory=DataConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    compare: CompareConfig = Field(default_factory=CompareConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    def resolved(self) -> "RunConfig":
        """回傳子種子、loss 與 threads 已套用到各區段的副本"""
        model = self.model.model_copy(update={"seed": derive_seed(self.seed, "model")})
        train = self.train.model_copy(
            update={
                "seed": derive_seed(self.seed, "train"),
                "loss": self.loss,
                "threads": self.threads,
            }
        )
        return self.model_copy(update={"model": model, "train": train})


# 由 seed 推導，不接受直接設定的欄位
_DERIVED_FIELDS = {
    "model": {"seed"},
    "train": {"seed", "loss", "threads"},
}
_SECTIONS = ("model", "train", "loss", "data", "synthetic", "compare", "output")
_TOP_LEVEL = ("seed", "threads")


def derive_seed(seed: int, tag: str) -> int:
    """
    由主種子與角色標籤推導子種子

    與快取鍵相同作法：以 MD5 取標籤的穩定雜湊，跨平台、跨 Python 版本皆一致。
    """
    digest = int(hashlib.md5(tag.encode("utf-8")).hexdigest()[:8], 16)
    return (int(seed) + digest) % (2**32)


def _section_model(name: str) -> type:
    return RunConfig.model_fields[name].annotation


def accepted_keys() -> List[str]:
    keys = list(_TOP_LEVEL)
    for section in _SECTIONS:
        skip = _DERIVED_FIELDS.get(section, set())
        for field in _section_model(section).model_fields:
            if field not in skip:
                keys.append(f"{section}.{field}")
    return keys


def _render(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(_render(v) for v in value)
    return str(value)


def describe_keys() -> List[Tuple[str, str, str]]:
    """列出所有可用的設定鍵：(key, 預設值, 說明)"""
    defaults = RunConfig()
    rows = []
    for key in accepted_keys():
        if "." in key:
            section, field = key.split(".", 1)
            model = getattr(defaults, section)
            info = type(model).model_fields[field]
            value = getattr(model, field)
        else:
            info = RunConfig.model_fields[key]
            value = getattr(defaults, key)
        rows.append((key, _render(value), info.description or ""))
    return rows


def config_from_mapping(values: Mapping[str, Optional[str]]) -> RunConfig:
    """由平面 key → value 對應建立 RunConfig；未知的 key 直接拒絕"""
    allowed = set(accepted_keys())
    unknown = sorted(k for k in values if k not in allowed)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {', '.join(unknown)}")

    nested: Dict[str, Any] = {}
    for key, raw in values.items():
        # 空值一律回到預設值（Optional 欄位的預設即 None）
        if raw is None or (isinstance(raw, str) and raw.strip() == ""):
            continue
        if "." in key:
            section, field = key.split(".", 1)
            nested.setdefault(section, {})[field] = raw
        else:
            nested[key] = raw

    try:
        return RunConfig.model_validate(nested)
    except ValidationError as e:
        raise ConfigurationError(f"invalid configuration: {e}") from e


def load_run_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    讀取平面設定檔並套用命令列覆寫

    Args:
        path: 設定檔路徑；None 表示全部使用預設值
        overrides: 命令列覆寫（例如 --seed），值為 None 的項目忽略

    Returns:
        RunConfig: 已驗證的設定（尚未 resolved）
    """
    values: Dict[str, Optional[str]] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        values.update(dotenv_values(path, interpolate=False))
        logger.info(f"讀取設定檔: {path} ({len(values)} keys)")
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _render(value)
    return config_from_mapping(values)


def dump_section(section: str, model: BaseModel, skip: Tuple[str, ...] = ()) -> str:
    """將單一區段輸出成平面 `section.key = value` 文字"""
    lines = []
    for field in type(model).model_fields:
        if field in skip:
            continue
        value = getattr(model, field)
        if isinstance(value, BaseModel):
            continue
        lines.append(f"{section}.{field} = {_render(value)}")
    return "\n".join(lines) + "\n"
