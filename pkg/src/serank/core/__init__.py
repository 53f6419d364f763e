"""
SERank 核心組件模組 (Core Components)

此模組包含各子系統共用的基礎組件：
- logger_config.py: 日誌配置與格式設定
- errors.py: 例外階層
- models.py: ModelSpec / TrainConfig / LossSpec 的 Pydantic 定義
- config.py: 平面 dotted-key 設定檔與子種子推導
- observability.py: span 耗時追蹤
"""

from . import models
from .errors import (
    ConfigurationError,
    DataParseError,
    DimensionError,
    InvalidQueryError,
    SchemaError,
    SERankError,
    TrainingAbortedError,
)
from .logger_config import get_logger

__all__ = [
    "models",
    "get_logger",
    "SERankError",
    "DimensionError",
    "InvalidQueryError",
    "DataParseError",
    "SchemaError",
    "ConfigurationError",
    "TrainingAbortedError",
]
