"""
SERank 例外階層

所有模組拋出的錯誤皆繼承自 SERankError，CLI 依類型對應到結束碼：
- 設定 / 資料格式錯誤 → 2
- 執行期錯誤（訓練中止等）→ 3
"""

from typing import Optional, Sequence


class SERankError(Exception):
    """SERank 基礎例外"""


class DimensionError(SERankError, ValueError):
    """張量形狀不相容"""

    def __init__(self, message: str, *shapes: Sequence[int]):
        if shapes:
            rendered = " vs ".join(str(tuple(s)) for s in shapes)
            message = f"{message}: {rendered}"
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class InvalidQueryError(SERankError, ValueError):
    """查詢沒有任何有效文件（mask 全為 False）"""


class DataParseError(SERankError, ValueError):
    """LETOR 檔案格式錯誤"""

    def __init__(self, message: str, line_number: Optional[int] = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class SchemaError(SERankError, ValueError):
    """特徵維度與資料集 / 統計量不一致"""


class ConfigurationError(SERankError, ValueError):
    """模型或訓練設定無效"""


class TrainingAbortedError(SERankError, RuntimeError):
    """訓練過程出現非有限值的 loss"""

    def __init__(self, step: int, max_param: float, max_grad: float, loss: float):
        super().__init__(
            f"non-finite loss {loss!r} at step {step} "
            f"(max |param| = {max_param:.6g}, max |grad| = {max_grad:.6g})"
        )
        self.step = step
        self.max_param = max_param
        self.max_grad = max_grad
        self.loss = loss
