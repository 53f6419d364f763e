"""
SERank Observability 模組

提供輕量的執行時間追蹤：訓練、驗證、穩定性測試等長時間步驟
以 span 包起來，統計呼叫次數、耗時與錯誤，並附上行程記憶體用量。
"""

import time
from contextlib import contextmanager
from datetime import datetime, timezone
from functools import wraps
from threading import Lock
from typing import Any, Dict, List, Optional

import psutil
from pydantic import BaseModel, Field

from .logger_config import get_logger

logger = get_logger(__name__)

MAX_KEPT_ERRORS = 10


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SpanError(BaseModel):
    timestamp: str
    error: str
    execution_time: float


class SpanStats(BaseModel):
    """單一 span 名稱的累計統計"""

    total_calls: int = 0
    success_calls: int = 0
    error_calls: int = 0
    total_time: float = 0.0
    min_time: float = float("inf")
    max_time: float = 0.0
    last_called: Optional[str] = None
    errors: List[SpanError] = Field(default_factory=list, description="最近的錯誤")

    @property
    def avg_time(self) -> float:
        return self.total_time / self.total_calls if self.total_calls else 0.0

    def record(self, elapsed: float, error: Optional[BaseException] = None) -> None:
        stamp = _now()
        self.total_calls += 1
        self.total_time += elapsed
        self.min_time = min(self.min_time, elapsed)
        self.max_time = max(self.max_time, elapsed)
        self.last_called = stamp
        if error is None:
            self.success_calls += 1
            return
        self.error_calls += 1
        self.errors.append(SpanError(timestamp=stamp, error=str(error), execution_time=elapsed))
        del self.errors[:-MAX_KEPT_ERRORS]


class ObservabilityManager:
    """收集 span 耗時統計；評估的 worker thread 也會寫入，故以 lock 保護"""

    def __init__(self):
        self._spans: Dict[str, SpanStats] = {}
        self._lock = Lock()

    def _record(self, name: str, elapsed: float, error: Optional[BaseException] = None) -> None:
        with self._lock:
            self._spans.setdefault(name, SpanStats()).record(elapsed, error)

    @contextmanager
    def trace_span(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except Exception as e:
            self._record(name, time.perf_counter() - start, e)
            raise
        elapsed = time.perf_counter() - start
        self._record(name, elapsed)
        logger.debug(f"span {name} 完成，耗時 {elapsed:.3f}s")

    def trace_function(self, name: Optional[str] = None):
        """函數追蹤裝飾器；未給名稱時以 module.function 命名"""

        def decorator(func):
            span_name = name or f"{func.__module__}.{func.__name__}"

            @wraps(func)
            def wrapper(*args, **kwargs):
                with self.trace_span(span_name):
                    return func(*args, **kwargs)

            return wrapper

        return decorator

    def get_metrics_summary(self) -> Dict[str, Any]:
        try:
            rss_mb = psutil.Process().memory_info().rss / 1024 / 1024
        except (psutil.Error, OSError):
            rss_mb = -1.0
        with self._lock:
            spans = {
                name: {**stats.model_dump(), "avg_time": stats.avg_time}
                for name, stats in self._spans.items()
            }
        return {"metrics": spans, "rss_mb": rss_mb, "generated_at": _now()}

    def reset(self) -> None:
        with self._lock:
            self._spans.clear()


# 全域觀測性管理器實例
observability = ObservabilityManager()


def trace(name: Optional[str] = None):
    return observability.trace_function(name=name)


def trace_span(name: str):
    return observability.trace_span(name=name)


def get_metrics() -> Dict[str, Any]:
    return observability.get_metrics_summary()


def available_threads() -> int:
    """可用的邏輯核心數（取不到時為 1），作為 worker 數上限"""
    count = psutil.cpu_count(logical=True)
    return max(1, count or 1)
