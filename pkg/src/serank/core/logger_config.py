"""
日誌設定

import 時設定 root logger 一次；等級取自 SERANK_LOG_LEVEL（預設 INFO）。
日誌一律寫到 stderr，stdout 保留給 TSV 報表。
"""

import logging
import os
import sys

LOG_FORMAT = "[%(levelname)s] %(asctime)s - %(message)s (%(name)s:%(lineno)d)"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LEVEL_COLORS = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}


def _stderr_handler() -> logging.Handler:
    try:
        import colorlog
    except ImportError:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
        return handler
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(
        colorlog.ColoredFormatter(
            "%(log_color)s" + LOG_FORMAT, datefmt=DATE_FORMAT, log_colors=LEVEL_COLORS
        )
    )
    return handler


logging.basicConfig(
    level=os.getenv("SERANK_LOG_LEVEL", "INFO").upper(),
    handlers=[_stderr_handler()],
)


def get_logger(name=None):
    return logging.getLogger(name)
