"""
訓練模組 (Training)

- optimizer.py: Adagrad 與 gradient clipping
- trainer.py: 訓練迴圈與驗證集選模
"""

from .optimizer import AdagradState, adagrad_step, clip_by_global_norm, global_norm
from .trainer import Trainer, TrainLogEntry, TrainResult, train

__all__ = [
    "AdagradState",
    "adagrad_step",
    "clip_by_global_norm",
    "global_norm",
    "Trainer",
    "TrainLogEntry",
    "TrainResult",
    "train",
]
