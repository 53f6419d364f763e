"""
訓練迴圈

每一步：抽一個批次 → train 模式前向 → 逐查詢 loss 平均 → backward → Adagrad。
每 eval_every 步在驗證集上計算選模指標（預設 NDCG@5），較佳時保留模型副本。
設定 max_epochs 時改為跑完指定 epoch 數並回傳最後的模型。
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..autodiff.tensor import zero_grads
from ..core.config import derive_seed
from ..core.errors import ConfigurationError, DimensionError, TrainingAbortedError
from ..core.logger_config import get_logger
from ..core.models import TrainConfig
from ..core.observability import trace_span
from ..data.batching import batch_iter
from ..data.letor import Dataset
from ..ranking.losses import compute_loss
from ..ranking.metrics import evaluate
from ..ranking.scoring import Mode, ScoringModel
from .optimizer import AdagradState, adagrad_step, clip_by_global_norm

logger = get_logger(__name__)


@dataclass
class TrainLogEntry:
    step: int
    loss: float
    valid_metric: Optional[float] = None


@dataclass
class TrainResult:
    best_model: ScoringModel
    final_model: ScoringModel
    best_step: int
    best_metric: float
    log: List[TrainLogEntry] = field(default_factory=list)
    skipped_queries: int = 0

    def format_log(self) -> str:
        """TSV：`step<TAB>loss<TAB>valid_ndcg5`，非驗證步的指標欄為空"""
        lines = ["step\tloss\tvalid_ndcg5"]
        for entry in self.log:
            metric = "" if entry.valid_metric is None else repr(entry.valid_metric)
            lines.append(f"{entry.step}\t{entry.loss!r}\t{metric}")
        return "\n".join(lines) + "\n"

    def write_log(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.format_log(), encoding="utf-8")


def _max_abs(arrays) -> float:
    values = [float(np.max(np.abs(a))) for a in arrays if a is not None and a.size]
    return max(values) if values else 0.0


class Trainer:
    """單一寫入者的訓練器；模型參數就地更新"""

    def __init__(self, model: ScoringModel, cfg: TrainConfig):
        self.model = model
        self.cfg = cfg
        self.state = AdagradState(init_acc=cfg.adagrad_init_acc)
        self.shuffle_rng = np.random.default_rng(derive_seed(cfg.seed, "gsf.shuffle"))
        self.step = 0
        self.skipped_queries = 0

    def train_step(self, batch) -> float:
        model, cfg = self.model, self.cfg
        self.step += 1
        scores = model.forward(
            batch.features, batch.mask, Mode.TRAIN, self.shuffle_rng, cfg.bn_momentum
        )
        result = compute_loss(cfg.loss, scores, batch.labels, batch.mask)
        self.skipped_queries += result.skipped

        params = model.parameters
        zero_grads(params.values())
        result.loss.backward()
        grads = {name: node.grad for name, node in params.items()}
        loss = result.loss.item()

        finite_grads = all(g is None or np.all(np.isfinite(g)) for g in grads.values())
        if not math.isfinite(loss) or not finite_grads:
            raise TrainingAbortedError(
                self.step,
                _max_abs(node.data for node in params.values()),
                _max_abs(grads.values()),
                loss,
            )
        if cfg.clip_norm is not None:
            grads = clip_by_global_norm(grads, cfg.clip_norm)
        adagrad_step(params, grads, self.state, cfg.learning_rate)
        return loss

    def validate(self, valid_ds: Dataset) -> float:
        k = self.cfg.select_k
        report = evaluate(self.model, valid_ds, ks=(k,), threads=self.cfg.threads)
        return report.ndcg_at[k]


def train(
    model: ScoringModel,
    train_ds: Dataset,
    valid_ds: Dataset,
    cfg: TrainConfig,
) -> TrainResult:
    """
    訓練模型並以驗證集指標選出最佳版本

    Args:
        model: 初始模型（會被就地更新為最後狀態）
        train_ds: 訓練集
        valid_ds: 驗證集（不套用文件數上限）
        cfg: 訓練設定

    Returns:
        TrainResult: 最佳模型、最後模型與逐步 log
    """
    for name, ds in (("train", train_ds), ("valid", valid_ds)):
        if ds.feature_count != model.spec.feature_count:
            raise DimensionError(
                f"{name} set has {ds.feature_count} features, model expects {model.spec.feature_count}"
            )
    if len(train_ds) == 0:
        raise ConfigurationError("training set has no queries")

    trainer = Trainer(model, cfg)
    log: List[TrainLogEntry] = []
    best_model, best_metric, best_step = None, -math.inf, 0
    epoch_mode = cfg.max_epochs is not None
    logger.info(
        f"開始訓練 {model.spec.variant.value}: "
        + (f"{cfg.max_epochs} epochs" if epoch_mode else f"{cfg.max_steps} steps")
        + f", batch {cfg.batch_size}, lr {cfg.learning_rate}"
    )

    with trace_span("trainer.train"):
        epoch, done = 0, False
        while not done:
            for batch in batch_iter(train_ds, cfg.batch_size, cfg.seed, epoch, cfg.doc_cap):
                loss = trainer.train_step(batch)
                entry = TrainLogEntry(trainer.step, loss)
                last_step = not epoch_mode and trainer.step >= cfg.max_steps
                if trainer.step % cfg.eval_every == 0 or last_step:
                    entry.valid_metric = trainer.validate(valid_ds)
                    logger.info(
                        f"step {trainer.step}: loss {loss:.6f}, "
                        f"valid {cfg.select_metric} {entry.valid_metric:.6f}"
                    )
                    if entry.valid_metric > best_metric:
                        best_metric, best_step = entry.valid_metric, trainer.step
                        best_model = model.copy()
                else:
                    logger.debug(f"step {trainer.step}: loss {loss:.6f}")
                log.append(entry)
                if last_step:
                    done = True
                    break
            epoch += 1
            if epoch_mode and epoch >= cfg.max_epochs:
                done = True

    if epoch_mode:
        if log[-1].valid_metric is None:
            log[-1].valid_metric = trainer.validate(valid_ds)
        best_model, best_metric, best_step = model.copy(), log[-1].valid_metric, trainer.step
    if trainer.skipped_queries:
        logger.warning(f"訓練期間共略過 {trainer.skipped_queries} 個沒有正 gain 的查詢")
    logger.info(f"訓練完成：最佳 {cfg.select_metric} {best_metric:.6f} (step {best_step})")
    return TrainResult(
        best_model=best_model,
        final_model=model,
        best_step=best_step,
        best_metric=best_metric,
        log=log,
        skipped_queries=trainer.skipped_queries,
    )
