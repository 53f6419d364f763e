"""
合成資料上的學習行為

- rankable：逐文件模型應能學到近乎完美的排序
- contextual：label 取決於查詢內的文件分布，需要 squeeze 的跨文件資訊
"""

import pytest

from serank.core.config import SyntheticKind
from serank.core.models import ModelSpec, TrainConfig, Variant
from serank.data import SyntheticGenerator, compute_stats, normalize
from serank.experiments import stability_test
from serank.ranking.metrics import evaluate
from serank.ranking.scoring import ScoringModel
from serank.training import train

pytestmark = pytest.mark.slow


def splits(kind: SyntheticKind, train_queries: int, eval_queries: int, seed: int = 11):
    generator = SyntheticGenerator(kind, feature_count=20, docs_per_query=16, seed=seed)
    train_ds = generator.generate(train_queries, "train")
    stats = compute_stats(train_ds)
    return tuple(
        normalize(ds, stats)
        for ds in (
            train_ds,
            generator.generate(eval_queries, "valid"),
            generator.generate(eval_queries, "test"),
        )
    )


@pytest.fixture(scope="module")
def rankable():
    return splits(SyntheticKind.RANKABLE, 5000, 500)


@pytest.fixture(scope="module")
def contextual():
    return splits(SyntheticKind.CONTEXTUAL, 2000, 500)


def test_univariate_learns_rankable_task(rankable):
    train_ds, valid_ds, test_ds = rankable
    spec = ModelSpec(variant=Variant.UNIVARIATE, feature_count=20, seed=1)
    cfg = TrainConfig(max_steps=2000, batch_size=128, learning_rate=0.5, eval_every=500, seed=2)
    result = train(ScoringModel.init(spec), train_ds, valid_ds, cfg)
    report = evaluate(result.best_model, test_ds, ks=(5,))
    assert report.ndcg_at[5] >= 0.95


def test_validation_improves_early(rankable):
    train_ds, valid_ds, _ = rankable
    spec = ModelSpec(variant=Variant.UNIVARIATE, feature_count=20, seed=1)
    cfg = TrainConfig(max_steps=75, batch_size=128, learning_rate=0.1, eval_every=25, seed=2)
    result = train(ScoringModel.init(spec), train_ds, valid_ds, cfg)
    metrics = [entry.valid_metric for entry in result.log if entry.valid_metric is not None]
    assert len(metrics) == 3
    assert metrics[0] < metrics[1] < metrics[2]


def test_squeeze_helps_on_contextual_task(contextual):
    train_ds, valid_ds, test_ds = contextual
    cfg = TrainConfig(max_steps=1500, batch_size=64, learning_rate=0.5, eval_every=250, seed=2)
    scores = {}
    for variant in (Variant.SERANK_B, Variant.SERANK_NO_SQUEEZE):
        spec = ModelSpec(variant=variant, feature_count=20, seed=1)
        result = train(ScoringModel.init(spec), train_ds, valid_ds, cfg)
        scores[variant] = evaluate(result.best_model, test_ds, ks=(5,)).ndcg_at[5]
    assert scores[Variant.SERANK_B] - scores[Variant.SERANK_NO_SQUEEZE] > 0.02


def test_stability_of_document_independent_model(rankable):
    _, _, test_ds = rankable
    model = ScoringModel.init(ModelSpec(variant=Variant.UNIVARIATE, feature_count=20, seed=1))
    report = stability_test(model, test_ds, mask_fraction=0.5, seed=3, ks=(5,))
    assert report.masked_ndcg[5] == pytest.approx(report.base_ndcg[5], rel=1e-12)
    assert report.query_count + report.skipped == len(test_ds)
