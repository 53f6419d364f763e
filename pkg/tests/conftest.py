"""共用 fixtures：小型模型設定與資料集"""

import numpy as np
import pytest

from serank.core.observability import observability

from .helpers import make_dataset


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def reset_observability():
    """每個測試從乾淨的 span 統計開始"""
    observability.reset()
    yield
    observability.reset()


@pytest.fixture
def toy_dataset():
    """三個查詢、4 個特徵的小資料集"""
    return make_dataset(np.random.default_rng(7), n_queries=3, docs=(3, 5), channels=4)
