"""穩定性測試與模型比較"""

import math

import numpy as np
import pytest

from serank.core.config import CompareConfig
from serank.core.errors import ConfigurationError
from serank.core.models import TrainConfig, Variant
from serank.experiments import (
    ComparisonRow,
    ablation_suite,
    compare_variants,
    format_stability,
    format_table,
    stability_test,
    variant_specs,
)
from serank.experiments.stability import StabilityReport, survivors
from serank.ranking.scoring import ScoringModel

from .helpers import make_dataset, small_spec


@pytest.fixture
def queries(rng):
    return make_dataset(rng, n_queries=8, docs=(4, 10), channels=10)


class TestSurvivors:
    def test_half_of_ten(self, rng):
        keep = survivors(10, 0.5, rng)
        assert keep.size == 5
        assert np.all(np.diff(keep) > 0)

    def test_rounding(self, rng):
        assert survivors(3, 0.5, rng).size == 1
        assert survivors(1, 0.5, rng).size == 0
        assert survivors(4, 0.1, rng).size == 4


class TestStability:
    @pytest.mark.parametrize("variant", [Variant.UNIVARIATE, Variant.SERANK_NO_SQUEEZE])
    def test_document_independent_models_are_unaffected(self, queries, variant):
        model = ScoringModel.init(small_spec(variant))
        report = stability_test(model, queries, mask_fraction=0.5, seed=4)
        for k, value in report.base_ndcg.items():
            assert report.masked_ndcg[k] == pytest.approx(value, rel=1e-12)

    def test_same_seed_same_report(self, queries):
        model = ScoringModel.init(small_spec(Variant.SERANK))
        first = stability_test(model, queries, seed=2)
        second = stability_test(model, queries, seed=2, threads=3)
        assert first == second

    def test_counts(self, queries):
        model = ScoringModel.init(small_spec(Variant.SERANK_B))
        report = stability_test(model, queries, mask_fraction=0.3, seed=1)
        assert report.query_count + report.skipped == len(queries)
        assert report.mask_fraction == 0.3

    @pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2])
    def test_invalid_fraction(self, queries, fraction):
        model = ScoringModel.init(small_spec(Variant.UNIVARIATE))
        with pytest.raises(ValueError):
            stability_test(model, queries, mask_fraction=fraction)

    def test_format(self):
        report = StabilityReport(
            base_ndcg={1: 0.5}, masked_ndcg={1: 0.25}, mask_fraction=0.5, seed=0, query_count=2
        )
        assert format_stability(report) == (
            "k\tbase_ndcg\tmasked_ndcg\tquery_count\n1\t0.500000\t0.250000\t2\n"
        )


class TestComparison:
    def _config(self):
        return TrainConfig(max_steps=3, batch_size=4, eval_every=3, learning_rate=0.1, seed=5)

    def test_variant_specs_expand_group_sizes(self):
        compare = CompareConfig(variants=[Variant.UNIVARIATE, Variant.GSF], group_sizes=[1, 2])
        specs = variant_specs(small_spec(Variant.SERANK_B), compare)
        assert list(specs) == ["univariate", "gsf(1)", "gsf(2)"]
        assert specs["gsf(2)"].group_size == 2
        assert specs["univariate"].variant == Variant.UNIVARIATE

    def test_ablation_rows(self, rng, queries):
        valid = make_dataset(rng, n_queries=3, docs=(4, 6), channels=10)
        rows = ablation_suite(
            queries, valid, valid, small_spec(Variant.SERANK_B), self._config(), ks=(1, 5)
        )
        assert [(row.model, row.k) for row in rows] == [
            ("serank_b", 1),
            ("serank_b", 5),
            ("serank_no_squeeze", 1),
            ("serank_no_squeeze", 5),
            ("serank_no_excitation", 1),
            ("serank_no_excitation", 5),
        ]
        for row in rows:
            assert 0.0 <= row.ndcg <= 1.0
            assert row.ci_low <= row.ci_high
            assert row.query_count == 3
            if row.model == "serank_b":
                assert row.p_value is None
            else:
                assert math.isnan(row.p_value) or 0.0 <= row.p_value <= 1.0

    def test_named_baseline(self, rng, queries):
        valid = make_dataset(rng, n_queries=3, docs=(4, 6), channels=10)
        specs = {
            "univariate": small_spec(Variant.UNIVARIATE),
            "serank_b": small_spec(Variant.SERANK_B),
        }
        rows = compare_variants(
            queries, valid, valid, specs, self._config(), ks=(5,), baseline="serank_b"
        )
        assert [(row.model, row.p_value is None) for row in rows] == [
            ("univariate", False),
            ("serank_b", True),
        ]

    def test_unknown_baseline(self, queries):
        specs = {"univariate": small_spec(Variant.UNIVARIATE)}
        with pytest.raises(ConfigurationError):
            compare_variants(queries, queries, queries, specs, self._config(), baseline="gsf(4)")

    def test_invalid_variant_spec(self, queries):
        base = small_spec(Variant.UNIVARIATE, hidden_widths=[8, 1])
        specs = variant_specs(base, CompareConfig(variants=[Variant.SERANK]))
        with pytest.raises(ConfigurationError):
            compare_variants(queries, queries, queries, specs, self._config())

    def test_format_table(self):
        rows = [
            ComparisonRow(model="serank_b", k=5, ndcg=0.5, ci_low=0.4, ci_high=0.6, query_count=9),
            ComparisonRow(
                model="gsf(2)", k=5, ndcg=0.45, ci_low=0.3, ci_high=0.55, query_count=9, p_value=0.0123
            ),
        ]
        assert format_table(rows, scale=100.0).splitlines() == [
            "model\tk\tndcg_mean\tci_low\tci_high\tquery_count\tp_value",
            "serank_b\t5\t50.000000\t40.000000\t60.000000\t9\t",
            "gsf(2)\t5\t45.000000\t30.000000\t55.000000\t9\t0.0123",
        ]
