"""前向 FLOPs 計數"""

import pytest

from serank.core.errors import ConfigurationError
from serank.core.models import ModelSpec, Variant
from serank.ranking.flops import compare_flops, count_flops, format_comparison, format_flops


def web30k(variant: Variant, **extra) -> ModelSpec:
    return ModelSpec(variant=variant, feature_count=136, **extra)


class TestCountFlops:
    def test_first_dense_layer(self):
        layers = dict(count_flops(web30k(Variant.UNIVARIATE), 200, 136).per_layer)
        assert layers["dense_0.matmul"] == 3_481_600
        assert layers["dense_0.bias"] == 12_800

    def test_univariate_total(self):
        assert count_flops(web30k(Variant.UNIVARIATE), 200, 136).total == 4_557_000

    def test_gsf_64_total(self):
        report = count_flops(web30k(Variant.GSF, group_size=64), 200, 136)
        assert report.total == 224_326_400

    def test_serank_b_total(self):
        assert count_flops(web30k(Variant.SERANK_B), 200, 136).total == 9_454_720

    def test_gsf_one_equals_univariate(self):
        gsf = count_flops(web30k(Variant.GSF, group_size=1), 200, 136)
        univariate = count_flops(web30k(Variant.UNIVARIATE), 200, 136)
        assert gsf.total == univariate.total

    @pytest.mark.parametrize("variant", [Variant.UNIVARIATE, Variant.GSF])
    def test_linear_in_length(self, variant):
        spec = web30k(variant, group_size=4)
        assert count_flops(spec, 400, 136).total == 2 * count_flops(spec, 200, 136).total

    @pytest.mark.parametrize("variant", list(Variant))
    def test_affine_in_length(self, variant):
        spec = web30k(variant)
        a, b, c = (count_flops(spec, n, 136).total for n in (50, 100, 150))
        assert b - a == c - b

    @pytest.mark.parametrize(
        "variant",
        [Variant.SERANK, Variant.SERANK_B, Variant.SERANK_NO_SQUEEZE, Variant.SERANK_NO_EXCITATION],
    )
    def test_se_never_cheaper_than_univariate(self, variant):
        univariate = count_flops(web30k(Variant.UNIVARIATE), 200, 136).total
        assert count_flops(web30k(variant), 200, 136).total >= univariate

    def test_batch_norm_adds_four_ops_per_value(self):
        plain = count_flops(web30k(Variant.UNIVARIATE), 10, 136).total
        with_bn = count_flops(web30k(Variant.UNIVARIATE, batch_norm=True), 10, 136).total
        assert with_bn - plain == 4 * 10 * (64 + 32 + 16)

    def test_channels_override_feature_count(self):
        spec = ModelSpec(variant=Variant.UNIVARIATE, feature_count=10)
        report = count_flops(spec, 200, 136)
        assert report.input_shape == (200, 136)
        assert report.total == 4_557_000

    def test_invalid_shape(self):
        with pytest.raises(ConfigurationError):
            count_flops(web30k(Variant.UNIVARIATE), 0, 136)

    def test_channels_too_small_for_shrinkage(self):
        with pytest.raises(ConfigurationError):
            count_flops(web30k(Variant.SERANK, shrinkage=4), 10, 3)


class TestComparison:
    def test_ratios_against_baseline(self):
        specs = {
            "gsf(1)": web30k(Variant.UNIVARIATE),
            "gsf(64)": web30k(Variant.GSF, group_size=64),
            "serank_b": web30k(Variant.SERANK_B),
        }
        rows = {name: ratio for name, _, ratio in compare_flops(specs, 200, 136, "gsf(1)")}
        assert rows["gsf(1)"] == 1.0
        assert 45.0 < rows["gsf(64)"] < 55.0
        assert 1.5 < rows["serank_b"] < 2.5

    def test_unknown_baseline(self):
        with pytest.raises(ConfigurationError):
            compare_flops({"a": web30k(Variant.UNIVARIATE)}, 200, 136, "b")

    def test_comparison_table(self):
        text = format_comparison([("gsf(1)", 100, 1.0), ("serank", 250, 2.5)])
        assert text == "model\tflops\tratio\ngsf(1)\t100\t1.00\nserank\t250\t2.50\n"


class TestFormat:
    def test_total_line_matches_report(self):
        report = count_flops(web30k(Variant.SERANK_B), 200, 136)
        lines = format_flops(report).splitlines()
        assert lines[-1] == f"TOTAL\t{report.total}"
        assert sum(int(line.split("\t")[1]) for line in lines[:-1]) == report.total
