"""span 計時與指標摘要"""

import pytest

from serank.core.errors import InvalidQueryError
from serank.core.observability import available_threads, get_metrics, trace, trace_span
from serank.main import main


class TestSpans:
    def test_success_is_counted(self):
        for _ in range(3):
            with trace_span("unit.ok"):
                pass
        metric = get_metrics()["metrics"]["unit.ok"]
        assert metric["total_calls"] == 3
        assert metric["success_calls"] == 3
        assert metric["error_calls"] == 0
        assert metric["min_time"] <= metric["max_time"]

    def test_error_is_recorded_and_reraised(self):
        with pytest.raises(InvalidQueryError):
            with trace_span("unit.fail"):
                raise InvalidQueryError("query has no documents")
        metric = get_metrics()["metrics"]["unit.fail"]
        assert metric["error_calls"] == 1
        assert metric["errors"][0]["error"] == "query has no documents"

    def test_decorator_keeps_return_value(self):
        @trace("unit.double")
        def double(x):
            return 2 * x

        assert double(21) == 42
        assert double.__name__ == "double"
        assert get_metrics()["metrics"]["unit.double"]["total_calls"] == 1

    def test_summary_reports_memory(self):
        summary = get_metrics()
        assert summary["metrics"] == {}
        assert summary["rss_mb"] > 0

    def test_cli_handlers_are_traced(self, capsys):
        assert main(["flops", "--length", "10", "--channels", "136"]) == 0
        assert get_metrics()["metrics"]["cli.flops"]["success_calls"] == 1


def test_available_threads_is_positive():
    assert available_threads() >= 1
