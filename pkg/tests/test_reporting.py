"""Report emission: canonical JSON bytes and markdown rendering per doc kind."""

from __future__ import annotations

import json

import pytest

from agentaudit.errors import ReportError
from agentaudit.harness import ExperimentSpec, bench_overhead, multi_seed, run_experiment
from agentaudit.reporting import emit_report


class TestJson:
    def test_round_trips(self):
        doc = {"b": 2, "a": [1, None, "x"], "kind": "audit"}
        assert json.loads(emit_report(doc, "json")) == doc

    def test_bytes_are_sorted_indented_newline_terminated(self):
        out = emit_report({"b": 1, "a": 2, "kind": "audit"}, "json")
        text = out.decode("utf-8")
        assert text.endswith("\n") and not text.endswith("\n\n")
        # key order is canonical regardless of insertion order
        assert text.index('"a"') < text.index('"b"')
        assert emit_report({"a": 2, "kind": "audit", "b": 1}, "json") == out

    def test_unknown_format(self):
        with pytest.raises(ReportError):
            emit_report({"kind": "audit"}, "yaml")


class TestMarkdown:
    def test_unknown_kind(self):
        with pytest.raises(ReportError):
            emit_report({"kind": "mystery"}, "md")

    def test_exp1_renders_counts(self):
        doc = run_experiment(ExperimentSpec(id="exp1", config={"sigma": 0.0}))
        text = emit_report(doc, "md").decode("utf-8")
        assert text.startswith("#")
        assert "Overall" in text and "german_credit" in text
        # sigma 0 corpus-wide counts appear in the overall row
        assert "| 65 | 0 | 10 | 50 |" in text

    def test_exp2_renders_baselines(self):
        doc = run_experiment(ExperimentSpec(id="exp2"))
        text = emit_report(doc, "markdown").decode("utf-8")
        assert "rule" in text and "stochastic" in text
        assert "12/12" in text and "z=7.08" in text

    def test_exp3_renders_every_dataset(self):
        doc = run_experiment(ExperimentSpec(id="exp3", datasets=("german_credit",)))
        text = emit_report(doc, "md").decode("utf-8")
        assert "german_credit" in text

    def test_exp4_renders_ranking(self):
        doc = run_experiment(ExperimentSpec(id="exp4"))
        text = emit_report(doc, "md").decode("utf-8")
        assert "model_selection" in text and "Range" in text

    def test_multi_seed_renders_percentiles(self):
        doc = multi_seed(ExperimentSpec(id="exp1"), n_seeds=3)
        text = emit_report(doc, "md").decode("utf-8")
        assert "2.5" in text and "97.5" in text and "f1" in text

    def test_bench_renders_total_and_ratios(self):
        doc = bench_overhead(iterations=2, warmup=1).as_dict()
        text = emit_report(doc, "md").decode("utf-8")
        assert "Total" in text
        assert "quality_assessor" in text
        # budget ratios appear as three-decimal values
        assert "300" in text and "3600" in text

    def test_markdown_is_deterministic(self):
        doc = run_experiment(ExperimentSpec(id="exp1", config={"sigma": 0.0}))
        assert emit_report(doc, "md") == emit_report(doc, "md")
