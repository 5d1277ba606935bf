"""Reasoning-trace validation: claim grammar, validator, baselines, suite."""

from __future__ import annotations

import pytest

from agentaudit.decision_log import ArtifactFact
from agentaudit.faults import build_clean_run
from agentaudit.reasoning import (CATEGORIES, ReasoningSnippet, baseline_rule,
                                  baseline_stochastic_judge, extract_claims,
                                  generate_snippet_set, run_validation_suite,
                                  snippets_from_obj, snippets_to_obj, validate)

from .conftest import small_manifest


@pytest.fixture(scope="module")
def run_ctx():
    manifest = small_manifest(datetime_col=True)
    artifacts = {
        "validation_accuracy": ArtifactFact("validation_accuracy", 0.741, "metric_log"),
        "baseline_accuracy": ArtifactFact("baseline_accuracy", 0.700, "metric_log"),
        "test_auc": ArtifactFact("test_auc", 0.779, "metric_log"),
    }
    manifest = type(manifest)(**{**manifest.__dict__, "artifacts": artifacts})
    log = build_clean_run(manifest)
    return manifest, log


@pytest.fixture(scope="module")
def suite_snippets(run_ctx):
    manifest, log = run_ctx
    return generate_snippet_set(manifest, log, seed=0, n_per_category=12)


class TestClaimGrammar:
    def test_improvement_sentence(self):
        claims = extract_claims(
            "Validation accuracy improved from 0.700 to 0.741, a 5.9% relative improvement.")
        kinds = [c.kind for c in claims]
        assert "numeric_derivation" in kinds

    def test_row_count_fact(self):
        claims = extract_claims("The dataset has 1,000 rows after deduplication.")
        facts = [c for c in claims if c.kind == "fact"]
        assert facts and facts[0].payload["value"] == 1000

    def test_action_reference(self):
        claims = extract_claims("We applied standard_scale to the numeric block.")
        refs = [c for c in claims if c.kind == "action_ref"]
        assert refs and refs[0].subject == "standard_scale"

    def test_predicates_both_polarities(self):
        pos = extract_claims("Missing cells were imputed with column means.")
        neg = extract_claims("There were no missing values in this table.")
        def pred(cs):
            return [(c.subject, c.payload["value"]) for c in cs if c.kind == "predicate"]
        assert ("missingness", True) in pred(pos)
        assert ("missingness", False) in pred(neg)

    def test_plain_text_yields_nothing(self):
        assert extract_claims("The team met on Tuesday to discuss next steps.") == []


class TestValidator:
    def test_never_reads_truth_label(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        for snip in suite_snippets[:10]:
            honest = validate(snip, manifest, log)
            masked = validate(
                ReasoningSnippet(snip.snippet_id, snip.text, snip.claims,
                                 snip.linked_decisions, truth_label=None),
                manifest, log)
            assert honest == masked

    def test_catches_all_numerical_plants(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        plants = [s for s in suite_snippets if s.truth_label == "numerical_hallucination"]
        assert len(plants) == 12
        for snip in plants:
            verdict = validate(snip, manifest, log)
            assert not verdict.valid
            assert verdict.category == "numerical_hallucination", snip.snippet_id

    def test_verdict_carries_evidence_and_severity(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        plants = [s for s in suite_snippets if s.truth_label == "logical_contradiction"]
        verdict = validate(plants[0], manifest, log)
        assert not verdict.valid
        assert verdict.evidence
        assert verdict.severity in ("critical", "major", "minor")
        assert 0.0 <= verdict.confidence <= 1.0


class TestBaselines:
    def test_rule_never_detects_hallucinated_facts(self, run_ctx, suite_snippets):
        # the keyword rule has no artifact table, so planted facts pass it
        plants = [s for s in suite_snippets if s.truth_label == "hallucinated_fact"]
        assert len(plants) == 12
        for snip in plants:
            verdict = baseline_rule(snip)
            assert verdict.category != "hallucinated_fact"

    def test_stochastic_judge_is_seeded(self, suite_snippets):
        a = [baseline_stochastic_judge(s, seed=4) for s in suite_snippets]
        b = [baseline_stochastic_judge(s, seed=4) for s in suite_snippets]
        assert a == b
        c = [baseline_stochastic_judge(s, seed=5) for s in suite_snippets]
        assert a != c


class TestSuite:
    def test_generated_set_is_balanced(self, suite_snippets):
        assert len(suite_snippets) == 60
        for cat in CATEGORIES:
            assert sum(1 for s in suite_snippets if s.truth_label == cat) == 12

    def test_fixed_arm_accuracies(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        report = run_validation_suite(suite_snippets, manifest, log,
                                      baselines=("rule", "stochastic"), judge_seed=0)
        assert report.n == 60
        assert report.accuracy == pytest.approx(55 / 60)
        assert report.per_category == {
            "valid": (12, 12), "hallucinated_fact": (12, 10),
            "logical_contradiction": (12, 12), "numerical_hallucination": (12, 12),
            "action_reasoning_mismatch": (12, 9),
        }
        rule_acc, rule_z, rule_p = report.comparisons["rule"]
        sto_acc, sto_z, sto_p = report.comparisons["stochastic"]
        assert rule_acc == pytest.approx(17 / 60)
        assert sto_acc == pytest.approx(15 / 60)
        assert rule_z == pytest.approx(7.08, abs=0.01)
        assert sto_z == pytest.approx(7.41, abs=0.01)
        assert rule_p < 1e-6 and sto_p < 1e-6

    def test_validator_beats_both_baselines_strictly(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        report = run_validation_suite(suite_snippets, manifest, log, judge_seed=0)
        for name, (acc, z, p) in report.comparisons.items():
            assert report.accuracy > acc, name
            assert z > 0

    def test_suite_deterministic_across_runs(self, run_ctx, suite_snippets):
        manifest, log = run_ctx
        first = run_validation_suite(suite_snippets, manifest, log, judge_seed=0).as_dict()
        for _ in range(5):
            again = run_validation_suite(suite_snippets, manifest, log, judge_seed=0).as_dict()
            assert again == first

    def test_ci_is_wilson(self, run_ctx, suite_snippets):
        from agentaudit.stats import wilson_interval

        manifest, log = run_ctx
        report = run_validation_suite(suite_snippets, manifest, log, judge_seed=0)
        lo, hi = wilson_interval(55, 60)
        assert report.ci_low == pytest.approx(lo)
        assert report.ci_high == pytest.approx(hi)


def test_snippet_roundtrip(suite_snippets):
    obj = snippets_to_obj(suite_snippets)
    back = snippets_from_obj(obj)
    assert back == list(suite_snippets)
