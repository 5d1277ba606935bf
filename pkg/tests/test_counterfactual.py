"""Counterfactual plans, re-execution, simulation, and attribution."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentaudit.assessor import AssessorConfig, audit_corpus
from agentaudit.counterfactual import (DECISION_STAGES, FEATURE_CATALOG,
                                       MODEL_CATALOG, PREPROCESSING_CATALOG,
                                       SIMULATION_DEFAULTS,
                                       AlternativeDecision, Binding,
                                       CounterfactualResult, StagePlan,
                                       attribute, default_plan,
                                       enumerate_alternatives, execute_plan,
                                       identify_points, plan_from_log,
                                       reexecute, run_counterfactuals,
                                       simulate_impacts, stage_ranking)
from agentaudit.datasets import dataset_manifest
from agentaudit.errors import ArgError, PlanError
from agentaudit.faults import build_clean_run

FIXTURE = Path(__file__).parent / "data" / "impact_fixture.json"


class TestCatalogs:
    def test_sizes(self):
        assert len(PREPROCESSING_CATALOG) == 6
        assert len(FEATURE_CATALOG) == 4
        assert len(MODEL_CATALOG["classification"]) == 4
        assert len(MODEL_CATALOG["regression"]) == 4

    def test_preprocessing_is_impute_cross_scaler(self):
        combos = {(b.action, b.params["scaler"]) for b in PREPROCESSING_CATALOG}
        assert combos == {(a, s) for a in ("impute_mean", "impute_median")
                          for s in ("standard", "minmax", "none")}


class TestPlans:
    def test_default_plan_binds_all_stages(self):
        plan = default_plan("classification")
        assert set(plan.bindings) == set(DECISION_STAGES)
        assert plan.bindings["model_selection"].action == "fit_logistic"
        assert default_plan("regression").bindings["model_selection"].action == "fit_ridge"

    def test_plan_validation(self):
        with pytest.raises(PlanError):
            StagePlan(bindings={})
        with pytest.raises(PlanError):
            StagePlan(bindings={"preprocessing": Binding("impute_mean")})
        with pytest.raises(PlanError):
            StagePlan(bindings={
                "preprocessing": Binding("impute_mean"),
                "feature_engineering": Binding("one_hot_encode"),
                "model_selection": Binding("fit_everything"),
            })

    def test_plan_from_log_picks_logged_choices(self, gc_manifest):
        records = build_clean_run(gc_manifest)
        plan = plan_from_log(gc_manifest, records)
        pre = plan.bindings["preprocessing"]
        assert pre.action == "impute_mean"
        assert pre.params["scaler"] == "standard"
        assert pre.decision_id == "d01"
        fe = plan.bindings["feature_engineering"]
        # first encoder in log order wins; the clean run one-hots before
        # it target-encodes
        assert fe.action == "one_hot_encode"
        assert fe.decision_id is not None
        ms = plan.bindings["model_selection"]
        assert ms.action == "fit_logistic"
        assert ms.params == {"l2": 1.0}


class TestIdentifyPoints:
    def test_ascending_risk_with_stage_tiebreak(self):
        plan = default_plan("classification")
        points = identify_points(plan, [], cap=3)
        # no findings: all bindings sit at baseline risk, stage order decides
        assert points == [("preprocessing", "preprocessing"),
                          ("feature_engineering", "feature_engineering"),
                          ("model_selection", "model_selection")]

    def test_findings_reorder_points(self, gc_manifest, gc_corpus):
        findings, _ = audit_corpus(gc_corpus, gc_manifest, AssessorConfig(noise_sigma=0.0))
        plan = plan_from_log(gc_manifest, build_clean_run(gc_manifest))
        points = identify_points(plan, findings, cap=3)
        assert len(points) == 3
        assert {p[0] for p in points} == set(DECISION_STAGES)

    def test_cap_truncates(self):
        plan = default_plan("classification")
        assert len(identify_points(plan, [], cap=1)) == 1


class TestEnumerate:
    def test_original_binding_excluded(self, gc_manifest):
        plan = default_plan("classification")
        alts = enumerate_alternatives(("preprocessing", "preprocessing"),
                                      gc_manifest, plan, cap=6)
        keys = {(a.action, tuple(sorted(a.params.items()))) for a in alts}
        orig = plan.bindings["preprocessing"]
        assert (orig.action, tuple(sorted(orig.params.items()))) not in keys

    def test_action_distinct_alternatives_come_first(self, gc_manifest):
        plan = default_plan("classification")
        alts = enumerate_alternatives(("preprocessing", "preprocessing"),
                                      gc_manifest, plan, cap=5)
        orig_action = plan.bindings["preprocessing"].action
        distinct = [a.action != orig_action for a in alts]
        # once a same-action variant appears, no action-distinct one follows
        assert distinct == sorted(distinct, reverse=True)

    def test_cap_three_gives_45_total_for_five_datasets(self, gc_manifest):
        plan = default_plan("classification")
        total = 0
        for point in identify_points(plan, [], cap=3):
            total += len(enumerate_alternatives(point, gc_manifest, plan, cap=3))
        assert total == 9  # 3 points x 3 alternatives; x5 datasets = 45

    def test_model_catalog_respects_task(self, diabetes_dataset):
        manifest = dataset_manifest(diabetes_dataset)
        plan = default_plan("regression")
        alts = enumerate_alternatives(("model_selection", "model_selection"),
                                      manifest, plan, cap=4)
        assert all(a.action in ("fit_ridge", "fit_gbt") for a in alts)


class TestReexecution:
    def test_control_delta_is_exactly_zero(self, gc_dataset):
        plan = default_plan("classification")
        orig = plan.bindings["preprocessing"]
        control = AlternativeDecision(("preprocessing", "preprocessing"),
                                      orig.action, dict(orig.params))
        result = reexecute(plan, control, gc_dataset, seed=0)
        assert result.delta == 0.0
        assert result.metric_original == result.metric_alternative

    def test_selective_cache_equals_full_recompute(self, gc_dataset):
        plan = default_plan("classification")
        alt = AlternativeDecision(("model_selection", "model_selection"),
                                  "fit_gbt", {"n_rounds": 30})
        cached: dict = {}
        execute_plan(plan, gc_dataset, seed=0, cache=cached)  # warm the cache
        with_cache = reexecute(plan, alt, gc_dataset, seed=0, cache=cached)
        fresh = reexecute(plan, alt, gc_dataset, seed=0, cache=None)
        assert with_cache.metric_original == fresh.metric_original
        assert with_cache.metric_alternative == fresh.metric_alternative
        assert with_cache.delta == fresh.delta

    def test_classification_delta_in_percentage_points(self, gc_dataset):
        plan = default_plan("classification")
        alt = AlternativeDecision(("model_selection", "model_selection"),
                                  "fit_gbt", {"n_rounds": 80})
        r = reexecute(plan, alt, gc_dataset, seed=0)
        assert r.delta == pytest.approx(
            (r.metric_alternative - r.metric_original) * 100.0)

    def test_regression_delta_sign_flips(self, diabetes_dataset):
        # lower rmse is better, so an rmse drop must read as positive impact
        plan = default_plan("regression")
        alt = AlternativeDecision(("model_selection", "model_selection"),
                                  "fit_gbt", {"n_rounds": 80})
        r = reexecute(plan, alt, diabetes_dataset, seed=0)
        expect = -(r.metric_alternative - r.metric_original) / r.metric_original * 100.0
        assert r.delta == pytest.approx(expect)

    def test_run_counterfactuals_shape(self, gc_dataset):
        results = run_counterfactuals(gc_dataset, seed=0)
        assert len(results) == 9
        assert all(r.mode == "reexecution" for r in results)
        assert all(r.dataset_id == "german_credit" for r in results)

    def test_infeasible_alternative_tagged_not_raised(self, gc_dataset):
        # a regression fit on a classification dataset cannot train
        plan = default_plan("classification")
        alt = AlternativeDecision(("model_selection", "model_selection"),
                                  "fit_ridge", {"alpha": 1.0})
        r = reexecute(plan, alt, gc_dataset, seed=0)
        assert r.delta is None
        assert "infeasible" in r.tags


class TestSimulation:
    def test_draw_counts_and_stages(self):
        results = simulate_impacts(n=15, seed=0)
        assert len(results) == 45
        for stage in DECISION_STAGES:
            assert sum(1 for r in results if r.point[0] == stage) == 15

    def test_seeded_determinism(self):
        a = [r.delta for r in simulate_impacts(n=20, seed=3)]
        b = [r.delta for r in simulate_impacts(n=20, seed=3)]
        assert a == b
        c = [r.delta for r in simulate_impacts(n=20, seed=4)]
        assert a != c

    def test_means_converge_to_stage_defaults(self):
        results = simulate_impacts(n=4000, seed=0)
        report = attribute(results)
        for stage, (mu, _sigma) in SIMULATION_DEFAULTS.items():
            got = report.per_stage[stage]["mean_signed"]
            assert got == pytest.approx(mu, abs=0.05), stage

    def test_zero_sigma_draws_are_constant(self):
        results = simulate_impacts(
            stage_params={s: (m, 0.0) for s, (m, _) in SIMULATION_DEFAULTS.items()},
            n=5, seed=0)
        for r in results:
            assert r.delta == SIMULATION_DEFAULTS[r.point[0]][0]

    def test_dataset_round_robin(self):
        results = simulate_impacts(n=4, seed=0, datasets=("a", "b"))
        ids = [r.dataset_id for r in results if r.point[0] == "preprocessing"]
        assert ids == ["a", "b", "a", "b"]


class TestAttribution:
    def test_skips_none_deltas(self):
        results = [
            CounterfactualResult(("preprocessing", "p"), None, None, None, 1.0,
                                 "simulation", ""),
            CounterfactualResult(("preprocessing", "p"), None, None, None, None,
                                 "reexecution", "", tags=("infeasible",)),
        ]
        report = attribute(results)
        assert report.overall["n"] == 1

    def test_empty_raises(self):
        with pytest.raises(ArgError):
            attribute([])
        only_none = [CounterfactualResult(("preprocessing", "p"), None, None,
                                          None, None, "reexecution", "")]
        with pytest.raises(ArgError):
            attribute(only_none)

    def test_ranking_orders_by_avg_abs(self):
        def mk(stage, deltas):
            return [CounterfactualResult((stage, "x"), None, None, None, d,
                                         "simulation", "") for d in deltas]
        results = mk("preprocessing", [0.1, -0.1]) + \
            mk("feature_engineering", [2.0, -2.0]) + \
            mk("model_selection", [1.0, 1.0])
        assert stage_ranking(results) == \
            ["feature_engineering", "model_selection", "preprocessing"]


@pytest.fixture(scope="module")
def fixture_results():
    obj = json.loads(FIXTURE.read_text())
    return [CounterfactualResult(point=(row["stage"], f"f{i:02d}"),
                                 alternative=None, metric_original=None,
                                 metric_alternative=None, delta=row["delta"],
                                 mode="reexecution", explanation="",
                                 dataset_id=row["dataset"])
            for i, row in enumerate(obj["impacts"])]


class TestImpactFixture:
    """Frozen 45-impact table with known aggregate structure."""

    def test_counts(self, fixture_results):
        assert len(fixture_results) == 45
        report = attribute(fixture_results)
        assert all(report.per_stage[s]["n"] == 15 for s in DECISION_STAGES)
        assert all(v["n"] == 9 for v in report.per_dataset.values())

    def test_stage_absolute_means(self, fixture_results):
        report = attribute(fixture_results)
        assert report.per_stage["preprocessing"]["avg_abs_impact"] == pytest.approx(0.7, abs=1e-9)
        assert report.per_stage["feature_engineering"]["avg_abs_impact"] == pytest.approx(1.5, abs=1e-9)
        assert report.per_stage["model_selection"]["avg_abs_impact"] == pytest.approx(2.7, abs=1e-9)

    def test_overall_band(self, fixture_results):
        report = attribute(fixture_results)
        assert report.overall["avg_abs_impact"] == pytest.approx(1.6333, abs=0.01)
        assert report.overall["range"] == [-4.9, 8.3]

    def test_dataset_signed_ordering(self, fixture_results):
        report = attribute(fixture_results)
        means = {k: v["mean_signed"] for k, v in report.per_dataset.items()}
        ordered = sorted(means, key=means.get, reverse=True)
        assert ordered == ["titanic", "ca_housing", "diabetes",
                           "german_credit", "adult"]

    def test_stage_ranking_is_canonical(self, fixture_results):
        assert stage_ranking(fixture_results) == \
            ["model_selection", "feature_engineering", "preprocessing"]
