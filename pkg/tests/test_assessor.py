"""Signature scoring, noise, flagging, classification, detection counts."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from agentaudit.assessor import (AssessorConfig, DetectionReport, RubricScores,
                                 assess_decision, audit_corpus, classify_fault)
from agentaudit.decision_log import DecisionRecord
from agentaudit.errors import ConfigError
from agentaudit.faults import (InjectionPlan, build_clean_run,
                               default_class_mix, inject)

from .conftest import small_manifest

SIGMA0 = AssessorConfig(noise_sigma=0.0)


def _rec(action, params=None, stage="data_preprocessing", parents=()):
    return DecisionRecord("dx", stage, action, params or {}, "", tuple(parents), 1)


def _split_rec():
    return DecisionRecord("ds", "data_preprocessing", "train_test_split",
                          {"test_fraction": 0.2}, "", (), 0)


class TestSignatureScores:
    """Frozen base scores for each anti-pattern; sigma 0 exposes them raw."""

    def test_scale_without_split_upstream(self):
        m = small_manifest()
        scores = assess_decision(_rec("standard_scale"), [], m, SIGMA0)
        assert scores.risk == 25.0
        assert scores.appropriateness == 45.0
        assert "data_leakage" in scores.tags

    def test_scale_with_split_upstream_is_clean(self):
        m = small_manifest()
        scores = assess_decision(
            _rec("standard_scale", parents=("ds",)), [_split_rec()], m, SIGMA0)
        assert scores.risk == 85.0
        assert scores.tags == ()

    def test_encoder_on_test(self):
        m = small_manifest()
        scores = assess_decision(
            _rec("one_hot_encode", {"fit_scope": "train+test"}), [_split_rec()], m, SIGMA0)
        assert scores.risk == 25.0
        assert "test_contamination" in scores.tags

    def test_temporal_shuffle_needs_datetime(self):
        dt = small_manifest(datetime_col=True)
        nodt = small_manifest(datetime_col=False)
        rec = _rec("shuffle_split", {"test_fraction": 0.2})
        assert assess_decision(rec, [], dt, SIGMA0).risk == 30.0
        assert assess_decision(rec, [], nodt, SIGMA0).risk == 85.0

    def test_target_encode_cv0(self):
        m = small_manifest()
        scores = assess_decision(
            _rec("target_encode", {"cv_folds": 0}), [_split_rec()], m, SIGMA0)
        assert scores.risk == 20.0
        assert "target_leakage" in scores.tags

    def test_deep_mlp_small_data(self):
        m = small_manifest(n_train=800)
        scores = assess_decision(_rec("fit_deep_mlp", stage="model_selection"), [], m, SIGMA0)
        assert scores.risk == 50.0
        assert scores.appropriateness == 40.0
        assert scores.consistency == 45.0
        big = small_manifest(n_train=60000, n_test=10000)
        assert assess_decision(_rec("fit_deep_mlp", stage="model_selection"),
                               [], big, SIGMA0).risk == 85.0

    def test_no_regularization_high_ratio(self):
        m = small_manifest(n_train=800)  # 4 features / 800 rows = 0.005 >= 0.004
        rec = _rec("set_regularization", {"strength": 0}, stage="hyperparameter_opt")
        assert assess_decision(rec, [], m, SIGMA0).risk == 55.0
        low = small_manifest(n_train=800, datetime_col=False)  # 3/800 < 0.004
        assert assess_decision(rec, [], low, SIGMA0).risk == 85.0

    def test_subtle_encoding_shades(self):
        m = small_manifest()
        missing_cv = assess_decision(
            _rec("target_encode", {"columns": "mixed"}), [_split_rec()], m, SIGMA0)
        assert missing_cv.risk == 62.0
        assert "encoding_risk" in missing_cv.tags
        cv2 = assess_decision(
            _rec("target_encode", {"cv_folds": 2}), [_split_rec()], m, SIGMA0)
        assert cv2.risk == 85.0  # no signature fires, stays baseline
        assert cv2.tags == ()

    def test_decoys_score_just_above_threshold(self):
        m = small_manifest()
        k2 = assess_decision(_rec("select_top_k", {"k": 2},
                                  stage="feature_engineering"), [], m, SIGMA0)
        deg3 = assess_decision(_rec("poly_features", {"degree": 3},
                                    stage="feature_engineering"), [], m, SIGMA0)
        assert k2.risk == 63.0 and deg3.risk == 63.0

    def test_unknown_action_is_unverifiable_at_baseline(self):
        m = small_manifest()
        scores = assess_decision(_rec("quantum_rebalance"), [], m, SIGMA0)
        assert scores.risk == 85.0
        assert scores.tags == ("unverifiable",)

    def test_clean_baseline_values(self):
        m = small_manifest()
        scores = assess_decision(_rec("impute_mean"), [], m, SIGMA0)
        assert (scores.appropriateness, scores.consistency, scores.completeness,
                scores.efficiency, scores.risk) == (80.0, 80.0, 80.0, 80.0, 85.0)

    def test_stacked_signatures_take_min(self):
        m = small_manifest()
        # cv_folds=0 fires target_leakage (risk 20); params also lack nothing else
        rec = _rec("target_encode", {"cv_folds": 0})
        scores = assess_decision(rec, [], m, SIGMA0)
        assert scores.risk == 20.0

    def test_as_dict_keys(self):
        m = small_manifest()
        d = assess_decision(_rec("impute_mean"), [], m, SIGMA0).as_dict()
        assert sorted(d) == ["appropriateness", "completeness", "consistency",
                             "efficiency", "explanation", "risk", "tags"]


class TestNoise:
    def test_sigma_zero_is_bitwise_deterministic(self):
        m = small_manifest()
        rec = _rec("impute_mean")
        a = assess_decision(rec, [], m, SIGMA0)
        b = assess_decision(rec, [], m, SIGMA0)
        assert a == b

    def test_same_seed_same_noise(self):
        m = small_manifest()
        cfg = AssessorConfig(noise_sigma=4.0, seed=11)
        rec = _rec("impute_mean")
        assert assess_decision(rec, [], m, cfg) == assess_decision(rec, [], m, cfg)

    def test_different_seeds_differ(self):
        m = small_manifest()
        rec = _rec("impute_mean")
        a = assess_decision(rec, [], m, AssessorConfig(noise_sigma=4.0, seed=0))
        b = assess_decision(rec, [], m, AssessorConfig(noise_sigma=4.0, seed=1))
        assert a.risk != b.risk

    def test_noise_is_per_decision_not_positional(self):
        # the draw depends on the decision id, so reordering a corpus cannot
        # change any individual score
        m = small_manifest()
        cfg = AssessorConfig(noise_sigma=4.0, seed=5)
        r1 = DecisionRecord("a1", "data_preprocessing", "impute_mean", {}, "", (), 1)
        r2 = DecisionRecord("a2", "data_preprocessing", "impute_mean", {}, "", (), 2)
        alone = assess_decision(r2, [], m, cfg)
        after_other = assess_decision(r1, [], m, cfg) and assess_decision(r2, [], m, cfg)
        assert alone == after_other

    @given(st.floats(min_value=0.1, max_value=30.0), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_scores_stay_clamped(self, sigma, seed):
        m = small_manifest()
        cfg = AssessorConfig(noise_sigma=sigma, seed=seed)
        scores = assess_decision(_rec("target_encode", {"cv_folds": 0}), [], m, cfg)
        for dim in ("appropriateness", "consistency", "completeness", "efficiency", "risk"):
            assert 0.0 <= getattr(scores, dim) <= 100.0

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            AssessorConfig(risk_threshold=0.0)
        with pytest.raises(ConfigError):
            AssessorConfig(risk_threshold=100.0)
        with pytest.raises(ConfigError):
            AssessorConfig(noise_sigma=-1.0)


class TestClassification:
    def test_critical_classes_resolve(self):
        m = small_manifest()
        cases = [
            (_rec("standard_scale"), "leak_normalize_before_split"),
            (_rec("one_hot_encode", {"fit_scope": "train+test"}), "leak_encoder_on_test"),
            (_rec("shuffle_split"), "temporal_shuffle"),
            (_rec("target_encode", {"cv_folds": 0}), "target_leakage"),
            (_rec("fit_deep_mlp", stage="model_selection"), "inappropriate_model"),
            (_rec("set_regularization", {"strength": 0}), "overfit_no_regularization"),
            (_rec("target_encode", {"columns": "mixed"}), "subtle_encoding"),
        ]
        for rec, expected in cases:
            scores = assess_decision(rec, [], m, SIGMA0)
            assert classify_fault(scores, rec) == expected, expected

    def test_clean_decision_classifies_none(self):
        m = small_manifest()
        rec = _rec("impute_mean")
        assert classify_fault(assess_decision(rec, [], m, SIGMA0), rec) is None

    def test_noise_flagged_clean_decision_still_none(self):
        # a decoy pushed under threshold by noise has no fault tag to map
        m = small_manifest()
        rec = _rec("select_top_k", {"k": 12}, stage="feature_engineering")
        scores = RubricScores(80, 80, 80, 80, 59.0, (), "noise push")
        assert classify_fault(scores, rec) is None


class TestAuditCorpus:
    def _corpus(self, manifest, seed=0):
        clean = build_clean_run(manifest)
        plan = InjectionPlan(manifest.dataset_id, 10, 15,
                             default_class_mix(manifest.has_kind("datetime")), seed)
        return inject(clean, plan, manifest)

    def test_sigma0_counts_and_fn_composition(self):
        m = small_manifest()
        corpus = self._corpus(m)
        findings, report = audit_corpus(corpus, m, SIGMA0)
        assert (report.tp, report.fp, report.fn, report.tn) == (13, 0, 2, 10)
        fns = [f for f in findings
               if corpus.labels[f.decision_id].is_faulty and not f.flagged]
        assert {corpus.labels[f.decision_id].fault_class for f in fns} == {"subtle_encoding"}

    def test_sigma0_flagged_classes_match_labels(self):
        m = small_manifest()
        corpus = self._corpus(m)
        findings, _ = audit_corpus(corpus, m, SIGMA0)
        for f in findings:
            label = corpus.labels[f.decision_id]
            if f.flagged and label.is_faulty:
                assert f.predicted_class == label.fault_class, f.decision_id

    def test_labels_do_not_leak_into_scores(self):
        # flipping every label leaves findings identical
        m = small_manifest()
        corpus = self._corpus(m)
        findings_a, _ = audit_corpus(corpus, m, SIGMA0)
        from agentaudit.faults import Label, LabeledCorpus
        flipped = LabeledCorpus(
            records=corpus.records,
            labels={d: Label(not l.is_faulty, None) for d, l in corpus.labels.items()},
            decoy_ids=corpus.decoy_ids, plan=corpus.plan)
        findings_b, _ = audit_corpus(flipped, m, SIGMA0)
        assert [(f.decision_id, f.flagged, f.scores) for f in findings_a] == \
               [(f.decision_id, f.flagged, f.scores) for f in findings_b]

    def test_findings_cover_corpus_in_order(self):
        m = small_manifest()
        corpus = self._corpus(m)
        findings, _ = audit_corpus(corpus, m, SIGMA0)
        assert [f.decision_id for f in findings] == [r.decision_id for r in corpus.records]


class TestDetectionReport:
    def test_from_counts_oracle(self):
        # hand-computed: p = 68/73, r = 68/75, f1 harmonic mean
        r = DetectionReport.from_counts(68, 5, 7, 45)
        assert r.precision == pytest.approx(68 / 73)
        assert r.recall == pytest.approx(68 / 75)
        assert r.f1 == pytest.approx(2 * (68 / 73) * (68 / 75) / (68 / 73 + 68 / 75))

    def test_degenerate_counts(self):
        r = DetectionReport.from_counts(0, 0, 0, 10)
        assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)

    def test_merged_adds_counts(self):
        a = DetectionReport.from_counts(3, 1, 2, 4)
        b = DetectionReport.from_counts(5, 0, 1, 4)
        merged = a.merged(b)
        assert (merged.tp, merged.fp, merged.fn, merged.tn) == (8, 1, 3, 8)
        assert merged.precision == pytest.approx(8 / 9)

    @given(st.integers(0, 200), st.integers(0, 200), st.integers(0, 200), st.integers(0, 200))
    @settings(max_examples=80, deadline=None)
    def test_f1_bounded_by_precision_recall(self, tp, fp, fn, tn):
        r = DetectionReport.from_counts(tp, fp, fn, tn)
        assert 0.0 <= r.f1 <= 1.0
        assert min(r.precision, r.recall) - 1e-12 <= r.f1 <= max(r.precision, r.recall) + 1e-12
