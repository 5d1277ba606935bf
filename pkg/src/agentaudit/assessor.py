"""Five-dimension decision scoring, flagging, and fault classification.

Each decision gets appropriateness / consistency / completeness / efficiency
/ risk scores on a 0-100 scale (lower risk score = riskier decision). A
fixed signature table maps anti-patterns to base-score overrides; Gaussian
noise with per-decision derived seeds models judge variability. A decision
is flagged exactly when risk < threshold (strict), and flagged decisions are
mapped to fault classes by a priority table over the fired tags.

The rule-based scorer is the shipped default. Any external judge can be
plugged in through AssessorConfig.scorer as long as it emits RubricScores
honoring the same invariants; noise and flagging still apply on top.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .decision_log import (ACTION_VOCABULARY, DecisionRecord, RunManifest,
                           build_provenance, trace_lineage)
from .errors import ConfigError
from .faults import SCALE_ACTIONS, SPLIT_ACTIONS, LabeledCorpus

DIMENSIONS = ("appropriateness", "consistency", "completeness", "efficiency", "risk")
BASELINE = {"appropriateness": 80.0, "consistency": 80.0, "completeness": 80.0,
            "efficiency": 80.0, "risk": 85.0}

# features-per-training-row above this counts as a high-dimensional fit,
# where disabling regularization becomes an anti-pattern
HIGH_RATIO = 0.004
SMALL_DATA_ROWS = 5000


@dataclass(frozen=True)
class RubricScores:
    appropriateness: float
    consistency: float
    completeness: float
    efficiency: float
    risk: float
    tags: tuple[str, ...]
    explanation: str

    def as_dict(self) -> dict:
        return {
            "appropriateness": self.appropriateness, "consistency": self.consistency,
            "completeness": self.completeness, "efficiency": self.efficiency,
            "risk": self.risk, "tags": list(self.tags), "explanation": self.explanation,
        }


@dataclass(frozen=True)
class AssessorConfig:
    risk_threshold: float = 60.0
    noise_sigma: float = 4.0
    seed: int = 0
    scorer: object = None  # optional replacement scorer; rule table when None

    def __post_init__(self):
        if not 0.0 < self.risk_threshold < 100.0:
            raise ConfigError(f"risk_threshold must be in (0,100), got {self.risk_threshold}")
        if self.noise_sigma < 0.0:
            raise ConfigError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class AuditFinding:
    decision_id: str
    flagged: bool
    predicted_class: str | None  # class_id into faults.FAULT_CLASSES
    scores: RubricScores


@dataclass(frozen=True)
class DetectionReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "DetectionReport":
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)) if precision + recall else 0.0
        return cls(tp=tp, fp=fp, fn=fn, tn=tn, precision=precision, recall=recall, f1=f1)

    def merged(self, other: "DetectionReport") -> "DetectionReport":
        return DetectionReport.from_counts(self.tp + other.tp, self.fp + other.fp,
                                           self.fn + other.fn, self.tn + other.tn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


# ---------------------------------------------------------------------------
# Signature table
# ---------------------------------------------------------------------------

def _has_split_upstream(ancestors: list[DecisionRecord]) -> bool:
    return any(a.action in SPLIT_ACTIONS for a in ancestors)


def _ratio(manifest: RunManifest) -> float:
    return manifest.n_features / manifest.n_train


def _no_regularization(record: DecisionRecord) -> bool:
    if record.action == "set_regularization":
        return record.params.get("strength") == 0
    if record.action == "fit_logistic":
        return record.params.get("l2") == 0
    if record.action == "fit_ridge":
        return record.params.get("alpha") == 0
    return False


def _cv_folds(record: DecisionRecord):
    return record.params.get("cv_folds")


# (tag, predicate(record, ancestors, manifest), overrides, explanation)
_RULES = (
    ("data_leakage",
     lambda r, anc, m: r.action in SCALE_ACTIONS and not _has_split_upstream(anc),
     {"risk": 25.0, "appropriateness": 45.0},
     lambda r, m: f"{r.action} has no train/test split upstream, so scaler statistics absorb test rows"),
    ("test_contamination",
     lambda r, anc, m: r.action == "one_hot_encode" and r.params.get("fit_scope") == "train+test",
     {"risk": 25.0, "appropriateness": 45.0},
     lambda r, m: "one_hot_encode fit with scope train+test, so the encoder sees the test set"),
    ("temporal_violation",
     lambda r, anc, m: r.action == "shuffle_split" and m.has_kind("datetime"),
     {"risk": 30.0, "appropriateness": 45.0},
     lambda r, m: "shuffle_split on a dataset with a datetime column breaks time ordering"),
    ("target_leakage",
     lambda r, anc, m: r.action == "target_encode" and _cv_folds(r) == 0,
     {"risk": 20.0, "appropriateness": 45.0},
     lambda r, m: "target_encode with cv_folds=0 writes target statistics straight into the features"),
    ("model_mismatch",
     lambda r, anc, m: r.action == "fit_deep_mlp" and m.n_train < SMALL_DATA_ROWS,
     {"appropriateness": 40.0, "consistency": 45.0, "risk": 50.0},
     lambda r, m: f"fit_deep_mlp on {m.n_train} training rows is a capacity mismatch"),
    ("high_feature_sample_ratio",
     lambda r, anc, m: _no_regularization(r) and _ratio(m) >= HIGH_RATIO,
     {"risk": 55.0},
     lambda r, m: f"regularization disabled at {m.n_features} features for {m.n_train} rows"),
    ("encoding_risk",
     lambda r, anc, m: r.action == "target_encode" and "cv_folds" not in r.params,
     {"risk": 62.0},
     lambda r, m: "target_encode without cross-fold settings may memorize the target"),
    ("aggressive_selection",
     lambda r, anc, m: r.action == "select_top_k" and isinstance(r.params.get("k"), int)
     and r.params["k"] <= 2,
     {"risk": 63.0},
     lambda r, m: f"select_top_k keeps only {r.params.get('k')} features; legal but drastic"),
    ("aggressive_expansion",
     lambda r, anc, m: r.action == "poly_features" and isinstance(r.params.get("degree"), int)
     and r.params["degree"] >= 3,
     {"risk": 63.0},
     lambda r, m: f"poly_features at degree {r.params.get('degree')} explodes the feature space"),
)


def signature_fires(class_id: str, record: DecisionRecord,
                    ancestors: list[DecisionRecord], manifest: RunManifest) -> bool:
    """Per-class structural signature; true for every injected fault of that class."""
    if class_id == "leak_normalize_before_split":
        return record.action in SCALE_ACTIONS and not _has_split_upstream(ancestors)
    if class_id == "leak_encoder_on_test":
        return record.action == "one_hot_encode" and record.params.get("fit_scope") == "train+test"
    if class_id == "temporal_shuffle":
        return record.action == "shuffle_split" and manifest.has_kind("datetime")
    if class_id == "target_leakage":
        return record.action == "target_encode" and _cv_folds(record) == 0
    if class_id == "inappropriate_model":
        return record.action == "fit_deep_mlp" and manifest.n_train < SMALL_DATA_ROWS
    if class_id == "overfit_no_regularization":
        return _no_regularization(record) and _ratio(manifest) >= HIGH_RATIO
    if class_id == "subtle_encoding":
        cv = _cv_folds(record)
        return record.action == "target_encode" and (cv is None or (isinstance(cv, int) and 0 < cv <= 2))
    raise KeyError(class_id)


def _derived_rng(seed: int, decision_id: str) -> random.Random:
    digest = hashlib.blake2b(f"{seed}:{decision_id}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def assess_decision(record: DecisionRecord, lineage: list[DecisionRecord],
                    manifest: RunManifest, cfg: AssessorConfig) -> RubricScores:
    """Score one decision against the signature table, then add seeded noise.

    lineage: the record's provenance ancestors in order (the record itself
    may be included; it is excluded from upstream checks either way).
    Deterministic when noise_sigma is 0. Unknown actions are scored at the
    clean baseline and tagged `unverifiable`.
    """
    if cfg.scorer is not None:
        base = cfg.scorer(record, lineage, manifest)
        values = {d: float(getattr(base, d)) for d in DIMENSIONS}
        tags = list(base.tags)
        explanation = base.explanation
    else:
        ancestors = [r for r in lineage if r.decision_id != record.decision_id]
        values = dict(BASELINE)
        tags = []
        notes = []
        for tag, predicate, overrides, explain in _RULES:
            if predicate(record, ancestors, manifest):
                tags.append(tag)
                notes.append(explain(record, manifest))
                for dim, score in overrides.items():
                    # min keeps stacked signatures monotone: more evidence
                    # of a fault never raises a score
                    values[dim] = min(values[dim], score)
        if record.action not in ACTION_VOCABULARY:
            tags.append("unverifiable")
            notes.append(f"action {record.action!r} is outside the controlled vocabulary")
        explanation = "; ".join(notes) if notes else "no anti-pattern signature fired; clean baseline"

    if cfg.noise_sigma > 0.0:
        rng = _derived_rng(cfg.seed, record.decision_id)
        for dim in DIMENSIONS:
            values[dim] = min(100.0, max(0.0, values[dim] + rng.gauss(0.0, cfg.noise_sigma)))

    return RubricScores(
        appropriateness=values["appropriateness"], consistency=values["consistency"],
        completeness=values["completeness"], efficiency=values["efficiency"],
        risk=values["risk"], tags=tuple(tags), explanation=explanation,
    )


# priority: critical leakage classes first, borderline last, so a decision
# carrying several tags lands on its most severe class
_CLASSIFY_ORDER = (
    ("target_leakage", "target_leakage"),
    ("test_contamination", "leak_encoder_on_test"),
    ("data_leakage", "leak_normalize_before_split"),
    ("temporal_violation", "temporal_shuffle"),
    ("model_mismatch", "inappropriate_model"),
    ("high_feature_sample_ratio", "overfit_no_regularization"),
    ("encoding_risk", "subtle_encoding"),
)


def classify_fault(scores: RubricScores, record: DecisionRecord) -> str | None:
    """Map a scored decision to a fault class id, or None when no pattern matches."""
    for tag, class_id in _CLASSIFY_ORDER:
        if tag not in scores.tags:
            continue
        if class_id == "leak_normalize_before_split" and record.action not in SCALE_ACTIONS:
            continue
        return class_id
    cv = _cv_folds(record)
    if record.action == "target_encode" and (cv is None or (isinstance(cv, int) and 0 < cv <= 2)):
        return "subtle_encoding"
    return None


def audit_corpus(corpus: LabeledCorpus, manifest: RunManifest,
                 cfg: AssessorConfig) -> tuple[list[AuditFinding], DetectionReport]:
    """Assess every decision, flag by risk threshold, compare against labels.

    Labels never reach the scoring path; they are read only to build the
    detection report afterwards.
    """
    graph = build_provenance(corpus.records)
    by_id = {r.decision_id: r for r in corpus.records}
    findings: list[AuditFinding] = []
    tp = fp = fn = tn = 0
    for record in corpus.records:
        lineage = [by_id[d] for d in trace_lineage(graph, record.decision_id)]
        scores = assess_decision(record, lineage, manifest, cfg)
        flagged = scores.risk < cfg.risk_threshold
        predicted = classify_fault(scores, record) if flagged else None
        findings.append(AuditFinding(decision_id=record.decision_id, flagged=flagged,
                                     predicted_class=predicted, scores=scores))
        faulty = corpus.labels[record.decision_id].is_faulty
        if flagged and faulty:
            tp += 1
        elif flagged:
            fp += 1
        elif faulty:
            fn += 1
        else:
            tn += 1
    return findings, DetectionReport.from_counts(tp, fp, fn, tn)
