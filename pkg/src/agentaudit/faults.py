"""Fault taxonomy and ground-truth corpus injection.

Seven labeled fault classes cover the leakage, temporal, model-choice, and
regularization anti-patterns the audit targets, plus one borderline class
(`subtle_encoding`) that is deliberately under-signatured so detection has
honest false negatives. Injection rewrites slots of a clean decision run
into fault signatures, keeping ids and timestamps, so the label file lines
up with the log file one to one.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .decision_log import DecisionRecord, RunManifest
from .errors import PlanError

SPLIT_ACTIONS = ("train_test_split", "shuffle_split", "time_split")
SCALE_ACTIONS = ("standard_scale", "minmax_scale")


@dataclass(frozen=True)
class FaultClass:
    class_id: str
    severity_prior: str  # critical | major | borderline
    description: str


_CLASSES = (
    FaultClass("leak_normalize_before_split", "critical",
               "scaler fit on the full dataset before any train/test split"),
    FaultClass("leak_encoder_on_test", "critical",
               "categorical encoder fit on train and test rows together"),
    FaultClass("temporal_shuffle", "critical",
               "random shuffle split applied to time-ordered data"),
    FaultClass("target_leakage", "critical",
               "target statistics encoded into features without cross-fitting"),
    FaultClass("inappropriate_model", "major",
               "deep network chosen for a small tabular dataset"),
    FaultClass("overfit_no_regularization", "major",
               "regularization disabled despite a high feature-to-sample ratio"),
    FaultClass("subtle_encoding", "borderline",
               "target encoding with degenerate cross-fold settings"),
)

FAULT_CLASSES: dict[str, FaultClass] = {c.class_id: c for c in _CLASSES}
FAULT_CLASS_IDS = tuple(c.class_id for c in _CLASSES)


def list_fault_classes() -> list[FaultClass]:
    return list(_CLASSES)


# Decoys: aggressive but legal choices planted among the clean decisions so
# score noise can produce false positives. Labeled clean.

def is_aggressive_selection(record: DecisionRecord) -> bool:
    k = record.params.get("k")
    return record.action == "select_top_k" and isinstance(k, int) and k <= 2


def is_aggressive_expansion(record: DecisionRecord) -> bool:
    d = record.params.get("degree")
    return record.action == "poly_features" and isinstance(d, int) and d >= 3


def is_decoy(record: DecisionRecord) -> bool:
    return is_aggressive_selection(record) or is_aggressive_expansion(record)


@dataclass(frozen=True)
class InjectionPlan:
    dataset_id: str
    n_clean: int
    n_faulty: int
    class_mix: dict[str, int]
    seed: int


@dataclass(frozen=True)
class Label:
    is_faulty: bool
    fault_class: str | None  # class_id, None when clean


@dataclass
class LabeledCorpus:
    records: list[DecisionRecord]
    labels: dict[str, Label]
    decoy_ids: tuple[str, ...]
    plan: InjectionPlan

    @property
    def fault_rate(self) -> float:
        return sum(1 for l in self.labels.values() if l.is_faulty) / len(self.labels)


def default_class_mix(has_datetime: bool) -> dict[str, int]:
    """Per-dataset fault mix; 15 faults total either way.

    Datasets without a datetime column cannot host temporal faults, so their
    share moves to the two leakage classes.
    """
    if has_datetime:
        return {
            "leak_normalize_before_split": 3, "leak_encoder_on_test": 2,
            "temporal_shuffle": 2, "target_leakage": 2,
            "inappropriate_model": 2, "overfit_no_regularization": 2,
            "subtle_encoding": 2,
        }
    return {
        "leak_normalize_before_split": 4, "leak_encoder_on_test": 3,
        "temporal_shuffle": 0, "target_leakage": 2,
        "inappropriate_model": 2, "overfit_no_regularization": 2,
        "subtle_encoding": 2,
    }


# ---------------------------------------------------------------------------
# Clean run template
# ---------------------------------------------------------------------------

def build_clean_run(manifest: RunManifest) -> list[DecisionRecord]:
    """A 25-decision clean pipeline for the dataset described by manifest.

    Layout: datetime datasets get 7 preprocessing / 8 feature slots, others
    6 / 9; model selection and hyperparameter stages get 5 each. Includes the
    two decoy slots. Deterministic; injection seeds only permute which slots
    later receive faults.
    """
    dt_cols = [f.name for f in manifest.feature_schema if f.kind == "datetime"]
    has_dt = bool(dt_cols)
    clf = manifest.task_kind == "classification"

    def rec(i: int, stage: str, action: str, params: dict, rationale: str, *parents: str):
        return DecisionRecord(
            decision_id=f"d{i:02d}", stage=stage, action=action, params=params,
            rationale_text=rationale, parents=tuple(parents), timestamp=i,
        )

    pre = "data_preprocessing"
    fe = "feature_engineering"
    ms = "model_selection"
    hp = "hyperparameter_opt"

    out = [
        rec(1, pre, "impute_mean", {"columns": "numeric"},
            "Fill numeric gaps with column means so downstream fits see no NaNs."),
        rec(2, pre, "impute_median", {"columns": "skewed_numeric"},
            "Median imputation for the long-tailed columns; means would drift.", "d01"),
    ]
    if has_dt:
        out.append(rec(3, pre, "time_split",
                       {"test_fraction": 0.2, "time_column": dt_cols[0]},
                       "Hold out the most recent 20% to respect the time ordering.", "d02"))
    else:
        out.append(rec(3, pre, "train_test_split",
                       {"test_fraction": 0.2, "stratify": clf},
                       "Standard 80/20 holdout before any fitted transform.", "d02"))
    out += [
        rec(4, pre, "standard_scale", {"fit_scope": "train", "columns": "numeric"},
            "Standardize on train statistics only; test is transformed, not fit.", "d03"),
        rec(5, pre, "minmax_scale", {"fit_scope": "train", "columns": "bounded"},
            "Bounded columns go to [0,1] using train min/max.", "d03"),
    ]
    if has_dt:
        out += [
            rec(6, pre, "impute_mean", {"columns": "late_numeric"},
                "A second imputation pass for columns introduced after the split.", "d03"),
            rec(7, pre, "standard_scale", {"fit_scope": "train", "columns": "residual"},
                "Scale the remaining numeric block with train statistics.", "d03"),
        ]
        fe_ids = list(range(8, 16))
    else:
        out.append(rec(6, pre, "standard_scale", {"fit_scope": "train", "columns": "residual"},
                       "Scale the remaining numeric block with train statistics.", "d03"))
        fe_ids = list(range(7, 16))

    # Feature engineering. Two slots are decoys: aggressive but legal.
    fe_slots = [
        ("one_hot_encode", {"fit_scope": "train", "columns": "categorical"},
         "One-hot the categoricals; encoder fit on train rows.", ("d03",)),
        ("target_encode", {"cv_folds": 5, "columns": "high_cardinality"},
         "Target-encode the wide categoricals with 5-fold cross-fitting.", ("d03",)),
        ("select_top_k", {"k": 12},
         "Keep the 12 strongest features by mutual information.", None),
        ("poly_features", {"degree": 2, "columns": "numeric"},
         "Quadratic interactions for the numeric block.", None),
        ("select_top_k", {"k": 2},
         "Cut to the two dominant features; the rest look like noise.", None),
        ("poly_features", {"degree": 3, "columns": "numeric"},
         "Cubic terms; the residual plot still shows curvature.", None),
        ("one_hot_encode", {"fit_scope": "train", "columns": "low_cardinality"},
         "One-hot the short categorical tail.", ("d03",)),
        ("select_top_k", {"k": 15},
         "Re-rank after expansion and keep 15.", None),
        ("target_encode", {"cv_folds": 4, "columns": "mid_cardinality"},
         "Cross-fit target encoding for the mid-cardinality group.", ("d03",)),
    ]
    if has_dt:
        fe_slots = fe_slots[:8]
    prev = None
    for i, (action, params, why, parents) in zip(fe_ids, fe_slots):
        if parents is None:
            parents = (f"d{i - 1:02d}",) if prev else ("d03",)
        out.append(rec(i, fe, action, dict(params), why, *parents))
        prev = i

    # Model selection: two families, a few configurations each.
    fits = [
        ("fit_logistic" if clf else "fit_ridge", {"l2": 1.0} if clf else {"alpha": 1.0},
         "Linear baseline with default regularization."),
        ("fit_gbt", {"n_rounds": 80},
         "Boosted stumps, 80 rounds; strong tabular default."),
        ("fit_logistic" if clf else "fit_ridge", {"l2": 0.1} if clf else {"alpha": 0.1},
         "Looser regularization to probe underfit."),
        ("fit_gbt", {"n_rounds": 30},
         "Shorter boosting run as a cheap comparison point."),
        ("fit_logistic" if clf else "fit_ridge", {"l2": 0.5} if clf else {"alpha": 0.5},
         "Middle regularization setting."),
    ]
    fe_last = f"d{fe_ids[-1]:02d}"
    for j, (action, params, why) in enumerate(fits):
        out.append(rec(16 + j, ms, action, dict(params), why, fe_last))

    strengths = [1.0, 0.5, 2.0, 0.1, 0.3]
    for j, s in enumerate(strengths):
        out.append(rec(21 + j, hp, "set_regularization", {"strength": s},
                       f"Sweep point: strength {s}.", f"d{16 + j:02d}"))
    return out


# ---------------------------------------------------------------------------
# Injection
# ---------------------------------------------------------------------------

_FAULT_RATIONALES = {
    "leak_normalize_before_split": (
        "Standardize everything up front so every later stage sees unit variance.",
        "Scale the full table once; splitting afterwards keeps the code simple.",
    ),
    "leak_encoder_on_test": (
        "Fit the encoder on all rows so test-only categories get real columns.",
        "Encoding train and test together avoids unseen-category errors.",
    ),
    "temporal_shuffle": (
        "Shuffle before splitting so both sides share the same distribution.",
        "A random split balances the classes better than a date cutoff.",
    ),
    "target_leakage": (
        "Encode each category by its mean target; no folds needed at this size.",
        "Direct target encoding is the fastest way to use the labels.",
    ),
    "inappropriate_model": (
        "A deep network should capture interactions the linear models miss.",
        "Trying a multilayer net; more capacity rarely hurts.",
    ),
    "overfit_no_regularization": (
        "Drop the penalty entirely; regularization was biasing the fit.",
        "Set strength to zero to squeeze out the last bit of train accuracy.",
    ),
    "subtle_encoding": (
        "Two folds keep the encoder honest without much compute.",
        "Light cross-fitting; two folds should be enough here.",
    ),
}


def _fault_record(class_id: str, slot: DecisionRecord, ordinal: int) -> DecisionRecord:
    why = _FAULT_RATIONALES[class_id][ordinal % 2]
    if class_id == "leak_normalize_before_split":
        action = SCALE_ACTIONS[ordinal % 2]
        # no parents: the scaler is fit on the raw table, upstream of any split
        return slot.with_updates(action=action, parents=(),
                                 params={"fit_scope": "full_data", "columns": "numeric"},
                                 rationale_text=why)
    if class_id == "leak_encoder_on_test":
        return slot.with_updates(action="one_hot_encode",
                                 params={"fit_scope": "train+test", "columns": "categorical"},
                                 rationale_text=why)
    if class_id == "temporal_shuffle":
        return slot.with_updates(action="shuffle_split",
                                 params={"test_fraction": 0.2, "shuffle": True},
                                 rationale_text=why)
    if class_id == "target_leakage":
        return slot.with_updates(action="target_encode",
                                 params={"cv_folds": 0, "columns": "high_cardinality"},
                                 rationale_text=why)
    if class_id == "inappropriate_model":
        return slot.with_updates(action="fit_deep_mlp",
                                 params={"hidden_units": 256, "epochs": 200},
                                 rationale_text=why)
    if class_id == "overfit_no_regularization":
        return slot.with_updates(action="set_regularization",
                                 params={"strength": 0}, rationale_text=why)
    if class_id == "subtle_encoding":
        return slot.with_updates(action="target_encode",
                                 params={"cv_folds": 2, "columns": "mixed"},
                                 rationale_text=why)
    raise PlanError(f"unknown fault class {class_id!r}")


_STAGE_FOR_CLASS = {
    "leak_normalize_before_split": "data_preprocessing",
    "temporal_shuffle": "data_preprocessing",
    "leak_encoder_on_test": "feature_engineering",
    "target_leakage": "feature_engineering",
    "subtle_encoding": "feature_engineering",
    "inappropriate_model": "model_selection",
    "overfit_no_regularization": "hyperparameter_opt",
}


def inject(clean: list[DecisionRecord], plan: InjectionPlan,
           manifest: RunManifest | None = None) -> LabeledCorpus:
    """Rewrite slots of a clean run into fault signatures per the plan.

    Deterministic given plan.seed; seeds permute only which eligible slot a
    fault lands on. Slot ids and timestamps survive, so labels key cleanly.
    """
    for cid in plan.class_mix:
        if cid not in FAULT_CLASSES:
            raise PlanError(f"unknown fault class in mix: {cid!r}")
    if any(n < 0 for n in plan.class_mix.values()):
        raise PlanError("negative count in class_mix")
    if sum(plan.class_mix.values()) != plan.n_faulty:
        raise PlanError("class_mix counts must sum to n_faulty")
    if len(clean) < plan.n_clean + plan.n_faulty:
        raise PlanError(f"need {plan.n_clean + plan.n_faulty} slots, got {len(clean)}")
    if len(clean) - plan.n_faulty != plan.n_clean:
        raise PlanError("plan totals do not match the clean run length")

    has_dt = (manifest.has_kind("datetime") if manifest is not None
              else any(r.action == "time_split" for r in clean))
    if plan.class_mix.get("temporal_shuffle", 0) > 0 and not has_dt:
        raise PlanError("temporal_shuffle requires a dataset with a datetime column")

    by_id = {r.decision_id: (i, r) for i, r in enumerate(clean)}
    if len(by_id) != len(clean):
        raise PlanError("duplicate decision ids in clean run")
    decoys = tuple(r.decision_id for r in clean if is_decoy(r))
    split_ids = {r.decision_id for r in clean if r.action in SPLIT_ACTIONS}

    rng = random.Random(plan.seed)
    taken: set[str] = set()
    assignment: dict[str, str] = {}  # decision_id -> class_id
    for cid in FAULT_CLASS_IDS:  # fixed order keeps sampling reproducible
        count = plan.class_mix.get(cid, 0)
        if count == 0:
            continue
        stage = _STAGE_FOR_CLASS[cid]
        pool = [r.decision_id for r in clean
                if r.stage == stage and r.decision_id not in taken
                and r.decision_id not in decoys]
        if cid == "leak_normalize_before_split":
            # the surviving split must stay a split so clean scalers keep
            # their lineage; only temporal faults may rewrite that slot
            pool = [d for d in pool if d not in split_ids]
        if len(pool) < count:
            raise PlanError(f"not enough {stage} slots for {cid} (need {count}, have {len(pool)})")
        for did in sorted(rng.sample(pool, count)):
            assignment[did] = cid
            taken.add(did)

    records: list[DecisionRecord] = []
    labels: dict[str, Label] = {}
    per_class_seen: dict[str, int] = {}
    for r in clean:
        cid = assignment.get(r.decision_id)
        if cid is None:
            records.append(r)
            labels[r.decision_id] = Label(False, None)
        else:
            ordinal = per_class_seen.get(cid, 0)
            per_class_seen[cid] = ordinal + 1
            records.append(_fault_record(cid, r, ordinal))
            labels[r.decision_id] = Label(True, cid)
    return LabeledCorpus(records=records, labels=labels, decoy_ids=decoys, plan=plan)


def corpus_stats(corpus: LabeledCorpus) -> tuple[int, int, dict[str, int]]:
    total = len(corpus.records)
    per_class: dict[str, int] = {}
    faulty = 0
    for label in corpus.labels.values():
        if label.is_faulty:
            faulty += 1
            per_class[label.fault_class] = per_class.get(label.fault_class, 0) + 1
    return total, faulty, per_class


# ---------------------------------------------------------------------------
# Label file round-trip (sibling of the run-log JSON)
# ---------------------------------------------------------------------------

def labels_to_obj(corpus: LabeledCorpus) -> dict:
    return {
        "labels": {
            did: {"is_faulty": lab.is_faulty, "class": lab.fault_class}
            for did, lab in sorted(corpus.labels.items())
        },
        "decoys": sorted(corpus.decoy_ids),
        "plan": {
            "dataset_id": corpus.plan.dataset_id, "n_clean": corpus.plan.n_clean,
            "n_faulty": corpus.plan.n_faulty,
            "class_mix": dict(sorted(corpus.plan.class_mix.items())),
            "seed": corpus.plan.seed,
        },
    }


def labels_from_obj(obj: dict, records: list[DecisionRecord]) -> LabeledCorpus:
    plan_obj = obj.get("plan", {})
    plan = InjectionPlan(
        dataset_id=plan_obj.get("dataset_id", "unknown"),
        n_clean=int(plan_obj.get("n_clean", 0)),
        n_faulty=int(plan_obj.get("n_faulty", 0)),
        class_mix={k: int(v) for k, v in plan_obj.get("class_mix", {}).items()},
        seed=int(plan_obj.get("seed", 0)),
    )
    labels = {
        did: Label(bool(v["is_faulty"]), v.get("class"))
        for did, v in obj["labels"].items()
    }
    return LabeledCorpus(records=records, labels=labels,
                         decoy_ids=tuple(obj.get("decoys", [])), plan=plan)
