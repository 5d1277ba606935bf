"""Counterfactual decision analysis.

Picks the pipeline decision points most worth interrogating, enumerates a
small catalog of task-compatible alternatives per point, re-executes only
the stages downstream of the change, and attributes outcome deltas per
stage and per dataset.

Impact sign is unified so tables read the same across tasks: positive
always means the alternative improved the outcome. Classification deltas
are percentage points of the primary metric; regression deltas are the
negated relative RMSE change times 100.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from hashlib import blake2b

import numpy as np

from .datasets import Dataset
from .decision_log import ACTION_VOCABULARY, DecisionRecord, RunManifest
from .errors import EnumError, FitError, PlanError, ArgError
from .learners import DesignConfig, DesignState, fit_reference
from .quality import task_metrics

DECISION_STAGES = ("preprocessing", "feature_engineering", "model_selection")
PLAN_STAGES = DECISION_STAGES + ("train", "evaluate")

# train executes the model_selection binding and evaluate scores the held-out
# split; neither carries a selectable binding of its own
_BASELINE_RISK = 85.0


@dataclass(frozen=True)
class Binding:
    action: str
    params: dict = field(default_factory=dict)
    decision_id: str | None = None

    def key(self) -> tuple:
        return (self.action, tuple(sorted(self.params.items())))


@dataclass(frozen=True)
class StagePlan:
    bindings: dict  # decision stage -> Binding

    def __post_init__(self):
        if not self.bindings:
            raise PlanError("plan has no bindings")
        missing = [s for s in DECISION_STAGES if s not in self.bindings]
        if missing:
            raise PlanError(f"unbound stages: {', '.join(missing)}")
        extra = [s for s in self.bindings if s not in DECISION_STAGES]
        if extra:
            raise PlanError(f"unknown stages: {', '.join(sorted(extra))}")
        for stage, binding in self.bindings.items():
            if binding.action not in ACTION_VOCABULARY:
                raise PlanError(
                    f"{stage} binds unknown action {binding.action!r}")


@dataclass(frozen=True)
class AlternativeDecision:
    point: tuple  # (stage, decision_id)
    action: str
    params: dict = field(default_factory=dict)

    def key(self) -> tuple:
        return (self.action, tuple(sorted(self.params.items())))


@dataclass(frozen=True)
class CounterfactualResult:
    point: tuple
    alternative: AlternativeDecision | None
    metric_original: float | None
    metric_alternative: float | None
    delta: float | None
    mode: str  # reexecution | simulation
    explanation: str
    dataset_id: str = ""
    tags: tuple = ()

    def as_dict(self) -> dict:
        alt = None
        if self.alternative is not None:
            alt = {"action": self.alternative.action,
                   "params": dict(self.alternative.params)}
        return {
            "point": list(self.point),
            "alternative": alt,
            "metric_original": self.metric_original,
            "metric_alternative": self.metric_alternative,
            "delta": self.delta,
            "mode": self.mode,
            "explanation": self.explanation,
            "dataset_id": self.dataset_id,
            "tags": list(self.tags),
        }


@dataclass(frozen=True)
class AttributionReport:
    per_stage: dict
    per_dataset: dict
    overall: dict

    def as_dict(self) -> dict:
        return {"per_stage": dict(self.per_stage),
                "per_dataset": dict(self.per_dataset),
                "overall": dict(self.overall)}


PREPROCESSING_CATALOG = tuple(
    Binding(action, {"scaler": scaler})
    for action in ("impute_mean", "impute_median")
    for scaler in ("standard", "minmax", "none")
)

FEATURE_CATALOG = (
    Binding("one_hot_encode", {}),
    Binding("target_encode", {"cv_folds": 5}),
    Binding("select_top_k", {"k": 8}),
    Binding("poly_features", {"degree": 2}),
)

MODEL_CATALOG = {
    "classification": (
        Binding("fit_logistic", {"l2": 1.0}),
        Binding("fit_gbt", {"n_rounds": 80}),
        Binding("fit_logistic", {"l2": 0.01}),
        Binding("fit_gbt", {"n_rounds": 30}),
    ),
    "regression": (
        Binding("fit_ridge", {"alpha": 1.0}),
        Binding("fit_gbt", {"n_rounds": 80}),
        Binding("fit_ridge", {"alpha": 0.01}),
        Binding("fit_gbt", {"n_rounds": 30}),
    ),
}

SIMULATION_DEFAULTS = {
    "preprocessing": (0.7, 0.5),
    "feature_engineering": (1.5, 0.5),
    "model_selection": (2.7, 0.5),
}


def default_plan(task_kind: str) -> StagePlan:
    model = Binding("fit_logistic", {"l2": 1.0}) if task_kind == "classification" \
        else Binding("fit_ridge", {"alpha": 1.0})
    return StagePlan(bindings={
        "preprocessing": Binding("impute_mean", {"scaler": "standard"}),
        "feature_engineering": Binding("one_hot_encode", {}),
        "model_selection": model,
    })


def plan_from_log(manifest: RunManifest,
                  records: list[DecisionRecord]) -> StagePlan:
    """Condense a decision log to one binding per decision stage.

    Logs carry many decisions per stage; the executable plan keeps the
    impute choice plus scaler for preprocessing, the encoder family for
    feature engineering, and the first runnable fit for model selection.
    """
    base = default_plan(manifest.task_kind).bindings
    impute, impute_id = "impute_mean", None
    scaler = "none"
    for r in records:
        if r.action in ("impute_mean", "impute_median") and impute_id is None:
            impute, impute_id = r.action, r.decision_id
        elif r.action == "standard_scale" and scaler == "none":
            scaler = "standard"
        elif r.action == "minmax_scale" and scaler == "none":
            scaler = "minmax"
    pre = Binding(impute, {"scaler": scaler}, decision_id=impute_id)

    fe = base["feature_engineering"]
    for r in records:
        if r.stage != "feature_engineering":
            continue
        if r.action == "target_encode":
            folds = r.params.get("cv_folds", 0)
            fe = Binding("target_encode", {"cv_folds": int(folds) if folds else 5},
                         decision_id=r.decision_id)
            break
        if r.action == "one_hot_encode":
            fe = Binding("one_hot_encode", {}, decision_id=r.decision_id)
            break

    ms = base["model_selection"]
    runnable = {"fit_logistic": "l2", "fit_ridge": "alpha", "fit_gbt": "n_rounds"}
    for r in records:
        if r.action in runnable:
            name = runnable[r.action]
            params = {name: r.params[name]} if name in r.params else dict(ms.params)
            if r.action == "fit_gbt" and "n_rounds" not in params:
                params = {"n_rounds": 80}
            ms = Binding(r.action, params, decision_id=r.decision_id)
            break
    return StagePlan(bindings={"preprocessing": pre, "feature_engineering": fe,
                               "model_selection": ms})


def identify_points(plan: StagePlan, findings: list, cap: int = 3) -> list[tuple]:
    """Decision points ranked most-suspicious first.

    Lower risk score means more suspicious, so ranking is by ascending
    risk with stage order breaking ties. Findings are joined to bindings
    by decision id; unmatched bindings score as the clean baseline.
    """
    if not plan.bindings:
        raise PlanError("plan has no bindings")
    by_id = {f.decision_id: f for f in findings or []}
    ranked = []
    for order, stage in enumerate(DECISION_STAGES):
        binding = plan.bindings[stage]
        risk = _BASELINE_RISK
        if binding.decision_id is not None and binding.decision_id in by_id:
            risk = by_id[binding.decision_id].scores.risk
        ranked.append((risk, order, stage, binding.decision_id or stage))
    ranked.sort(key=lambda t: (t[0], t[1]))
    return [(stage, did) for _, _, stage, did in ranked[:max(1, cap)]]


def _compatible(binding: Binding, stage: str, manifest: RunManifest) -> bool:
    kinds = {f.kind for f in manifest.feature_schema}
    if stage == "feature_engineering":
        if binding.action in ("one_hot_encode", "target_encode"):
            return "categorical" in kinds
        if binding.action == "poly_features":
            return "numeric" in kinds
        return True
    if stage == "model_selection":
        if binding.action == "fit_logistic":
            return manifest.task_kind == "classification"
        if binding.action == "fit_ridge":
            return manifest.task_kind == "regression"
        return True
    return True


def enumerate_alternatives(point: tuple, manifest: RunManifest, plan: StagePlan,
                           cap: int = 3) -> list[AlternativeDecision]:
    """2-4 catalog alternatives for a point, original binding excluded.

    Alternatives that change the action outrank parameter variants of the
    same action; the list is then truncated to `cap`.
    """
    stage, _ = point
    if stage not in DECISION_STAGES:
        raise EnumError(f"no alternative catalog for stage {stage!r}")
    if stage == "preprocessing":
        catalog = PREPROCESSING_CATALOG
    elif stage == "feature_engineering":
        catalog = FEATURE_CATALOG
    else:
        catalog = MODEL_CATALOG[manifest.task_kind]
    original = plan.bindings[stage]
    distinct, variants = [], []
    for cand in catalog:
        if cand.key() == original.key():
            continue
        if not _compatible(cand, stage, manifest):
            continue
        alt = AlternativeDecision(point=point, action=cand.action,
                                  params=dict(cand.params))
        (variants if cand.action == original.action else distinct).append(alt)
    picked = (distinct + variants)[:max(2, cap)]
    if not picked:
        raise EnumError(f"no compatible alternative at {stage}")
    return picked


def _design_for(plan: StagePlan) -> tuple[str, str, str, dict]:
    pre = plan.bindings["preprocessing"]
    fe = plan.bindings["feature_engineering"]
    impute = "median" if pre.action == "impute_median" else "mean"
    scaler = pre.params.get("scaler", "standard")
    encoder = "one_hot"
    extras = {}
    if fe.action == "target_encode":
        encoder = "target_encode_cv"
        extras["cv_folds"] = int(fe.params.get("cv_folds", 5)) or 5
    elif fe.action == "select_top_k":
        extras["select_top_k"] = int(fe.params.get("k", 8))
    elif fe.action == "poly_features":
        extras["poly_degree"] = int(fe.params.get("degree", 2))
    return impute, scaler, encoder, extras


def _model_for(plan: StagePlan) -> tuple[str, dict]:
    ms = plan.bindings["model_selection"]
    kind = {"fit_logistic": "logistic", "fit_ridge": "ridge",
            "fit_gbt": "gbt"}.get(ms.action)
    if kind is None:
        raise FitError(f"model binding {ms.action!r} is not executable")
    return kind, dict(ms.params)


def _stage_seed(seed: int, stage: str) -> int:
    digest = blake2b(f"{seed}:{stage}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def execute_plan(plan: StagePlan, dataset: Dataset, seed: int = 0,
                 cache: dict | None = None) -> float:
    """Run the pipeline and return the primary test metric.

    `cache` maps design keys to fitted DesignState objects so arms that
    share upstream bindings reuse the identical artifact.
    """
    impute, scaler, encoder, extras = _design_for(plan)
    cfg = DesignConfig(impute=impute, scaler=scaler, encoder=encoder,
                       cv_folds=extras.get("cv_folds", 5),
                       select_top_k=extras.get("select_top_k"),
                       poly_degree=extras.get("poly_degree"),
                       seed=_stage_seed(seed, "feature_engineering"))
    design_key = (dataset.name, cfg)
    design = None
    if cache is not None:
        design = cache.get(design_key)
    if design is None:
        design = DesignState(dataset, cfg)
        if cache is not None:
            cache[design_key] = design
    kind, params = _model_for(plan)
    # passing the cached design keeps downstream-only reruns on the
    # identical upstream artifact
    predictor = fit_reference(dataset, kind, seed=_stage_seed(seed, "train"),
                              config=cfg, params=params, design=design)
    metrics = task_metrics(predictor, dataset)
    if dataset.task_kind == "regression":
        return metrics["rmse"]
    name = dataset.metric_primary if dataset.metric_primary in metrics else "accuracy"
    return metrics[name]


def _with_binding(plan: StagePlan, stage: str, alt: AlternativeDecision) -> StagePlan:
    bindings = dict(plan.bindings)
    bindings[stage] = Binding(alt.action, dict(alt.params),
                              decision_id=plan.bindings[stage].decision_id)
    return StagePlan(bindings=bindings)


def _impact(original: float, alternative: float, task_kind: str) -> float:
    if task_kind == "classification":
        return (alternative - original) * 100.0
    if original == 0.0:
        return 0.0
    return -(alternative - original) / original * 100.0


def reexecute(plan: StagePlan, alternative: AlternativeDecision, dataset: Dataset,
              seed: int = 0, cache: dict | None = None) -> CounterfactualResult:
    """Measure one counterfactual; both arms share seed, split and cache."""
    stage, _ = alternative.point
    if cache is None:
        cache = {}
    metric_orig = execute_plan(plan, dataset, seed=seed, cache=cache)
    alt_plan = _with_binding(plan, stage, alternative)
    try:
        metric_alt = execute_plan(alt_plan, dataset, seed=seed, cache=cache)
    except FitError as exc:
        return CounterfactualResult(
            point=alternative.point, alternative=alternative,
            metric_original=metric_orig, metric_alternative=None, delta=None,
            mode="reexecution", dataset_id=dataset.name, tags=("infeasible",),
            explanation=f"alternative failed to fit: {exc}")
    delta = _impact(metric_orig, metric_alt, dataset.task_kind)
    orig_b = plan.bindings[stage]
    unit = "pp" if dataset.task_kind == "classification" else "% rel. RMSE (improvement positive)"
    return CounterfactualResult(
        point=alternative.point, alternative=alternative,
        metric_original=metric_orig, metric_alternative=metric_alt, delta=delta,
        mode="reexecution", dataset_id=dataset.name,
        explanation=(f"{stage}: {orig_b.action}{orig_b.params} -> "
                     f"{alternative.action}{alternative.params}: "
                     f"delta {delta:+.2f} {unit}"))


def run_counterfactuals(dataset: Dataset, plan: StagePlan | None = None,
                        findings: list | None = None, manifest: RunManifest | None = None,
                        seed: int = 0, cap: int = 3) -> list[CounterfactualResult]:
    """Full re-execution pass for one dataset: points x alternatives."""
    from .datasets import dataset_manifest

    if plan is None:
        plan = default_plan(dataset.task_kind)
    if manifest is None:
        manifest = dataset_manifest(dataset)
    points = identify_points(plan, findings or [], cap=cap)
    cache: dict = {}
    results = []
    for point in points:
        for alt in enumerate_alternatives(point, manifest, plan, cap=cap):
            results.append(reexecute(plan, alt, dataset, seed=seed, cache=cache))
    return results


def simulate_impacts(stage_params: dict | None = None, n: int = 15, seed: int = 0,
                     datasets: tuple = ()) -> list[CounterfactualResult]:
    """Draw per-stage impacts from Normal(mu, sigma) without training.

    The cheap stand-in for re-execution when only ranking variance matters:
    `n` draws per decision stage, tagged with dataset ids round-robin when
    `datasets` is given.
    """
    params = dict(SIMULATION_DEFAULTS)
    if stage_params:
        params.update(stage_params)
    results = []
    for stage in DECISION_STAGES:
        mu, sigma = params[stage]
        rng = np.random.default_rng(_stage_seed(seed, f"simulate:{stage}"))
        draws = rng.normal(mu, sigma, size=n) if sigma > 0 else np.full(n, float(mu))
        for i, value in enumerate(draws):
            ds_id = datasets[i % len(datasets)] if datasets else ""
            results.append(CounterfactualResult(
                point=(stage, f"sim{i:02d}"), alternative=None,
                metric_original=None, metric_alternative=None,
                delta=float(value), mode="simulation", dataset_id=ds_id,
                explanation=f"surrogate draw {i} from Normal({mu}, {sigma}) at {stage}"))
    return results


def _agg(values: list[float]) -> dict:
    arr = np.array(values)
    return {"n": int(arr.size),
            "avg_abs_impact": float(np.mean(np.abs(arr))),
            "mean_signed": float(np.mean(arr)),
            "min": float(np.min(arr)), "max": float(np.max(arr))}


def attribute(results: list[CounterfactualResult]) -> AttributionReport:
    """Aggregate impacts per stage, per dataset, and overall."""
    usable = [r for r in results if r.delta is not None]
    if not usable:
        raise ArgError("no usable counterfactual results to attribute")
    per_stage = {}
    for stage in DECISION_STAGES:
        vals = [r.delta for r in usable if r.point[0] == stage]
        if vals:
            per_stage[stage] = _agg(vals)
    per_dataset = {}
    for r in usable:
        if r.dataset_id:
            per_dataset.setdefault(r.dataset_id, []).append(r.delta)
    per_dataset = {k: _agg(v) for k, v in sorted(per_dataset.items())}
    all_vals = [r.delta for r in usable]
    overall = _agg(all_vals)
    overall["range"] = [overall.pop("min"), overall.pop("max")]
    return AttributionReport(per_stage=per_stage, per_dataset=per_dataset,
                             overall=overall)


def stage_ranking(results: list[CounterfactualResult]) -> list[str]:
    """Stages ordered by descending average absolute impact."""
    report = attribute(results)
    return sorted(report.per_stage,
                  key=lambda s: -report.per_stage[s]["avg_abs_impact"])
