"""Experiment orchestration, repeated-run studies, and the component
overhead benchmark.

Experiment reports are deterministic given (fixtures, seeds, config):
they carry no wall-clock values, and the one timing-based product (the
overhead benchmark) is a separate document kind. Throughput measurement
inside experiment 3 is off by default for the same reason.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path

from .assessor import AssessorConfig, AuditFinding, DetectionReport, audit_corpus
from .counterfactual import (attribute, run_counterfactuals, simulate_impacts,
                             stage_ranking, DECISION_STAGES)
from .datasets import Dataset, dataset_manifest, load_fixture
from .decision_log import ArtifactFact, DecisionRecord, RunManifest
from .errors import ConfigError, NotFoundError
from .faults import InjectionPlan, LabeledCorpus, build_clean_run, default_class_mix, inject
from .quality import assess_model
from .reasoning import generate_snippet_set, run_validation_suite
from .reporting import emit_report
from .stats import StatsSummary, frac_at_or_above, summarize, two_proportion_z, wilson_interval

EXPERIMENT_IDS = ("exp1", "exp2", "exp3", "exp4")
PRESETS = {
    "minimal": ("exp1",),
    "standard": ("exp1", "exp2", "exp4"),
    "full": ("exp1", "exp2", "exp3", "exp4"),
}
BENCH_COMPONENTS = ("decision_assessor", "reasoning_validator",
                    "quality_assessor", "counterfactual")
BENCH_PRESETS = {
    "minimal": ("decision_assessor",),
    "standard": ("decision_assessor", "reasoning_validator", "counterfactual"),
    "full": BENCH_COMPONENTS,
}
REFERENCE_BUDGETS_S = (300, 600, 3600)
CANONICAL_RANKING = ["model_selection", "feature_engineering", "preprocessing"]

# the run-log fixture's logged metrics; snippets quote these
RUN_ARTIFACTS = {
    "validation_accuracy": 0.741,
    "baseline_accuracy": 0.700,
    "test_auc": 0.779,
}


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    datasets: tuple = ()
    seeds: tuple = (0,)
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.id not in EXPERIMENT_IDS:
            raise ConfigError(f"unknown experiment id: {self.id!r}")
        if not self.seeds:
            raise ConfigError("experiment needs at least one seed")
        if self.datasets == ():
            object.__setattr__(self, "datasets",
                               ("german_credit", "adult", "titanic",
                                "diabetes", "ca_housing"))
        if not self.datasets:
            raise ConfigError("experiment needs at least one dataset")


@dataclass(frozen=True)
class OverheadReport:
    per_component: dict
    total_ms: float
    reference_ratios: dict
    iterations: int
    warmup: int

    def as_dict(self) -> dict:
        return {"kind": "bench", "per_component": dict(self.per_component),
                "total_ms": self.total_ms,
                "reference_ratios": dict(self.reference_ratios),
                "iterations": self.iterations, "warmup": self.warmup}


def _load(name: str) -> Dataset:
    try:
        return load_fixture(name)
    except NotFoundError as exc:
        raise ConfigError(f"dataset {name!r} is not available: {exc}") from exc


def canonical_run(dataset: Dataset) -> tuple[RunManifest, list[DecisionRecord]]:
    """The committed example run: a clean log with its logged metrics."""
    artifacts = {name: ArtifactFact(name, value, "metric_log")
                 for name, value in RUN_ARTIFACTS.items()}
    manifest = dataset_manifest(dataset, run_id=f"run_{dataset.name}_001",
                                artifacts=artifacts)
    return manifest, build_clean_run(manifest)


def build_corpus(dataset: Dataset, inject_seed: int = 1000,
                 mix: dict | None = None) -> tuple[LabeledCorpus, RunManifest]:
    """25-decision labeled corpus for one dataset (15 faulty, 2 decoys)."""
    manifest = dataset_manifest(dataset)
    has_dt = any(f.kind == "datetime" for f in manifest.feature_schema)
    class_mix = mix or default_class_mix(has_dt)
    plan = InjectionPlan(dataset_id=dataset.name, n_clean=10, n_faulty=15,
                         class_mix=class_mix, seed=inject_seed)
    clean = build_clean_run(manifest)
    return inject(clean, plan, manifest), manifest


def _finding_dict(finding: AuditFinding) -> dict:
    return {"decision_id": finding.decision_id, "flagged": finding.flagged,
            "predicted_class": finding.predicted_class,
            "scores": finding.scores.as_dict()}


def _detection_entry(report: DetectionReport, n: int, n_faulty: int) -> dict:
    entry = report.as_dict()
    entry["n"] = n
    entry["n_faulty"] = n_faulty
    return entry


def _exp1_audit(spec: ExperimentSpec, seed: int,
                corpora: list) -> tuple[list[dict], DetectionReport]:
    cfg = AssessorConfig(
        risk_threshold=float(spec.config.get("threshold", 60.0)),
        noise_sigma=float(spec.config.get("sigma", 4.0)), seed=seed)
    rows = []
    merged = None
    for name, corpus, manifest in corpora:
        _, report = audit_corpus(corpus, manifest, cfg)
        entry = _detection_entry(report, len(corpus.records),
                                 sum(1 for lb in corpus.labels.values() if lb.is_faulty))
        entry["dataset"] = name
        rows.append(entry)
        merged = report if merged is None else merged.merged(report)
    return rows, merged


def _exp1_corpora(spec: ExperimentSpec) -> list:
    inject_seed = int(spec.config.get("inject_seed", 1000))
    out = []
    for name in spec.datasets:
        corpus, manifest = build_corpus(_load(name), inject_seed=inject_seed)
        out.append((name, corpus, manifest))
    return out


def run_exp1(spec: ExperimentSpec) -> dict:
    seed = spec.seeds[0]
    corpora = _exp1_corpora(spec)
    rows, merged = _exp1_audit(spec, seed, corpora)
    return {"experiment": "exp1", "seed": seed,
            "sigma": float(spec.config.get("sigma", 4.0)),
            "threshold": float(spec.config.get("threshold", 60.0)),
            "per_dataset": rows,
            "overall": _detection_entry(merged, sum(r["n"] for r in rows),
                                        sum(r["n_faulty"] for r in rows))}


def run_exp2(spec: ExperimentSpec) -> dict:
    dataset = _load(spec.config.get("dataset", "german_credit"))
    manifest, log = canonical_run(dataset)
    n_per_cat = int(spec.config.get("n_per_category", 12))
    snippet_seed = int(spec.config.get("snippet_seed", 0))
    snippets = generate_snippet_set(manifest, log, seed=snippet_seed,
                                    n_per_category=n_per_cat)
    report = run_validation_suite(snippets, manifest, log,
                                  judge_seed=spec.seeds[0])
    doc = report.as_dict()
    doc.update({"experiment": "exp2", "seed": spec.seeds[0],
                "snippet_seed": snippet_seed, "dataset": dataset.name})
    return doc


def run_exp3(spec: ExperimentSpec) -> dict:
    model = spec.config.get("model", "auto")
    measure_eff = bool(spec.config.get("measure_efficiency", False))
    rows = []
    for name in spec.datasets:
        report = assess_model(_load(name), model=model, seed=spec.seeds[0],
                              measure_efficiency=measure_eff)
        rows.append(report.as_dict())
    return {"experiment": "exp3", "seed": spec.seeds[0], "model": model,
            "per_dataset": rows}


def run_exp4(spec: ExperimentSpec) -> dict:
    mode = spec.config.get("mode", "simulate")
    seed = spec.seeds[0]
    if mode == "simulate":
        results = simulate_impacts(
            stage_params=spec.config.get("stage_params"),
            n=int(spec.config.get("n_per_stage", 15)), seed=seed,
            datasets=tuple(spec.datasets))
    elif mode == "reexec":
        results = []
        for name in spec.datasets:
            results.extend(run_counterfactuals(_load(name), seed=seed))
    else:
        raise ConfigError(f"unknown counterfactual mode: {mode!r}")
    report = attribute(results)
    return {"experiment": "exp4", "mode": mode, "seed": seed,
            "n_results": len(results),
            "results": [r.as_dict() for r in results],
            "attribution": report.as_dict(),
            "ranking": stage_ranking(results)}


_RUNNERS = {"exp1": run_exp1, "exp2": run_exp2, "exp3": run_exp3, "exp4": run_exp4}


def run_experiment(spec: ExperimentSpec) -> dict:
    return _RUNNERS[spec.id](spec)


def multi_seed(spec: ExperimentSpec, n_seeds: int = 500) -> dict:
    """Re-run an experiment across seeds and summarize its headline metrics."""
    if n_seeds < 2:
        raise ConfigError("multi_seed needs n_seeds >= 2")
    base = spec.seeds[0]
    seeds = [base + i for i in range(n_seeds)]
    doc = {"experiment": spec.id, "mode": "multi_seed", "n_seeds": n_seeds,
           "base_seed": base}
    if spec.id == "exp1":
        corpora = _exp1_corpora(spec)
        per_metric = {"precision": [], "recall": [], "f1": []}
        for seed in seeds:
            _, merged = _exp1_audit(spec, seed, corpora)
            per_metric["precision"].append(merged.precision)
            per_metric["recall"].append(merged.recall)
            per_metric["f1"].append(merged.f1)
        doc["metrics"] = {k: summarize(v).as_dict() for k, v in per_metric.items()}
        reference = float(spec.config.get("reference_f1", 0.919))
        doc["fraction_at_or_above"] = {
            "metric": "f1", "reference": reference,
            "fraction": frac_at_or_above(per_metric["f1"], reference)}
        return doc
    if spec.id == "exp4":
        n_per_stage = int(spec.config.get("n_per_stage", 15))
        stage_params = spec.config.get("stage_params")
        per_stage_means = {s: [] for s in DECISION_STAGES}
        stable = 0
        for seed in seeds:
            results = simulate_impacts(stage_params=stage_params, n=n_per_stage,
                                       seed=seed, datasets=tuple(spec.datasets))
            report = attribute(results)
            for s in DECISION_STAGES:
                per_stage_means[s].append(report.per_stage[s]["avg_abs_impact"])
            if stage_ranking(results) == CANONICAL_RANKING:
                stable += 1
        doc["metrics"] = {f"avg_abs_impact:{s}": summarize(v).as_dict()
                          for s, v in per_stage_means.items()}
        doc["ranking_stable_fraction"] = stable / n_seeds
        doc["ranking_stable_count"] = stable
        return doc
    raise ConfigError(f"multi_seed supports exp1 and exp4, not {spec.id!r}")


def _bench_callables(seed: int = 0) -> dict:
    """Build component workloads; all fixture I/O happens here, untimed."""
    datasets = {name: _load(name) for name in
                ("german_credit", "adult", "titanic", "diabetes", "ca_housing")}
    corpora = [build_corpus(ds) for ds in datasets.values()]
    cfg = AssessorConfig(noise_sigma=4.0, seed=seed)
    gc = datasets["german_credit"]
    manifest, log = canonical_run(gc)
    snippets = generate_snippet_set(manifest, log, seed=seed)
    names = tuple(datasets)
    return {
        "decision_assessor": lambda: [audit_corpus(c, m, cfg) for c, m in corpora],
        "reasoning_validator": lambda: run_validation_suite(
            snippets, manifest, log, judge_seed=seed),
        "quality_assessor": lambda: assess_model(gc, model="gbt", seed=seed,
                                                 measure_efficiency=True),
        "counterfactual": lambda: attribute(simulate_impacts(seed=seed,
                                                             datasets=names)),
    }


def reference_ratios(total_ms: float,
                     budgets_s: tuple = REFERENCE_BUDGETS_S) -> dict:
    return {f"{b}s": total_ms / (b * 1000.0) * 100.0 for b in budgets_s}


def _time_component(fn, iterations: int, warmup: int) -> tuple[float, tuple]:
    for _ in range(warmup):
        fn()
    factor = 1
    while True:
        times = []
        for _ in range(iterations):
            t0 = time.perf_counter()
            for _ in range(factor):
                fn()
            times.append(time.perf_counter() - t0)
        median = sorted(times)[len(times) // 2]
        if median >= 1e-3 or factor >= 64:
            break
        factor *= 4
    tags = ("amplified",) if factor > 1 else ()
    return (median / factor) * 1000.0, tags


def bench_overhead(components: list[str] | None = None, iterations: int = 10,
                   warmup: int = 3, preset: str = "full",
                   seed: int = 0) -> OverheadReport:
    if components is None:
        components = list(BENCH_PRESETS.get(preset, BENCH_COMPONENTS))
    callables = _bench_callables(seed)
    unknown = [c for c in components if c not in callables]
    if unknown:
        raise ConfigError(f"unknown bench components: {', '.join(unknown)}")
    medians = {}
    tags = {}
    for name in components:
        medians[name], tags[name] = _time_component(callables[name],
                                                    iterations, warmup)
    total = sum(medians.values())
    per_component = {
        name: {"median_ms": medians[name],
               "share_pct": medians[name] / total * 100.0 if total > 0 else 0.0,
               "tags": list(tags[name])}
        for name in components}
    return OverheadReport(per_component=per_component, total_ms=total,
                          reference_ratios=reference_ratios(total),
                          iterations=iterations, warmup=warmup)


def check_bands(doc: dict) -> list[str]:
    """Acceptance-band checks for CI; returns human-readable failures."""
    failures = []
    if doc.get("mode") == "multi_seed" and doc.get("experiment") == "exp1":
        f1 = doc["metrics"]["f1"]
        if not 0.872 <= f1["mean"] <= 0.918:
            failures.append(f"mean F1 {f1['mean']:.4f} outside [0.872, 0.918]")
        width = f1["pct_97_5"] - f1["pct_2_5"]
        if width > 0.12:
            failures.append(f"F1 percentile width {width:.4f} exceeds 0.12")
    if doc.get("mode") == "multi_seed" and doc.get("experiment") == "exp4":
        frac = doc["ranking_stable_fraction"]
        if frac < 499 / 500:
            failures.append(f"ranking stability {frac:.4f} below 499/500")
    if doc.get("experiment") == "exp4" and doc.get("mode") == "simulate":
        if doc["ranking"] != CANONICAL_RANKING:
            failures.append(f"stage ranking {doc['ranking']} is not canonical")
    if doc.get("kind") == "bench":
        quality = doc["per_component"].get("quality_assessor")
        if quality is not None and quality["share_pct"] < 90.0:
            failures.append(
                f"quality assessor share {quality['share_pct']:.1f}% below 90%")
    return failures


def run_suite(preset: str = "full", seeds: tuple = (0,), config: dict | None = None,
              out_dir: str | Path | None = None, fmt: str = "json") -> dict:
    """Run the preset's experiments; optionally write one report per id."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset: {preset!r}")
    docs = {}
    for exp_id in PRESETS[preset]:
        spec = ExperimentSpec(id=exp_id, seeds=tuple(seeds),
                              config=dict(config or {}))
        docs[exp_id] = run_experiment(spec)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        ext = "json" if fmt == "json" else "md"
        for exp_id, doc in docs.items():
            (out / f"{exp_id}.{ext}").write_bytes(emit_report(doc, fmt))
    return docs


__all__ = [
    "ExperimentSpec", "OverheadReport", "run_experiment", "multi_seed",
    "two_proportion_z", "wilson_interval", "bench_overhead", "reference_ratios",
    "emit_report", "run_suite", "check_bands", "build_corpus", "canonical_run",
    "StatsSummary", "PRESETS", "BENCH_PRESETS", "EXPERIMENT_IDS",
]
