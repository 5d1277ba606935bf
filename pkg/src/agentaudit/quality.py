"""Model-quality assessment: task metrics, fairness, calibration,
robustness under controlled perturbations, and inference throughput.

Sign conventions, fixed so degradation tables read the same way for both
tasks: classification degradation = (base - perturbed) / base * 100 on the
primary metric; regression degradation = (perturbed_rmse - base_rmse) /
base_rmse * 100. Positive always means the perturbation hurt.

Noise scale: a level L perturbation adds N(0, (L * train_std(feature))^2)
per numeric feature. The level multiplies the per-feature train standard
deviation; absolute degradations therefore depend on this convention.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from hashlib import blake2b

import numpy as np

from .datasets import Dataset
from .errors import SpecError
from .learners import ExternalPredictor, fit_reference

NOISE_LEVELS = (0.01, 0.05, 0.10)
MISSING_LEVELS = (0.10, 0.20, 0.30)


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str          # gaussian_noise | missingness
    level: float       # fraction in [0, 1]
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian_noise", "missingness"):
            raise SpecError(f"unknown perturbation kind: {self.kind!r}")
        if not 0.0 <= self.level <= 1.0:
            raise SpecError(f"perturbation level must be in [0, 1], got {self.level}")

    @property
    def key(self) -> str:
        return f"{self.kind}:{self.level:g}"


@dataclass(frozen=True)
class QualityReport:
    dataset_id: str
    model_kind: str
    task: dict
    robustness: dict
    fairness: dict | None
    calibration: dict | None
    efficiency: float | None
    warnings: tuple = ()

    def as_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "model_kind": self.model_kind,
            "task": dict(self.task),
            "robustness": dict(self.robustness),
            "fairness": dict(self.fairness) if self.fairness is not None else None,
            "calibration": dict(self.calibration) if self.calibration is not None else None,
            "efficiency": self.efficiency,
            "warnings": list(self.warnings),
        }


def _cell_seed(seed: int, kind: str, level: float) -> int:
    digest = blake2b(f"{seed}:{kind}:{level:g}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def default_grid(seed: int = 0) -> list[PerturbationSpec]:
    grid = []
    for level in NOISE_LEVELS:
        grid.append(PerturbationSpec("gaussian_noise", level,
                                     _cell_seed(seed, "gaussian_noise", level)))
    for level in MISSING_LEVELS:
        grid.append(PerturbationSpec("missingness", level,
                                     _cell_seed(seed, "missingness", level)))
    return grid


def task_metrics(predictor, dataset: Dataset, tags: list | None = None) -> dict:
    """Primary task metrics on the held-out test split."""
    scores = predictor.scores(dataset, dataset.test_idx)
    y = dataset.y_test
    if dataset.task_kind == "classification":
        pred = (scores >= 0.5).astype(float)
        out = {"accuracy": float(np.mean(pred == y)), "f1": _f1(pred, y)}
        auc = _auc(scores, y)
        if auc is None:
            if tags is not None:
                tags.append("auc_undefined")
        else:
            out["auc"] = auc
        return out
    err = scores - y
    rmse = float(np.sqrt(np.mean(err ** 2)))
    mae = float(np.mean(np.abs(err)))
    ss_res = float(np.sum(err ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return {"rmse": rmse, "mae": mae, "r2": r2}


def _f1(pred: np.ndarray, y: np.ndarray) -> float:
    tp = float(np.sum((pred == 1.0) & (y == 1.0)))
    fp = float(np.sum((pred == 1.0) & (y == 0.0)))
    fn = float(np.sum((pred == 0.0) & (y == 1.0)))
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom > 0 else 0.0


def _auc(scores: np.ndarray, y: np.ndarray) -> float | None:
    """Rank-based AUC with tie averaging (Mann-Whitney)."""
    n_pos = int(np.sum(y == 1.0))
    n_neg = int(np.sum(y == 0.0))
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=float)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    rank_sum = float(np.sum(ranks[y == 1.0]))
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def fairness_metrics(predictor, dataset: Dataset, attr: str,
                     tags: list | None = None) -> tuple[float, float]:
    """Demographic parity and equalized odds as max pairwise disparities."""
    if dataset.task_kind != "classification":
        raise SpecError("fairness metrics require a classification task")
    kinds = dataset.feature_kinds()
    if attr not in kinds:
        raise SpecError(f"unknown attribute: {attr!r}")
    scores = predictor.scores(dataset, dataset.test_idx)
    pred = (scores >= 0.5).astype(float)
    y = dataset.y_test
    # normalize group values to strings so numeric-coded attributes compare
    # the same way categorical ones do
    groups = np.asarray([str(g) for g in dataset.col(attr, dataset.test_idx)])
    names = [str(g) for g in np.unique(groups)]
    if len(names) < 2:
        raise SpecError(f"attribute {attr!r} has fewer than 2 groups in test")

    pos_rate = {}
    cond_rate = {}
    for g in names:
        mask = groups == g
        pos_rate[g] = float(np.mean(pred[mask]))
        for label in (0.0, 1.0):
            cell = mask & (y == label)
            if cell.any():
                cond_rate[(g, label)] = float(np.mean(pred[cell]))

    dp = 0.0
    eo = 0.0
    skipped = False
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            dp = max(dp, abs(pos_rate[a] - pos_rate[b]))
            for label in (0.0, 1.0):
                if (a, label) in cond_rate and (b, label) in cond_rate:
                    eo = max(eo, abs(cond_rate[(a, label)] - cond_rate[(b, label)]))
                else:
                    skipped = True
    if skipped and tags is not None:
        tags.append(f"eo_cell_empty:{attr}")
    return dp, eo


def calibration(predictor, dataset: Dataset, n_bins: int = 10) -> tuple[float, list]:
    """ECE over equal-width bins of max-class confidence.

    Returns (ece, bins) with one (confidence_mean, accuracy, count) triple
    per occupied bin; empty bins contribute zero and are omitted.
    """
    if dataset.task_kind != "classification":
        raise SpecError("calibration requires a classification task")
    scores = predictor.scores(dataset, dataset.test_idx)
    y = dataset.y_test
    pred = (scores >= 0.5).astype(float)
    conf = np.maximum(scores, 1.0 - scores)
    correct = (pred == y).astype(float)
    n = scores.size
    bins = []
    ece = 0.0
    for b in range(n_bins):
        lo = b / n_bins
        hi = (b + 1) / n_bins
        mask = (conf >= lo) & (conf < hi) if b < n_bins - 1 else (conf >= lo) & (conf <= hi)
        count = int(np.sum(mask))
        if count == 0:
            continue
        conf_mean = float(np.mean(conf[mask]))
        acc = float(np.mean(correct[mask]))
        bins.append((conf_mean, acc, count))
        ece += (count / n) * abs(acc - conf_mean)
    return ece, bins


def perturb(dataset: Dataset, spec: PerturbationSpec) -> Dataset:
    """Apply one perturbation to the test split; train rows never change."""
    numeric = [f.name for f in dataset.schema if f.kind == "numeric"]
    if spec.kind == "gaussian_noise" and not numeric:
        raise SpecError("gaussian_noise needs at least one numeric feature")
    columns = {name: col.copy() for name, col in dataset.columns.items()}
    if spec.level == 0.0:
        return dataset.copy_with_columns(columns)

    rng = np.random.default_rng(spec.seed)
    test = dataset.test_idx
    if spec.kind == "gaussian_noise":
        for name in numeric:
            train_col = dataset.col(name, dataset.train_idx)
            finite = train_col[np.isfinite(train_col)]
            std = float(np.std(finite)) if finite.size else 0.0
            noise = rng.normal(0.0, spec.level * std, size=test.size)
            columns[name][test] = columns[name][test] + noise
        return dataset.copy_with_columns(columns)

    # missingness: drop cells MCAR across every feature column of the test
    # split, then impute from train-fit statistics (mean / mode)
    for f in dataset.schema:
        mask = rng.random(test.size) < spec.level
        if not mask.any():
            continue
        if f.kind == "numeric":
            train_col = dataset.col(f.name, dataset.train_idx)
            finite = train_col[np.isfinite(train_col)]
            fill = float(np.mean(finite)) if finite.size else 0.0
            col = columns[f.name]
            col[test[mask]] = fill
        else:
            train_col = dataset.col(f.name, dataset.train_idx)
            values, counts = np.unique(train_col, return_counts=True)
            fill = values[int(np.argmax(counts))]
            col = columns[f.name]
            col[test[mask]] = fill
    return dataset.copy_with_columns(columns)


def _primary_value(metrics: dict, dataset: Dataset) -> float:
    if dataset.task_kind == "regression":
        return metrics["rmse"]
    name = dataset.metric_primary if dataset.metric_primary in metrics else "accuracy"
    return metrics[name]


def degradation_pct(base: float, perturbed: float, task_kind: str) -> float:
    if task_kind == "classification":
        return (base - perturbed) / base * 100.0 if base != 0 else 0.0
    return (perturbed - base) / base * 100.0 if base != 0 else 0.0


def robustness_suite(predictor, dataset: Dataset,
                     grid: list[PerturbationSpec] | None = None) -> dict[str, float]:
    """Degradation of the primary metric per grid cell, keyed kind:level."""
    if grid is None:
        grid = default_grid()
    base = _primary_value(task_metrics(predictor, dataset), dataset)
    out = {}
    for spec in grid:
        shaken = perturb(dataset, spec)
        value = _primary_value(task_metrics(predictor, shaken), dataset)
        out[spec.key] = degradation_pct(base, value, dataset.task_kind)
    return out


def efficiency(predictor, dataset: Dataset, repeats: int = 5,
               tags: list | None = None) -> float:
    """Median full-test-batch throughput in samples/second."""
    idx = dataset.test_idx
    factor = 1
    predictor.scores(dataset, idx)  # warm-up
    while True:
        batch = np.tile(idx, factor)
        times = []
        for _ in range(max(2, repeats)):
            t0 = time.perf_counter()
            predictor.scores(dataset, batch)
            times.append(time.perf_counter() - t0)
        median = sorted(times)[len(times) // 2]
        if median >= 1e-3 or factor >= 64:
            break
        factor *= 4
    if factor > 1 and tags is not None:
        tags.append("amplified")
    return (idx.size * factor) / median if median > 0 else float("inf")


def assess_model(dataset: Dataset, model: str = "auto", grid="default",
                 seed: int = 0, repeats: int = 5, measure_efficiency: bool = True,
                 external_cmd: list[str] | None = None) -> QualityReport:
    """Full quality pass: fit (or attach) a model, then measure everything."""
    warnings: list = []
    if external_cmd:
        predictor = ExternalPredictor(external_cmd, dataset.task_kind)
        kind = "external"
    else:
        kind = model
        if kind == "auto":
            kind = "logistic" if dataset.task_kind == "classification" else "ridge"
        predictor = fit_reference(dataset, kind, seed=seed)

    task = task_metrics(predictor, dataset, tags=warnings)
    if grid == "default":
        grid_specs = default_grid(seed)
    elif grid is None:
        grid_specs = []
    else:
        grid_specs = list(grid)
    robustness = robustness_suite(predictor, dataset, grid_specs) if grid_specs else {}

    fairness = None
    calib = None
    if dataset.task_kind == "classification":
        fairness = {}
        for attr in dataset.protected_attrs:
            dp, eo = fairness_metrics(predictor, dataset, attr, tags=warnings)
            fairness[f"{attr}:DP"] = dp
            fairness[f"{attr}:EO"] = eo
        ece, bins = calibration(predictor, dataset)
        calib = {"ece": ece, "reliability_bins": [list(b) for b in bins]}

    thr = efficiency(predictor, dataset, repeats=repeats, tags=warnings) \
        if measure_efficiency else None
    return QualityReport(dataset_id=dataset.name, model_kind=kind, task=task,
                         robustness=robustness, fairness=fairness, calibration=calib,
                         efficiency=thr, warnings=tuple(warnings))
