"""Columnar datasets: CSV loading, schema sidecars, deterministic splits.

A dataset on disk is `<name>.csv` plus `<name>.schema.json` describing
feature kinds, the target, protected attributes, and the split (either a
seed + test fraction, or explicit index lists). Numeric columns parse to
float64; categorical and datetime columns stay as strings. Classification
targets map to {0,1} via the schema's positive_label.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .decision_log import FeatureSpec, RunManifest
from .errors import NotFoundError, SchemaError

FIXTURE_NAMES = ("german_credit", "adult", "titanic", "diabetes", "ca_housing")


@dataclass
class Dataset:
    name: str
    columns: dict[str, np.ndarray]  # feature name -> full column
    target: np.ndarray  # float64; classification already mapped to {0,1}
    train_idx: np.ndarray
    test_idx: np.ndarray
    schema: tuple[FeatureSpec, ...]
    task_kind: str
    metric_primary: str
    positive_label: str | None = None

    def __post_init__(self):
        if np.intersect1d(self.train_idx, self.test_idx).size:
            raise SchemaError("train and test indices overlap", field="split")
        for f in self.schema:
            if f.name not in self.columns:
                raise SchemaError(f"schema feature {f.name!r} missing from data", field=f.name)
        if not np.all(np.isfinite(self.target)):
            raise SchemaError("target contains non-finite values", field="target")

    @property
    def n_rows(self) -> int:
        return len(self.target)

    @property
    def protected_attrs(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.schema if f.protected)

    def feature_kinds(self) -> dict[str, str]:
        return {f.name: f.kind for f in self.schema}

    def col(self, name: str, idx: np.ndarray) -> np.ndarray:
        return self.columns[name][idx]

    @property
    def y_train(self) -> np.ndarray:
        return self.target[self.train_idx]

    @property
    def y_test(self) -> np.ndarray:
        return self.target[self.test_idx]

    def copy_with_columns(self, columns: dict[str, np.ndarray]) -> "Dataset":
        return Dataset(name=self.name, columns=columns, target=self.target,
                       train_idx=self.train_idx, test_idx=self.test_idx,
                       schema=self.schema, task_kind=self.task_kind,
                       metric_primary=self.metric_primary, positive_label=self.positive_label)


def _parse_schema(obj: dict) -> tuple[list[FeatureSpec], dict]:
    feats = []
    for i, f in enumerate(obj.get("features", [])):
        kind = f.get("kind")
        if kind not in ("numeric", "categorical", "datetime"):
            raise SchemaError(f"unknown feature kind {kind!r}", field=f"features[{i}].kind")
        feats.append(FeatureSpec(name=f["name"], kind=kind, protected=bool(f.get("protected", False))))
    return feats, obj


def split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic shuffled split; indices returned sorted."""
    if not 0.0 < test_fraction < 1.0:
        raise SchemaError("test_fraction must be in (0,1)", field="split.test_fraction")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = int(round(n * test_fraction))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def load_dataset(csv_path: str | Path, schema_path: str | Path | None = None) -> Dataset:
    csv_path = Path(csv_path)
    if schema_path is None:
        schema_path = csv_path.with_name(csv_path.stem + ".schema.json")
    schema_path = Path(schema_path)
    if not csv_path.exists():
        raise NotFoundError(f"dataset file not found: {csv_path}")
    if not schema_path.exists():
        raise NotFoundError(f"schema sidecar not found: {schema_path}")
    return _load(csv_path.read_text(encoding="utf-8"),
                 json.loads(schema_path.read_text(encoding="utf-8")))


def _load(csv_text: str, schema_obj: dict) -> Dataset:
    feats, obj = _parse_schema(schema_obj)
    target_name = obj.get("target")
    if not target_name:
        raise SchemaError("schema missing target column name", field="target")
    task = obj.get("task_kind")
    if task not in ("classification", "regression"):
        raise SchemaError(f"unknown task_kind {task!r}", field="task_kind")

    reader = csv.DictReader(io.StringIO(csv_text))
    rows = list(reader)
    if not rows:
        raise SchemaError("empty dataset", field="csv")
    columns: dict[str, np.ndarray] = {}
    for f in feats:
        raw = [r.get(f.name, "") for r in rows]
        if f.kind == "numeric":
            columns[f.name] = np.array(
                [float(v) if v not in ("", "NA") else np.nan for v in raw], dtype=np.float64)
        else:
            columns[f.name] = np.array(raw, dtype=object)

    raw_target = [r.get(target_name, "") for r in rows]
    if task == "classification":
        positive = obj.get("positive_label")
        if positive is None:
            raise SchemaError("classification schema needs positive_label", field="positive_label")
        target = np.array([1.0 if v == str(positive) else 0.0 for v in raw_target])
    else:
        positive = None
        target = np.array([float(v) for v in raw_target])

    split = obj.get("split", {})
    if "train_indices" in split:
        train_idx = np.asarray(sorted(split["train_indices"]), dtype=np.int64)
        test_idx = np.asarray(sorted(split["test_indices"]), dtype=np.int64)
    else:
        train_idx, test_idx = split_indices(len(rows), float(split.get("test_fraction", 0.2)),
                                            int(split.get("seed", 0)))

    return Dataset(name=obj.get("name", "dataset"), columns=columns, target=target,
                   train_idx=train_idx, test_idx=test_idx, schema=tuple(feats),
                   task_kind=task, metric_primary=obj.get(
                       "metric_primary", "accuracy" if task == "classification" else "rmse"),
                   positive_label=str(positive) if positive is not None else None)


def data_dir() -> Path:
    """Fixture directory; EA_DATA_DIR overrides the packaged copies."""
    override = os.environ.get("EA_DATA_DIR")
    if override:
        return Path(override)
    return Path(str(resources.files("agentaudit") / "fixtures"))


def load_fixture(name: str) -> Dataset:
    if name not in FIXTURE_NAMES:
        raise NotFoundError(f"unknown dataset {name!r}; have {', '.join(FIXTURE_NAMES)}")
    base = data_dir()
    return load_dataset(base / f"{name}.csv", base / f"{name}.schema.json")


def dataset_manifest(ds: Dataset, run_id: str | None = None,
                     artifacts: dict | None = None) -> RunManifest:
    """A run manifest describing this dataset, for audit and validation wiring."""
    return RunManifest(
        run_id=run_id or f"{ds.name}-run",
        dataset_id=ds.name,
        task_kind=ds.task_kind,
        n_train=int(ds.train_idx.size),
        n_test=int(ds.test_idx.size),
        feature_schema=ds.schema,
        metric_primary=ds.metric_primary,
        artifacts=artifacts or {},
    )
