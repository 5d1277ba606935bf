from __future__ import annotations

import numpy as np
import pytest

from agentaudit.datasets import dataset_manifest, load_fixture
from agentaudit.decision_log import ArtifactFact, FeatureSpec, RunManifest
from agentaudit.faults import InjectionPlan, build_clean_run, default_class_mix, inject


@pytest.fixture(scope="session")
def gc_dataset():
    return load_fixture("german_credit")


@pytest.fixture(scope="session")
def diabetes_dataset():
    return load_fixture("diabetes")


@pytest.fixture(scope="session")
def gc_manifest(gc_dataset):
    return dataset_manifest(
        gc_dataset,
        artifacts={
            "validation_accuracy": ArtifactFact("validation_accuracy", 0.741, "metric_log"),
            "baseline_accuracy": ArtifactFact("baseline_accuracy", 0.700, "metric_log"),
            "test_auc": ArtifactFact("test_auc", 0.779, "metric_log"),
        },
    )


@pytest.fixture(scope="session")
def gc_corpus(gc_manifest):
    clean = build_clean_run(gc_manifest)
    plan = InjectionPlan(
        dataset_id=gc_manifest.dataset_id, n_clean=10, n_faulty=15,
        class_mix=default_class_mix(gc_manifest.has_kind("datetime")), seed=7,
    )
    return inject(clean, plan, gc_manifest)


def small_manifest(task_kind: str = "classification", n_train: int = 800,
                   n_test: int = 200, datetime_col: bool = True) -> RunManifest:
    schema = [
        FeatureSpec("age", "numeric"),
        FeatureSpec("sex", "categorical", protected=True),
        FeatureSpec("income", "numeric"),
    ]
    if datetime_col:
        schema.append(FeatureSpec("signup_date", "datetime"))
    return RunManifest(
        run_id="run_t", dataset_id="toy", task_kind=task_kind,
        n_train=n_train, n_test=n_test, feature_schema=tuple(schema),
        metric_primary="accuracy" if task_kind == "classification" else "rmse",
    )


def toy_regression_dataset(n: int = 64, seed: int = 5):
    """Single numeric feature, linear-ish target, deterministic split."""
    from agentaudit.datasets import Dataset

    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, n)
    y = 2.0 * x + rng.normal(0.0, 0.05, n)
    idx = np.arange(n)
    return Dataset(
        name="toy_reg", columns={"x": x}, target=y,
        train_idx=idx[: n // 2], test_idx=idx[n // 2:],
        schema=(FeatureSpec("x", "numeric"),),
        task_kind="regression", metric_primary="rmse",
    )
