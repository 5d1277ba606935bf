"""Reference learners and design-matrix construction.

Small deterministic models (logistic regression, ridge, boosted stumps)
stand in for a full AutoML system so model-quality checks run offline.
All fitted statistics (imputation values, scaler parameters, encoder
categories, fold-wise target means) come from train rows only.
"""

from __future__ import annotations

import json
import math
import subprocess
from dataclasses import dataclass, field

import numpy as np

from .datasets import Dataset
from .errors import FitError, ParseError

MODEL_KINDS = ("logistic", "ridge", "gbt")


@dataclass(frozen=True)
class DesignConfig:
    """How raw columns become a numeric matrix.

    encoder: "one_hot" or "target_encode_cv" for categorical features.
    select_top_k: keep the k train-correlation-strongest columns, or None.
    poly_degree: append powers 2..degree of numeric columns, or None.
    """

    impute: str = "mean"            # mean | median
    scaler: str = "standard"        # standard | minmax | none
    encoder: str = "one_hot"
    cv_folds: int = 5
    select_top_k: int | None = None
    poly_degree: int | None = None
    seed: int = 0


class DesignState:
    """Train-fitted column transforms; apply to any row subset."""

    def __init__(self, dataset: Dataset, config: DesignConfig | None = None):
        self.config = config or DesignConfig()
        self.numeric = [f.name for f in dataset.schema if f.kind == "numeric"]
        self.categorical = [f.name for f in dataset.schema if f.kind == "categorical"]
        # datetime columns carry no model signal here and are dropped
        self._fit(dataset)

    def _fit(self, ds: Dataset) -> None:
        cfg = self.config
        tr = ds.train_idx
        self.impute_vals: dict[str, float] = {}
        self.scale: dict[str, tuple[float, float]] = {}
        for name in self.numeric:
            col = ds.col(name, tr)
            finite = col[np.isfinite(col)]
            if finite.size == 0:
                fill = 0.0
            elif cfg.impute == "median":
                fill = float(np.median(finite))
            else:
                fill = float(np.mean(finite))
            self.impute_vals[name] = fill
            filled = np.where(np.isfinite(col), col, fill)
            if cfg.scaler == "standard":
                mu = float(np.mean(filled))
                sd = float(np.std(filled))
                self.scale[name] = (mu, sd if sd > 0 else 1.0)
            elif cfg.scaler == "minmax":
                lo = float(np.min(filled))
                span = float(np.max(filled)) - lo
                self.scale[name] = (lo, span if span > 0 else 1.0)
            else:
                self.scale[name] = (0.0, 1.0)

        self.categories: dict[str, list[str]] = {}
        self.cat_mode: dict[str, str] = {}
        for name in self.categorical:
            col = ds.col(name, tr)
            values, counts = np.unique(col, return_counts=True)
            self.categories[name] = [str(v) for v in values]
            self.cat_mode[name] = str(values[int(np.argmax(counts))])

        self.te_full: dict[str, dict[str, float]] = {}
        self.te_train: dict[str, np.ndarray] = {}
        self.te_prior = float(np.mean(ds.y_train)) if tr.size else 0.0
        if cfg.encoder == "target_encode_cv" and self.categorical:
            self._fit_target_encoding(ds)

        self.feature_names = self._names_base()
        self.keep: np.ndarray | None = None
        if cfg.select_top_k is not None:
            base = self._transform_base(ds, tr, train_rows=True)
            k = max(1, min(int(cfg.select_top_k), base.shape[1]))
            y = ds.y_train
            yc = y - y.mean()
            scores = np.zeros(base.shape[1])
            for j in range(base.shape[1]):
                xc = base[:, j] - base[:, j].mean()
                denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
                scores[j] = abs(float(xc @ yc)) / denom if denom > 0 else 0.0
            order = np.argsort(-scores, kind="stable")
            self.keep = np.sort(order[:k])
            self.feature_names = [self.feature_names[j] for j in self.keep]
        if cfg.poly_degree is not None and cfg.poly_degree >= 2:
            extra = []
            for d in range(2, int(cfg.poly_degree) + 1):
                extra += [f"{n}^{d}" for n in self.numeric]
            self.feature_names = self.feature_names + extra

    def _fit_target_encoding(self, ds: Dataset) -> None:
        cfg = self.config
        tr = ds.train_idx
        y = ds.y_train
        n = tr.size
        rng = np.random.default_rng(cfg.seed)
        folds = max(2, int(cfg.cv_folds))
        assign = rng.permutation(n) % folds
        for name in self.categorical:
            col = ds.col(name, tr)
            full = {}
            for cat in self.categories[name]:
                mask = col == cat
                full[cat] = float(np.mean(y[mask])) if mask.any() else self.te_prior
            self.te_full[name] = full
            enc = np.full(n, self.te_prior)
            for f in range(folds):
                inf = assign == f
                outf = ~inf
                if not outf.any():
                    continue
                prior = float(np.mean(y[outf]))
                for cat in self.categories[name]:
                    mask = inf & (col == cat)
                    if not mask.any():
                        continue
                    omask = outf & (col == cat)
                    enc[mask] = float(np.mean(y[omask])) if omask.any() else prior
            self.te_train[name] = enc

    def _names_base(self) -> list[str]:
        names = list(self.numeric)
        for cname in self.categorical:
            if self.config.encoder == "target_encode_cv":
                names.append(f"{cname}~te")
            else:
                names += [f"{cname}={cat}" for cat in self.categories[cname]]
        return names

    def _transform_base(self, ds: Dataset, idx: np.ndarray, train_rows: bool) -> np.ndarray:
        blocks = []
        for name in self.numeric:
            col = ds.col(name, idx)
            filled = np.where(np.isfinite(col), col, self.impute_vals[name])
            off, span = self.scale[name]
            blocks.append(((filled - off) / span)[:, None])
        for name in self.categorical:
            col = ds.col(name, idx)
            if self.config.encoder == "target_encode_cv":
                if train_rows:
                    enc = self.te_train[name][:, None]
                else:
                    full = self.te_full[name]
                    enc = np.array([full.get(str(v), self.te_prior) for v in col])[:, None]
                blocks.append(enc)
            else:
                cats = self.categories[name]
                onehot = np.zeros((idx.size, len(cats)))
                for j, cat in enumerate(cats):
                    onehot[:, j] = col == cat
                blocks.append(onehot)
        if not blocks:
            return np.zeros((idx.size, 0))
        return np.hstack(blocks)

    def matrix(self, ds: Dataset, idx: np.ndarray, train_rows: bool = False) -> np.ndarray:
        out = self._transform_base(ds, idx, train_rows)
        if self.keep is not None:
            out = out[:, self.keep]
        deg = self.config.poly_degree
        if deg is not None and deg >= 2:
            raw = []
            for name in self.numeric:
                col = ds.col(name, idx)
                filled = np.where(np.isfinite(col), col, self.impute_vals[name])
                off, span = self.scale[name]
                raw.append((filled - off) / span)
            for d in range(2, int(deg) + 1):
                for base in raw:
                    out = np.hstack([out, (base ** d)[:, None]])
        return out


class LogisticModel:
    """L2 logistic regression, full-batch gradient descent from zeros."""

    def __init__(self, l2: float = 1.0, lr: float = 0.5, iters: int = 300):
        self.l2 = float(l2)
        self.lr = lr
        self.iters = iters
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LogisticModel":
        n, d = x.shape
        w = np.zeros(d)
        b = 0.0
        for _ in range(self.iters):
            z = x @ w + b
            p = 1.0 / (1.0 + np.exp(-np.clip(z, -35, 35)))
            err = p - y
            gw = x.T @ err / n + (self.l2 / n) * w
            gb = float(np.mean(err))
            w -= self.lr * gw
            b -= self.lr * gb
        self.w, self.b = w, b
        return self

    def scores(self, x: np.ndarray) -> np.ndarray:
        z = x @ self.w + self.b
        return 1.0 / (1.0 + np.exp(-np.clip(z, -35, 35)))


class RidgeModel:
    """Closed-form ridge; the intercept is not penalized."""

    def __init__(self, alpha: float = 1.0):
        self.alpha = float(alpha)
        self.w: np.ndarray | None = None
        self.b = 0.0

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RidgeModel":
        xm = x.mean(axis=0)
        ym = float(y.mean())
        xc = x - xm
        yc = y - ym
        d = x.shape[1]
        if d == 0:
            self.w = np.zeros(0)
            self.b = ym
            return self
        a = xc.T @ xc + self.alpha * np.eye(d)
        self.w = np.linalg.solve(a, xc.T @ yc)
        self.b = ym - float(xm @ self.w)
        return self

    def scores(self, x: np.ndarray) -> np.ndarray:
        return x @ self.w + self.b


@dataclass(frozen=True)
class _Stump:
    feature: int
    threshold: float
    left: float
    right: float


class GBTStumps:
    """Gradient-boosted depth-1 trees under squared loss.

    Works for both tasks; classification scores are clipped to [0, 1].
    Stump search scans sorted prefix sums per feature, so fitting is
    O(rounds * d * n log n) and fully deterministic.
    """

    def __init__(self, n_rounds: int = 80, learning_rate: float = 0.3,
                 classification: bool = False):
        self.n_rounds = int(n_rounds)
        self.learning_rate = learning_rate
        self.classification = classification
        self.base = 0.0
        self.stumps: list[_Stump] = []

    def _best_stump(self, x: np.ndarray, resid: np.ndarray) -> _Stump | None:
        n, d = x.shape
        total = float(resid.sum())
        best = None
        best_gain = 1e-12
        for j in range(d):
            order = np.argsort(x[:, j], kind="stable")
            xs = x[order, j]
            rs = resid[order]
            prefix = np.cumsum(rs)
            for k in range(1, n):
                if xs[k] == xs[k - 1]:
                    continue
                left_sum = float(prefix[k - 1])
                lm = left_sum / k
                rm = (total - left_sum) / (n - k)
                gain = k * lm * lm + (n - k) * rm * rm
                if gain > best_gain:
                    best_gain = gain
                    thr = 0.5 * (float(xs[k]) + float(xs[k - 1]))
                    best = _Stump(j, thr, lm, rm)
        return best

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GBTStumps":
        self.base = float(y.mean())
        pred = np.full(y.shape, self.base)
        self.stumps = []
        for _ in range(self.n_rounds):
            resid = y - pred
            stump = self._best_stump(x, resid)
            if stump is None:
                break
            self.stumps.append(stump)
            step = np.where(x[:, stump.feature] <= stump.threshold,
                            stump.left, stump.right)
            pred = pred + self.learning_rate * step
        return self

    def scores(self, x: np.ndarray) -> np.ndarray:
        pred = np.full(x.shape[0], self.base)
        for s in self.stumps:
            step = np.where(x[:, s.feature] <= s.threshold, s.left, s.right)
            pred = pred + self.learning_rate * step
        if self.classification:
            pred = np.clip(pred, 0.0, 1.0)
        return pred


@dataclass
class Predictor:
    """Fitted design + model pair exposed as score(dataset rows)."""

    design: DesignState
    model: object
    task_kind: str
    kind: str
    tags: tuple = field(default=())

    def scores(self, ds: Dataset, idx: np.ndarray, train_rows: bool = False) -> np.ndarray:
        x = self.design.matrix(ds, idx, train_rows=train_rows)
        return np.asarray(self.model.scores(x), dtype=float)


def fit_reference(dataset: Dataset, kind: str, seed: int = 0,
                  config: DesignConfig | None = None,
                  params: dict | None = None,
                  design: DesignState | None = None) -> Predictor:
    """Fit a reference learner; encoders and scalers see train rows only.

    Pass a prefitted `design` to reuse an upstream transform artifact;
    otherwise one is fitted from `config`.
    """
    if kind not in MODEL_KINDS:
        raise FitError(f"unknown model kind: {kind!r}")
    task = dataset.task_kind
    if kind == "logistic" and task != "classification":
        raise FitError("logistic requires a classification task")
    if kind == "ridge" and task != "regression":
        raise FitError("ridge requires a regression task")
    y = dataset.y_train
    if task == "classification":
        if np.unique(y).size < 2:
            raise FitError("degenerate target: single class in train split")
    elif float(np.std(y)) == 0.0:
        raise FitError("degenerate target: zero variance in train split")

    if design is None:
        cfg = config or DesignConfig(seed=seed)
        design = DesignState(dataset, cfg)
    x = design.matrix(dataset, dataset.train_idx, train_rows=True)
    if x.shape[1] == 0:
        raise FitError("empty design matrix: no usable features")
    p = params or {}
    if kind == "logistic":
        model = LogisticModel(l2=float(p.get("l2", 1.0))).fit(x, y)
    elif kind == "ridge":
        model = RidgeModel(alpha=float(p.get("alpha", 1.0))).fit(x, y)
    else:
        model = GBTStumps(n_rounds=int(p.get("n_rounds", 80)),
                          classification=task == "classification").fit(x, y)
    return Predictor(design=design, model=model, task_kind=task, kind=kind)


def _rows_payload(ds: Dataset, idx: np.ndarray) -> list[dict]:
    rows = []
    for i in idx:
        row = {}
        for f in ds.schema:
            v = ds.columns[f.name][int(i)]
            if f.kind == "numeric":
                fv = float(v)
                row[f.name] = fv if math.isfinite(fv) else None
            else:
                row[f.name] = str(v)
        rows.append(row)
    return rows


class ExternalPredictor:
    """Adapter for an out-of-process model.

    Protocol: one JSON object per line on stdin ({"rows": [...]}) answered
    by one JSON object per line on stdout ({"scores": [...]}), UTF-8.
    """

    def __init__(self, cmd: list[str], task_kind: str):
        self.cmd = list(cmd)
        self.task_kind = task_kind
        self.kind = "external"
        self.tags: tuple = ()

    def scores(self, ds: Dataset, idx: np.ndarray, train_rows: bool = False) -> np.ndarray:
        request = json.dumps({"rows": _rows_payload(ds, idx)}) + "\n"
        proc = subprocess.run(self.cmd, input=request.encode("utf-8"),
                              capture_output=True, check=False)
        if proc.returncode != 0:
            raise ParseError(
                f"external predictor exited {proc.returncode}: "
                f"{proc.stderr.decode('utf-8', 'replace')[:200]}", offset=0)
        line = proc.stdout.decode("utf-8", "replace").strip().splitlines()
        if not line:
            raise ParseError("external predictor produced no output", offset=0)
        try:
            obj = json.loads(line[0])
        except json.JSONDecodeError as exc:
            raise ParseError(f"external predictor response is not JSON: {exc.msg}",
                             offset=exc.pos) from exc
        scores = obj.get("scores") if isinstance(obj, dict) else None
        if not isinstance(scores, list) or len(scores) != idx.size:
            raise ParseError("external predictor response missing a scores list "
                             f"of length {idx.size}", offset=0)
        try:
            return np.array([float(s) for s in scores])
        except (TypeError, ValueError) as exc:
            raise ParseError(f"non-numeric score in response: {exc}", offset=0) from exc
