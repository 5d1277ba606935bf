"""Decision-log data model: run manifests, decision records, provenance.

A run log is a single UTF-8 JSON document with top-level keys ``manifest``
and ``decisions``. Audits are offline and whole-run, so there is no
streaming path. Timestamps are ordinals: only their ordering matters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import GraphError, NotFoundError, ParseError, SchemaError

STAGES = ("data_preprocessing", "feature_engineering", "model_selection", "hyperparameter_opt")
TASK_KINDS = ("classification", "regression")
FEATURE_KINDS = ("numeric", "categorical", "datetime")
PRIMARY_METRICS = ("accuracy", "f1", "auc", "rmse", "mae", "r2")
ARTIFACT_SOURCES = ("metric_log", "config", "code_trace")

# Controlled action vocabulary v1. Unknown actions are accepted by the parser
# and tagged `unverifiable` downstream, so real-system logs degrade gracefully.
ACTION_VOCABULARY = (
    "standard_scale", "minmax_scale", "impute_mean", "impute_median",
    "train_test_split", "shuffle_split", "time_split",
    "one_hot_encode", "target_encode", "select_top_k", "poly_features",
    "fit_logistic", "fit_ridge", "fit_gbt", "fit_deep_mlp", "set_regularization",
)

_SCALAR_TYPES = (str, int, float, bool)


@dataclass(frozen=True)
class ArtifactFact:
    """One observable fact about the run (a logged metric, a config value)."""

    name: str
    value: object  # scalar or string
    source: str  # metric_log | config | code_trace


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str  # numeric | categorical | datetime
    protected: bool = False


@dataclass(frozen=True)
class RunManifest:
    """Dataset and task facts for one AutoML run.

    Houses the values the reasoning validator checks claims against and the
    schema knowledge the assessor's signature predicates consult.
    """

    run_id: str
    dataset_id: str
    task_kind: str
    n_train: int
    n_test: int
    feature_schema: tuple[FeatureSpec, ...]
    metric_primary: str
    artifacts: dict[str, ArtifactFact] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return self.n_train + self.n_test

    @property
    def n_features(self) -> int:
        return len(self.feature_schema)

    def has_kind(self, kind: str) -> bool:
        return any(f.kind == kind for f in self.feature_schema)

    def protected_attrs(self) -> list[str]:
        return [f.name for f in self.feature_schema if f.protected]


@dataclass(frozen=True)
class DecisionRecord:
    """One logged agent decision; the unit of audit."""

    decision_id: str
    stage: str
    action: str
    params: dict[str, object] = field(default_factory=dict)
    rationale_text: str = ""
    parents: tuple[str, ...] = ()
    timestamp: int = 0

    def with_updates(self, **kw) -> "DecisionRecord":
        data = {
            "decision_id": self.decision_id, "stage": self.stage, "action": self.action,
            "params": dict(self.params), "rationale_text": self.rationale_text,
            "parents": self.parents, "timestamp": self.timestamp,
        }
        data.update(kw)
        return DecisionRecord(**data)


class ProvenanceGraph:
    """Acyclic parent->child graph over decision ids, ordered by timestamp."""

    def __init__(self, nodes: list[str], edges: list[tuple[str, str]], order: dict[str, int]):
        self.nodes = list(nodes)
        self.edges = list(edges)
        self._order = dict(order)  # id -> topological rank (timestamp rank)
        self._parents: dict[str, list[str]] = {n: [] for n in nodes}
        for parent, child in edges:
            self._parents[child].append(parent)

    def parents_of(self, node: str) -> list[str]:
        if node not in self._parents:
            raise NotFoundError(f"unknown decision_id: {node!r}")
        return list(self._parents[node])

    def rank(self, node: str) -> int:
        return self._order[node]


# ---------------------------------------------------------------------------
# Parsing and serialization
# ---------------------------------------------------------------------------

def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"missing field {where}.{key}", field=f"{where}.{key}")
    return obj[key]


def _check_scalar_params(params: dict, where: str) -> dict[str, object]:
    out = {}
    for k, v in params.items():
        if not isinstance(k, str) or (v is not None and not isinstance(v, _SCALAR_TYPES)):
            raise SchemaError(f"non-scalar param at {where}.params[{k!r}]", field=f"{where}.params")
        out[k] = v
    return out


def _parse_manifest(obj: dict) -> RunManifest:
    if not isinstance(obj, dict):
        raise SchemaError("manifest must be an object", field="manifest")
    task = _require(obj, "task_kind", "manifest")
    if task not in TASK_KINDS:
        raise SchemaError(f"unknown task_kind {task!r}", field="manifest.task_kind")
    metric = _require(obj, "metric_primary", "manifest")
    if metric not in PRIMARY_METRICS:
        raise SchemaError(f"unknown metric_primary {metric!r}", field="manifest.metric_primary")
    n_train = _require(obj, "n_train", "manifest")
    n_test = _require(obj, "n_test", "manifest")
    if not isinstance(n_train, int) or n_train <= 0:
        raise SchemaError("n_train must be a positive integer", field="manifest.n_train")
    if not isinstance(n_test, int) or n_test <= 0:
        raise SchemaError("n_test must be a positive integer", field="manifest.n_test")

    schema = []
    for i, f in enumerate(_require(obj, "feature_schema", "manifest")):
        where = f"manifest.feature_schema[{i}]"
        kind = _require(f, "kind", where)
        if kind not in FEATURE_KINDS:
            raise SchemaError(f"unknown feature kind {kind!r}", field=f"{where}.kind")
        protected = bool(f.get("protected", False))
        if protected and task != "classification":
            raise SchemaError("protected features are only valid on classification datasets",
                              field=f"{where}.protected")
        schema.append(FeatureSpec(name=str(_require(f, "name", where)), kind=kind, protected=protected))

    artifacts = {}
    for name, fact in obj.get("artifacts", {}).items():
        where = f"manifest.artifacts[{name!r}]"
        if not isinstance(fact, dict):
            raise SchemaError(f"artifact fact must be an object at {where}", field=where)
        source = fact.get("source", "metric_log")
        if source not in ARTIFACT_SOURCES:
            raise SchemaError(f"unknown artifact source {source!r}", field=f"{where}.source")
        value = fact.get("value")
        if value is not None and not isinstance(value, _SCALAR_TYPES):
            raise SchemaError(f"artifact value must be scalar at {where}", field=f"{where}.value")
        artifacts[str(name)] = ArtifactFact(name=str(name), value=value, source=source)

    return RunManifest(
        run_id=str(_require(obj, "run_id", "manifest")),
        dataset_id=str(_require(obj, "dataset_id", "manifest")),
        task_kind=task, n_train=n_train, n_test=n_test,
        feature_schema=tuple(schema), metric_primary=metric, artifacts=artifacts,
    )


def _parse_decision(obj: dict, idx: int) -> DecisionRecord:
    where = f"decisions[{idx}]"
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object", field=where)
    stage = _require(obj, "stage", where)
    if stage not in STAGES:
        raise SchemaError(f"unknown stage {stage!r}", field=f"{where}.stage")
    action = _require(obj, "action", where)
    if not isinstance(action, str) or not action:
        raise SchemaError(f"action must be a non-empty string", field=f"{where}.action")
    timestamp = obj.get("timestamp", idx)
    if not isinstance(timestamp, int):
        raise SchemaError("timestamp must be an integer ordinal", field=f"{where}.timestamp")
    parents = obj.get("parents", [])
    if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
        raise SchemaError("parents must be a list of decision ids", field=f"{where}.parents")
    return DecisionRecord(
        decision_id=str(_require(obj, "decision_id", where)),
        stage=stage, action=action,
        params=_check_scalar_params(obj.get("params", {}), where),
        rationale_text=str(obj.get("rationale_text", "")),
        parents=tuple(parents), timestamp=timestamp,
    )


def parse_run_log(data: bytes | str) -> tuple[RunManifest, list[DecisionRecord]]:
    """Parse a native JSON run log into (manifest, records ordered by timestamp).

    Raises ParseError (with byte offset) on malformed bytes, SchemaError
    naming the offending field, GraphError on provenance violations. Never
    raises anything outside the typed hierarchy, whatever the input bytes.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 at byte {exc.start}", offset=exc.start) from exc
    else:
        text = data
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise ParseError(f"malformed JSON at byte {offset}: {exc.msg}", offset=offset) from exc
    if not isinstance(doc, dict):
        raise SchemaError("log document must be a JSON object", field="<root>")

    manifest = _parse_manifest(_require(doc, "manifest", "<root>"))
    raw = _require(doc, "decisions", "<root>")
    if not isinstance(raw, list):
        raise SchemaError("decisions must be an array", field="decisions")
    records = [_parse_decision(d, i) for i, d in enumerate(raw)]

    seen: dict[str, int] = {}
    for r in records:
        if r.decision_id in seen:
            raise GraphError(f"duplicate decision_id {r.decision_id!r}")
        seen[r.decision_id] = r.timestamp
    for r in records:
        for p in r.parents:
            if p not in seen:
                raise GraphError(f"decision {r.decision_id!r} references unknown parent {p!r}")
            if seen[p] > r.timestamp:
                raise GraphError(
                    f"decision {r.decision_id!r} (t={r.timestamp}) has later parent {p!r} (t={seen[p]})")
            if p == r.decision_id:
                raise GraphError(f"cycle: {r.decision_id!r} -> {r.decision_id!r}")

    records.sort(key=lambda r: r.timestamp)  # stable: ties keep input order
    # build_provenance performs the full cycle check; run it here so parsing
    # validates every documented invariant in one pass.
    build_provenance(records)
    return manifest, records


def serialize_run_log(manifest: RunManifest, records: list[DecisionRecord]) -> bytes:
    """Inverse of parse_run_log; deterministic key order."""
    doc = {
        "manifest": {
            "run_id": manifest.run_id,
            "dataset_id": manifest.dataset_id,
            "task_kind": manifest.task_kind,
            "n_train": manifest.n_train,
            "n_test": manifest.n_test,
            "feature_schema": [
                {"name": f.name, "kind": f.kind, "protected": f.protected}
                for f in manifest.feature_schema
            ],
            "metric_primary": manifest.metric_primary,
            "artifacts": {
                name: {"value": fact.value, "source": fact.source}
                for name, fact in sorted(manifest.artifacts.items())
            },
        },
        "decisions": [
            {
                "decision_id": r.decision_id, "stage": r.stage, "action": r.action,
                "params": dict(r.params), "rationale_text": r.rationale_text,
                "parents": list(r.parents), "timestamp": r.timestamp,
            }
            for r in records
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=False).encode("utf-8")


# ---------------------------------------------------------------------------
# Provenance
# ---------------------------------------------------------------------------

def build_provenance(records: list[DecisionRecord]) -> ProvenanceGraph:
    """Construct the decision graph linking each action to its antecedents."""
    order: dict[str, int] = {}
    for rank, r in enumerate(sorted(records, key=lambda r: r.timestamp)):
        if r.decision_id in order:
            raise GraphError(f"duplicate decision_id {r.decision_id!r}")
        order[r.decision_id] = rank
    edges = []
    for r in records:
        for p in r.parents:
            if p not in order:
                raise GraphError(f"edge endpoint {p!r} does not exist")
            edges.append((p, r.decision_id))

    # cycle check via DFS; timestamps already forbid forward edges, but a
    # malformed record list may still bypass parse-time validation.
    adjacency: dict[str, list[str]] = {n: [] for n in order}
    for parent, child in edges:
        adjacency[parent].append(child)
    state: dict[str, int] = {}

    def visit(node: str, trail: list[str]):
        state[node] = 1
        trail.append(node)
        for nxt in adjacency[node]:
            if state.get(nxt) == 1:
                cycle = trail[trail.index(nxt):] + [nxt]
                raise GraphError("cycle in parents: " + " -> ".join(cycle))
            if nxt not in state:
                visit(nxt, trail)
        trail.pop()
        state[node] = 2

    for node in order:
        if node not in state:
            visit(node, [])
    return ProvenanceGraph(nodes=list(order), edges=edges, order=order)


def trace_lineage(graph: ProvenanceGraph, decision_id: str) -> list[str]:
    """All ancestors of a decision in topological order, ending with the decision."""
    if decision_id not in graph._order:
        raise NotFoundError(f"unknown decision_id: {decision_id!r}")
    seen: set[str] = set()
    stack = [decision_id]
    while stack:
        node = stack.pop()
        if node in seen:
            continue
        seen.add(node)
        stack.extend(graph.parents_of(node))
    return sorted(seen, key=graph.rank)


# ---------------------------------------------------------------------------
# Third-party journal adapters
# ---------------------------------------------------------------------------
# Only the native schema is normative; adapters map foreign journal shapes
# onto it. Registered by name so the CLI can expose them later if needed.

_ADAPTERS: dict[str, object] = {}


def register_log_adapter(name: str, fn) -> None:
    _ADAPTERS[name] = fn


def convert_journal(doc: dict, adapter: str) -> dict:
    """Convert a foreign journal document to the native log schema."""
    if adapter not in _ADAPTERS:
        raise NotFoundError(f"unknown log adapter: {adapter!r}")
    return _ADAPTERS[adapter](doc)


def _journal_v0_adapter(doc: dict) -> dict:
    """Minimal journal style: {"task": {...}, "steps": [{id,type,op,args,requires,note}]}."""
    task = doc.get("task", {})
    steps = doc.get("steps", [])
    stage_map = {
        "prep": "data_preprocessing", "features": "feature_engineering",
        "model": "model_selection", "tune": "hyperparameter_opt",
    }
    decisions = []
    for i, step in enumerate(steps):
        decisions.append({
            "decision_id": str(step.get("id", f"s{i:03d}")),
            "stage": stage_map.get(step.get("type"), "data_preprocessing"),
            "action": str(step.get("op", "unknown_op")),
            "params": dict(step.get("args", {})),
            "rationale_text": str(step.get("note", "")),
            "parents": list(step.get("requires", [])),
            "timestamp": int(step.get("t", i)),
        })
    return {
        "manifest": {
            "run_id": str(doc.get("run", "journal-import")),
            "dataset_id": str(task.get("dataset", "unknown")),
            "task_kind": task.get("kind", "classification"),
            "n_train": int(task.get("n_train", 1)),
            "n_test": int(task.get("n_test", 1)),
            "feature_schema": list(task.get("features", [])),
            "metric_primary": task.get("metric", "accuracy"),
            "artifacts": dict(task.get("artifacts", {})),
        },
        "decisions": decisions,
    }


register_log_adapter("journal_v0", _journal_v0_adapter)
