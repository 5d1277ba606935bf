"""Report emission: machine-readable JSON and table-shaped Markdown.

JSON is the superset format; Markdown renders the headline tables. Every
number printed in Markdown is a rounding of a value present in the JSON
document, and JSON serialization is byte-stable for identical documents
(sorted keys, fixed indentation, no timestamps).
"""

from __future__ import annotations

import json

from .errors import ReportError
from .stats import format_p

NOISE_KEYS = ("gaussian_noise:0.01", "gaussian_noise:0.05", "gaussian_noise:0.1")
MISSING_KEYS = ("missingness:0.1", "missingness:0.2", "missingness:0.3")


def emit_report(document: dict, format: str = "json") -> bytes:
    if format == "json":
        return (json.dumps(document, sort_keys=True, indent=1) + "\n").encode("utf-8")
    if format in ("markdown", "md"):
        return _markdown(document).encode("utf-8")
    raise ReportError(f"unknown report format: {format!r}")


def _markdown(document: dict) -> str:
    kind = document.get("experiment") or document.get("kind")
    renderers = {
        "exp1": _md_exp1, "exp2": _md_exp2, "exp3": _md_exp3, "exp4": _md_exp4,
        "multi_seed": _md_multi_seed, "bench": _md_bench, "audit": _md_audit,
        "assess": _md_assess, "counterfactual": _md_counterfactual,
        "validation": _md_validation,
    }
    if document.get("mode") == "multi_seed":
        kind = "multi_seed"
    if kind not in renderers:
        raise ReportError(f"no markdown renderer for document kind {kind!r}")
    return "\n".join(renderers[kind](document)) + "\n"


def _table(headers: list[str], rows: list[list[str]]) -> list[str]:
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(row) + " |")
    return lines


def _f(value, nd=3) -> str:
    if value is None:
        return "-"
    return f"{value:.{nd}f}"


def _detection_row(label: str, entry: dict) -> list[str]:
    return [label, str(entry["n"]), str(entry["n_faulty"]),
            str(entry["tp"]), str(entry["fp"]), str(entry["fn"]), str(entry["tn"]),
            _f(entry["precision"]), _f(entry["recall"]), _f(entry["f1"])]


def _md_exp1(doc: dict) -> list[str]:
    lines = ["# Decision audit detection", ""]
    rows = [_detection_row(e["dataset"], e) for e in doc["per_dataset"]]
    rows.append(_detection_row("Overall", doc["overall"]))
    lines += _table(["Dataset", "Decisions", "Faulty", "TP", "FP", "FN", "TN",
                     "Precision", "Recall", "F1"], rows)
    lines += ["", f"sigma={doc['sigma']:g}, threshold={doc['threshold']:g}, "
                  f"seed={doc['seed']}"]
    return lines


def _md_validation_core(doc: dict) -> list[str]:
    lines = []
    per_cat = doc["per_category"]
    base = doc.get("baseline_per_category", {})
    rows = []
    for cat in per_cat:
        n, correct = per_cat[cat]
        row = [cat, str(n), f"{correct}/{n}"]
        for b in ("rule", "stochastic"):
            bc = base.get(b, {}).get(cat)
            row.append("-" if bc is None else f"{bc[1]}/{bc[0]}")
        rows.append(row)
    lines += _table(["Category", "N", "Validator", "Rule", "Judge"], rows)
    lines += ["", f"Validator accuracy: {_f(doc['accuracy'])} "
                  f"(95% CI [{_f(doc['ci_low'])}, {_f(doc['ci_high'])}])"]
    for name, (acc, z, p) in sorted(doc.get("comparisons", {}).items()):
        lines.append(f"- vs {name}: accuracy {_f(acc)}, "
                     f"z={z:.2f}, p {format_p(p)}")
    return lines


def _md_exp2(doc: dict) -> list[str]:
    return ["# Reasoning validation", ""] + _md_validation_core(doc)


def _md_validation(doc: dict) -> list[str]:
    return ["# Reasoning validation", ""] + _md_validation_core(doc)


def _md_exp3(doc: dict) -> list[str]:
    lines = ["# Model quality", ""]
    cls = [r for r in doc["per_dataset"] if "accuracy" in r["task"]]
    reg = [r for r in doc["per_dataset"] if "rmse" in r["task"]]
    if cls:
        rows = []
        for r in cls:
            fair = r.get("fairness") or {}
            dp = max((v for k, v in fair.items() if k.endswith(":DP")), default=None)
            eo = max((v for k, v in fair.items() if k.endswith(":EO")), default=None)
            ece = (r.get("calibration") or {}).get("ece")
            rows.append([r["dataset_id"], _f(r["task"].get("accuracy")),
                         _f(r["task"].get("f1")), _f(r["task"].get("auc")),
                         _f(ece), _f(dp), _f(eo)])
        lines += _table(["Dataset", "Accuracy", "F1", "AUC", "ECE", "DP", "EO"], rows)
        lines.append("")
    if reg:
        rows = [[r["dataset_id"], _f(r["task"]["rmse"], 2), _f(r["task"]["mae"], 2),
                 _f(r["task"]["r2"])] for r in reg]
        lines += _table(["Dataset", "RMSE", "MAE", "R2"], rows)
        lines.append("")
    rows = []
    for r in doc["per_dataset"]:
        rob = r.get("robustness") or {}
        rows.append([r["dataset_id"]] +
                    [_f(rob.get(k), 2) for k in NOISE_KEYS + MISSING_KEYS])
    lines += _table(["Dataset", "Noise 1% deg.", "Noise 5% deg.", "Noise 10% deg.",
                     "Missing 10% deg.", "Missing 20% deg.", "Missing 30% deg."], rows)
    lines += ["", "Degradation in percent; positive means the perturbation "
                  "hurt the primary metric."]
    return lines


def _md_attribution(att: dict) -> list[str]:
    rows = []
    for stage, entry in att["per_stage"].items():
        rows.append([f"stage: {stage}", str(entry["n"]),
                     _f(entry["avg_abs_impact"], 1), _f(entry["mean_signed"], 1),
                     f"[{_f(entry['min'], 1)}, {_f(entry['max'], 1)}]"])
    for name, entry in att["per_dataset"].items():
        rows.append([f"dataset: {name}", str(entry["n"]),
                     _f(entry["avg_abs_impact"], 1), _f(entry["mean_signed"], 1),
                     f"[{_f(entry['min'], 1)}, {_f(entry['max'], 1)}]"])
    overall = att["overall"]
    rows.append(["Overall", str(overall["n"]), _f(overall["avg_abs_impact"], 1),
                 _f(overall["mean_signed"], 1),
                 f"[{_f(overall['range'][0], 1)}, {_f(overall['range'][1], 1)}]"])
    return _table(["Group", "N", "Avg |Impact| (%)", "Mean (%)", "Range (%)"], rows)


def _md_exp4(doc: dict) -> list[str]:
    lines = ["# Counterfactual attribution", ""]
    lines += _md_attribution(doc["attribution"])
    lines += ["", f"mode={doc['mode']}, seed={doc['seed']}, "
                  f"ranking: {' > '.join(doc['ranking'])}"]
    return lines


def _md_counterfactual(doc: dict) -> list[str]:
    lines = ["# Counterfactual analysis", ""]
    rows = []
    for r in doc["results"]:
        alt = r["alternative"]
        alt_s = "-" if alt is None else f"{alt['action']} {alt['params']}"
        delta = "-" if r["delta"] is None else f"{r['delta']:+.2f}"
        tag = " ".join(r.get("tags", []))
        rows.append([r["point"][0], alt_s, _f(r["metric_original"], 4),
                     _f(r["metric_alternative"], 4), delta, tag or "-"])
    lines += _table(["Stage", "Alternative", "Original", "Alternative metric",
                     "Impact", "Tags"], rows)
    if "attribution" in doc:
        lines += ["", "## Attribution", ""] + _md_attribution(doc["attribution"])
    return lines


def _md_multi_seed(doc: dict) -> list[str]:
    lines = [f"# Repeated-run summary ({doc['experiment']})", ""]
    rows = []
    for name, s in sorted(doc["metrics"].items()):
        rows.append([name, _f(s["mean"], 4), _f(s["std"], 4),
                     f"[{_f(s['pct_2_5'], 4)}, {_f(s['pct_97_5'], 4)}]", str(s["n"])])
    lines += _table(["Metric", "Mean", "Std", "2.5-97.5 pct", "N"], rows)
    if "fraction_at_or_above" in doc:
        frac = doc["fraction_at_or_above"]
        lines += ["", f"Fraction of seeds with {frac['metric']} >= "
                      f"{frac['reference']:g}: {_f(frac['fraction'])}"]
    if "ranking_stable_fraction" in doc:
        lines += ["", f"Stage-ranking stability: "
                      f"{_f(doc['ranking_stable_fraction'], 4)} of runs"]
    return lines


def _md_bench(doc: dict) -> list[str]:
    lines = ["# Component overhead", ""]
    rows = []
    for name, entry in doc["per_component"].items():
        tags = " ".join(entry.get("tags", []))
        rows.append([name, _f(entry["median_ms"], 2), _f(entry["share_pct"], 1),
                     tags or "-"])
    rows.append(["Total", _f(doc["total_ms"], 2), "100.0", "-"])
    lines += _table(["Component", "Median (ms)", "Share (%)", "Tags"], rows)
    lines += ["", "## Overhead relative to pipeline budgets", ""]
    rows = [[key, _f(val, 3)] for key, val in doc["reference_ratios"].items()]
    lines += _table(["Budget", "Overhead (%)"], rows)
    return lines


def _md_audit(doc: dict) -> list[str]:
    lines = ["# Decision audit", ""]
    rows = []
    for f in doc["findings"]:
        s = f["scores"]
        rows.append([f["decision_id"], "yes" if f["flagged"] else "no",
                     f.get("predicted_class") or "-", _f(s["risk"], 1),
                     _f(s["appropriateness"], 1), _f(s["consistency"], 1),
                     _f(s["completeness"], 1), _f(s["efficiency"], 1)])
    lines += _table(["Decision", "Flagged", "Predicted class", "Risk",
                     "Appropriateness", "Consistency", "Completeness",
                     "Efficiency"], rows)
    if doc.get("report"):
        lines += ["", "## Detection", ""]
        lines += _table(["TP", "FP", "FN", "TN", "Precision", "Recall", "F1"],
                        [[str(doc["report"]["tp"]), str(doc["report"]["fp"]),
                          str(doc["report"]["fn"]), str(doc["report"]["tn"]),
                          _f(doc["report"]["precision"]), _f(doc["report"]["recall"]),
                          _f(doc["report"]["f1"])]])
    return lines


def _md_assess(doc: dict) -> list[str]:
    lines = [f"# Model quality: {doc['dataset_id']} ({doc['model_kind']})", ""]
    rows = [[k, _f(v, 4)] for k, v in sorted(doc["task"].items())]
    lines += _table(["Metric", "Value"], rows)
    if doc.get("robustness"):
        lines += ["", "## Robustness (degradation %)", ""]
        rows = [[k, _f(v, 2)] for k, v in sorted(doc["robustness"].items())]
        lines += _table(["Perturbation", "Degradation (%)"], rows)
    if doc.get("fairness"):
        lines += ["", "## Fairness", ""]
        rows = [[k, _f(v, 4)] for k, v in sorted(doc["fairness"].items())]
        lines += _table(["Disparity", "Value"], rows)
    if doc.get("calibration") is not None:
        lines += ["", f"ECE: {_f(doc['calibration']['ece'], 4)}"]
    if doc.get("efficiency") is not None:
        lines += ["", f"Throughput: {doc['efficiency']:.0f} samples/s"]
    if doc.get("warnings"):
        lines += ["", f"Warnings: {', '.join(doc['warnings'])}"]
    return lines
