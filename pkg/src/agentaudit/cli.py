"""`ea` command line: corpus injection, decision audit, reasoning
validation, model assessment, counterfactual analysis, experiments, and
the overhead benchmark.

Exit codes: 0 on success, 2 when an acceptance band fails (CI use),
1 on any input or configuration error.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

from .assessor import AssessorConfig, AuditFinding, audit_corpus
from .counterfactual import (attribute, plan_from_log, run_counterfactuals,
                             simulate_impacts, stage_ranking)
from .datasets import load_dataset, load_fixture
from .decision_log import parse_run_log, serialize_run_log
from .errors import AuditError, ConfigError
from .faults import (InjectionPlan, LabeledCorpus, Label, build_clean_run,
                     default_class_mix, inject, labels_from_obj, labels_to_obj)
from .harness import (BENCH_PRESETS, EXPERIMENT_IDS, PRESETS, ExperimentSpec,
                      bench_overhead, check_bands, multi_seed, run_experiment)
from .quality import assess_model
from .reasoning import (generate_snippet_set, run_validation_suite,
                        snippets_from_obj, snippets_to_obj)
from .reporting import emit_report


def _emit(doc: dict, fmt: str, out: str | None) -> None:
    payload = emit_report(doc, fmt)
    if out:
        Path(out).write_bytes(payload)
    else:
        sys.stdout.buffer.write(payload)


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def cmd_inject(args) -> int:
    dataset = load_fixture(args.dataset)
    from .datasets import dataset_manifest

    manifest = dataset_manifest(dataset)
    has_dt = any(f.kind == "datetime" for f in manifest.feature_schema)
    mix = json.loads(args.mix) if args.mix else default_class_mix(has_dt)
    plan = InjectionPlan(dataset_id=args.dataset, n_clean=args.clean,
                         n_faulty=args.faulty, class_mix=mix, seed=args.seed)
    clean = build_clean_run(manifest)
    corpus = inject(clean, plan, manifest)
    out = Path(args.out)
    out.write_bytes(serialize_run_log(manifest, corpus.records))
    labels_path = Path(args.labels) if args.labels \
        else out.with_name(out.stem + "_labels.json")
    labels_path.write_text(json.dumps(labels_to_obj(corpus), indent=1,
                                      sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(corpus.records)} decisions) and {labels_path}")
    return 0


def _findings_doc(findings: list[AuditFinding], report) -> dict:
    return {"kind": "audit",
            "findings": [{"decision_id": f.decision_id, "flagged": f.flagged,
                          "predicted_class": f.predicted_class,
                          "scores": f.scores.as_dict()} for f in findings],
            "report": report.as_dict() if report is not None else None}


def cmd_audit(args) -> int:
    manifest, records = parse_run_log(_read(args.log))
    cfg = AssessorConfig(risk_threshold=args.threshold, noise_sigma=args.sigma,
                         seed=args.seed)
    if args.labels:
        obj = json.loads(_read(args.labels))
        corpus = labels_from_obj(obj, records)
        findings, report = audit_corpus(corpus, manifest, cfg)
    else:
        # no ground truth: score decisions, skip the detection table
        placeholder = LabeledCorpus(
            records=records,
            labels={r.decision_id: Label(False, None) for r in records},
            decoy_ids=(), plan=None)
        findings, _ = audit_corpus(placeholder, manifest, cfg)
        report = None
    _emit(_findings_doc(findings, report), args.format, args.out)
    return 0


def cmd_validate_reasoning(args) -> int:
    manifest, records = parse_run_log(_read(args.log))
    if args.generate:
        snippets = generate_snippet_set(manifest, records, seed=args.seed,
                                        n_per_category=args.n_per_cat)
        Path(args.snippets).write_text(
            json.dumps(snippets_to_obj(snippets), indent=1, sort_keys=True) + "\n",
            encoding="utf-8")
        print(f"wrote {len(snippets)} snippets to {args.snippets}", file=sys.stderr)
    else:
        snippets = snippets_from_obj(json.loads(_read(args.snippets)))
    baselines = tuple(b.strip() for b in args.baselines.split(",") if b.strip())
    report = run_validation_suite(snippets, manifest, records,
                                  baselines=baselines, judge_seed=args.seed)
    doc = report.as_dict()
    doc["kind"] = "validation"
    _emit(doc, args.format, args.out)
    return 0


def cmd_assess_model(args) -> int:
    dataset = load_dataset(args.data, args.schema)
    external_cmd = shlex.split(args.external_cmd) if args.external_cmd else None
    grid = "default" if args.grid == "default" else None
    report = assess_model(dataset, model=args.model, grid=grid, seed=args.seed,
                          measure_efficiency=not args.no_efficiency,
                          external_cmd=external_cmd)
    doc = report.as_dict()
    doc["kind"] = "assess"
    _emit(doc, args.format, args.out)
    return 0


def cmd_counterfactual(args) -> int:
    dataset = load_dataset(args.data, args.schema)
    if args.mode == "simulate":
        results = simulate_impacts(seed=args.seed, datasets=(dataset.name,))
    else:
        plan = None
        findings = []
        if args.log:
            manifest, records = parse_run_log(_read(args.log))
            plan = plan_from_log(manifest, records)
            cfg = AssessorConfig(noise_sigma=0.0, seed=args.seed)
            placeholder = LabeledCorpus(
                records=records,
                labels={r.decision_id: Label(False, None) for r in records},
                decoy_ids=(), plan=None)
            findings, _ = audit_corpus(placeholder, manifest, cfg)
        results = run_counterfactuals(dataset, plan=plan, findings=findings,
                                      seed=args.seed)
    doc = {"kind": "counterfactual", "mode": args.mode, "seed": args.seed,
           "results": [r.as_dict() for r in results],
           "attribution": attribute(results).as_dict(),
           "ranking": stage_ranking(results)}
    _emit(doc, args.format, args.out)
    return 0


def cmd_experiment(args) -> int:
    if args.id == "all":
        ids = PRESETS[args.preset]
    else:
        ids = (f"exp{args.id}",)
        if ids[0] not in EXPERIMENT_IDS:
            raise ConfigError(f"unknown experiment id: {args.id!r}")
    config = dict(args.config) if isinstance(args.config, dict) else {}
    failures = []
    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for exp_id in ids:
        spec = ExperimentSpec(id=exp_id, seeds=(args.seed,), config=config)
        if args.seeds > 1:
            doc = multi_seed(spec, n_seeds=args.seeds)
        else:
            doc = run_experiment(spec)
        failures += check_bands(doc)
        if out_dir:
            ext = "json" if args.format == "json" else "md"
            path = out_dir / f"{exp_id}.{ext}"
            path.write_bytes(emit_report(doc, args.format))
            print(f"wrote {path}", file=sys.stderr)
        else:
            sys.stdout.buffer.write(emit_report(doc, args.format))
    for failure in failures:
        print(f"band failure: {failure}", file=sys.stderr)
    return 2 if failures else 0


def cmd_bench(args) -> int:
    components = [c.strip() for c in args.components.split(",") if c.strip()] \
        if args.components else None
    report = bench_overhead(components=components, iterations=args.iterations,
                            warmup=args.warmup, preset=args.preset,
                            seed=args.seed)
    doc = report.as_dict()
    failures = check_bands(doc)
    _emit(doc, args.format, args.out)
    for failure in failures:
        print(f"band failure: {failure}", file=sys.stderr)
    return 2 if failures else 0


def _add_common(sub, fmt: bool = True) -> None:
    if fmt:
        sub.add_argument("--format", choices=("json", "md", "markdown"),
                         default="json")
    sub.add_argument("--out", default=None, help="write the report here "
                     "instead of stdout")
    sub.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ea", description="Offline audit tooling for agent-built ML "
        "pipelines: decision scoring, reasoning validation, model quality, "
        "counterfactuals.")
    parser.add_argument("--config", default=None,
                        help="JSON file of default argument values")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("inject", help="build a labeled fault corpus")
    sub.add_argument("--dataset", required=True)
    sub.add_argument("--clean", type=int, default=10)
    sub.add_argument("--faulty", type=int, default=15)
    sub.add_argument("--mix", default=None, help="JSON map class->count")
    sub.add_argument("--out", default="corpus.json")
    sub.add_argument("--labels", default=None)
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(fn=cmd_inject)

    sub = subs.add_parser("audit", help="score a decision log")
    sub.add_argument("--log", required=True)
    sub.add_argument("--labels", default=None)
    sub.add_argument("--sigma", type=float, default=4.0)
    sub.add_argument("--threshold", type=float, default=60.0)
    _add_common(sub)
    sub.set_defaults(fn=cmd_audit)

    sub = subs.add_parser("validate-reasoning",
                          help="check reasoning snippets against a run log")
    sub.add_argument("--log", required=True)
    sub.add_argument("--snippets", required=True)
    sub.add_argument("--generate", action="store_true",
                     help="generate the snippet set from the log first")
    sub.add_argument("--n-per-cat", type=int, default=12)
    sub.add_argument("--baselines", default="rule,stochastic")
    _add_common(sub)
    sub.set_defaults(fn=cmd_validate_reasoning)

    sub = subs.add_parser("assess-model", help="model quality report")
    sub.add_argument("--data", required=True)
    sub.add_argument("--schema", default=None)
    sub.add_argument("--model", default="auto",
                     choices=("auto", "logistic", "ridge", "gbt", "external"))
    sub.add_argument("--grid", default="default", choices=("default", "none"))
    sub.add_argument("--external-cmd", default=None,
                     help="external predictor command line")
    sub.add_argument("--no-efficiency", action="store_true")
    _add_common(sub)
    sub.set_defaults(fn=cmd_assess_model)

    sub = subs.add_parser("counterfactual", help="what-if decision analysis")
    sub.add_argument("--log", default=None)
    sub.add_argument("--data", required=True)
    sub.add_argument("--schema", default=None)
    sub.add_argument("--mode", choices=("reexec", "simulate"), default="reexec")
    _add_common(sub)
    sub.set_defaults(fn=cmd_counterfactual)

    sub = subs.add_parser("experiment", help="run the built-in experiments")
    sub.add_argument("--id", default="all", choices=("1", "2", "3", "4", "all"))
    sub.add_argument("--preset", default="full", choices=tuple(PRESETS))
    sub.add_argument("--seeds", type=int, default=1,
                     help="number of seeds (>1 runs the repeated-seed study)")
    sub.add_argument("--config-json", dest="config", default={},
                     type=json.loads, help="experiment config overrides")
    sub.add_argument("--format", choices=("json", "md", "markdown"),
                     default="json")
    sub.add_argument("--out", default=None, help="directory for report files")
    sub.add_argument("--seed", type=int, default=0)
    sub.set_defaults(fn=cmd_experiment)

    sub = subs.add_parser("bench", help="component overhead benchmark")
    sub.add_argument("--iterations", type=int, default=10)
    sub.add_argument("--warmup", type=int, default=3)
    sub.add_argument("--preset", default="full", choices=tuple(BENCH_PRESETS))
    sub.add_argument("--components", default=None,
                     help="comma list overriding the preset")
    _add_common(sub)
    sub.set_defaults(fn=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if "--config" in argv:
        at = argv.index("--config")
        try:
            overrides = json.loads(Path(argv[at + 1]).read_text(encoding="utf-8"))
        except (IndexError, OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return 1
        if not isinstance(overrides, dict):
            print("error: config file must hold a JSON object", file=sys.stderr)
            return 1
        for action in parser._subparsers._group_actions:
            for sub in action.choices.values():
                sub.set_defaults(**{k.replace("-", "_"): v
                                    for k, v in overrides.items()})
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except AuditError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
