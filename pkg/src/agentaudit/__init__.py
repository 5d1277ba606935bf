"""Offline audit engine for agent-built ML pipelines.

Five capabilities behind one package: structured decision logs with
provenance, a labeled fault-injection corpus, five-dimension decision
scoring with fault classification, reasoning-trace validation against
logged ground truth, model-quality assessment (metrics, fairness,
calibration, robustness, throughput), and counterfactual attribution of
pipeline decisions. The `ea` command line fronts all of it.
"""

from .assessor import (AssessorConfig, AuditFinding, DetectionReport,
                       RubricScores, assess_decision, audit_corpus,
                       classify_fault)
from .counterfactual import (AlternativeDecision, AttributionReport, Binding,
                             CounterfactualResult, StagePlan, attribute,
                             default_plan, enumerate_alternatives,
                             identify_points, plan_from_log, reexecute,
                             run_counterfactuals, simulate_impacts,
                             stage_ranking)
from .datasets import Dataset, dataset_manifest, load_dataset, load_fixture
from .decision_log import (ArtifactFact, DecisionRecord, FeatureSpec,
                           ProvenanceGraph, RunManifest, build_provenance,
                           convert_journal, parse_run_log,
                           register_log_adapter, serialize_run_log,
                           trace_lineage)
from .errors import (ArgError, AuditError, ConfigError, EnumError, FitError,
                     GraphError, NotFoundError, ParseError, PlanError,
                     ReportError, SchemaError, SpecError)
from .faults import (FaultClass, InjectionPlan, Label, LabeledCorpus,
                     build_clean_run, corpus_stats, default_class_mix, inject,
                     list_fault_classes)
from .harness import (ExperimentSpec, OverheadReport, bench_overhead,
                      check_bands, multi_seed, reference_ratios,
                      run_experiment, run_suite)
from .learners import (DesignConfig, DesignState, ExternalPredictor,
                       Predictor, fit_reference)
from .quality import (PerturbationSpec, QualityReport, assess_model,
                      calibration, default_grid, efficiency, fairness_metrics,
                      perturb, robustness_suite, task_metrics)
from .reasoning import (Claim, ReasoningSnippet, ReasoningVerdict,
                        ValidationReport, ValidatorConfig, baseline_rule,
                        baseline_stochastic_judge, extract_claims,
                        generate_snippet_set, run_validation_suite, validate)
from .reporting import emit_report
from .stats import (StatsSummary, format_p, frac_at_or_above, percentile,
                    summarize, two_proportion_z, wilson_interval)

__version__ = "0.1.0"
