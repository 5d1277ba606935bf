"""Reasoning-snippet validation: four deterministic check families.

A snippet's free text is compiled into structured claims by a small fixed
grammar; the claims are then checked in a fixed family order: factual
(against manifest artifacts), logical (contradiction pairs over a fixed
predicate vocabulary), numerical (claimed deltas vs recomputed arithmetic),
alignment (stated actions vs the decision log). The first failing family
names the category, which keeps categories mutually exclusive.

Two comparison baselines ship alongside: a keyword rule detector with no
artifact access, and a seeded stochastic judge simulating an unanchored
grader with configurable per-category accuracy.
"""

from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass, field

from .decision_log import ACTION_VOCABULARY, DecisionRecord, RunManifest
from .errors import ReportError
from .stats import two_proportion_z, wilson_interval

CATEGORIES = ("valid", "hallucinated_fact", "logical_contradiction",
              "numerical_hallucination", "action_reasoning_mismatch")

# keyword baseline: binary invalid on any hit; no artifact access by design
RULE_KEYWORDS = ("leakage", "leak", "overfit", "contradiction", "inconsistent",
                 "impossible", "dramatic", "massive", "suspicious")

# simulated unanchored judge: probability of judging a snippet of each truth
# category correctly; deliberately far below the anchored validator
JUDGE_ACCURACY = {
    "valid": 5 / 12, "hallucinated_fact": 3 / 12, "logical_contradiction": 2 / 12,
    "numerical_hallucination": 5 / 12, "action_reasoning_mismatch": 1 / 12,
}


@dataclass(frozen=True)
class Claim:
    kind: str  # fact | numeric_derivation | predicate | action_ref
    subject: str
    payload: dict


@dataclass(frozen=True)
class ReasoningSnippet:
    snippet_id: str
    text: str
    claims: tuple[Claim, ...] = ()
    linked_decisions: tuple[str, ...] = ()
    truth_label: str | None = None  # never read by validate()


@dataclass(frozen=True)
class ReasoningVerdict:
    valid: bool
    category: str | None
    evidence: tuple[tuple[int, str], ...]  # (claim index, artifact name or rule id)
    severity: str  # critical | major | minor
    confidence: float


@dataclass(frozen=True)
class ValidatorConfig:
    severity_factual: str = "major"
    severity_logical: str = "critical"
    severity_numerical: str = "major"
    severity_alignment: str = "major"


@dataclass
class ValidationReport:
    per_category: dict[str, tuple[int, int]]  # category -> (total, correct)
    accuracy: float
    ci_low: float
    ci_high: float
    comparisons: dict[str, tuple[float, float, float]]  # baseline -> (accuracy, z, p)
    n: int
    baseline_per_category: dict[str, dict[str, tuple[int, int]]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "per_category": {k: list(v) for k, v in self.per_category.items()},
            "accuracy": self.accuracy, "ci_low": self.ci_low, "ci_high": self.ci_high,
            "comparisons": {k: list(v) for k, v in self.comparisons.items()},
            "n": self.n,
            "baseline_per_category": {
                b: {k: list(v) for k, v in cats.items()}
                for b, cats in self.baseline_per_category.items()
            },
        }


# ---------------------------------------------------------------------------
# Claim grammar
# ---------------------------------------------------------------------------

_NUM = r"[0-9]+(?:\.[0-9]+)?"
_RE_IMPROVED = re.compile(
    rf"\b([a-z][a-z0-9_ ]*?)\s+improved\s+from\s+({_NUM})\s+to\s+({_NUM})"
    rf"(?:\s*,\s*an?\s+(?:massive\s+|dramatic\s+)?({_NUM})%\s+relative\s+improvement)?",
    re.IGNORECASE)
_RE_ROWS = re.compile(r"\bdataset has\s+([0-9][0-9,]*)\s+rows\b", re.IGNORECASE)
_RE_COLS = re.compile(r"\bdataset has\s+([0-9][0-9,]*)\s+(?:feature\s+)?columns\b", re.IGNORECASE)
_RE_REACHED = re.compile(rf"\b([a-z][a-z0-9_ ]*?)\s+reached\s+({_NUM})", re.IGNORECASE)
_RE_ACTION = re.compile(
    r"\bwe\s+(?:applied|used)\s+(" + "|".join(ACTION_VOCABULARY) + r")\b", re.IGNORECASE)

# predicate vocabulary for contradiction checks: (subject, value, pattern)
_PREDICATE_PATTERNS = (
    ("missingness", False, re.compile(r"\bno missing values\b", re.IGNORECASE)),
    ("missingness", True, re.compile(r"\bimput(?:ed|ation)\b", re.IGNORECASE)),
    ("scaling", True, re.compile(r"\b(?:was|were)\s+standardi[sz]ed\b|\bfeatures (?:were )?scaled\b",
                                 re.IGNORECASE)),
    ("scaling", False, re.compile(r"\bno scaling\b|\bwithout (?:any )?scaling\b", re.IGNORECASE)),
    ("split", True, re.compile(r"\bafter the (?:train[/-]test )?split\b|\bheld-?out test set\b",
                               re.IGNORECASE)),
    ("split", False, re.compile(r"\bwithout (?:any )?train[/-]test split\b|\bno train[/-]test split\b",
                                re.IGNORECASE)),
    ("regularization", False,
     re.compile(r"\bregulari[sz]ation was disabled\b|\bwithout regulari[sz]ation\b"
                r"|\bno regulari[sz]ation\b", re.IGNORECASE)),
)
_RE_L2_STRENGTH = re.compile(rf"\bl2 strength\s+({_NUM})\b", re.IGNORECASE)


def _decimals(token: str) -> int:
    return len(token.split(".")[1]) if "." in token else 0


def _norm_subject(raw: str) -> str:
    return "_".join(raw.strip().lower().split())


def extract_claims(text: str) -> list[Claim]:
    """Grammar-based claim extraction; unmatched text yields no claims."""
    claims: list[Claim] = []
    for m in _RE_IMPROVED.finditer(text):
        payload = {
            "from_value": float(m.group(2)), "to_value": float(m.group(3)),
            "claimed_delta_pct": float(m.group(4)) if m.group(4) else None,
            "pct_decimals": _decimals(m.group(4)) if m.group(4) else 0,
        }
        claims.append(Claim("numeric_derivation", _norm_subject(m.group(1)), payload))
    for m in _RE_ROWS.finditer(text):
        claims.append(Claim("fact", "n_rows",
                            {"value": float(m.group(1).replace(",", "")), "decimals": 0}))
    for m in _RE_COLS.finditer(text):
        claims.append(Claim("fact", "n_columns",
                            {"value": float(m.group(1).replace(",", "")), "decimals": 0}))
    for m in _RE_REACHED.finditer(text):
        claims.append(Claim("fact", _norm_subject(m.group(1)),
                            {"value": float(m.group(2)), "decimals": _decimals(m.group(2))}))
    for subject, value, pattern in _PREDICATE_PATTERNS:
        if pattern.search(text):
            claims.append(Claim("predicate", subject, {"value": value}))
    m = _RE_L2_STRENGTH.search(text)
    if m:
        claims.append(Claim("predicate", "regularization", {"value": float(m.group(1)) > 0}))
    for m in _RE_ACTION.finditer(text):
        claims.append(Claim("action_ref", m.group(1).lower(), {}))
    return claims


# ---------------------------------------------------------------------------
# The anchored validator
# ---------------------------------------------------------------------------

def _tolerance(truth: float, decimals: int) -> float:
    # relative 1e-6 or the claim's displayed precision, whichever is looser
    return max(1e-6 * abs(truth), 0.5 * 10.0 ** (-decimals))


def validate(snippet: ReasoningSnippet, manifest: RunManifest,
             log: list[DecisionRecord], cfg: ValidatorConfig | None = None) -> ReasoningVerdict:
    """Check one snippet; deterministic, truth labels never consulted."""
    cfg = cfg or ValidatorConfig()
    claims = list(snippet.claims) if snippet.claims else extract_claims(snippet.text)
    by_id = {r.decision_id: r for r in log}
    evidence: list[tuple[int, str]] = []
    verifiable = 0
    verified = 0
    failed_family: str | None = None

    def fail(family: str):
        nonlocal failed_family
        if failed_family is None:
            failed_family = family

    # factual: fact claims vs manifest counts and logged artifacts
    for i, c in enumerate(claims):
        if c.kind != "fact":
            continue
        if c.subject == "n_rows":
            truth, source = float(manifest.n_rows), "manifest.n_rows"
        elif c.subject == "n_columns":
            truth, source = float(manifest.n_features), "manifest.n_features"
        else:
            fact = manifest.artifacts.get(c.subject)
            if fact is None or not isinstance(fact.value, (int, float)) \
                    or isinstance(fact.value, bool):
                evidence.append((i, "unverifiable_artifact"))
                continue
            truth, source = float(fact.value), f"artifact:{c.subject}"
        verifiable += 1
        if abs(c.payload["value"] - truth) <= _tolerance(truth, c.payload.get("decimals", 0)):
            verified += 1
            evidence.append((i, source))
        else:
            evidence.append((i, f"mismatch:{source}"))
            fail("factual")

    # logical: contradiction pairs over the predicate vocabulary
    by_subject: dict[str, list[tuple[int, bool]]] = {}
    for i, c in enumerate(claims):
        if c.kind == "predicate":
            by_subject.setdefault(c.subject, []).append((i, c.payload["value"]))
    for subject, entries in sorted(by_subject.items()):
        if len(entries) < 2:
            continue  # a lone predicate has nothing to contradict
        values = {v for _, v in entries}
        verifiable += len(entries)
        if len(values) > 1:
            for i, _ in entries:
                evidence.append((i, f"contradiction:{subject}"))
            fail("logical")
        else:
            verified += len(entries)

    # numerical: recompute claimed relative changes
    for i, c in enumerate(claims):
        if c.kind != "numeric_derivation" or c.payload["claimed_delta_pct"] is None:
            continue
        frm = c.payload["from_value"]
        if frm == 0:
            evidence.append((i, "unverifiable_zero_base"))
            continue
        verifiable += 1
        actual = abs(c.payload["to_value"] - frm) / abs(frm) * 100.0
        claimed = c.payload["claimed_delta_pct"]
        if abs(actual - claimed) <= _tolerance(actual, c.payload["pct_decimals"]):
            verified += 1
            evidence.append((i, "arith:relative_change"))
        else:
            evidence.append((i, f"arith:expected_{actual:.4f}pct"))
            fail("numerical")

    # alignment: stated actions and referenced decisions vs the log
    reference: list[DecisionRecord] = log
    if snippet.linked_decisions:
        reference = []
        for did in snippet.linked_decisions:
            rec = by_id.get(did)
            if rec is None:
                verifiable += 1
                evidence.append((-1, "dangling_reference"))
                fail("alignment")
            else:
                reference.append(rec)
    ref_actions = {r.action for r in reference}
    for i, c in enumerate(claims):
        if c.kind != "action_ref":
            continue
        verifiable += 1
        if c.subject in ref_actions:
            verified += 1
            evidence.append((i, f"action:{c.subject}"))
        else:
            evidence.append((i, "action_not_in_log"))
            fail("alignment")

    category = {
        "factual": "hallucinated_fact", "logical": "logical_contradiction",
        "numerical": "numerical_hallucination", "alignment": "action_reasoning_mismatch",
        None: None,
    }[failed_family]
    severity = {
        "factual": cfg.severity_factual, "logical": cfg.severity_logical,
        "numerical": cfg.severity_numerical, "alignment": cfg.severity_alignment,
        None: "minor",
    }[failed_family]
    confidence = verified / verifiable if verifiable else 1.0
    return ReasoningVerdict(valid=category is None, category=category,
                            evidence=tuple(evidence), severity=severity,
                            confidence=confidence)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------

def baseline_rule(snippet: ReasoningSnippet) -> ReasoningVerdict:
    """Keyword matcher with no access to manifest, log, or arithmetic."""
    text = snippet.text.lower()
    hits = [kw for kw in RULE_KEYWORDS if kw in text]
    if not hits:
        return ReasoningVerdict(True, None, (), "minor", 0.5)
    first = hits[0]
    if first in ("contradiction", "inconsistent", "impossible"):
        category = "logical_contradiction"
    elif first in ("dramatic", "massive"):
        category = "numerical_hallucination"
    else:
        category = "hallucinated_fact"
    return ReasoningVerdict(False, category,
                            tuple((-1, f"keyword:{kw}") for kw in hits), "major", 0.5)


def _derived_rng(seed: int, snippet_id: str) -> random.Random:
    digest = hashlib.blake2b(f"{seed}:{snippet_id}".encode(), digest_size=8).digest()
    return random.Random(int.from_bytes(digest, "big"))


def baseline_stochastic_judge(snippet: ReasoningSnippet, seed: int = 0) -> ReasoningVerdict:
    """Simulated unanchored judge: correct with per-category probability.

    Reads the truth label because it simulates a grader of known (poor)
    accuracy; it is a measurement instrument for the comparison, not a
    detector. Deterministic given (seed, snippet_id).
    """
    rng = _derived_rng(seed, snippet.snippet_id)
    accuracy = JUDGE_ACCURACY.get(snippet.truth_label or "valid", 0.5)
    truth_valid = snippet.truth_label == "valid"
    correct = rng.random() < accuracy
    says_valid = truth_valid if correct else not truth_valid
    if says_valid:
        return ReasoningVerdict(True, None, (), "minor", round(rng.uniform(0.4, 0.95), 2))
    if correct and snippet.truth_label in CATEGORIES[1:]:
        category = snippet.truth_label
    else:
        category = rng.choice(CATEGORIES[1:])
    return ReasoningVerdict(False, category, ((-1, "judge_sample"),), "major",
                            round(rng.uniform(0.4, 0.95), 2))


# ---------------------------------------------------------------------------
# Suite
# ---------------------------------------------------------------------------

def run_validation_suite(snippets: list[ReasoningSnippet], manifest: RunManifest,
                         log: list[DecisionRecord],
                         baselines: tuple[str, ...] = ("rule", "stochastic"),
                         judge_seed: int = 0,
                         cfg: ValidatorConfig | None = None) -> ValidationReport:
    """Score the anchored validator and baselines on a labeled snippet set.

    Correctness is the binary validity match against the truth label, the
    same yardstick for every validator.
    """
    if not snippets:
        raise ReportError("empty snippet set")
    for s in snippets:
        if s.truth_label not in CATEGORIES:
            raise ReportError(f"snippet {s.snippet_id!r} lacks a truth label")

    def correctness(verdict_fn) -> dict[str, tuple[int, int]]:
        per: dict[str, list[int]] = {c: [0, 0] for c in CATEGORIES}
        for s in sorted(snippets, key=lambda s: s.snippet_id):
            verdict = verdict_fn(s)
            per[s.truth_label][0] += 1
            if verdict.valid == (s.truth_label == "valid"):
                per[s.truth_label][1] += 1
        return {c: (t, k) for c, (t, k) in per.items() if t}

    ea = correctness(lambda s: validate(s, manifest, log, cfg))
    n = sum(t for t, _ in ea.values())
    correct = sum(k for _, k in ea.values())
    accuracy = correct / n
    ci_low, ci_high = wilson_interval(correct, n)

    available = {
        "rule": lambda s: baseline_rule(s),
        "stochastic": lambda s: baseline_stochastic_judge(s, judge_seed),
    }
    comparisons: dict[str, tuple[float, float, float]] = {}
    baseline_detail: dict[str, dict[str, tuple[int, int]]] = {}
    for name in baselines:
        if name not in available:
            raise ReportError(f"unknown baseline {name!r}")
        per = correctness(available[name])
        acc_b = sum(k for _, k in per.values()) / n
        z, p = two_proportion_z(accuracy, n, acc_b, n)
        comparisons[name] = (acc_b, z, p)
        baseline_detail[name] = per

    return ValidationReport(per_category=ea, accuracy=accuracy, ci_low=ci_low,
                            ci_high=ci_high, comparisons=comparisons, n=n,
                            baseline_per_category=baseline_detail)


# ---------------------------------------------------------------------------
# Snippet set generator
# ---------------------------------------------------------------------------

def _fmt_metric_value(value: float) -> str:
    return f"{value:.3f}"


def generate_snippet_set(manifest: RunManifest, log: list[DecisionRecord],
                         seed: int = 0, n_per_category: int = 12) -> list[ReasoningSnippet]:
    """A labeled snippet set planted against the given run.

    Per category block of n: valid snippets verify against the manifest and
    log (one carries a benign risk keyword to bait the rule baseline); the
    invalid blocks each defeat exactly their own check family, with a fixed
    share of deliberately unverifiable or paraphrased plants that anchored
    checking cannot catch.
    """
    rng = random.Random(seed)
    present = sorted({r.action for r in log})
    absent = sorted(set(ACTION_VOCABULARY) - set(present)) or ["fit_deep_mlp"]
    numeric_artifacts = [(name, float(f.value)) for name, f in sorted(manifest.artifacts.items())
                         if isinstance(f.value, (int, float)) and not isinstance(f.value, bool)]
    metric_words = ("accuracy", "auc", "f1 score", "validation accuracy")

    def true_improvement() -> tuple[str, float]:
        frm = round(rng.uniform(0.55, 0.82), 2)
        to = round(frm + rng.uniform(0.02, 0.09), 2)
        pct = (to - frm) / frm * 100.0
        word = rng.choice(metric_words)
        return (f"{word} improved from {frm:.2f} to {to:.2f}, "
                f"a {pct:.2f}% relative improvement"), pct

    snippets: list[ReasoningSnippet] = []
    counter = 0

    def add(text: str, label: str, linked: tuple[str, ...] = ()):
        nonlocal counter
        counter += 1
        snippets.append(ReasoningSnippet(snippet_id=f"s{counter:03d}", text=text,
                                         linked_decisions=linked, truth_label=label))

    # --- valid ---
    valid_texts: list[tuple[str, tuple[str, ...]]] = []
    valid_texts.append((f"After loading, the dataset has {manifest.n_rows} rows available.", ()))
    valid_texts.append((f"The dataset has {manifest.n_features} columns before encoding.", ()))
    for _ in range(3):
        sentence, _pct = true_improvement()
        valid_texts.append((f"On the holdout, {sentence}.", ()))
    valid_texts.append(("We double checked the encoder setup and found no target "
                        "leakage anywhere in the pipeline.", ()))  # rule-keyword bait
    act = rng.choice(present)
    valid_texts.append((f"We applied {act} after the split, as the plan required.", ()))
    linked_rec = rng.choice([r for r in log])
    valid_texts.append((f"We used {linked_rec.action} at this step.", (linked_rec.decision_id,)))
    valid_texts.append(("Missing values were imputed with column means before modeling.", ()))
    if numeric_artifacts:
        name, value = numeric_artifacts[0]
        valid_texts.append((f"In the final summary, {name.replace('_', ' ')} reached "
                            f"{_fmt_metric_value(value)}.", ()))
    else:
        valid_texts.append((f"To recap, the dataset has {manifest.n_rows} rows.", ()))
    valid_texts.append((f"In total the dataset has {manifest.n_rows} rows.", ()))
    valid_texts.append((f"We used {rng.choice(present)} for the categorical block.", ()))
    for text, linked in valid_texts[:n_per_category]:
        add(text, "valid", linked)

    # --- hallucinated facts: keyword-free, wrong or unlogged values ---
    hall: list[str] = []
    offsets = [50, -75, 120, 35]
    hall.append(f"The load step confirmed the dataset has "
                f"{manifest.n_rows + rng.choice(offsets[:2])} rows.")
    hall.append(f"Profiling showed the dataset has "
                f"{manifest.n_features + rng.choice((3, 5, 7))} columns.")
    hall.append(f"According to the journal, the dataset has "
                f"{manifest.n_rows + rng.choice(offsets[2:])} rows.")
    hall.append(f"Schema review found the dataset has "
                f"{manifest.n_features + rng.choice((2, 4))} feature columns.")
    wanted = n_per_category - 2
    k = 0
    while len(hall) < wanted:
        if numeric_artifacts:
            name, value = numeric_artifacts[k % len(numeric_artifacts)]
            wrong = value + rng.choice((0.08, 0.11, -0.09, 0.14))
            hall.append(f"As logged, {name.replace('_', ' ')} reached {wrong:.3f} on the holdout.")
            k += 1
        else:
            hall.append(f"A later pass confirmed the dataset has "
                        f"{manifest.n_rows + 60 + 10 * len(hall)} rows.")
    # two plants reference artifacts that were never logged: unverifiable
    hall.append("By the end of tuning, holdout log loss reached 0.410.")
    hall.append("After pruning, ensemble size reached 7.")
    for text in hall[:n_per_category]:
        add(text, "hallucinated_fact")

    # --- logical contradictions over the predicate vocabulary ---
    strengths = (0.3, 0.5, 1.0)
    logical = [
        "The table shows no missing values, yet the gaps were imputed with column means.",
        "No scaling was applied at any point; the features were standardized before the fit.",
        "We trained without any train/test split and report scores on the held-out test set.",
        f"Regularization was disabled for the final model, which uses l2 strength {rng.choice(strengths)}.",
        "The notes say no missing values, an inconsistent account since every numeric gap "
        "was imputed.",  # rule-keyword plant
        "The profile reports no missing values even though the imputation step ran twice.",
        "Features were standardized for the linear model, although no scaling appears anywhere.",
        "Scores come from the held-out test set of a run built without any train/test split.",
        f"We proceeded without regularization while keeping l2 strength {rng.choice(strengths)}.",
        "The summary insists on no missing values; the imputed columns say otherwise.",
        "No scaling was requested, but the numeric block was standardized on train statistics.",
        "Evaluation uses the held-out test set; the config shows no train/test split at all.",
    ]
    for text in logical[:n_per_category]:
        add(text, "logical_contradiction")

    # --- numerical hallucinations: every claimed delta fails recomputation ---
    emphatic = ("massive", "dramatic")
    for j in range(n_per_category):
        frm = round(rng.uniform(0.55, 0.80), 2)
        to = round(frm + rng.uniform(0.02, 0.08), 2)
        actual = (to - frm) / frm * 100.0
        claimed = round(actual * rng.uniform(1.8, 2.6), 1)
        word = rng.choice(metric_words)
        if j < 5:
            adjective = emphatic[j % 2] + " "  # rule-keyword plants, 5 of 12
        else:
            adjective = ""
        add(f"This round, {word} improved from {frm:.2f} to {to:.2f}, "
            f"a {adjective}{claimed}% relative improvement.", "numerical_hallucination")

    # --- action/reasoning mismatches ---
    tails = ("to improve the fit", "for the final model", "on the numeric block",
             "to stabilize training", "before the last refit", "across both branches",
             "despite the schedule")
    mismatch: list[tuple[str, tuple[str, ...]]] = []
    for j in range(n_per_category - 5):
        action = absent[j % len(absent)]
        mismatch.append((f"We applied {action} {tails[j % len(tails)]}.", ()))
    known_ids = {r.decision_id for r in log}
    ghost = [g for g in ("d99", "d98", "d97") if g not in known_ids][:2]
    mismatch.append((f"We used {rng.choice(present)} exactly as recorded in the journal.",
                     (ghost[0],)))
    mismatch.append((f"We applied {rng.choice(present)} per the linked decision entry.",
                     (ghost[1] if len(ghost) > 1 else ghost[0],)))
    # paraphrased plants: the stated model change never names a vocabulary
    # action, so extraction finds nothing to check
    mismatch.append(("We moved the final fit onto a deep multilayer network to capture "
                     "interactions.", ()))
    mismatch.append(("The last step swaps the linear model for a boosted ensemble with "
                     "extra depth.", ()))
    mismatch.append(("For splitting we fell back to plain random shuffling of the rows.", ()))
    for text, linked in mismatch[:n_per_category]:
        add(text, "action_reasoning_mismatch", linked)

    return snippets


# ---------------------------------------------------------------------------
# Snippet file round-trip (labels under a sibling key, stripped on load)
# ---------------------------------------------------------------------------

def snippets_to_obj(snippets: list[ReasoningSnippet]) -> dict:
    return {
        "snippets": [
            {"snippet_id": s.snippet_id, "text": s.text,
             "linked_decisions": list(s.linked_decisions)}
            for s in snippets
        ],
        "labels": {s.snippet_id: s.truth_label for s in snippets},
    }


def snippets_from_obj(obj: dict) -> list[ReasoningSnippet]:
    labels = obj.get("labels", {})
    out = []
    for row in obj["snippets"]:
        sid = row["snippet_id"]
        out.append(ReasoningSnippet(
            snippet_id=sid, text=row["text"],
            linked_decisions=tuple(row.get("linked_decisions", [])),
            truth_label=labels.get(sid),
        ))
    return out
