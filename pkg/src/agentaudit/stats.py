"""Seed-sweep summaries and proportion statistics for experiment reports."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from statistics import NormalDist

from .errors import ArgError, SpecError


def percentile(values: list[float], p: float) -> float:
    """Nearest-rank percentile on sorted values: sorted[ceil(p/100 * n) - 1]."""
    if not values:
        raise ArgError("percentile of empty list")
    if not 0.0 < p <= 100.0:
        raise ArgError(f"percentile must be in (0,100], got {p}")
    ordered = sorted(values)
    return ordered[max(0, math.ceil(p / 100.0 * len(ordered)) - 1)]


@dataclass(frozen=True)
class StatsSummary:
    mean: float
    std: float
    pct_2_5: float
    pct_97_5: float
    n: int

    def as_dict(self) -> dict:
        return {"mean": self.mean, "std": self.std, "pct_2_5": self.pct_2_5,
                "pct_97_5": self.pct_97_5, "n": self.n}


def summarize(values: list[float]) -> StatsSummary:
    if not values:
        raise ArgError("summarize of empty list")
    mean = statistics.fmean(values)
    std = statistics.stdev(values) if len(values) > 1 else 0.0
    lo = percentile(values, 2.5)
    hi = percentile(values, 97.5)
    # fmean can land one ulp outside [lo, hi] when all values are identical
    bracketed = (lo <= mean <= hi or math.isclose(mean, lo, rel_tol=1e-12)
                 or math.isclose(mean, hi, rel_tol=1e-12))
    if not bracketed:
        raise SpecError(f"percentiles do not bracket the mean: {lo} / {mean} / {hi}")
    return StatsSummary(mean=mean, std=std, pct_2_5=lo, pct_97_5=hi, n=len(values))


def frac_at_or_above(values: list[float], reference: float) -> float:
    if not values:
        raise ArgError("fraction of empty list")
    return sum(1 for v in values if v >= reference) / len(values)


def wilson_interval(successes: float, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise ArgError("n must be positive")
    if not 0 <= successes <= n:
        raise ArgError(f"successes must be in [0, n], got {successes}/{n}")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    phat = successes / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def two_proportion_z(acc_a: float, n_a: int, acc_b: float, n_b: int) -> tuple[float, float]:
    """Pooled two-proportion z-test; returns (z, two-sided p)."""
    if n_a <= 0 or n_b <= 0:
        raise ArgError("sample sizes must be positive")
    for acc in (acc_a, acc_b):
        if not 0.0 <= acc <= 1.0:
            raise ArgError(f"proportion outside [0,1]: {acc}")
    pooled = (acc_a * n_a + acc_b * n_b) / (n_a + n_b)
    se = math.sqrt(pooled * (1 - pooled) * (1 / n_a + 1 / n_b))
    if se == 0.0:
        return 0.0, 1.0
    z = (acc_a - acc_b) / se
    p = math.erfc(abs(z) / math.sqrt(2.0))  # two-sided tail, stable at large z
    return z, p


def format_p(p: float, floor: float = 0.001) -> str:
    """Report convention: tiny p-values print as a bound, not a numeral."""
    if p < floor:
        return f"<{floor}"
    return f"{p:.3f}"
