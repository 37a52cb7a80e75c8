"""Cross-seed statistical comparisons.

Welch (unequal-variance) two-sample t-tests with Welch-Satterthwaite
degrees of freedom, Bonferroni adjustment, t-based 95% confidence
intervals, and the pairwise comparison driver used to contrast
preference presets on a shared topology. Seeds are the unit of
analysis throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

from scipy import stats as _st

ALPHA = 0.05


class AnalysisError(ValueError):
    """Invalid sample input for a statistical procedure."""


@dataclass(frozen=True)
class SampleSummary:
    """Size, mean, and unbiased variance of one sample."""

    n: int
    mean: float
    variance: float

    @classmethod
    def from_values(cls, values) -> "SampleSummary":
        values = [float(v) for v in values]
        n = len(values)
        if n < 2:
            raise AnalysisError(f"need at least 2 observations, got {n}")
        mean = sum(values) / n
        var = sum((v - mean) ** 2 for v in values) / (n - 1)
        return cls(n=n, mean=mean, variance=var)


class WelchResult(NamedTuple):
    t: float
    dof: float
    p: float
    degenerate: bool = False


def welch_t(a: SampleSummary, b: SampleSummary) -> WelchResult:
    """Welch two-sample t statistic, dof, and two-sided p-value.

    Zero variance in both samples degenerates: equal means give the
    (t=0, p=1) limit; unequal means give p=0 with the result flagged so
    callers can report it rather than trust an infinite statistic.
    """
    if a.n < 2 or b.n < 2:
        raise AnalysisError("both samples need n >= 2")
    if a.variance < 0 or b.variance < 0:
        raise AnalysisError("variance must be non-negative")
    sa = a.variance / a.n
    sb = b.variance / b.n
    if sa + sb == 0.0:
        if a.mean == b.mean:
            return WelchResult(t=0.0, dof=math.nan, p=1.0, degenerate=False)
        sign = 1.0 if a.mean > b.mean else -1.0
        return WelchResult(t=sign * math.inf, dof=math.nan, p=0.0, degenerate=True)
    t = (a.mean - b.mean) / math.sqrt(sa + sb)
    dof = (sa + sb) ** 2 / (sa**2 / (a.n - 1) + sb**2 / (b.n - 1))
    p = float(2.0 * _st.t.sf(abs(t), dof))
    return WelchResult(t=t, dof=dof, p=p)


def bonferroni(p: float, m: int) -> float:
    """Adjust a raw p-value for m comparisons: min(1, m*p)."""
    if not (0.0 <= p <= 1.0):
        raise AnalysisError(f"p must be in [0, 1], got {p}")
    if m < 1:
        raise AnalysisError(f"comparison count must be >= 1, got {m}")
    return min(1.0, m * p)


def ci95(sample: SampleSummary) -> tuple:
    """Two-sided 95% t confidence interval for the sample mean."""
    if sample.n < 2:
        raise AnalysisError("confidence interval needs n >= 2")
    crit = float(_st.t.ppf(0.975, sample.n - 1))
    half = crit * math.sqrt(sample.variance / sample.n)
    return (sample.mean - half, sample.mean + half)


@dataclass(frozen=True)
class PairwiseResult:
    """One tested pair of preference groups."""

    pair: tuple
    t: float
    dof: float
    p_raw: float
    p_adjusted: float
    significant: bool
    degenerate: bool


@dataclass(frozen=True)
class ComparisonReport:
    """All pairwise tests plus the ascending ordering of group means."""

    metric: str
    pairs: tuple
    ordering: tuple
    group_means: dict
    group_ci95: dict


def compare_preferences(groups: dict, metric: str = "bci", alpha: float = ALPHA) -> ComparisonReport:
    """Test every unordered pair of groups and report the mean ordering.

    ``groups`` maps a preference label to its per-seed metric values.
    The Bonferroni factor m is the number of pairs tested. The ordering
    lists labels by ascending group mean; it is invariant to any
    positive affine transform applied uniformly to all samples.
    """
    if len(groups) < 2:
        raise AnalysisError("need at least 2 preference groups to compare")
    summaries = {}
    for label, values in groups.items():
        summaries[label] = SampleSummary.from_values(values)
    labels = list(groups)
    pairs = list(combinations(labels, 2))
    m = len(pairs)
    results = []
    for la, lb in pairs:
        res = welch_t(summaries[la], summaries[lb])
        adj = bonferroni(res.p, m)
        results.append(
            PairwiseResult(
                pair=(la, lb),
                t=res.t,
                dof=res.dof,
                p_raw=res.p,
                p_adjusted=adj,
                significant=adj < alpha,
                degenerate=res.degenerate,
            )
        )
    ordering = tuple(sorted(labels, key=lambda lb: summaries[lb].mean))
    return ComparisonReport(
        metric=metric,
        pairs=tuple(results),
        ordering=ordering,
        group_means={lb: summaries[lb].mean for lb in labels},
        group_ci95={lb: ci95(summaries[lb]) for lb in labels},
    )
