"""Small statistics toolkit for the verification harness."""
from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps
from scipy.special import gammaincc


class Outcome(str, enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    SKIPPED = "SKIPPED"


@dataclass
class SampleSummary:
    n: int
    counts: dict[int, int]

    @classmethod
    def from_values(cls, values) -> "SampleSummary":
        c = Counter(np.asarray(values).tolist())
        return cls(sum(c.values()), dict(c))

    @classmethod
    def from_pmf(cls, pmf: dict[int, float], n: int) -> "SampleSummary":
        """Expected counts ``n * pmf`` (not integers); used as a goodness-of-fit reference."""
        return cls(n, {k: n * p for k, p in pmf.items()})


@dataclass
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float
    pooled_categories: list[list[int]]
    outcome: Outcome
    test: str = "chi_square_two_sample"

    def to_json(self) -> dict:
        return {"test": self.test, "statistic": self.statistic, "dof": self.dof,
                "p_value": self.p_value, "pooled_categories": self.pooled_categories,
                "outcome": self.outcome.value}


def _pool(keys: list[int], table: np.ndarray, min_expected: float) -> tuple[list[list[int]], np.ndarray]:
    """Merge categories from the upper tail down until every expected cell is large enough."""
    groups = [[k] for k in keys]
    cols = [table[:, i].astype(float) for i in range(len(keys))]
    rows = table.sum(axis=1)
    total = rows.sum()

    def min_exp(col):
        return (rows * col.sum() / total).min()

    while len(cols) > 1:
        weakest = min(range(len(cols)), key=lambda i: min_exp(cols[i]))
        if min_exp(cols[weakest]) >= min_expected:
            break
        # merge toward the bulk: the last group merges left, everything else right
        j = weakest - 1 if weakest == len(cols) - 1 else weakest + 1
        lo, hi = sorted((weakest, j))
        groups[lo] = groups[lo] + groups[hi]
        cols[lo] = cols[lo] + cols[hi]
        del groups[hi], cols[hi]
    return groups, np.array(cols).T


def _gate(p: float, alpha: float) -> Outcome:
    return Outcome.PASS if p > alpha else Outcome.FAIL


def chi_square_two_sample(a: SampleSummary, b: SampleSummary, min_expected: float = 5.0,
                          alpha: float = 1e-3, test: str = "chi_square_two_sample") -> ChiSquareResult:
    """Homogeneity test of two count summaries over their joint support.

    Sparse categories are pooled before the statistic is formed; if only one
    pooled category remains the result is SKIPPED with p = 1.
    """
    if a.n <= 0 or b.n <= 0:
        raise ValueError("both samples must be nonempty")
    keys = sorted(set(a.counts) | set(b.counts))
    table = np.array([[a.counts.get(k, 0) for k in keys], [b.counts.get(k, 0) for k in keys]], dtype=float)
    groups, pooled = _pool(keys, table, min_expected)
    if pooled.shape[1] < 2:
        return ChiSquareResult(0.0, 0, 1.0, groups, Outcome.SKIPPED, test)
    rows = pooled.sum(axis=1, keepdims=True)
    cols = pooled.sum(axis=0, keepdims=True)
    expected = rows * cols / pooled.sum()
    stat = float(((pooled - expected) ** 2 / expected).sum())
    dof = pooled.shape[1] - 1
    p = float(gammaincc(dof / 2.0, stat / 2.0))
    return ChiSquareResult(stat, dof, p, groups, _gate(p, alpha), test)


def chi_square_gof(sample: SampleSummary, pmf: dict[int, float], min_expected: float = 5.0,
                   alpha: float = 1e-3, test: str = "chi_square_gof") -> ChiSquareResult:
    """Goodness of fit of observed counts against an exact pmf (missing mass lumped upward)."""
    keys = sorted(set(sample.counts) | set(pmf))
    expected = np.array([sample.n * pmf.get(k, 0.0) for k in keys])
    observed = np.array([sample.counts.get(k, 0) for k in keys], dtype=float)
    missing = sample.n - expected.sum()
    if missing > 0:
        expected[-1] += missing
    groups = [[k] for k in keys]
    obs, exp = list(observed), list(expected)
    while len(exp) > 1 and min(exp) < min_expected:
        i = int(np.argmin(exp))
        j = i - 1 if i == len(exp) - 1 else i + 1
        lo, hi = sorted((i, j))
        groups[lo] += groups[hi]
        obs[lo] += obs[hi]
        exp[lo] += exp[hi]
        del groups[hi], obs[hi], exp[hi]
    if len(exp) < 2:
        return ChiSquareResult(0.0, 0, 1.0, groups, Outcome.SKIPPED, test)
    obs, exp = np.array(obs), np.array(exp)
    stat = float(((obs - exp) ** 2 / exp).sum())
    dof = len(exp) - 1
    p = float(gammaincc(dof / 2.0, stat / 2.0))
    return ChiSquareResult(stat, dof, p, groups, _gate(p, alpha), test)


def wilson_interval(successes: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials and trials >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo, hi = centre - half, centre + half
    if successes == 0:
        lo = 0.0
    if successes == trials:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


@dataclass
class SlopeFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    slope_stderr: float


def loglog_slope(values: dict[int, float]) -> SlopeFit:
    """Least-squares line through ``(log h, log value)``."""
    hs = sorted(values)
    if len(hs) < 3:
        raise ValueError("need at least 3 points")
    v = np.array([values[h] for h in hs], dtype=float)
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        bad = [h for h in hs if not (np.isfinite(values[h]) and values[h] > 0)]
        raise ValueError(f"log-log fit needs positive finite values; offending h: {bad}")
    lx, ly = np.log(hs), np.log(v)
    fit = sps.linregress(lx, ly)
    return SlopeFit(list(zip(lx.tolist(), ly.tolist())), float(fit.slope), float(fit.intercept),
                    float(fit.stderr))


def bonferroni(p_values, m: int | None = None) -> list[float]:
    m = len(p_values) if m is None else m
    return [min(1.0, p * m) for p in p_values]
