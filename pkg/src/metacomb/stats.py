"""Friedman test and Nemenyi multiple-comparisons-with-the-best intervals.

Methods are compared by per-series scores (lower is better by default):
the Friedman chi-square statistic tests whether any method differs, and
the MCB intervals around mean ranks show which. Two methods differ
significantly iff their intervals do not overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import chi2, rankdata

from .errors import UnsupportedK

# Studentized-range critical values divided by sqrt(2), alpha = 0.05,
# infinite degrees of freedom, for k = 2..10 compared methods.
# Source: Demsar (2006), "Statistical comparisons of classifiers over
# multiple data sets", JMLR 7, Table 5(a).
NEMENYI_Q_05 = {
    2: 1.959964, 3: 2.343701, 4: 2.569032, 5: 2.727774, 6: 2.849705,
    7: 2.948319, 8: 3.030879, 9: 3.101730, 10: 3.163684,
}


@dataclass(frozen=True)
class RankTable:
    """Per-series average ranks (ties share the mean rank)."""

    ranks: np.ndarray       # (N, k)
    mean_ranks: np.ndarray  # (k,)


def rank_scores(scores, lower_is_better: bool = True) -> RankTable:
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 1 or s.shape[1] < 2:
        raise ValueError(f"scores must be N x k with k >= 2, got shape {s.shape}")
    oriented = s if lower_is_better else -s
    ranks = np.vstack([rankdata(row, method="average") for row in oriented])
    return RankTable(ranks=ranks, mean_ranks=ranks.mean(axis=0))


@dataclass(frozen=True)
class FriedmanResult:
    statistic: float
    p_value: float
    mean_ranks: np.ndarray


def friedman(scores, lower_is_better: bool = True) -> FriedmanResult:
    """Friedman chi-square over N series and k methods.

    A fully tied table yields statistic 0 and p-value 1.
    """
    s = np.asarray(scores, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] < 2 or s.shape[1] < 2:
        raise ValueError(f"friedman needs at least 2 series and 2 methods, got shape {s.shape}")
    n, k = s.shape
    table = rank_scores(s, lower_is_better)
    rank_sums = table.ranks.sum(axis=0)
    statistic = 12.0 / (n * k * (k + 1)) * float(rank_sums @ rank_sums) - 3.0 * n * (k + 1)
    statistic = max(statistic, 0.0)  # guard float cancellation on tied tables
    return FriedmanResult(
        statistic=float(statistic),
        p_value=float(chi2.sf(statistic, k - 1)),
        mean_ranks=table.mean_ranks,
    )


@dataclass(frozen=True)
class McbInterval:
    method_index: int
    mean_rank: float
    lower: float
    upper: float


@dataclass(frozen=True)
class McbResult:
    """Intervals sorted by mean rank (best first)."""

    intervals: tuple[McbInterval, ...]
    half_width: float
    friedman_statistic: float
    friedman_p_value: float
    friedman_rejects: bool


def nemenyi_mcb(scores, alpha: float = 0.05, lower_is_better: bool = True) -> McbResult:
    """Mean ranks with half-width q_(alpha,k) * sqrt(k(k+1)/(12N)).

    If the Friedman test does not reject at ``alpha`` the intervals are
    still produced, flagged with ``friedman_rejects=False``.
    """
    if alpha != 0.05:
        raise ValueError("only alpha=0.05 critical values are tabulated")
    s = np.asarray(scores, dtype=np.float64)
    n, k = s.shape
    if k not in NEMENYI_Q_05:
        raise UnsupportedK(f"no tabulated critical value for k={k} (supported: 2..10)")
    test = friedman(s, lower_is_better)
    half_width = NEMENYI_Q_05[k] * np.sqrt(k * (k + 1) / (12.0 * n))
    order = np.argsort(test.mean_ranks, kind="stable")
    intervals = tuple(
        McbInterval(
            method_index=int(j),
            mean_rank=float(test.mean_ranks[j]),
            lower=float(test.mean_ranks[j] - half_width),
            upper=float(test.mean_ranks[j] + half_width),
        )
        for j in order
    )
    return McbResult(
        intervals=intervals,
        half_width=float(half_width),
        friedman_statistic=test.statistic,
        friedman_p_value=test.p_value,
        friedman_rejects=bool(test.p_value < alpha),
    )
