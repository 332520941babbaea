"""Forecast accuracy measures and the ambiguity decomposition.

SMAPE, MASE, series-level OWA (sOWA) and collection-level OWA follow the
M4 conventions; the ambiguity decomposition splits a convex combination's
mean squared error into a weighted individual-error term minus a
diversity term.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateBenchmark, DegenerateScale, LengthMismatch


@dataclass(frozen=True)
class SeriesScore:
    smape: float
    mase: float
    sowa: float


@dataclass(frozen=True)
class CollectionScore:
    owa: float
    mean_sowa: float
    sd_sowa: float


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.size != p.size:
        raise LengthMismatch(f"actual has length {a.size}, predicted has length {p.size}")
    if a.size == 0:
        raise LengthMismatch("empty vectors")
    return a, p


def smape(actual, predicted) -> float:
    """Symmetric MAPE in [0, 200]; a 0/0 term counts as 0."""
    a, p = _pair(actual, predicted)
    denom = np.abs(a) + np.abs(p)
    terms = np.zeros_like(a)
    nz = denom > 0
    terms[nz] = 200.0 * np.abs(a[nz] - p[nz]) / denom[nz]
    return float(terms.mean())


def seasonal_naive_scale(train, seasonal_period: int) -> float:
    """In-sample one-step seasonal-naive MAE used as the MASE denominator."""
    t = np.asarray(train, dtype=np.float64).reshape(-1)
    s = int(seasonal_period)
    if t.size <= s:
        raise LengthMismatch(f"train length {t.size} must exceed seasonal period {s}")
    return float(np.abs(t[s:] - t[:-s]).mean())


def mase(actual, predicted, train, seasonal_period: int) -> float:
    """Mean absolute error over the horizon scaled by the in-sample naive MAE."""
    a, p = _pair(actual, predicted)
    scale = seasonal_naive_scale(train, seasonal_period)
    if scale == 0.0:
        raise DegenerateScale("in-sample seasonal-naive MAE is zero")
    return float(np.abs(a - p).mean() / scale)


def sowa(actual, predicted, naive_pred, train, seasonal_period: int) -> float:
    """Series-level OWA: average of SMAPE and MASE ratios vs. the naive forecast."""
    smape_bench = smape(actual, naive_pred)
    mase_bench = mase(actual, naive_pred, train, seasonal_period)
    if smape_bench == 0.0 or mase_bench == 0.0:
        raise DegenerateBenchmark("naive benchmark SMAPE or MASE is zero")
    return 0.5 * smape(actual, predicted) / smape_bench + \
        0.5 * mase(actual, predicted, train, seasonal_period) / mase_bench


def series_score(actual, predicted, naive_pred, train, seasonal_period: int) -> SeriesScore:
    return SeriesScore(
        smape=smape(actual, predicted),
        mase=mase(actual, predicted, train, seasonal_period),
        sowa=sowa(actual, predicted, naive_pred, train, seasonal_period),
    )


def owa(items: Sequence[tuple]) -> CollectionScore:
    """Collection OWA in ratio-of-sums form plus per-series sOWA statistics.

    ``items`` holds ``(actual, predicted, naive_pred, train, seasonal_period)``
    tuples. Per-series degeneracies propagate; callers filter such series
    beforehand.
    """
    if len(items) == 0:
        raise DegenerateBenchmark("empty collection")
    smape_pred = smape_naive = mase_pred = mase_naive = 0.0
    sowas = []
    for actual, predicted, naive_pred, train, s in items:
        smape_pred += smape(actual, predicted)
        smape_naive += smape(actual, naive_pred)
        mase_pred += mase(actual, predicted, train, s)
        mase_naive += mase(actual, naive_pred, train, s)
        sowas.append(sowa(actual, predicted, naive_pred, train, s))
    if smape_naive == 0.0 or mase_naive == 0.0:
        raise DegenerateBenchmark("aggregate naive benchmark is zero")
    value = 0.5 * smape_pred / smape_naive + 0.5 * mase_pred / mase_naive
    arr = np.asarray(sowas)
    return CollectionScore(owa=float(value), mean_sowa=float(arr.mean()), sd_sowa=float(arr.std()))


@dataclass(frozen=True)
class AmbiguityDecomposition:
    """``mse_comb == weighted_error - diversity`` for simplex weights."""

    mse_comb: float
    weighted_error: float
    diversity: float


def ambiguity_decomposition(forecasts, weights, actual) -> AmbiguityDecomposition:
    """Evaluate all three terms of the combination's squared-error identity.

    ``forecasts`` is the H-by-M matrix of pool forecasts, ``weights`` a
    simplex vector, ``actual`` the realized horizon.
    """
    f = np.asarray(forecasts, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    y = np.asarray(actual, dtype=np.float64).reshape(-1)
    if f.ndim != 2 or f.shape != (y.size, w.size):
        raise LengthMismatch(
            f"forecast matrix {f.shape} incompatible with horizon {y.size} and {w.size} weights"
        )
    combined = f @ w
    mse_comb = float(np.mean((combined - y) ** 2))
    weighted_error = float(np.mean(((f - y[:, None]) ** 2) @ w))
    diversity = float(np.mean(((f - combined[:, None]) ** 2) @ w))
    return AmbiguityDecomposition(mse_comb=mse_comb, weighted_error=weighted_error, diversity=diversity)
