"""Native pool of base forecasting methods and forecast-matrix assembly.

Every method is deterministic: smoothing weights come from fixed grid
searches and AR orders from AIC over least-squares fits, so repeated runs
produce bit-identical forecasts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InsufficientHistory, SingularDesign
from .series import SplitSeries

logger = logging.getLogger(__name__)

SES_GRID = np.arange(1, 100) / 100.0            # 0.01 .. 0.99
HOLT_GRID = np.arange(1, 10) / 10.0             # 0.1 .. 0.9 for level and trend
DAMPING_GRID = np.array([0.80, 0.85, 0.90, 0.95, 0.98])
DEFAULT_MAX_AR_ORDER = 5


class ForecasterKind(str, Enum):
    NAIVE = "naive"
    SEASONAL_NAIVE = "seasonal_naive"
    RW_DRIFT = "rw_drift"
    SES = "ses"
    HOLT = "holt"
    DAMPED_HOLT = "damped_holt"
    THETA = "theta"
    AR = "ar"
    SEASONAL_ADJUSTED_AR = "seasonal_adjusted_ar"


@dataclass(frozen=True)
class ForecasterSpec:
    kind: ForecasterKind
    params: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.kind.value


DEFAULT_POOL: tuple[ForecasterSpec, ...] = (
    ForecasterSpec(ForecasterKind.NAIVE),
    ForecasterSpec(ForecasterKind.SEASONAL_NAIVE),
    ForecasterSpec(ForecasterKind.RW_DRIFT),
    ForecasterSpec(ForecasterKind.SES),
    ForecasterSpec(ForecasterKind.DAMPED_HOLT),
    ForecasterSpec(ForecasterKind.THETA),
    ForecasterSpec(ForecasterKind.SEASONAL_ADJUSTED_AR),
)


@dataclass(frozen=True)
class ForecastMatrix:
    """H-by-M matrix of pool forecasts; column order matches the pool."""

    values: np.ndarray
    methods: tuple[str, ...]

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != len(self.methods):
            raise ValueError(f"forecast matrix shape {arr.shape} does not match {len(self.methods)} methods")
        if not np.all(np.isfinite(arr)):
            raise ValueError("forecast matrix contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def horizon(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_methods(self) -> int:
        return int(self.values.shape[1])


def _as_train(train) -> np.ndarray:
    return np.asarray(train, dtype=np.float64).reshape(-1)


def naive_forecast(train, horizon: int) -> np.ndarray:
    y = _as_train(train)
    return np.full(horizon, y[-1])


def seasonal_naive_forecast(train, seasonal_period: int, horizon: int) -> np.ndarray:
    y = _as_train(train)
    s = int(seasonal_period)
    season = y[-s:]
    return np.array([season[h % s] for h in range(horizon)])


def drift_forecast(train, horizon: int) -> np.ndarray:
    y = _as_train(train)
    drift = (y[-1] - y[0]) / (y.size - 1)
    return y[-1] + drift * np.arange(1, horizon + 1)


def _ses_grid_fit(y: np.ndarray) -> tuple[float, float]:
    """Grid-search the smoothing weight; returns (weight, final level).

    The recursion starts at the first observation and scores one-step
    squared errors; ties resolve to the smallest weight.
    """
    levels = np.full(SES_GRID.shape, y[0])
    sse = np.zeros_like(SES_GRID)
    for t in range(1, y.size):
        err = y[t] - levels
        sse += err * err
        levels = levels + SES_GRID * err
    best = int(np.argmin(sse))
    return float(SES_GRID[best]), float(levels[best])


def ses_forecast(train, horizon: int) -> np.ndarray:
    """Flat forecast at the grid-optimal simple-exponential-smoothing level."""
    y = _as_train(train)
    if y.size < 3:
        raise InsufficientHistory(f"ses needs >= 3 observations, got {y.size}")
    _, level = _ses_grid_fit(y)
    return np.full(horizon, level)


def _holt_grid_fit(y: np.ndarray, phis: np.ndarray) -> tuple[float, float, float]:
    """Damped-trend smoothing over an (alpha, beta, phi) grid.

    Returns (level, trend, phi) of the grid-optimal fit; phi == 1 recovers
    plain Holt. Ties resolve to the earliest grid point.
    """
    alphas, betas, phi_grid = np.meshgrid(HOLT_GRID, HOLT_GRID, phis, indexing="ij")
    a = alphas.ravel()
    b = betas.ravel()
    p = phi_grid.ravel()
    level = np.full(a.shape, y[0])
    trend = np.full(a.shape, y[1] - y[0])
    sse = np.zeros_like(a)
    for t in range(1, y.size):
        predicted = level + p * trend
        err = y[t] - predicted
        sse += err * err
        level = predicted + a * err
        trend = p * trend + a * b * err
    best = int(np.argmin(sse))
    return float(level[best]), float(trend[best]), float(p[best])


def holt_forecast(train, horizon: int, damped: bool = False) -> np.ndarray:
    y = _as_train(train)
    if y.size < 3:
        raise InsufficientHistory(f"holt needs >= 3 observations, got {y.size}")
    phis = DAMPING_GRID if damped else np.array([1.0])
    level, trend, phi = _holt_grid_fit(y, phis)
    steps = np.arange(1, horizon + 1)
    if phi == 1.0:
        damp = steps.astype(np.float64)
    else:
        damp = np.cumsum(phi ** steps)
    return level + damp * trend


def has_significant_seasonality(values, seasonal_period: int) -> bool:
    """Autocorrelation test at the seasonal lag (90% band, M4 convention).

    Deseasonalizing on noise invents structure, so seasonal adjustment is
    only applied when the lag-s autocorrelation clears the Bartlett band.
    """
    y = _as_train(values)
    s = int(seasonal_period)
    if s <= 1 or y.size < 3 * s:
        return False
    centered = y - y.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        return False
    acf = np.array([
        float(centered[lag:] @ centered[:-lag]) / denom for lag in range(1, s + 1)
    ])
    band = 1.645 * np.sqrt((1.0 + 2.0 * float(acf[:-1] @ acf[:-1])) / y.size)
    return bool(abs(acf[s - 1]) > band)


def seasonal_indices(values, seasonal_period: int) -> np.ndarray:
    """Additive seasonal indices from the classical decomposition.

    Detrends by a centered moving average (the 2-by-s average when the
    period is even), averages the detrended values per phase, and centers
    the indices to sum to zero. Phases never observed get index 0.
    """
    y = _as_train(values)
    s = int(seasonal_period)
    if s <= 1 or y.size < s + 1:
        return np.zeros(max(s, 1))
    if s % 2 == 0:
        kernel = np.ones(s + 1)
        kernel[0] = kernel[-1] = 0.5
        kernel /= s
        offset = s // 2
    else:
        kernel = np.ones(s) / s
        offset = (s - 1) // 2
    trend = np.convolve(y, kernel, mode="valid")
    detrended = y[offset:offset + trend.size] - trend
    phases = (np.arange(trend.size) + offset) % s
    indices = np.zeros(s)
    for phase in range(s):
        mask = phases == phase
        if mask.any():
            indices[phase] = detrended[mask].mean()
    return indices - indices.mean()


def _seasonal_component(n: int, horizon: int, indices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    s = indices.size
    in_sample = indices[np.arange(n) % s]
    future = indices[(np.arange(n, n + horizon)) % s]
    return in_sample, future


def theta_forecast(train, seasonal_period: int, horizon: int) -> np.ndarray:
    """Smoothed level plus half the fitted linear slope per step ahead.

    Seasonal series are additively deseasonalized first and the seasonal
    indices are restored on the forecasts.
    """
    y = _as_train(train)
    if y.size < 4:
        raise InsufficientHistory(f"theta needs >= 4 observations, got {y.size}")
    s = int(seasonal_period)
    if s > 1 and has_significant_seasonality(y, s):
        indices = seasonal_indices(y, s)
        in_sample, future = _seasonal_component(y.size, horizon, indices)
        adjusted = y - in_sample
    else:
        future = np.zeros(horizon)
        adjusted = y
    _, level = _ses_grid_fit(adjusted)
    slope = float(np.polyfit(np.arange(adjusted.size), adjusted, 1)[0])
    return level + 0.5 * slope * np.arange(1, horizon + 1) + future


@dataclass(frozen=True)
class AutoRegression:
    coefficients: np.ndarray  # weight j applies to lag j+1
    intercept: float
    order: int


def _ols(design: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, float]:
    coef, _, rank, _ = np.linalg.lstsq(design, targets, rcond=None)
    if rank < design.shape[1]:
        raise SingularDesign(f"design rank {rank} < {design.shape[1]} columns")
    residuals = targets - design @ coef
    return coef, float(residuals @ residuals)


def fit_ar(train, max_order: int) -> AutoRegression:
    """Least-squares autoregression with AIC order selection.

    All candidate orders are scored on the same estimation window (the
    observations after the first ``max_order``). Rank-deficient candidates
    are skipped; order 0 (the mean) is always feasible, which is the
    fallback for e.g. constant series.
    """
    y = _as_train(train)
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    if y.size < max_order + 2:
        raise InsufficientHistory(f"ar({max_order}) needs >= {max_order + 2} observations, got {y.size}")
    targets = y[max_order:]
    n_eff = targets.size
    best: tuple[float, AutoRegression] | None = None
    for p in range(max_order + 1):
        design = np.ones((n_eff, p + 1))
        for lag in range(1, p + 1):
            design[:, lag] = y[max_order - lag: y.size - lag]
        try:
            coef, sse = _ols(design, targets)
        except SingularDesign:
            continue
        aic = n_eff * np.log(max(sse, 1e-300) / n_eff) + 2.0 * (p + 1)
        if best is None or aic < best[0]:
            best = (aic, AutoRegression(coefficients=coef[1:].copy(), intercept=float(coef[0]), order=p))
    assert best is not None  # order 0 never rank-deficient
    return best[1]


def forecast_ar(model: AutoRegression, train, horizon: int) -> np.ndarray:
    y = _as_train(train)
    history = list(y[-model.order:]) if model.order > 0 else []
    out = np.empty(horizon)
    for h in range(horizon):
        value = model.intercept
        for lag in range(1, model.order + 1):
            value += model.coefficients[lag - 1] * history[-lag]
        out[h] = value
        history.append(value)
    return out


def ar_forecast(train, horizon: int, max_order: int = DEFAULT_MAX_AR_ORDER) -> np.ndarray:
    y = _as_train(train)
    if y.size < 3:
        raise InsufficientHistory(f"ar needs >= 3 observations, got {y.size}")
    model = fit_ar(y, min(max_order, y.size - 2))
    return forecast_ar(model, y, horizon)


def seasonal_adjusted_ar_forecast(
    train, seasonal_period: int, horizon: int, max_order: int = DEFAULT_MAX_AR_ORDER
) -> np.ndarray:
    """AR on the additively deseasonalized series, seasonality restored."""
    y = _as_train(train)
    s = int(seasonal_period)
    if s > 1 and has_significant_seasonality(y, s):
        indices = seasonal_indices(y, s)
        in_sample, future = _seasonal_component(y.size, horizon, indices)
        adjusted = y - in_sample
    else:
        future = np.zeros(horizon)
        adjusted = y
    model = fit_ar(adjusted, min(max_order, adjusted.size - 2))
    return forecast_ar(model, adjusted, horizon) + future


def minimum_history(spec: ForecasterSpec, seasonal_period: int) -> int:
    if spec.kind in (ForecasterKind.SEASONAL_NAIVE, ForecasterKind.SEASONAL_ADJUSTED_AR):
        return max(2 * seasonal_period, 3)
    if spec.kind is ForecasterKind.THETA:
        return 4
    return 3


def forecast(spec: ForecasterSpec, train, seasonal_period: int, horizon: int) -> np.ndarray:
    """Run one pool method over the horizon.

    Raises InsufficientHistory when the training window is below the
    method's minimum; pool assembly substitutes the naive method instead.
    """
    y = _as_train(train)
    if y.size < minimum_history(spec, seasonal_period):
        raise InsufficientHistory(
            f"{spec.name} needs >= {minimum_history(spec, seasonal_period)} observations, got {y.size}"
        )
    kind = spec.kind
    if kind is ForecasterKind.NAIVE:
        return naive_forecast(y, horizon)
    if kind is ForecasterKind.SEASONAL_NAIVE:
        return seasonal_naive_forecast(y, seasonal_period, horizon)
    if kind is ForecasterKind.RW_DRIFT:
        return drift_forecast(y, horizon)
    if kind is ForecasterKind.SES:
        return ses_forecast(y, horizon)
    if kind is ForecasterKind.HOLT:
        return holt_forecast(y, horizon, damped=False)
    if kind is ForecasterKind.DAMPED_HOLT:
        return holt_forecast(y, horizon, damped=True)
    if kind is ForecasterKind.THETA:
        return theta_forecast(y, seasonal_period, horizon)
    if kind is ForecasterKind.AR:
        return ar_forecast(y, horizon, spec.params.get("max_order", DEFAULT_MAX_AR_ORDER))
    if kind is ForecasterKind.SEASONAL_ADJUSTED_AR:
        return seasonal_adjusted_ar_forecast(
            y, seasonal_period, horizon, spec.params.get("max_order", DEFAULT_MAX_AR_ORDER)
        )
    raise ValueError(f"unknown forecaster kind {kind!r}")


def pool_forecasts(
    split: SplitSeries, pool: Sequence[ForecasterSpec], seasonal_period: int, horizon: int
) -> ForecastMatrix:
    """Assemble the H-by-M forecast matrix for one series.

    Methods whose preconditions fail (or that return non-finite values)
    are substituted by the naive forecast and the substitution is logged,
    keeping the matrix complete.
    """
    if len(pool) == 0:
        raise ValueError("pool must not be empty")
    columns = []
    for spec in pool:
        try:
            column = forecast(spec, split.train, seasonal_period, horizon)
            if not np.all(np.isfinite(column)):
                raise InsufficientHistory("non-finite forecast")
        except InsufficientHistory as exc:
            logger.warning("substituting naive for %s: %s", spec.name, exc)
            column = naive_forecast(split.train, horizon)
        columns.append(column)
    return ForecastMatrix(values=np.column_stack(columns), methods=tuple(s.name for s in pool))
