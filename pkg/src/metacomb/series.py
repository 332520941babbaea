"""Time-series containers, splitting, standardization, and fixed-length inputs."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import SeriesTooShort


class Frequency(str, Enum):
    YEARLY = "yearly"
    QUARTERLY = "quarterly"
    MONTHLY = "monthly"
    OTHER = "other"


@dataclass(frozen=True)
class FrequencyDefaults:
    horizon: int
    seasonal_period: int
    input_length: int
    ort_weight: float  # cross-validated orthogonality weight for this group


FREQUENCY_DEFAULTS: dict[Frequency, FrequencyDefaults] = {
    Frequency.YEARLY: FrequencyDefaults(horizon=6, seasonal_period=1, input_length=32, ort_weight=1e-1),
    Frequency.QUARTERLY: FrequencyDefaults(horizon=8, seasonal_period=4, input_length=64, ort_weight=5e-3),
    Frequency.MONTHLY: FrequencyDefaults(horizon=18, seasonal_period=12, input_length=128, ort_weight=1e-2),
}


def _as_float_vector(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64).reshape(-1)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """One univariate series with its forecasting conventions.

    ``horizon`` is the number of future steps to predict and
    ``seasonal_period`` the frequency used by seasonal methods and scaled
    errors (12 monthly, 4 quarterly, 1 yearly).
    """

    id: str
    frequency: Frequency
    values: np.ndarray
    horizon: int
    seasonal_period: int

    def __post_init__(self):
        arr = _as_float_vector(self.values)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.horizon < 1:
            raise ValueError(f"series {self.id}: horizon must be >= 1, got {self.horizon}")
        if self.seasonal_period < 1:
            raise ValueError(f"series {self.id}: seasonal period must be >= 1, got {self.seasonal_period}")
        min_len = max(3, self.seasonal_period + 2)
        if arr.size < min_len:
            raise ValueError(f"series {self.id}: needs at least {min_len} observations, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"series {self.id}: contains non-finite values")

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class SplitSeries:
    """Training window and the held-out window of length ``horizon``."""

    train: np.ndarray
    test: np.ndarray


@dataclass(frozen=True)
class PreparedInput:
    """Fixed-length standardized network input.

    ``mean`` and ``sd`` are the population statistics of the retained
    training window (the most recent ``len(data)`` observations at most);
    pad positions hold 0, which coincides with the standardized mean.
    A constant window is recorded with ``sd == 0`` and an all-zero vector.
    """

    data: np.ndarray
    mean: float
    sd: float


def split_train_test(series: TimeSeries) -> SplitSeries:
    """Split so the last ``horizon`` observations form the test window."""
    values = series.values
    h = series.horizon
    if values.size <= h:
        raise SeriesTooShort(
            f"series {series.id}: length {values.size} does not exceed horizon {h}"
        )
    return SplitSeries(train=values[:-h].copy(), test=values[-h:].copy())


def standardize(values) -> tuple[np.ndarray, float, float]:
    """Center and scale to zero mean and unit population SD.

    Returns ``(standardized, mean, sd)``. A constant input maps to all
    zeros with ``sd`` recorded as 0.
    """
    arr = _as_float_vector(values)
    if arr.size == 0:
        raise ValueError("cannot standardize an empty vector")
    mean = float(arr.mean())
    sd = float(arr.std())  # population (divide-by-n)
    if sd == 0.0:
        return np.zeros_like(arr), mean, 0.0
    return (arr - mean) / sd, mean, sd


def pad_or_truncate(values, length: int) -> np.ndarray:
    """Force the vector to ``length``: pre-pad with zeros or drop the oldest."""
    if length < 1:
        raise ValueError(f"target length must be >= 1, got {length}")
    arr = _as_float_vector(values)
    if arr.size == length:
        return arr.copy()
    if arr.size > length:
        return arr[arr.size - length:].copy()
    out = np.zeros(length, dtype=np.float64)
    out[length - arr.size:] = arr
    return out


def prepare_input(train_values, length: int) -> PreparedInput:
    """Standardize the most recent window and pre-pad to ``length``.

    Truncation happens before standardization so the statistics describe
    exactly the window the network sees; the test window never enters.
    """
    arr = _as_float_vector(train_values)
    if arr.size == 0:
        raise ValueError("cannot prepare an empty training window")
    window = arr[-length:] if arr.size > length else arr
    standardized, mean, sd = standardize(window)
    return PreparedInput(data=pad_or_truncate(standardized, length), mean=mean, sd=sd)
