"""Forecast accuracy: MAPE, RMSE and their per-session summaries."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numcore import DimensionError


class MetricDomainError(ValueError):
    pass


def _pair(actual, forecast) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64).ravel()
    f = np.asarray(forecast, dtype=np.float64).ravel()
    if a.shape != f.shape:
        raise DimensionError(f"actual has {a.size} points but forecast has {f.size}")
    if a.size == 0:
        raise DimensionError("metrics need at least one point")
    return a, f


def mape(actual, forecast) -> float:
    a, f = _pair(actual, forecast)
    if np.any(a == 0):
        raise MetricDomainError("MAPE is undefined where the actual value is 0")
    return float(np.mean(np.abs((a - f) / a)))


def rmse(actual, forecast) -> float:
    a, f = _pair(actual, forecast)
    return float(np.sqrt(np.mean((a - f) ** 2)))


@dataclass(frozen=True)
class SessionMetrics:
    session_id: int
    mape: float
    rmse: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 1:
            raise ValueError("n_points must be >= 1")
        for name in ("mape", "rmse"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")


def session_metrics(session_id: int, actual, forecast) -> SessionMetrics:
    """Pool every forecast point of every rolling window of one test session."""
    a, f = _pair(actual, forecast)
    return SessionMetrics(session_id, mape(a, f), rmse(a, f), int(a.size))


@dataclass(frozen=True)
class MetricsSummary:
    mean_mape: float
    std_mape: float
    mean_rmse: float
    std_rmse: float
    per_session: tuple[SessionMetrics, ...] = field(default_factory=tuple)
    single_sample: bool = False

    @property
    def n_sessions(self) -> int:
        return len(self.per_session)


def _mean_std(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), float(arr.std(ddof=1))


def summarize(per_session) -> MetricsSummary:
    """Sample mean and (n-1) standard deviation of MAPE and RMSE over sessions."""
    per_session = tuple(sorted(per_session, key=lambda s: s.session_id))
    if not per_session:
        raise ValueError("summarize needs at least one session")
    mm, sm = _mean_std([s.mape for s in per_session])
    mr, sr = _mean_std([s.rmse for s in per_session])
    return MetricsSummary(mm, sm, mr, sr, per_session, len(per_session) == 1)


def format_pm(mean: float, std: float, digits: int) -> str:
    return f"{mean:.{digits}f}±{std:.{digits}f}"
