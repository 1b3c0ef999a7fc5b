"""Synthetic index generators for tests and desk-scale experiments."""
from __future__ import annotations

import datetime as dt

import numpy as np

from .series import IndexSeries

START = dt.date(2005, 1, 3)


def business_days(n: int, start: dt.date = START) -> tuple[dt.date, ...]:
    days = np.busday_offset(np.datetime64(start), np.arange(n), roll="forward")
    return tuple(d.item() for d in days)


def gbm(n: int, seed: int = 0, s0: float = 1000.0, drift: float = 2e-4, vol: float = 0.012,
        name: str = "GBM") -> IndexSeries:
    rng = np.random.default_rng(seed)
    steps = (drift - 0.5 * vol ** 2) + vol * rng.standard_normal(n - 1)
    closes = s0 * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))
    return IndexSeries(name, business_days(n), closes)


def correlated_gbm(n: int, rho: float = 0.95, seed: int = 0, s0: tuple[float, float] = (1000.0, 2000.0),
                   drift: float = 2e-4, vol: float = 0.012,
                   names: tuple[str, str] = ("GBM_A", "GBM_B")) -> tuple[IndexSeries, IndexSeries]:
    """Two GBM paths whose daily log-returns have correlation ``rho``."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"rho must lie strictly inside (-1, 1), got {rho}")
    rng = np.random.default_rng(seed)
    z1 = rng.standard_normal(n - 1)
    z2 = rho * z1 + np.sqrt(1.0 - rho ** 2) * rng.standard_normal(n - 1)
    days = business_days(n)
    out = []
    for z, start, name in zip((z1, z2), s0, names):
        steps = (drift - 0.5 * vol ** 2) + vol * z
        out.append(IndexSeries(name, days, start * np.exp(np.concatenate([[0.0], np.cumsum(steps)]))))
    return out[0], out[1]


def linear(n: int, seed: int = 0, name: str = "LINEAR") -> IndexSeries:
    """Trend plus two sinusoids; every window lies in a 6-dimensional span, so AR fits it exactly."""
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=np.float64)
    level = 1000.0 + 500.0 * rng.uniform()
    trend = rng.uniform(0.05, 0.3)
    p1, p2 = rng.uniform(15.0, 40.0), rng.uniform(50.0, 120.0)
    a1, a2 = rng.uniform(10.0, 40.0), rng.uniform(20.0, 60.0)
    ph1, ph2 = rng.uniform(0, 2 * np.pi, size=2)
    closes = level + trend * t + a1 * np.sin(2 * np.pi * t / p1 + ph1) + a2 * np.sin(2 * np.pi * t / p2 + ph2)
    return IndexSeries(name, business_days(n), closes)


def log_returns(series: IndexSeries) -> np.ndarray:
    return np.diff(np.log(series.closes))
