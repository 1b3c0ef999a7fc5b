"""Session partition and strict per-window min-max scaling.

A series of ``L`` days is cut into ``N = L // session_len`` consecutive
sessions. Pair ``k`` trains on session ``k`` and tests on session ``k + 1``,
so there are ``N - 1`` pairs. Training observations start on the first
``obs_per_subset`` days of the training session; with default sizes the last
label lands on day 89 and days 90-120 are a buffer that no label touches.
Test windows start ``input_len`` days before the test session and roll by
``stride`` until the forecast horizon reaches the session's last day.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

ROLLING_MODES = ("actuals", "recursive")


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class WindowConfig:
    input_len: int = 30
    label_len: int = 30
    obs_per_subset: int = 30
    session_len: int = 120
    stride: int = 1
    # how test windows are refilled once they overlap the test session
    rolling: str = "actuals"

    def __post_init__(self):
        for name in ("input_len", "label_len", "obs_per_subset", "session_len", "stride"):
            if getattr(self, name) < 1:
                raise PlanningError(f"{name} must be >= 1")
        if self.session_len < self.input_len + self.label_len:
            raise PlanningError(
                f"session_len {self.session_len} cannot hold one observation of "
                f"{self.input_len}+{self.label_len} days"
            )
        if self.obs_per_subset - 1 + self.input_len + self.label_len > self.session_len:
            raise PlanningError(
                f"{self.obs_per_subset} observations of {self.input_len + self.label_len} days "
                f"do not fit in a {self.session_len}-day session"
            )
        if self.rolling not in ROLLING_MODES:
            raise PlanningError(f"rolling must be one of {ROLLING_MODES}, got {self.rolling!r}")


@dataclass(frozen=True)
class Observation:
    input: np.ndarray
    label: np.ndarray
    start_index: int


@dataclass(frozen=True)
class TrainSession:
    session_id: int
    start: int
    end: int  # exclusive
    obs_starts: tuple[int, ...]

    span: int = 60  # input_len + label_len

    @property
    def max_label_offset(self) -> int:
        return self.obs_starts[-1] + self.span - 1


@dataclass(frozen=True)
class TestSession:
    __test__ = False
    session_id: int
    start: int
    end: int  # exclusive
    window_starts: tuple[int, ...]  # input start offsets; forecasts begin input_len later


@dataclass(frozen=True)
class SessionPlan:
    series_len: int
    config: WindowConfig
    train_sessions: tuple[TrainSession, ...]
    test_sessions: tuple[TestSession, ...]

    @property
    def n_pairs(self) -> int:
        return len(self.train_sessions)

    def to_json(self) -> str:
        cfg = self.config
        doc = {
            "series_len": self.series_len,
            "config": asdict(cfg),
            "sessions": [
                {
                    "session_id": tr.session_id,
                    "train": {"start": tr.start, "end": tr.end,
                              "obs_starts": list(tr.obs_starts),
                              "max_label_offset": tr.max_label_offset,
                              "buffer": [tr.max_label_offset + 1, tr.end]},
                    "test": {"start": te.start, "end": te.end,
                             "window_starts": list(te.window_starts)},
                }
                for tr, te in zip(self.train_sessions, self.test_sessions)
            ],
        }
        return json.dumps(doc, indent=2)


def min_series_len(cfg: WindowConfig) -> int:
    return 2 * cfg.session_len


def plan_sessions(series_len: int, cfg: WindowConfig = WindowConfig()) -> SessionPlan:
    if series_len < min_series_len(cfg):
        raise PlanningError(
            f"series of {series_len} days is too short: need at least {min_series_len(cfg)} "
            f"(two sessions of {cfg.session_len})"
        )
    n_sessions = series_len // cfg.session_len
    span = cfg.input_len + cfg.label_len
    train, test = [], []
    for k in range(n_sessions - 1):
        s0 = k * cfg.session_len
        t0 = s0 + cfg.session_len
        train.append(TrainSession(k, s0, t0, tuple(range(s0, s0 + cfg.obs_per_subset)), span))
        first = t0 - cfg.input_len
        last = t0 + cfg.session_len - span  # forecast horizon ends on the session's last day
        test.append(TestSession(k, t0, t0 + cfg.session_len, tuple(range(first, last + 1, cfg.stride))))
    return SessionPlan(series_len, cfg, tuple(train), tuple(test))


def observations(values: np.ndarray, session: TrainSession, cfg: WindowConfig) -> list[Observation]:
    values = np.asarray(values, dtype=np.float64)
    out = []
    for s in session.obs_starts:
        out.append(Observation(values[s:s + cfg.input_len],
                               values[s + cfg.input_len:s + cfg.input_len + cfg.label_len], s))
    return out


def session_windows(values: np.ndarray, session: TestSession, cfg: WindowConfig) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (inputs, actuals) for every rolling window of a test session."""
    values = np.asarray(values, dtype=np.float64)
    X = np.stack([values[s:s + cfg.input_len] for s in session.window_starts])
    Y = np.stack([values[s + cfg.input_len:s + cfg.input_len + cfg.label_len] for s in session.window_starts])
    return X, Y



@dataclass(frozen=True)
class NormalizedWindow:
    values: np.ndarray
    lo: float
    hi: float
    degenerate: bool


def normalize_window(w) -> NormalizedWindow:
    w = np.asarray(w, dtype=np.float64)
    lo, hi = float(w.min()), float(w.max())
    if hi == lo:
        return NormalizedWindow(np.full_like(w, 0.5), lo, hi, True)
    return NormalizedWindow((w - lo) / (hi - lo), lo, hi, False)


def apply_scale(x, lo: float, hi: float) -> np.ndarray:
    """Scale ``x`` with another window's (lo, hi); used for labels."""
    x = np.asarray(x, dtype=np.float64)
    if hi == lo:
        return np.full_like(x, 0.5)
    return (x - lo) / (hi - lo)


def denormalize(pred, lo: float, hi: float) -> np.ndarray:
    pred = np.asarray(pred, dtype=np.float64)
    if hi == lo:
        return np.full_like(pred, lo)
    return lo + pred * (hi - lo)


def normalize_rows(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise strict min-max; returns (scaled, lo, hi) with lo/hi as columns."""
    X = np.asarray(X, dtype=np.float64)
    lo = X.min(axis=-1, keepdims=True)
    hi = X.max(axis=-1, keepdims=True)
    width = hi - lo
    flat = width == 0
    scaled = np.where(flat, 0.5, (X - lo) / np.where(flat, 1.0, width))
    return scaled, lo, hi


def scale_rows(Y: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    width = hi - lo
    flat = width == 0
    return np.where(flat, 0.5, (Y - lo) / np.where(flat, 1.0, width))


def denormalize_rows(P: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    width = hi - lo
    return np.where(width == 0, lo, lo + P * width)
