"""Experiment orchestration: train once per (model, train index, session), test on every index.

A model trained on session ``k`` of one index is evaluated on test session
``k`` of each index, using that test index's own calendar and actuals.
Diagonal cells (train == test) are the ablation baseline.
"""
from __future__ import annotations

import logging
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, ExperimentConfig
from .metrics import MetricsSummary, SessionMetrics, session_metrics, summarize
from .models import ForecasterError, ForecasterSpec, TrainingSet, build
from .series import IndexSeries, load_series
from .stats import WilcoxonResult, wilcoxon_signed_rank
from .windowing import SessionPlan, observations, plan_sessions, session_windows

log = logging.getLogger(__name__)


class PairingError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class RunKey:
    model: str
    train_index: str
    test_index: str
    session_id: int


@dataclass(frozen=True)
class SessionRecord:
    key: RunKey
    status: str  # "ok" | "failed"
    mape: float | None = None
    rmse: float | None = None
    n_points: int = 0
    error: str | None = None
    epoch: int | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def metrics(self) -> SessionMetrics:
        return SessionMetrics(self.key.session_id, self.mape, self.rmse, self.n_points)


@dataclass(frozen=True)
class TracePoint:
    key: RunKey
    day: int  # absolute offset into the test index series
    actual: float
    forecast: float


@dataclass
class ResultMatrix:
    records: list[SessionRecord]
    traces: list[TracePoint] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: r.key)
        self.traces = sorted(self.traces, key=lambda t: (t.key, t.day))

    @property
    def models(self) -> list[str]:
        return sorted({r.key.model for r in self.records})

    @property
    def indexes(self) -> list[str]:
        return sorted({r.key.train_index for r in self.records} | {r.key.test_index for r in self.records})

    def cell_records(self, model: str, train: str, test: str) -> list[SessionRecord]:
        return [r for r in self.records
                if r.key.model == model and r.key.train_index == train and r.key.test_index == test]

    def cell(self, model: str, train: str, test: str) -> MetricsSummary | None:
        ok = [r.metrics() for r in self.cell_records(model, train, test) if r.ok]
        return summarize(ok) if ok else None

    @property
    def cells(self) -> dict[tuple[str, str, str], MetricsSummary | None]:
        keys = sorted({(r.key.model, r.key.train_index, r.key.test_index) for r in self.records})
        return {k: self.cell(*k) for k in keys}

    @property
    def failures(self) -> list[SessionRecord]:
        return [r for r in self.records if not r.ok]

    def __eq__(self, other):
        if not isinstance(other, ResultMatrix):
            return NotImplemented
        return self.records == other.records and self.traces == other.traces


def derive_seed(base: int, kind: str, session_id: int) -> int:
    """Per-run seed; independent of index symbols so identical data trains identically."""
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFF, zlib.crc32(kind.encode()), int(session_id)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def training_set(values: np.ndarray, plan: SessionPlan, k: int) -> TrainingSet:
    tr = plan.train_sessions[k]
    return TrainingSet.from_observations(observations(values, tr, plan.config),
                                         context=np.asarray(values[tr.start:tr.end]))


def rolling_forecasts(model, values: np.ndarray, plan: SessionPlan, k: int):
    """Inputs, forecasts and actuals for every rolling window of test session ``k``."""
    cfg = plan.config
    te = plan.test_sessions[k]
    X, Y = session_windows(values, te, cfg)
    if cfg.rolling == "actuals":
        return X, model.predict_many(X), Y
    # recursive: test-session days are filled with the model's own earlier forecasts
    fed = np.array(values, dtype=np.float64, copy=True)
    P = np.empty_like(Y)
    for r, s in enumerate(te.window_starts):
        X[r] = fed[s:s + cfg.input_len]
        P[r] = model.predict(X[r])
        first = s + cfg.input_len
        fed[first:first + cfg.stride] = P[r][:cfg.stride]
    return X, P, Y


def _trace(key: RunKey, plan: SessionPlan, k: int, P: np.ndarray, Y: np.ndarray) -> list[TracePoint]:
    cfg = plan.config
    te = plan.test_sessions[k]
    lookup = {s: r for r, s in enumerate(te.window_starts)}
    out = []
    s = te.start - cfg.input_len
    while s in lookup:
        r = lookup[s]
        for j in range(cfg.label_len):
            day = s + cfg.input_len + j
            if day >= te.end:
                break
            out.append(TracePoint(key, day, float(Y[r, j]), float(P[r, j])))
        s += cfg.label_len
    return out


@dataclass(frozen=True)
class _Task:
    spec: ForecasterSpec
    train_symbol: str
    session_id: int
    base_seed: int


def _run_task(task: _Task, values: dict[str, np.ndarray], plans: dict[str, SessionPlan],
              test_symbols: tuple[str, ...], save_traces: bool):
    k = task.session_id
    spec = task.spec.with_seed(derive_seed(task.base_seed, task.spec.kind, k))
    targets = [t for t in test_symbols if k < plans[t].n_pairs]
    records, traces = [], []
    try:
        model = build(spec)
        model.fit(training_set(values[task.train_symbol], plans[task.train_symbol], k))
    except ForecasterError as exc:
        epoch = getattr(exc, "epoch", None)
        log.warning("%s on %s session %d failed: %s", spec.kind, task.train_symbol, k, exc)
        for t in targets:
            records.append(SessionRecord(RunKey(spec.kind, task.train_symbol, t, k), "failed",
                                         error=str(exc), epoch=epoch))
        return records, traces
    for t in targets:
        key = RunKey(spec.kind, task.train_symbol, t, k)
        try:
            _, P, Y = rolling_forecasts(model, values[t], plans[t], k)
        except ForecasterError as exc:
            records.append(SessionRecord(key, "failed", error=str(exc)))
            continue
        m = session_metrics(k, Y, P)
        records.append(SessionRecord(key, "ok", m.mape, m.rmse, m.n_points))
        if save_traces:
            traces.extend(_trace(key, plans[t], k, P, Y))
    return records, traces


def _run_task_packed(args):
    return _run_task(*args)


def load_indexes(cfg: ExperimentConfig) -> dict[str, IndexSeries]:
    missing = [str(cfg.resolve(r)) for r in cfg.indexes if not cfg.resolve(r).is_file()]
    if missing:
        raise ConfigError("missing series file(s): " + ", ".join(missing))
    return {r.symbol: load_series(cfg.resolve(r), r.symbol) for r in cfg.indexes}


def run_experiment(cfg: ExperimentConfig, series: dict[str, IndexSeries] | None = None,
                   threads: int | None = None) -> ResultMatrix:
    if series is None:
        series = load_indexes(cfg)
    symbols = cfg.symbols
    absent = [s for s in symbols if s not in series]
    if absent:
        raise ConfigError("no series supplied for: " + ", ".join(absent))
    values = {s: np.asarray(series[s].closes, dtype=np.float64) for s in symbols}
    plans = {s: plan_sessions(len(values[s]), cfg.window) for s in symbols}

    tasks = [_Task(spec, s, k, cfg.seed)
             for spec in cfg.models for s in symbols for k in range(plans[s].n_pairs)]
    workers = threads if threads is not None else cfg.effective_threads()
    args = [(t, values, plans, symbols, cfg.save_traces) for t in tasks]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_task_packed, args))
    else:
        outputs = [_run_task_packed(a) for a in args]

    records, traces = [], []
    for rec, tr in outputs:
        records.extend(rec)
        traces.extend(tr)
    meta = {
        "config": cfg.echo(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "session_pairs": {s: plans[s].n_pairs for s in symbols},
        "dates": {s: [series[s].dates[0].isoformat(), series[s].dates[-1].isoformat()] for s in symbols},
    }
    return ResultMatrix(records, traces, meta)


@dataclass(frozen=True)
class Comparison:
    model: str
    train_index: str
    test_index: str
    mu: float
    result: WilcoxonResult
    n_pairs: int
    n_dropped: int


def paired_mape(matrix: ResultMatrix, model: str, train: str, test: str) -> tuple[np.ndarray, np.ndarray, int]:
    """Self-trained vs cross-trained per-session MAPE on ``test``, aligned by session id."""
    self_recs = {r.key.session_id: r for r in matrix.cell_records(model, test, test)}
    cross_recs = {r.key.session_id: r for r in matrix.cell_records(model, train, test)}
    if not self_recs or not cross_recs:
        raise PairingError(f"{model}: missing results for {test}->{test} or {train}->{test}")
    if set(self_recs) != set(cross_recs):
        raise PairingError(
            f"{model}: {test}->{test} has {len(self_recs)} sessions but {train}->{test} has {len(cross_recs)}"
        )
    ids = sorted(self_recs)
    keep = [i for i in ids if self_recs[i].ok and cross_recs[i].ok]
    x = np.array([self_recs[i].mape for i in keep])
    y = np.array([cross_recs[i].mape for i in keep])
    return x, y, len(ids) - len(keep)


def compare_cross_vs_ablation(matrix: ResultMatrix, mu: float = 0.0,
                              train_index: str | None = None) -> list[Comparison]:
    """Wilcoxon of self-trained (first sample) against cross-trained (second sample) MAPE.

    A small "greater" p-value therefore means cross-training was more accurate.
    """
    out = []
    trains = [train_index] if train_index else matrix.indexes
    for model in matrix.models:
        for train in trains:
            for test in matrix.indexes:
                if test == train or not matrix.cell_records(model, train, test):
                    continue
                x, y, dropped = paired_mape(matrix, model, train, test)
                if x.size == 0:
                    res = WilcoxonResult(0.0, 0, 1.0, 1.0, 1.0, "degenerate", mu, 0, False, True)
                else:
                    res = wilcoxon_signed_rank(x, y, mu=mu)
                out.append(Comparison(model, train, test, mu, res, int(x.size), dropped))
    return out


__all__ = [
    "Comparison", "PairingError", "ResultMatrix", "RunKey", "SessionRecord", "TracePoint",
    "compare_cross_vs_ablation", "derive_seed", "load_indexes",
    "paired_mape", "rolling_forecasts", "run_experiment", "training_set",
]
