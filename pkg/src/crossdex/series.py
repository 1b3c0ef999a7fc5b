"""Loading, validating and aligning daily index series."""
from __future__ import annotations

import csv
import datetime as dt
import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SeriesError(ValueError):
    """Base class for series input problems."""


class SeriesParseError(SeriesError):
    pass


class SeriesValidationError(SeriesError):
    pass


class AlignmentError(SeriesError):
    pass


class DegenerateVarianceError(SeriesError):
    pass


@dataclass(frozen=True)
class IndexSeries:
    name: str
    dates: tuple[dt.date, ...]
    closes: np.ndarray

    def __post_init__(self):
        closes = np.asarray(self.closes, dtype=np.float64)
        closes.setflags(write=False)
        object.__setattr__(self, "closes", closes)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) == 0:
            raise SeriesValidationError(f"{self.name}: series is empty")
        if len(self.dates) != closes.shape[0] or closes.ndim != 1:
            raise SeriesValidationError(f"{self.name}: {len(self.dates)} dates but {closes.shape} closes")
        if not np.all(np.isfinite(closes)) or np.any(closes <= 0):
            bad = int(np.flatnonzero(~np.isfinite(closes) | (closes <= 0))[0])
            raise SeriesValidationError(f"{self.name}: close at {self.dates[bad]} must be finite and > 0")
        for a, b in zip(self.dates, self.dates[1:]):
            if b <= a:
                raise SeriesValidationError(f"{self.name}: dates not strictly increasing at {b}")

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, IndexSeries):
            return NotImplemented
        return (self.name == other.name and self.dates == other.dates
                and np.array_equal(self.closes, other.closes))

    __hash__ = None


@dataclass(frozen=True)
class AlignedPair:
    a: np.ndarray
    b: np.ndarray
    dates: tuple[dt.date, ...]

    def __post_init__(self):
        if not (len(self.a) == len(self.b) == len(self.dates)):
            raise AlignmentError("aligned sequences must share one length")


def load_series(path, name: str | None = None) -> IndexSeries:
    """Read a ``date,close`` CSV into a validated, date-sorted series."""
    path = Path(path)
    if name is None:
        name = path.stem
    rows: list[tuple[dt.date, float]] = []
    seen: dict[dt.date, int] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["date", "close"]:
            raise SeriesParseError(f"{path}:1: expected header 'date,close', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise SeriesParseError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            try:
                day = dt.date.fromisoformat(row[0].strip())
                close = float(row[1])
            except ValueError as exc:
                raise SeriesParseError(f"{path}:{lineno}: {exc}") from None
            if not math.isfinite(close) or close <= 0:
                raise SeriesValidationError(f"{path}:{lineno}: close must be finite and > 0, got {row[1].strip()}")
            if day in seen:
                raise SeriesValidationError(f"{path}:{lineno}: duplicate date {day} (first on line {seen[day]})")
            seen[day] = lineno
            rows.append((day, close))
    if not rows:
        raise SeriesValidationError(f"{path}: no data rows")
    rows.sort(key=lambda r: r[0])
    return IndexSeries(name, tuple(r[0] for r in rows), np.array([r[1] for r in rows]))


def save_series(series: IndexSeries, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "close"])
        for day, close in zip(series.dates, series.closes):
            w.writerow([day.isoformat(), repr(float(close))])


def align(x: IndexSeries | AlignedPair, y: IndexSeries | None = None) -> AlignedPair:
    """Inner-join two series on their dates.

    Passing an :class:`AlignedPair` alone returns it unchanged.
    """
    if isinstance(x, AlignedPair) and y is None:
        return x
    common = sorted(set(x.dates) & set(y.dates))
    if not common:
        raise AlignmentError(f"{x.name} and {y.name} share no dates")
    ix = {d: i for i, d in enumerate(x.dates)}
    iy = {d: i for i, d in enumerate(y.dates)}
    a = x.closes[[ix[d] for d in common]]
    b = y.closes[[iy[d] for d in common]]
    return AlignedPair(a, b, tuple(common))


def pearson(pair: AlignedPair) -> float:
    a = np.asarray(pair.a, dtype=np.float64)
    b = np.asarray(pair.b, dtype=np.float64)
    if a.size < 2:
        raise DegenerateVarianceError("pearson needs at least two points")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(da @ da))
    sb = math.sqrt(float(db @ db))
    if sa == 0.0 or sb == 0.0:
        raise DegenerateVarianceError("pearson is undefined for a constant sequence")
    r = float(da @ db) / (sa * sb)
    return max(-1.0, min(1.0, r))


def correlation_table(series: list[IndexSeries]) -> list[tuple[str, str, float]]:
    """Pearson r for every unordered pair, in input order."""
    return [(x.name, y.name, pearson(align(x, y))) for x, y in itertools.combinations(series, 2)]


def write_correlations(rows, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index1", "index2", "pearson"])
    for a, b, r in rows:
        w.writerow([a, b, f"{r:.4f}"])
