"""OHLCV ingestion, windowing, chronological splitting, normalization, and
synthetic planted-signal data for verification.

CSV contract: header ``date,open,high,low,close,volume``, ISO-8601 dates,
decimal numbers, UTF-8, LF or CRLF line endings.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from datetime import date, timedelta
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DataError

__all__ = [
    "FEATURE_NAMES",
    "CLOSE_INDEX",
    "OhlcvRow",
    "InputWindow",
    "NormalizationStats",
    "DatasetSplit",
    "parse_ohlcv_csv",
    "write_ohlcv_csv",
    "make_windows",
    "window_before",
    "split_chronological",
    "compute_stats",
    "normalize",
    "SyntheticSpec",
    "generate_synthetic",
    "generate_synthetic_series",
]

FEATURE_NAMES = ("open", "high", "low", "close", "volume")
CLOSE_INDEX = FEATURE_NAMES.index("close")
_HEADER = ["date", "open", "high", "low", "close", "volume"]


@dataclass(frozen=True)
class OhlcvRow:
    """One day of trade data."""

    day: date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def features(self) -> tuple[float, float, float, float, float]:
        return (self.open, self.high, self.low, self.close, self.volume)


@dataclass(eq=False)
class InputWindow:
    """A window_days x n_features grid plus its date span and optional label.

    label is 1 when the close on the day after the window rose above the
    window's final close, 0 otherwise, and None in inference mode.
    """

    values: np.ndarray
    start_date: date
    end_date: date
    label: Optional[int] = None


@dataclass
class NormalizationStats:
    """Per-feature mean and standard deviation, computed on training data only."""

    means: np.ndarray
    stds: np.ndarray


@dataclass
class DatasetSplit:
    train: list
    eval: list
    stats: NormalizationStats


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def parse_ohlcv_csv(path) -> list[OhlcvRow]:
    """Read and validate an OHLCV CSV, returning rows sorted by date.

    Raises DataError naming the offending 1-based line for malformed numbers,
    missing columns, invalid price relations or duplicate dates.
    """
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError("cannot read CSV file %s: %s" % (path, exc.strerror)) from None
    rows: list[OhlcvRow] = []
    seen: dict[date, int] = {}
    with handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != _HEADER:
            raise DataError(
                "line 1: expected header %s" % ",".join(_HEADER)
            )
        for lineno, record in enumerate(reader, start=2):
            if not record or (len(record) == 1 and not record[0].strip()):
                continue  # tolerate a trailing blank line
            if len(record) != 6:
                raise DataError("line %d: expected 6 columns, got %d" % (lineno, len(record)))
            try:
                day = date.fromisoformat(record[0].strip())
            except ValueError:
                raise DataError("line %d: bad date %r" % (lineno, record[0])) from None
            try:
                o, h, l, c, v = (float(field) for field in record[1:])
            except ValueError:
                raise DataError("line %d: malformed number" % lineno) from None
            if not all(math.isfinite(x) for x in (o, h, l, c, v)):
                raise DataError("line %d: non-finite value" % lineno)
            if v < 0:
                raise DataError("line %d: negative volume" % lineno)
            if l > min(o, c) or h < max(o, c):
                raise DataError(
                    "line %d: high/low do not bracket open/close" % lineno
                )
            if day in seen:
                raise DataError(
                    "line %d: duplicate date %s (first seen on line %d)"
                    % (lineno, day.isoformat(), seen[day])
                )
            seen[day] = lineno
            rows.append(OhlcvRow(day, o, h, l, c, v))
    rows.sort(key=lambda r: r.day)
    return rows


def write_ohlcv_csv(rows: Sequence[OhlcvRow], path) -> None:
    """Write rows in the standard CSV format (repr-precision floats)."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(_HEADER)
        for r in rows:
            writer.writerow(
                [r.day.isoformat(), repr(r.open), repr(r.high), repr(r.low), repr(r.close), repr(r.volume)]
            )


# ---------------------------------------------------------------------------
# windowing and splitting
# ---------------------------------------------------------------------------

def make_windows(rows: Sequence[OhlcvRow], window_days: int = 30) -> list[InputWindow]:
    """Cut stride-1 windows with next-day rise/fall labels.

    Each window consumes window_days rows plus one lookahead row for its
    label, so len(rows) - window_days windows come out. A flat next-day close
    counts as a fall (label 0).
    """
    if window_days < 1:
        raise ConfigurationError("window_days must be >= 1")
    if len(rows) < window_days + 1:
        raise DataError(
            "need at least %d rows to form one labeled window, got %d"
            % (window_days + 1, len(rows))
        )
    table = np.array([r.features() for r in rows], dtype=np.float64)
    windows = []
    for i in range(len(rows) - window_days):
        last = i + window_days - 1
        label = 1 if rows[last + 1].close > rows[last].close else 0
        windows.append(
            InputWindow(
                values=table[i : i + window_days].copy(),
                start_date=rows[i].day,
                end_date=rows[last].day,
                label=label,
            )
        )
    return windows


def window_before(rows: Sequence[OhlcvRow], row_index: int, window_days: int = 30) -> InputWindow:
    """Unlabeled window covering the window_days rows before rows[row_index]."""
    if row_index < window_days:
        raise DataError(
            "need %d trading days of history before %s, only %d available"
            % (window_days, rows[row_index].day.isoformat(), row_index)
        )
    chunk = rows[row_index - window_days : row_index]
    values = np.array([r.features() for r in chunk], dtype=np.float64)
    return InputWindow(values, chunk[0].day, chunk[-1].day, label=None)


def compute_stats(windows: Sequence[InputWindow]) -> NormalizationStats:
    """Pool every cell of every window and take per-feature moments.

    Constant features are flagged with std 0 and a mean equal to the constant,
    so normalization maps them to exact zeros.
    """
    stacked = np.stack([w.values for w in windows])
    flat = stacked.reshape(-1, stacked.shape[-1])
    means = flat.mean(axis=0)
    stds = flat.std(axis=0)
    lo, hi = flat.min(axis=0), flat.max(axis=0)
    constant = lo == hi
    means[constant] = lo[constant]
    stds[constant] = 0.0
    return NormalizationStats(means, stds)


def split_chronological(windows: Sequence[InputWindow], train_fraction: float = 0.9) -> DatasetSplit:
    """First floor(train_fraction * n) windows train, the rest evaluate.

    Normalization stats come from the training windows only. Callers must
    pass windows already in chronological order.
    """
    if not 0.0 < train_fraction < 1.0:
        raise ConfigurationError("train_fraction must lie in (0, 1)")
    n = len(windows)
    n_train = int(math.floor(train_fraction * n))
    if n_train < 1 or n - n_train < 1:
        raise DataError(
            "cannot form both splits from %d windows at train_fraction %g"
            % (n, train_fraction)
        )
    train = list(windows[:n_train])
    evaluation = list(windows[n_train:])
    return DatasetSplit(train, evaluation, compute_stats(train))


def normalize(windows: Sequence[InputWindow], stats: NormalizationStats) -> list[InputWindow]:
    """Per-feature z-score using the given stats; zero-variance features map
    to all-zero columns. Pure: returns new windows.
    """
    divisor = np.where(stats.stds > 0, stats.stds, 1.0)
    return [
        replace(w, values=(w.values - stats.means) / divisor) for w in windows
    ]


# ---------------------------------------------------------------------------
# synthetic planted-signal data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticSpec:
    """Where and how strongly to plant a price move inside each window.

    Price features (open/high/low/close) get a signed, zero-centered linear
    ramp across the signal days; the volume feature gets an unsigned lift
    there, mimicking the turnover burst that accompanies a real move. Every
    cell outside the signal rows is i.i.d. Gaussian noise. The label is 1
    exactly when the close on the last signal day exceeds the close on the
    first, so labels are a function of the planted region alone.
    """

    signal_start: int = 26
    signal_end: int = 30  # exclusive
    window_days: int = 30
    drift_per_day: float = 2.0
    noise_std: float = 0.12
    volume_lift: float = 2.0

    def __post_init__(self):
        if not (0 <= self.signal_start < self.signal_end <= self.window_days):
            raise ConfigurationError(
                "signal window [%d, %d) must lie inside [0, %d)"
                % (self.signal_start, self.signal_end, self.window_days)
            )
        if self.signal_end - self.signal_start < 2:
            raise ConfigurationError("signal window needs at least 2 days to define a drift")
        if self.noise_std < 0:
            raise ConfigurationError("noise_std must be >= 0")


_PRICE_COLUMNS = tuple(i for i, name in enumerate(FEATURE_NAMES) if name != "volume")
_VOLUME_COLUMN = FEATURE_NAMES.index("volume")


def generate_synthetic(spec: SyntheticSpec, n_samples: int, seed: int) -> list[InputWindow]:
    """Independent noise windows with the spec's signal planted in each.
    Deterministic for a fixed seed. Windows get disjoint, consecutive date
    spans so chronological splitting applies cleanly.
    """
    rng = np.random.default_rng(seed)
    n_features = len(FEATURE_NAMES)
    lo, hi = spec.signal_start, spec.signal_end
    span = hi - lo
    ramp = np.arange(span, dtype=np.float64) - (span - 1) / 2.0
    origin = date(2000, 1, 3)
    windows = []
    for i in range(n_samples):
        values = rng.normal(0.0, spec.noise_std, size=(spec.window_days, n_features))
        direction = 1.0 if rng.random() < 0.5 else -1.0
        for column in _PRICE_COLUMNS:
            values[lo:hi, column] += direction * spec.drift_per_day * ramp
        values[lo:hi, _VOLUME_COLUMN] += spec.volume_lift
        label = 1 if values[hi - 1, CLOSE_INDEX] > values[lo, CLOSE_INDEX] else 0
        start = origin + timedelta(days=i * spec.window_days)
        end = start + timedelta(days=spec.window_days - 1)
        windows.append(InputWindow(values, start, end, label))
    return windows


def generate_synthetic_series(
    n_days: int,
    seed: int,
    start_date: date = date(2020, 1, 1),
    lookback: int = 4,
    step: float = 1.0,
    noise_frac: float = 0.35,
    base_price: float = 100.0,
) -> tuple[list[OhlcvRow], list[Optional[int]]]:
    """Emit a price series whose next-day direction is decided by the close
    drift over the last `lookback` days (a mean-reverting rule, which keeps
    rise/fall labels balanced).

    Returns (rows, intended) where intended[t] is the direction planted for
    the close move from day t to day t+1 (1 rise, 0 fall), or None where the
    rule had no history yet or no next day exists.
    """
    if lookback < 2:
        raise ConfigurationError("lookback must be >= 2")
    if not 0.0 <= noise_frac < 0.5:
        raise ConfigurationError("noise_frac must lie in [0, 0.5) to keep labels exact")
    if n_days < lookback + 1:
        raise ConfigurationError("n_days must exceed the lookback")
    rng = np.random.default_rng(seed)
    closes = [base_price + rng.normal(0.0, noise_frac * step) for _ in range(lookback)]
    intended: list[Optional[int]] = [None] * (lookback - 1)
    for t in range(lookback - 1, n_days - 1):
        # fall after a net rise over the lookback span, rise after a net fall
        direction = -1.0 if closes[t] >= closes[t - (lookback - 1)] else 1.0
        noise = rng.uniform(-noise_frac * step, noise_frac * step)
        closes.append(closes[t] + direction * step + noise)
        intended.append(1 if direction > 0 else 0)
    intended.append(None)  # the final day has no next-day move

    rows = []
    for t in range(n_days):
        c = closes[t]
        o = c + rng.normal(0.0, 0.3 * step)
        hi = max(o, c) + abs(rng.normal(0.0, 0.2 * step))
        lo = min(o, c) - abs(rng.normal(0.0, 0.2 * step))
        v = float(rng.integers(1_000, 10_000))
        rows.append(OhlcvRow(start_date + timedelta(days=t), o, hi, lo, c, v))
    return rows, intended
