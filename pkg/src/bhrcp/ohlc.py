"""OHLC price ingestion and cross-day rate-of-return construction.

Daily max/min rates of return are defined across consecutive trading days:

    r_max_t = high_{t+1} / low_t  - 1
    r_min_t = low_{t+1}  / high_t - 1

so r_max_t >= r_min_t pointwise and both exceed -1.  Each return is labeled
with the date of its beginning day t.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DiagnosticsWarning

log = logging.getLogger(__name__)

# Longest calendar gap between consecutive trading days that passes silently
# (weekends plus a short holiday cluster).
_GAP_WARN_DAYS = 7


@dataclass(frozen=True)
class PriceRecord:
    """One day of price data; open/close are optional."""

    date: dt.date
    high: float
    low: float
    open: float | None = None
    close: float | None = None

    def __post_init__(self):
        for name in ("high", "low", "open", "close"):
            v = getattr(self, name)
            if v is not None and (not np.isfinite(v) or v <= 0.0):
                raise DataError(f"{self.date}: {name} must be positive, got {v!r}")
        if self.low > self.high:
            raise DataError(f"{self.date}: low {self.low} exceeds high {self.high}")
        for name in ("open", "close"):
            v = getattr(self, name)
            if v is not None and not (self.low <= v <= self.high):
                raise DataError(f"{self.date}: {name} {v} outside [low, high]")


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping and parsing flags for an OHLC CSV export.

    The defaults match the common export format with columns
    "Date, Price, Open, High, Low, Vol., Change %"; only date/high/low are
    required to exist in the file.
    """

    date: str = "Date"
    high: str = "High"
    low: str = "Low"
    open: str | None = "Open"
    close: str | None = "Price"
    dayfirst: bool = False
    strip_thousands: bool = True

    def date_formats(self) -> tuple[str, ...]:
        mdy = ("%m/%d/%Y", "%d/%m/%Y")
        if self.dayfirst:
            mdy = ("%d/%m/%Y", "%m/%d/%Y")
        return ("%Y-%m-%d",) + mdy + ("%b %d, %Y", "%d-%m-%Y" if self.dayfirst else "%Y/%m/%d")

    @classmethod
    def from_dict(cls, mapping: dict) -> "CsvSchema":
        allowed = {"date", "high", "low", "open", "close", "dayfirst", "strip_thousands"}
        unknown = set(mapping) - allowed
        if unknown:
            raise DataError(f"unknown schema keys: {sorted(unknown)}")
        return cls(**mapping)


def _parse_number(raw: str, schema: CsvSchema) -> float | None:
    raw = raw.strip().strip('"')
    if raw in ("", "-", "NA", "N/A"):
        return None
    if schema.strip_thousands:
        raw = raw.replace(",", "")
    return float(raw)


def _parse_date(raw: str, schema: CsvSchema, line_no: int) -> dt.date:
    raw = raw.strip().strip('"')
    for fmt in schema.date_formats():
        try:
            return dt.datetime.strptime(raw, fmt).date()
        except ValueError:
            continue
    raise DataError(f"line {line_no}: cannot parse date {raw!r}")


def load_ohlc_csv(path, schema: CsvSchema | None = None) -> list[PriceRecord]:
    """Load a daily OHLC CSV, returning records sorted ascending by date.

    Raises on missing required columns, unparsable rows (with line numbers),
    duplicate dates, and per-record invariant violations (named by date).
    Calendar gaps longer than a week are warnings, not errors.
    """
    schema = schema or CsvSchema()
    records: list[PriceRecord] = []
    try:
        fh = open(path, newline="", encoding="utf-8-sig")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        fields = [f.strip().strip('"') for f in reader.fieldnames]
        required = [schema.date, schema.high, schema.low]
        missing = [c for c in required if c not in fields]
        if missing:
            raise DataError(f"{path}: missing required columns {missing} (have {fields})")
        for line_no, row in enumerate(reader, start=2):
            row = {(k.strip().strip('"') if k else k): v for k, v in row.items()}
            try:
                date = _parse_date(row[schema.date], schema, line_no)
                high = _parse_number(row[schema.high], schema)
                low = _parse_number(row[schema.low], schema)
                opn = (_parse_number(row[schema.open], schema)
                       if schema.open and schema.open in row else None)
                close = (_parse_number(row[schema.close], schema)
                         if schema.close and schema.close in row else None)
            except DataError:
                raise
            except Exception as exc:
                raise DataError(f"line {line_no}: {exc}") from exc
            if high is None or low is None:
                raise DataError(f"line {line_no}: missing high/low value")
            records.append(PriceRecord(date=date, high=high, low=low, open=opn, close=close))
    if not records:
        raise DataError(f"{path}: no data rows")
    records.sort(key=lambda r: r.date)
    for a, b in zip(records, records[1:]):
        if a.date == b.date:
            raise DataError(f"duplicate records for {a.date}")
        gap = (b.date - a.date).days
        if gap > _GAP_WARN_DAYS:
            warnings.warn(f"{gap}-day gap between {a.date} and {b.date}", DiagnosticsWarning)
    return records


@dataclass(frozen=True)
class RorSeries:
    """Daily max/min rates of return, labeled by the beginning day."""

    dates: tuple
    r_max: np.ndarray
    r_min: np.ndarray

    def __post_init__(self):
        if not (len(self.dates) == self.r_max.shape[0] == self.r_min.shape[0]):
            raise DataError("return series components must align")
        if (self.r_max < self.r_min).any():
            raise DataError("r_max must dominate r_min pointwise")

    def __len__(self):
        return len(self.dates)


def compute_ror(records: list[PriceRecord]) -> RorSeries:
    """Cross-day max/min rates of return from consecutive records."""
    if len(records) < 2:
        raise DataError(f"need at least 2 price records, got {len(records)}")
    highs = np.array([r.high for r in records])
    lows = np.array([r.low for r in records])
    r_max = highs[1:] / lows[:-1] - 1.0
    r_min = lows[1:] / highs[:-1] - 1.0
    dates = tuple(r.date for r in records[:-1])
    return RorSeries(dates=dates, r_max=r_max, r_min=r_min)


@dataclass(frozen=True)
class AlignedRor:
    """Two return series joined on common dates."""

    dates: tuple
    a_max: np.ndarray
    a_min: np.ndarray
    b_max: np.ndarray
    b_min: np.ndarray
    dropped_a: int
    dropped_b: int

    def __len__(self):
        return len(self.dates)


def align_pair(a: RorSeries, b: RorSeries) -> AlignedRor:
    """Inner join of two return series on their dates."""
    common = sorted(set(a.dates) & set(b.dates))
    if not common:
        raise DataError("the two series share no dates")
    idx_a = {d: i for i, d in enumerate(a.dates)}
    idx_b = {d: i for i, d in enumerate(b.dates)}
    sel_a = np.array([idx_a[d] for d in common])
    sel_b = np.array([idx_b[d] for d in common])
    dropped_a = len(a) - len(common)
    dropped_b = len(b) - len(common)
    if dropped_a or dropped_b:
        log.info("alignment dropped %d/%d dates from the two series", dropped_a, dropped_b)
    return AlignedRor(
        dates=tuple(common),
        a_max=a.r_max[sel_a],
        a_min=a.r_min[sel_a],
        b_max=b.r_max[sel_b],
        b_min=b.r_min[sel_b],
        dropped_a=dropped_a,
        dropped_b=dropped_b,
    )
