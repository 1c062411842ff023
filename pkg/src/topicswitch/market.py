"""Price-series ingestion, call/trading-day alignment, and binary labeling.

Labels compare the first trading day after the call with the last
trading day before it.  The absolute form is +1 when the later price is
at least the earlier one; the relative form thresholds the relative
change at a constant rate ``tau``.  Boundary equality labels +1 in both.
"""

from __future__ import annotations

import csv
import enum
import io
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import date
from math import isfinite
from typing import Iterable

from .errors import (
    DuplicateDate,
    InsufficientWindow,
    MalformedInput,
    NonPositivePrice,
)
from .transcript import Sector
from .tsi import CallIndexRecord


@dataclass(frozen=True)
class PriceSeries:
    """Daily high prices for one company, strictly sorted by date."""

    company_symbol: str
    points: tuple[tuple[date, float], ...]

    @property
    def dates(self) -> tuple[date, ...]:
        return tuple(p[0] for p in self.points)


class LabelKind(enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


@dataclass(frozen=True)
class LabelSpec:
    """Which label definition to apply; ``tau`` only matters for RELATIVE."""

    kind: LabelKind
    tau: float = 0.0

    def __post_init__(self) -> None:
        if not isfinite(self.tau):
            raise ValueError("tau must be finite")


@dataclass(frozen=True)
class LabeledCall:
    """An index record joined with its surrounding prices and label."""

    record: CallIndexRecord
    prev_price: float
    next_price: float
    relative_change: float
    label: int


def load_prices(raw: bytes, company_symbol: str = "") -> PriceSeries:
    """Parse a ``date,high`` CSV into a sorted, validated series.

    Rows may arrive in any order; duplicate dates and non-positive
    prices are rejected.
    """
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedInput(f"not valid UTF-8: {exc.reason}", offset=exc.start) from exc
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedInput("empty price file", line=1) from None
    if [h.strip().lower() for h in header] != ["date", "high"]:
        raise MalformedInput(f"expected header 'date,high', got {','.join(header)!r}", line=1)
    points: list[tuple[date, float]] = []
    seen: set[date] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise MalformedInput(f"expected 2 columns, got {len(row)}", line=lineno)
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError as exc:
            raise MalformedInput(f"bad date {row[0]!r}: {exc}", line=lineno) from exc
        try:
            price = float(row[1])
        except ValueError as exc:
            raise MalformedInput(f"bad price {row[1]!r}", line=lineno) from exc
        if not isfinite(price) or price <= 0.0:
            raise NonPositivePrice(f"price must be positive and finite, got {row[1]} on {day}")
        if day in seen:
            raise DuplicateDate(f"date {day} appears more than once")
        seen.add(day)
        points.append((day, price))
    if not points:
        raise MalformedInput("price file has a header but no rows", line=2)
    points.sort(key=lambda p: p[0])
    return PriceSeries(company_symbol=company_symbol, points=tuple(points))


def align_window(series: PriceSeries, call_date: date) -> tuple[float, float]:
    """Prices at the nearest trading days strictly before and after the call.

    Raises InsufficientWindow when the call sits at or beyond either end
    of the series (the call must then be excluded).
    """
    dates = series.dates
    before = bisect_left(dates, call_date) - 1
    after = bisect_right(dates, call_date)
    if before < 0 or after >= len(dates):
        raise InsufficientWindow(
            f"{series.company_symbol or 'series'}: no trading day strictly "
            f"{'before' if before < 0 else 'after'} {call_date}"
        )
    return series.points[before][1], series.points[after][1]


def label(prev: float, next_: float, spec: LabelSpec) -> int:
    """+1 / -1 movement label for a (previous, next) price pair."""
    if prev <= 0.0:
        raise ValueError("prev price must be positive")
    if spec.kind is LabelKind.ABSOLUTE:
        return 1 if next_ >= prev else -1
    return 1 if (next_ - prev) / prev >= spec.tau else -1


def label_call(record: CallIndexRecord, series: PriceSeries, spec: LabelSpec) -> LabeledCall:
    """Align one index record with its price series and attach the label."""
    prev, next_ = align_window(series, record.call_date)
    return LabeledCall(
        record=record,
        prev_price=prev,
        next_price=next_,
        relative_change=(next_ - prev) / prev,
        label=label(prev, next_, spec),
    )


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

CSV_FIELDS = (
    "symbol",
    "date",
    "sector",
    "index",
    "n_pairs_scored",
    "n_pairs_skipped",
    "prev_price",
    "next_price",
    "relative_change",
    "label",
)


def labeled_to_csv(calls: Iterable[LabeledCall]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for c in calls:
        r = c.record
        writer.writerow(
            [
                r.company_symbol,
                r.call_date.isoformat(),
                r.sector.value,
                repr(r.index),
                str(r.n_pairs_scored),
                str(r.n_pairs_skipped),
                repr(c.prev_price),
                repr(c.next_price),
                repr(c.relative_change),
                str(c.label),
            ]
        )
    return buf.getvalue()


def labeled_from_csv(text: str) -> list[LabeledCall]:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        record = CallIndexRecord(
            company_symbol=row["symbol"],
            call_date=date.fromisoformat(row["date"]),
            sector=Sector(row["sector"]),
            index=float(row["index"]),
            n_pairs_scored=int(row["n_pairs_scored"]),
            n_pairs_skipped=int(row["n_pairs_skipped"]),
        )
        out.append(
            LabeledCall(
                record=record,
                prev_price=float(row["prev_price"]),
                next_price=float(row["next_price"]),
                relative_change=float(row["relative_change"]),
                label=int(row["label"]),
            )
        )
    return out
