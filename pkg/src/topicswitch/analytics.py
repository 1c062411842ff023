"""Descriptive statistics emitted as plot-ready tables.

Per-category summaries, box-plot five-number summaries with 1.5-IQR
whiskers, and yearly mean/median trends.  The functions are
value-agnostic: the pipeline feeds them index values and relative price
changes alike.

Quartiles use linear interpolation between order statistics at position
(n - 1) * p, the common spreadsheet convention, so summaries are
reproducible across tools.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInput
from .transcript import Sector
from .tsi import CallIndexRecord


@dataclass(frozen=True)
class CategorySummary:
    """Mean / spread / range of one category's values.

    ``degenerate`` flags single-value categories, whose sample standard
    deviation (n - 1 denominator) is reported as 0.
    """

    category: str
    mean: float
    std_dev: float
    minimum: float
    maximum: float
    count: int
    degenerate: bool = False


@dataclass(frozen=True)
class BoxSummary:
    """Box-plot geometry: quartiles, 1.5-IQR whiskers, and outliers."""

    category: str
    q1: float
    median: float
    q3: float
    lower_whisker: float
    upper_whisker: float
    outliers: tuple[float, ...]


@dataclass(frozen=True)
class YearlyTrendPoint:
    year: int
    mean: float
    median: float
    count: int


def summarize_values(pairs: Sequence[tuple[str, float]]) -> list[CategorySummary]:
    """One summary per category present, in first-seen order of Sector."""
    if not pairs:
        raise EmptyInput("no values to summarize")
    groups: dict[str, list[float]] = {}
    for category, value in pairs:
        groups.setdefault(category, []).append(value)
    known_order = [s.value for s in Sector]
    ordered = sorted(groups, key=lambda c: (known_order.index(c) if c in known_order else len(known_order), c))
    out = []
    for category in ordered:
        # Sorting fixes the summation order, making every statistic
        # bitwise permutation-invariant.
        values = np.sort(np.asarray(groups[category], dtype=np.float64))
        degenerate = values.size == 1
        out.append(
            CategorySummary(
                category=category,
                mean=float(values.mean()),
                std_dev=0.0 if degenerate else float(values.std(ddof=1)),
                minimum=float(values.min()),
                maximum=float(values.max()),
                count=int(values.size),
                degenerate=degenerate,
            )
        )
    return out


def summarize_categories(records: Sequence[CallIndexRecord]) -> list[CategorySummary]:
    """Category summaries of the switching index, grouped by sector."""
    return summarize_values([(r.sector.value, r.index) for r in records])


def box_summary(values: Sequence[float], category: str = "") -> BoxSummary:
    """Quartiles plus whiskers at the most extreme points within 1.5 IQR."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyInput("no values for box summary")
    q1, median, q3 = (float(v) for v in np.quantile(arr, (0.25, 0.5, 0.75), method="linear"))
    iqr = q3 - q1
    low_fence, high_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = arr[(arr >= low_fence) & (arr <= high_fence)]
    outliers = arr[(arr < low_fence) | (arr > high_fence)]
    return BoxSummary(
        category=category,
        q1=q1,
        median=median,
        q3=q3,
        lower_whisker=float(inside.min()),
        upper_whisker=float(inside.max()),
        outliers=tuple(sorted(float(v) for v in outliers)),
    )


def yearly_trend(records: Sequence[tuple[date, float]]) -> list[YearlyTrendPoint]:
    """Mean and median per calendar year, years ascending."""
    if not records:
        raise EmptyInput("no dated values")
    groups: dict[int, list[float]] = {}
    for day, value in records:
        groups.setdefault(day.year, []).append(value)
    out = []
    for year in sorted(groups):
        values = np.sort(np.asarray(groups[year], dtype=np.float64))
        out.append(
            YearlyTrendPoint(
                year=year,
                mean=float(values.mean()),
                median=float(np.median(values)),
                count=int(values.size),
            )
        )
    return out


# --------------------------------------------------------------------------
# emission
# --------------------------------------------------------------------------


def summaries_to_csv(summaries: Iterable[CategorySummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("category", "mean", "std_dev", "minimum", "maximum", "count"))
    for s in summaries:
        writer.writerow(
            [s.category, repr(s.mean), repr(s.std_dev), repr(s.minimum), repr(s.maximum), str(s.count)]
        )
    return buf.getvalue()


def boxes_to_csv(boxes: Iterable[BoxSummary]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ("category", "q1", "median", "q3", "lower_whisker", "upper_whisker", "outliers")
    )
    for b in boxes:
        writer.writerow(
            [
                b.category,
                repr(b.q1),
                repr(b.median),
                repr(b.q3),
                repr(b.lower_whisker),
                repr(b.upper_whisker),
                ";".join(repr(v) for v in b.outliers),
            ]
        )
    return buf.getvalue()


def trend_to_csv(points: Iterable[YearlyTrendPoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("year", "mean", "median", "count"))
    for p in points:
        writer.writerow([str(p.year), repr(p.mean), repr(p.median), str(p.count)])
    return buf.getvalue()


def summaries_to_json(summaries: Iterable[CategorySummary]) -> str:
    return json.dumps([s.__dict__ for s in summaries], sort_keys=True, indent=2) + "\n"


def boxes_to_json(boxes: Iterable[BoxSummary]) -> str:
    payload = []
    for b in boxes:
        d = dict(b.__dict__)
        d["outliers"] = list(b.outliers)
        payload.append(d)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def trend_to_json(points: Iterable[YearlyTrendPoint]) -> str:
    return json.dumps([p.__dict__ for p in points], sort_keys=True, indent=2) + "\n"
