"""Simple OLS of relative price change on the switching index.

One regression per sector plus a pooled row, each reporting the slope,
its classical standard error, and the t-value.  Slope and intercept come
from the closed-form normal equations on centered data.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateRegressor, LengthMismatch, TooFewPoints
from .market import LabeledCall
from .transcript import Sector

OVERALL = "Overall"


@dataclass(frozen=True)
class RegressionResult:
    """Slope statistics for one sector (or the pooled sample)."""

    sector: str
    coefficient: float
    intercept: float
    std_error: float
    t_value: float
    n: int


def ols_fit(x: Sequence[float], y: Sequence[float], sector: str = OVERALL) -> RegressionResult:
    """Fit y = a + b x and report slope, standard error, and t-value.

    Needs at least three points (one residual degree of freedom) and a
    non-constant regressor.  A perfect fit has zero standard error and
    an infinite t-value of matching sign.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise LengthMismatch(f"x has shape {xv.shape}, y has shape {yv.shape}")
    n = xv.shape[0]
    if n < 3:
        raise TooFewPoints(f"need at least 3 points, got {n}")
    x_dev = xv - xv.mean()
    sxx = float(x_dev @ x_dev)
    if sxx == 0.0:
        raise DegenerateRegressor("regressor is constant")
    slope = float(x_dev @ (yv - yv.mean())) / sxx
    intercept = float(yv.mean() - slope * xv.mean())
    residuals = yv - (intercept + slope * xv)
    sigma2 = float(residuals @ residuals) / (n - 2)
    std_error = math.sqrt(sigma2 / sxx)
    if std_error > 0.0:
        t_value = slope / std_error
    else:
        t_value = math.copysign(math.inf, slope) if slope != 0.0 else 0.0
    return RegressionResult(
        sector=sector,
        coefficient=slope,
        intercept=intercept,
        std_error=std_error,
        t_value=t_value,
        n=n,
    )


def fit_by_sector(
    records: Sequence[LabeledCall],
) -> tuple[list[RegressionResult], dict[str, str]]:
    """Regress relative change on the index per sector, plus the pooled row.

    Sectors with fewer than three calls or a constant index are skipped
    (reported in the returned mapping), never raised.
    """
    groups: dict[Sector, list[LabeledCall]] = {}
    for rec in records:
        groups.setdefault(rec.record.sector, []).append(rec)

    results: list[RegressionResult] = []
    skipped: dict[str, str] = {}

    def try_fit(name: str, subset: Sequence[LabeledCall]) -> None:
        try:
            results.append(
                ols_fit(
                    [c.record.index for c in subset],
                    [c.relative_change for c in subset],
                    sector=name,
                )
            )
        except (TooFewPoints, DegenerateRegressor) as exc:
            skipped[name] = str(exc)

    for sector in Sector:
        if sector in groups:
            try_fit(sector.value, groups[sector])
    try_fit(OVERALL, list(records))
    return results, skipped


CSV_FIELDS = ("sector", "coefficient", "std_error", "t_value", "n")


def results_to_csv(results: Iterable[RegressionResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in results:
        writer.writerow([r.sector, repr(r.coefficient), repr(r.std_error), repr(r.t_value), str(r.n)])
    return buf.getvalue()
