"""Tabular datasets, least-squares fits, HPD intervals, and group differences.

The regression here is plain ordinary least squares with analytic standard
errors.  The normal equations are solved through an unpivoted Cholesky
factorization with a relative pivot threshold of 1e-10, which doubles as the
rank-deficiency check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "Dataset",
    "FitResult",
    "Interval",
    "RankDeficiencyError",
    "StatsError",
    "hpdi",
    "ols_fit",
    "read_csv",
    "scaled_mean_diff",
]

_PIVOT_RTOL = 1e-10


class StatsError(ValueError):
    """Invalid data or request for a statistical operation."""


class RankDeficiencyError(StatsError):
    """The regression design matrix has (numerically) collinear columns."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """A named-column table of finite floats, immutable after construction."""

    columns: tuple[str, ...]
    values: np.ndarray  # shape (n_rows, n_columns)

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != len(self.columns):
            raise StatsError(
                f"values must be a 2-d array with {len(self.columns)} columns"
            )
        if len(set(self.columns)) != len(self.columns):
            raise StatsError("duplicate column names")
        if not np.isfinite(values).all():
            raise StatsError("dataset values must be finite")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Sequence[float]]) -> "Dataset":
        rows = [tuple(r) for r in rows]
        for i, row in enumerate(rows):
            if len(row) != len(columns):
                raise StatsError(f"row {i} has {len(row)} values, expected {len(columns)}")
        data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
        return cls(tuple(columns), data)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise StatsError(f"unknown column {name!r}") from None
        return self.values[:, idx]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.values:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def read_csv(source: str | Path) -> Dataset:
    """Load an RFC-4180 CSV file with a header row into a :class:`Dataset`.

    Every body cell must parse as a finite number; NaN and infinity tokens
    are rejected.
    """
    path = Path(source)
    with path.open(newline="") as handle:
        return _parse_csv(csv.reader(handle))


def parse_csv_text(text: str) -> Dataset:
    return _parse_csv(csv.reader(io.StringIO(text)))


def _parse_csv(reader) -> Dataset:
    try:
        header = next(reader)
    except StopIteration:
        raise StatsError("empty CSV: missing header row") from None
    columns = tuple(name.strip() for name in header)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise StatsError(
                f"line {lineno}: expected {len(columns)} fields, found {len(row)}"
            )
        parsed = []
        for name, cell in zip(columns, row):
            try:
                value = float(cell)
            except ValueError:
                raise StatsError(f"line {lineno}: non-numeric value {cell!r} in {name!r}") from None
            if not math.isfinite(value):
                raise StatsError(f"line {lineno}: non-finite value {cell!r} in {name!r}")
            parsed.append(value)
        rows.append(parsed)
    return Dataset.from_rows(columns, rows)


@dataclass(frozen=True)
class Interval:
    """A closed interval holding a given fraction of probability mass."""

    low: float
    high: float
    mass: float

    def __post_init__(self):
        if not self.low <= self.high:
            raise StatsError(f"interval bounds out of order: [{self.low}, {self.high}]")
        if not 0 < self.mass <= 1:
            raise StatsError("interval mass must be in (0, 1]")

    @property
    def width(self) -> float:
        return self.high - self.low

    def contains(self, other: "Interval | float") -> bool:
        if isinstance(other, Interval):
            return self.low <= other.low and other.high <= self.high
        return self.low <= other <= self.high


@dataclass(frozen=True)
class FitResult:
    """An OLS fit: intercept, per-predictor coefficients and standard errors,
    residual standard deviation ``sigma`` (RSS / (n - p) under the root), and
    the sample count."""

    intercept: float
    coefficients: Mapping[str, float]
    std_errors: Mapping[str, float]
    sigma: float
    n: int

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "intercept": self.intercept,
            "coefficients": {k: self.coefficients[k] for k in sorted(self.coefficients)},
            "std_errors": {k: self.std_errors[k] for k in sorted(self.std_errors)},
            "sigma": self.sigma,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)


def _cholesky_spd(matrix: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor; raises RankDeficiencyError on a tiny pivot."""
    a = np.asarray(matrix, dtype=float)
    k = a.shape[0]
    lower = np.zeros_like(a)
    scale = float(np.max(np.abs(np.diag(a)), initial=0.0))
    for j in range(k):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if pivot <= scale * _PIVOT_RTOL:
            raise RankDeficiencyError(
                "design matrix is rank deficient (collinear predictors)"
            )
        lower[j, j] = math.sqrt(pivot)
        if j + 1 < k:
            lower[j + 1:, j] = (a[j + 1:, j] - lower[j + 1:, :j] @ lower[j, :j]) / lower[j, j]
    return lower


def solve_normal_equations(design: np.ndarray, response: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and (XtX)^-1 via Cholesky on the normal equations."""
    xtx = design.T @ design
    lower = _cholesky_spd(xtx)
    rhs = design.T @ response
    coef = solve_triangular(lower.T, solve_triangular(lower, rhs, lower=True), lower=False)
    eye = np.eye(xtx.shape[0])
    inv = solve_triangular(lower.T, solve_triangular(lower, eye, lower=True), lower=False)
    return coef, inv


def ols_fit(data: Dataset, outcome: str, predictors: Sequence[str]) -> FitResult:
    """Fit ``outcome ~ 1 + predictors`` by ordinary least squares.

    Raises :class:`RankDeficiencyError` for collinear predictors and
    :class:`StatsError` for unknown columns or too few rows.
    """
    predictors = list(predictors)
    if len(set(predictors)) != len(predictors):
        raise StatsError("duplicate predictor names")
    if outcome in predictors:
        raise StatsError("outcome cannot also be a predictor")
    y = data.column(outcome)
    n = data.n
    p = len(predictors) + 1
    if n <= p:
        raise StatsError(f"need more than {p} rows to fit {p} parameters, have {n}")
    design = np.empty((n, p))
    design[:, 0] = 1.0
    for i, name in enumerate(predictors, start=1):
        design[:, i] = data.column(name)
    coef, inv = solve_normal_equations(design, y)
    residuals = y - design @ coef
    sigma2 = float(residuals @ residuals) / (n - p)
    sigma = math.sqrt(sigma2)
    errors = np.sqrt(sigma2 * np.diag(inv))
    return FitResult(
        intercept=float(coef[0]),
        coefficients={name: float(c) for name, c in zip(predictors, coef[1:])},
        std_errors={name: float(e) for name, e in zip(predictors, errors[1:])},
        sigma=sigma,
        n=n,
    )


def hpdi(samples: Sequence[float], mass: float) -> Interval:
    """Narrowest window over the sorted samples containing ``ceil(mass * n)``
    of them; ties resolved in favor of the earliest window."""
    arr = np.sort(np.asarray(list(samples), dtype=float))
    n = arr.size
    if n == 0:
        raise StatsError("hpdi requires at least one sample")
    if not 0 < mass <= 1:
        raise StatsError("mass must be in (0, 1]")
    # The small slack absorbs float error in mass * n (e.g. 0.6 * 5 -> 3.0000000000000004).
    k = max(1, math.ceil(mass * n - 1e-9))
    widths = arr[k - 1:] - arr[: n - k + 1]
    start = int(np.argmin(widths))
    return Interval(float(arr[start]), float(arr[start + k - 1]), mass)


def scaled_mean_diff(
    values: Sequence[float],
    labels: Sequence[object],
    treat: object,
    reference: object,
) -> float:
    """Difference of standardized group means, treatment minus reference.

    Each group's mean is scaled by its own sample standard deviation
    (n - 1 denominator).  Groups need at least two members and nonzero spread.
    """
    values = np.asarray(list(values), dtype=float)
    labels = list(labels)
    if len(labels) != values.size:
        raise StatsError("values and labels must have equal length")

    def standardized_mean(tag: object) -> float:
        group = values[[lab == tag for lab in labels]]
        if group.size == 0:
            raise StatsError(f"unknown group tag {tag!r}")
        if group.size < 2:
            raise StatsError(f"group {tag!r} needs at least two members")
        spread = float(np.std(group, ddof=1))
        if spread == 0.0:
            raise StatsError(f"group {tag!r} has zero spread")
        return float(np.mean(group)) / spread

    return standardized_mean(treat) - standardized_mean(reference)
