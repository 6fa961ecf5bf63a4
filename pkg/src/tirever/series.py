"""Time-series container, CSV ingestion and elementary transforms."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from tirever.errors import DataError


class Frequency(enum.Enum):
    ANNUAL = "annual"
    QUARTERLY = "quarterly"
    MONTHLY = "monthly"
    UNSPECIFIED = "unspecified"

    @property
    def observations_per_year(self) -> int | None:
        return _OBS_PER_YEAR.get(self)

    @classmethod
    def parse(cls, value: "Frequency | str | None") -> "Frequency":
        if value is None:
            return cls.UNSPECIFIED
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(f.value for f in cls)
            raise DataError(f"unknown frequency {value!r}; expected one of {names}") from None


_OBS_PER_YEAR = {Frequency.ANNUAL: 1, Frequency.QUARTERLY: 4, Frequency.MONTHLY: 12}


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Ordered, finite, real-valued observations.

    The values array is stored read-only so instances can be shared freely
    between workers.
    """

    values: NDArray[np.float64]
    frequency: Frequency = Frequency.UNSPECIFIED
    label: str = ""

    def __post_init__(self) -> None:
        arr = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if arr.size < 1:
            raise DataError("time series must contain at least one observation")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise DataError(f"non-finite value at position {bad}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "frequency", Frequency.parse(self.frequency))

    def __len__(self) -> int:
        return self.values.size

    def with_values(self, values: ArrayLike, label: str | None = None) -> "TimeSeries":
        return TimeSeries(values, self.frequency, self.label if label is None else label)


def as_series(x: "TimeSeries | ArrayLike") -> TimeSeries:
    return x if isinstance(x, TimeSeries) else TimeSeries(np.asarray(x, dtype=float))


def _parse_float(text: str) -> float | None:
    try:
        v = float(text.strip())
    except ValueError:
        return None
    return v


def load_csv(
    path: str | Path,
    value_column: str | int | None = None,
    frequency: Frequency | str | None = None,
    label: str | None = None,
) -> TimeSeries:
    """Read one column of a CSV file into a :class:`TimeSeries`.

    A single header row is recognised when the first row's value cell does
    not parse as a number. ``value_column`` is either a header name or a
    zero-based column index; by default the column named ``value`` is used
    when present, otherwise the last column. Row numbers in error messages are 1-based
    file lines.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [row for row in csv.reader(fh)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path} is not valid UTF-8: {exc}") from exc

    numbered = [(i + 1, row) for i, row in enumerate(rows) if any(c.strip() for c in row)]
    if not numbered:
        raise DataError(f"{path} contains no observations")

    first_line, first = numbered[0]
    header: list[str] | None = None
    if value_column is None:
        names = [c.strip() for c in first]
        value_column = "value" if "value" in names else len(first) - 1
    if isinstance(value_column, str) and not value_column.lstrip("-").isdigit():
        header = [c.strip() for c in first]
        if value_column not in header:
            raise DataError(f"column {value_column!r} not found in header of {path}")
        col = header.index(value_column)
        numbered = numbered[1:]
    else:
        col = int(value_column)
        if col >= len(first) or _parse_float(first[col]) is None:
            header = first
            numbered = numbered[1:]

    values = []
    for line, row in numbered:
        if col >= len(row):
            raise DataError(f"row {line}: missing value column {col}")
        v = _parse_float(row[col])
        if v is None:
            raise DataError(f"row {line}: non-numeric value {row[col].strip()!r}")
        if not math.isfinite(v):
            raise DataError(f"row {line}: non-finite value {row[col].strip()!r}")
        values.append(v)
    if not values:
        raise DataError(f"{path} contains no observations")
    return TimeSeries(np.array(values), Frequency.parse(frequency), label or path.stem)


def write_csv(series: TimeSeries, path: str | Path, column: str = "value") -> None:
    """Write ``index,value`` rows with 17 significant digits (round-trips exactly)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", column])
        for i, v in enumerate(series.values):
            w.writerow([i + 1, f"{v:.17g}"])


def demean(series: TimeSeries) -> TimeSeries:
    x = series.values
    return series.with_values(x - x.mean())


def reverse(series: TimeSeries) -> TimeSeries:
    return series.with_values(series.values[::-1])
