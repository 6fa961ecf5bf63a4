"""Hodrick-Prescott trend/cycle decomposition.

The trend solves ``(I + lam * D'D) f = y`` where ``D`` is the second
difference operator; the system matrix is symmetric positive definite with
bandwidth two, so a banded Cholesky solve is exact and O(T).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import solveh_banded

from tirever.errors import DataError
from tirever.series import Frequency, TimeSeries, as_series


@dataclass(frozen=True, eq=False)
class HpDecomposition:
    trend: TimeSeries
    cycle: TimeSeries
    lam: float


@dataclass(frozen=True, eq=False)
class HpWeights:
    """Row ``center_index`` (1-based) of the HP smoother matrix.

    ``weights[i]`` multiplies ``y[center_index + offsets[i]]``.
    """

    center_index: int
    offsets: NDArray[np.int64]
    weights: NDArray[np.float64]

    def at(self, j: int) -> float:
        i = j - self.offsets[0]
        return float(self.weights[i]) if 0 <= i < self.weights.size else 0.0

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    @property
    def asymmetry(self) -> float:
        """max_j |w(j) - w(-j)|, a missing side counted as zero weight."""
        span = int(max(-self.offsets[0], self.offsets[-1]))
        if span == 0:
            return 0.0
        return max(abs(self.at(j) - self.at(-j)) for j in range(1, span + 1))


def hp_lambda(frequency: Frequency | str, exponent: int = 4) -> float:
    """Smoothing penalty ``(obs_per_year / 4) ** exponent * 1600``."""
    freq = Frequency.parse(frequency)
    if freq.observations_per_year is None:
        raise DataError("cannot derive lambda for an unspecified frequency; pass lambda explicitly")
    if exponent not in (2, 4):
        raise DataError(f"lambda exponent must be 2 or 4, got {exponent}")
    return (freq.observations_per_year / 4) ** exponent * 1600.0


def _banded_system(n: int, lam: float) -> NDArray[np.float64]:
    ab = np.zeros((3, n))
    diag = np.full(n, 6.0)
    diag[[0, -1]] = 1.0
    diag[[1, -2]] = 5.0
    off1 = np.full(n - 1, -4.0)
    off1[[0, -1]] = -2.0
    ab[2] = 1.0 + lam * diag
    ab[1, 1:] = lam * off1
    ab[0, 2:] = lam
    return ab


def _check(n: int, lam: float) -> None:
    if n < 5:
        raise DataError(f"HP filter needs at least 5 observations, got {n}")
    if not lam > 0:
        raise DataError(f"lambda must be positive, got {lam}")


def hp_trend(y: NDArray[np.float64], lam: float) -> NDArray[np.float64]:
    y = np.asarray(y, dtype=float)
    _check(y.size, lam)
    return solveh_banded(_banded_system(y.size, lam), y, check_finite=False)


def hp_decompose(series: TimeSeries, lam: float) -> HpDecomposition:
    series = as_series(series)
    trend = hp_trend(series.values, lam)
    return HpDecomposition(
        trend=series.with_values(trend, f"{series.label}:trend"),
        cycle=series.with_values(series.values - trend, f"{series.label}:cycle"),
        lam=float(lam),
    )


def hp_normal_residual(y: NDArray[np.float64], trend: NDArray[np.float64], lam: float) -> float:
    """max |(I + lam D'D) f - y|, computed with explicit second differences."""
    d2 = np.diff(trend, 2)
    penalty = np.zeros_like(trend)
    penalty[:-2] += d2
    penalty[1:-1] -= 2 * d2
    penalty[2:] += d2
    return float(np.max(np.abs(trend + lam * penalty - y)))


def hp_weights(n: int, lam: float, row: int) -> HpWeights:
    """Weights producing trend observation ``row`` (1-based) from the data."""
    _check(n, lam)
    if not 1 <= row <= n:
        raise DataError(f"row must lie in 1..{n}, got {row}")
    e = np.zeros(n)
    e[row - 1] = 1.0
    w = solveh_banded(_banded_system(n, lam), e, check_finite=False)
    return HpWeights(row, np.arange(1 - row, n - row + 1), w)


def hp_psi(lam: float) -> tuple[float, float]:
    """Coefficients of the lag/lead factor ``1 - psi1 L - psi2 L^2``."""
    if not lam > 0:
        raise DataError(f"lambda must be positive, got {lam}")
    return 4.0 * lam / (lam + 1.0), -float(lam)


def hp_factorization_check(lam: float) -> float:
    """Constant subtracted from the MAR(2,2)-type factorisation of the HP symbol."""
    psi1, psi2 = hp_psi(lam)
    return psi1**2 + psi2**2 + 6.0 * psi2
