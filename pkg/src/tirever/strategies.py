"""Decision layer: information-criterion and likelihood-ratio strategies,
the Ramsey-Rothman bicovariance test and the detrending pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from tirever.distributions import NormalityReport, chisq_sf, jarque_bera, stream
from tirever.errors import DataError, DegenerateSeriesError
from tirever.hp import hp_decompose, hp_lambda
from tirever.mar import Criterion, MarFit, fit_ar_ols, mar_grid
from tirever.series import TimeSeries, as_series, demean

REVERSIBLE_GAUSSIAN = "reversible_gaussian"
REVERSIBLE = "reversible"
IRREVERSIBLE = "irreversible"

Strategy = Literal["s1", "s2", "rr"]
MIN_LENGTH = 50


@dataclass(frozen=True, eq=False)
class TrVerdict:
    verdict: str
    strategy: str
    p_selected: int
    p_grid: int | None
    normality: NormalityReport
    fits: tuple[MarFit, ...] = ()
    selected: MarFit | None = None
    decisive_statistic: float | None = None
    decisive_p_value: float | None = None
    criterion: str | None = None
    detrended: bool = False
    hp_lambda: float | None = None

    @property
    def irreversible(self) -> bool:
        return self.verdict == IRREVERSIBLE

    def to_dict(self) -> dict:
        return {
            "kind": "verdict",
            "verdict": self.verdict,
            "strategy": self.strategy,
            "p_selected": self.p_selected,
            "p_grid": self.p_grid,
            "criterion": self.criterion,
            "normality": {
                "statistic": self.normality.statistic,
                "p_value": self.normality.p_value,
                "skewness": self.normality.skewness,
                "excess_kurtosis": self.normality.excess_kurtosis,
                "sample_size": self.normality.sample_size,
            },
            "selected": None if self.selected is None else self.selected.label,
            "decisive_statistic": self.decisive_statistic,
            "decisive_p_value": self.decisive_p_value,
            "fits": [f.to_dict() for f in self.fits],
            "detrended": self.detrended,
            "hp_lambda": self.hp_lambda,
        }


@dataclass(frozen=True, eq=False)
class RrReport:
    k: int
    gamma_hat: float
    b21: float
    b12: float
    variance_hat: float
    z_statistic: float
    p_value: float
    variance_method: str
    n_obs: int
    detrended: bool = False
    hp_lambda: float | None = None

    def rejects(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {"kind": "rr", **{f: getattr(self, f) for f in self.__dataclass_fields__}}


# --------------------------------------------------------------------------
# pseudo-causal order selection


def default_p_max(n: int) -> int:
    return max(1, min(int(12 * (n / 100) ** 0.25), n // 10))


def select_pseudo_causal_order(
    series: TimeSeries | ArrayLike,
    p_max: int | None = None,
    criterion: Criterion = "bic",
) -> tuple[int, NDArray[np.float64]]:
    """Choose the AR order in ``1..p_max`` minimising AIC or BIC.

    All regressions use the common sample starting at ``t = p_max + 1`` on
    the demeaned series. Returns the order and its OLS residuals.
    """
    y = as_series(series).values
    y = y - y.mean()
    n = y.size
    p_max = default_p_max(n) if p_max is None else int(p_max)
    if p_max < 1:
        raise DataError("p_max must be at least 1")
    if n < p_max + 20:
        raise DataError(f"series of length {n} too short for p_max={p_max}")
    if criterion not in ("aic", "bic"):
        raise DataError(f"unknown information criterion {criterion!r}")
    X = np.column_stack([y[p_max - i : n - i] for i in range(1, p_max + 1)])
    target = y[p_max:]
    m = target.size
    if np.linalg.matrix_rank(X) < p_max:
        raise DegenerateSeriesError("singular regressor matrix (constant series?)")
    best = None
    for p in range(1, p_max + 1):
        coef, *_ = np.linalg.lstsq(X[:, :p], target, rcond=None)
        resid = target - X[:, :p] @ coef
        rss = float(resid @ resid)
        if rss <= 0:
            raise DegenerateSeriesError("zero residual variance in pseudo-causal fit")
        penalty = 2.0 if criterion == "aic" else math.log(m)
        ic = m * math.log(rss / m) + penalty * p
        if best is None or ic < best[0]:
            best = (ic, p, resid)
    return best[1], best[2]


# --------------------------------------------------------------------------
# strategies 1 and 2


def _check_series(series: TimeSeries | ArrayLike) -> NDArray[np.float64]:
    y = as_series(series).values
    if y.size < MIN_LENGTH:
        raise DataError(f"need at least {MIN_LENGTH} observations, got {y.size}")
    y = y - y.mean()
    if not np.std(y) > 1e-12 * max(1.0, float(np.max(np.abs(y)))):
        raise DegenerateSeriesError("series has zero variance")
    return y


def _gate(y, p, p_max, criterion) -> tuple[int, NormalityReport]:
    if p is None:
        p_sel, resid = select_pseudo_causal_order(y, p_max, criterion)
    else:
        p_sel = int(p)
        if p_sel < 1:
            raise DataError("known order p must be at least 1")
        resid = fit_ar_ols(y, p_sel)[1]
    return p_sel, jarque_bera(resid)


def _restricted(fits) -> MarFit:
    return next(f for f in fits if f.restricted)


def _strategy1_verdict(base: dict, fits: list[MarFit], criterion: Criterion) -> TrVerdict:
    rfit = _restricted(fits)
    others = [f.criterion(criterion) for f in fits if not f.restricted]
    winner = fits[0]
    return TrVerdict(
        verdict=REVERSIBLE if winner.restricted else IRREVERSIBLE,
        strategy="s1",
        fits=tuple(fits),
        selected=winner,
        decisive_statistic=rfit.criterion(criterion) - min(others),
        criterion=criterion,
        **base,
    )


def likelihood_ratio(unrestricted: MarFit, restricted: MarFit) -> tuple[float, float]:
    """LR statistic for equal lag/lead coefficients and its chi-square(s) p-value."""
    lr = 2.0 * (unrestricted.loglik - restricted.loglik)
    lr = max(lr, 0.0)  # nesting is enforced by mar_grid; absorbs rounding only
    return lr, chisq_sf(lr, restricted.s)


def _strategy2_verdict(base: dict, fits: list[MarFit]) -> TrVerdict:
    alpha = base.pop("alpha")
    unrestricted = [f for f in fits if not f.restricted]
    # equal parameter counts: pick max likelihood; ties to the larger lead order
    best = max(unrestricted, key=lambda f: (f.loglik, f.s))
    if best.r != best.s:
        return TrVerdict(verdict=IRREVERSIBLE, strategy="s2", fits=tuple(fits), selected=best, **base)
    lr, pval = likelihood_ratio(best, _restricted(fits))
    return TrVerdict(
        verdict=IRREVERSIBLE if pval < alpha else REVERSIBLE,
        strategy="s2",
        fits=tuple(fits),
        selected=best,
        decisive_statistic=lr,
        decisive_p_value=pval,
        **base,
    )


def evaluate_strategies(
    series: TimeSeries | ArrayLike,
    strategies: tuple[str, ...] = ("s1", "s2"),
    criterion: Criterion = "bic",
    alpha: float = 0.05,
    p: int | None = None,
    p_max: int | None = None,
    normality_alpha: float | None = 0.05,
) -> dict[str, TrVerdict]:
    """Run strategies 1 and/or 2 on one series, sharing the MAR grid fits.

    ``normality_alpha=None`` disables the Gaussianity gate: the MAR grid is
    fitted even when the pseudo-causal residuals look normal.
    """
    if not 0 < alpha < 1:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    y = _check_series(series)
    p_sel, normality = _gate(y, p, p_max, criterion)
    base = dict(p_selected=p_sel, normality=normality)
    if normality_alpha is not None and not normality.rejects(normality_alpha):
        return {
            s: TrVerdict(verdict=REVERSIBLE_GAUSSIAN, strategy=s, p_grid=None, criterion=criterion, **base)
            for s in strategies
        }
    p_grid = p_sel + (p_sel % 2)
    fits = mar_grid(y, p_grid, criterion)
    base["p_grid"] = p_grid
    out = {}
    for s in strategies:
        if s == "s1":
            out[s] = _strategy1_verdict(dict(base), fits, criterion)
        elif s == "s2":
            out[s] = _strategy2_verdict(dict(base, alpha=alpha, criterion=criterion), fits)
        else:
            raise DataError(f"unknown strategy {s!r}")
    return out


def strategy1(series: TimeSeries | ArrayLike, criterion: Criterion = "bic", **options) -> TrVerdict:
    """Reversible iff the restricted MAR minimises the information criterion."""
    return evaluate_strategies(series, ("s1",), criterion=criterion, **options)["s1"]


def strategy2(series: TimeSeries | ArrayLike, alpha: float = 0.05, **options) -> TrVerdict:
    """Max-likelihood MAR among equal-size models, then an LR test of equal coefficients."""
    return evaluate_strategies(series, ("s2",), alpha=alpha, **options)["s2"]


# --------------------------------------------------------------------------
# Ramsey-Rothman


def bicovariance(x: ArrayLike, k: int) -> tuple[float, float]:
    """Sample ``B21 = mean(x_t^2 x_{t-k})`` and ``B12 = mean(x_t x_{t-k}^2)``.

    Sums are exactly rounded, so reversing ``x`` swaps the two values bit
    for bit.
    """
    x = np.asarray(x, dtype=float)
    lead, lag = x[k:], x[: x.size - k]
    n = x.size - k
    return math.fsum(lead * lead * lag) / n, math.fsum(lag * lag * lead) / n


def _standardize(x: NDArray[np.float64]) -> NDArray[np.float64]:
    # exactly rounded moments keep the result invariant to reordering
    d = x - math.fsum(x) / x.size
    return d / math.sqrt(math.fsum(d * d) / x.size)


def _rr_bootstrap_variance(d, rng, n_boot, block_length) -> float:
    """Circular block bootstrap variance of the mean of the contrast series ``d``."""
    n = d.size
    L = block_length or math.ceil(2 * math.sqrt(n))
    nblocks = math.ceil(n / L)
    starts = rng.integers(0, n, size=(n_boot, nblocks))
    idx = ((starts[:, :, None] + np.arange(L)) % n).reshape(n_boot, -1)[:, :n]
    return float(np.var(d[idx].mean(axis=1)))


def _perfect_matchings(items: tuple[int, ...]):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i, other in enumerate(rest):
        for tail in _perfect_matchings(rest[:i] + rest[i + 1 :]):
            yield ((first, other),) + tail


_MATCHINGS = tuple(_perfect_matchings(tuple(range(6))))


def _rr_gaussian_variance(z: NDArray[np.float64], k: int) -> float:
    """Exact Var of the bicovariance contrast for a Gaussian process with the
    sample autocovariances of ``z`` (sixth moments by Isserlis' theorem)."""
    n = z.size
    m = n - k
    f = np.fft.rfft(z, 2 * n)
    acov = np.fft.irfft(f * np.conj(f), 2 * n)[:n] / n
    h = np.arange(-(m - 1), m)
    # each contrast term is a product of three observations at these offsets
    terms = ((1.0, (0, 0, -k)), (-1.0, (0, -k, -k)))
    total = np.zeros(h.size)
    for ca, pa in terms:
        for cb, pb in terms:
            pos = [np.full(h.size, a) for a in pa] + [h + b for b in pb]
            for matching in _MATCHINGS:
                prod = np.full(h.size, ca * cb)
                for i, j in matching:
                    prod *= acov[np.abs(pos[i] - pos[j])]
                total += prod
    return float(total @ (m - np.abs(h))) / m**2


def rr_test(
    series: TimeSeries | ArrayLike,
    k: int = 2,
    variance_method: Literal["gaussian_null", "iid_plugin", "block_bootstrap"] = "gaussian_null",
    rng: np.random.Generator | None = None,
    n_boot: int = 500,
    block_length: int | None = None,
) -> RrReport:
    """Ramsey-Rothman symmetric-bicovariance test; the null is time reversibility.

    The series is demeaned and scaled to unit variance first. Variance of
    the contrast ``B21 - B12``:

    ``gaussian_null``
        exact variance for a Gaussian (hence reversible) process sharing the
        sample autocovariances. Heavy tails inflate the true variance beyond
        this, so the test over-rejects when sixth moments do not exist.
    ``iid_plugin``
        ``2 (m4 - m3^2 - 1) / (T - k)``, valid for i.i.d. data only.
    ``block_bootstrap``
        circular block bootstrap of the contrast series, blocks of length
        ``ceil(2 sqrt(T))`` unless ``block_length`` is given.
    """
    x = as_series(series).values
    n = x.size
    if k < 1:
        raise DataError("lag k must be positive")
    if n <= k + 10:
        raise DataError(f"series of length {n} too short for lag {k}")
    if not np.std(x) > 1e-12 * max(1.0, float(np.max(np.abs(x)))):
        raise DegenerateSeriesError("series has zero variance")
    z = _standardize(x)
    b21, b12 = bicovariance(z, k)
    gamma = b21 - b12
    if variance_method == "gaussian_null":
        var = _rr_gaussian_variance(z, k)
    elif variance_method == "iid_plugin":
        m3, m4 = float(np.mean(z**3)), float(np.mean(z**4))
        var = 2.0 * (m4 - m3 * m3 - 1.0) / (n - k)
    elif variance_method == "block_bootstrap":
        rng = stream(0, k, n) if rng is None else rng
        lead, lag = z[k:], z[: n - k]
        var = _rr_bootstrap_variance(lead * lag * (lead - lag), rng, n_boot, block_length)
    else:
        raise DataError(f"unknown variance method {variance_method!r}")
    if not var > 0:
        raise DegenerateSeriesError("degenerate bicovariance variance")
    zstat = gamma / math.sqrt(var)
    return RrReport(k, gamma, b21, b12, var, zstat, math.erfc(abs(zstat) / math.sqrt(2.0)), variance_method, n)


# --------------------------------------------------------------------------
# pipeline


def run_pipeline(
    series: TimeSeries,
    strategy: Strategy = "s2",
    detrend: bool = False,
    lam: float | None = None,
    lambda_exponent: int = 4,
    **options,
) -> TrVerdict | RrReport:
    """Optionally HP-detrend, demean, then apply one strategy.

    ``options`` are forwarded to the strategy (``criterion``, ``alpha``,
    ``p``, ``p_max`` for s1/s2; ``k``, ``variance_method``, ``rng`` for rr).
    """
    series = as_series(series)
    used_lambda = None
    if detrend:
        used_lambda = float(lam) if lam is not None else hp_lambda(series.frequency, lambda_exponent)
        cycle = hp_decompose(series, used_lambda).cycle
        scale = max(float(np.std(series.values)), float(np.max(np.abs(series.values))), 1e-300)
        if np.std(cycle.values) <= 1e-9 * scale:
            raise DegenerateSeriesError("cyclical component has zero variance (input is a pure trend)")
        series = cycle
    series = demean(series)
    if strategy == "rr":
        out = rr_test(series, **options)
    elif strategy in ("s1", "s2"):
        out = evaluate_strategies(series, (strategy,), **options)[strategy]
    else:
        raise DataError(f"unknown strategy {strategy!r}")
    return replace(out, detrended=detrend, hp_lambda=used_lambda)
