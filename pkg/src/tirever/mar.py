"""Mixed causal-noncausal autoregressions, MAR(r, s).

A MAR(r, s) process satisfies ``phi(L) varphi(L^-1) y_t = eps_t`` with
``phi(z) = 1 - phi_1 z - ... - phi_r z^r`` acting on lags and
``varphi(z) = 1 - varphi_1 z - ... - varphi_s z^s`` acting on leads. Both
polynomials must have their roots outside the unit circle; we enforce a
margin so that every reciprocal root has modulus at most ``ROOT_MARGIN``.

Estimation is approximate maximum likelihood under symmetric Student's-t
innovations: the likelihood is the product of t densities of the filtered
residuals over ``t = r+1 .. T-s``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize, special
from scipy.signal import lfilter

from tirever.distributions import NU_MAX, SkewedTParams, skewt_logpdf, skewt_sample
from tirever.errors import DataError, FitError
from tirever.series import TimeSeries, as_series

ROOT_MARGIN = 0.99
NU_START = 6.0
MIN_EXTRA_OBS = 20

Criterion = Literal["aic", "bic"]


def reciprocal_root_modulus(coeffs: ArrayLike) -> float:
    """Largest modulus among the reciprocal roots of ``1 - c_1 z - ... - c_m z^m``."""
    c = np.asarray(coeffs, dtype=float)
    if c.size == 0 or not np.any(c):
        return 0.0
    return float(np.max(np.abs(np.roots(np.r_[1.0, -c]))))


def _as_coeffs(x: ArrayLike | None) -> NDArray[np.float64]:
    if x is None:
        return np.zeros(0)
    arr = np.atleast_1d(np.asarray(x, dtype=float)).copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MarSpec:
    """Orders, coefficients and innovation law of a MAR(r, s) model.

    ``phi`` holds the lag (causal) coefficients and ``varphi`` the lead
    (noncausal) coefficients, both with the ``1 - c_1 z - ...`` sign
    convention.
    """

    phi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    varphi: NDArray[np.float64] = field(default_factory=lambda: np.zeros(0))
    innovation: SkewedTParams | None = None
    check_roots: bool = True

    def __post_init__(self) -> None:
        phi, varphi = _as_coeffs(self.phi), _as_coeffs(self.varphi)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "varphi", varphi)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(varphi))):
            raise DataError("MAR coefficients must be finite")
        if self.check_roots:
            for name, c in (("causal", phi), ("noncausal", varphi)):
                m = reciprocal_root_modulus(c)
                if m > ROOT_MARGIN + 1e-12:
                    raise DataError(
                        f"{name} polynomial violates the root condition: roots must lie "
                        f"outside the unit circle (largest reciprocal root modulus {m:.4f} "
                        f"> margin {ROOT_MARGIN})"
                    )

    @property
    def r(self) -> int:
        return self.phi.size

    @property
    def s(self) -> int:
        return self.varphi.size

    @property
    def p(self) -> int:
        return self.r + self.s

    def reversed(self) -> "MarSpec":
        """Spec of the time-reversed process: lags and leads swap roles."""
        return replace(self, phi=self.varphi, varphi=self.phi)

    def __repr__(self) -> str:
        return (
            f"MarSpec(r={self.r}, s={self.s}, phi={self.phi.tolist()}, "
            f"varphi={self.varphi.tolist()}, innovation={self.innovation})"
        )


def check_condition_31(spec: MarSpec, tolerance: float = 1e-8) -> bool:
    """True iff the lag and lead polynomials coincide (a time-reversible MAR)."""
    if spec.r != spec.s:
        return False
    if spec.r == 0:
        return True
    return bool(np.max(np.abs(spec.phi - spec.varphi)) <= tolerance)


# --------------------------------------------------------------------------
# filtering and simulation


def _lead_filter(y: NDArray[np.float64], varphi: NDArray[np.float64]) -> NDArray[np.float64]:
    """u_t = y_t - sum_j varphi_j y_{t+j}, t = 0 .. T-s-1."""
    s = varphi.size
    n = y.size - s
    u = y[:n].copy()
    for j in range(1, s + 1):
        u -= varphi[j - 1] * y[j : n + j]
    return u


def _lag_filter(u: NDArray[np.float64], phi: NDArray[np.float64]) -> NDArray[np.float64]:
    """e_t = u_t - sum_i phi_i u_{t-i}, t = r .. len(u)-1."""
    r = phi.size
    n = u.size
    e = u[r:].copy()
    for i in range(1, r + 1):
        e -= phi[i - 1] * u[r - i : n - i]
    return e


def mar_residuals(series: TimeSeries | ArrayLike, spec: MarSpec) -> NDArray[np.float64]:
    """Innovations ``phi(L) varphi(L^-1) y_t`` for ``t = r+1 .. T-s`` (1-based)."""
    y = as_series(series).values
    if y.size <= spec.r + spec.s:
        raise DataError(f"series of length {y.size} too short for MAR({spec.r},{spec.s})")
    return _lag_filter(_lead_filter(y, spec.varphi), spec.phi)


def mar_from_innovations(
    eps: ArrayLike, phi: ArrayLike = (), varphi: ArrayLike = ()
) -> NDArray[np.float64]:
    """Invert the MAR filter on a finite window with zero boundary values.

    The lead recursion ``v_t = sum varphi_j v_{t+j} + eps_t`` runs backward
    from zero terminal values, then ``y_t = sum phi_i y_{t-i} + v_t`` runs
    forward from zero initial values.
    """
    eps = np.asarray(eps, dtype=float)
    phi, varphi = _as_coeffs(phi), _as_coeffs(varphi)
    v = eps
    if varphi.size:
        v = lfilter([1.0], np.r_[1.0, -varphi], eps[::-1])[::-1]
    if phi.size:
        return lfilter([1.0], np.r_[1.0, -phi], v)
    return np.array(v, dtype=float, copy=True)


def mar_simulate(
    spec: MarSpec,
    n: int,
    rng: np.random.Generator,
    burn_in: int = 200,
    return_innovations: bool = False,
) -> TimeSeries | tuple[TimeSeries, NDArray[np.float64]]:
    """Simulate ``n`` observations of a stationary MAR process.

    Innovations are drawn on a window of ``n + 2 * burn_in`` points and the
    central ``n`` outputs are returned. The boundary truncation error decays
    like ``modulus ** burn_in``. With ``return_innovations`` the full
    innovation window is returned as well.
    """
    if spec.innovation is None:
        raise DataError("simulation needs an innovation law")
    if burn_in < 1:
        raise DataError("burn_in must be at least 1")
    if n < 1:
        raise DataError("sample size must be at least 1")
    eps = skewt_sample(spec.innovation, n + 2 * burn_in, rng)
    y = mar_from_innovations(eps, spec.phi, spec.varphi)[burn_in : burn_in + n]
    ts = TimeSeries(y, label=f"MAR({spec.r},{spec.s})")
    return (ts, eps) if return_innovations else ts


# --------------------------------------------------------------------------
# likelihood


def mar_loglik(series: TimeSeries | ArrayLike, spec: MarSpec) -> float:
    """Approximate log-likelihood of ``series`` under ``spec`` (any skewness)."""
    if spec.innovation is None:
        raise DataError("likelihood needs an innovation law")
    return float(np.sum(skewt_logpdf(mar_residuals(series, spec), spec.innovation)))


def _t_loglik_grad(
    y: NDArray[np.float64],
    phi: NDArray[np.float64],
    varphi: NDArray[np.float64],
    nu: float,
    sigma: float,
) -> tuple[float, NDArray[np.float64]]:
    """Symmetric-t log-likelihood and its gradient in (phi, varphi, nu, sigma)."""
    r, s = phi.size, varphi.size
    u = _lead_filter(y, varphi)
    e = _lag_filter(u, phi)
    n = e.size
    z2 = (e / sigma) ** 2
    q = 1.0 + z2 / nu
    logq = np.log(q)
    const = special.gammaln(0.5 * (nu + 1)) - special.gammaln(0.5 * nu) - 0.5 * math.log(nu * math.pi)
    ll = n * (const - math.log(sigma)) - 0.5 * (nu + 1) * logq.sum()

    score = -(nu + 1) * e / (nu * sigma * sigma * q)  # d ll / d e_t
    grad = np.empty(r + s + 2)
    m = u.size
    for i in range(1, r + 1):
        grad[i - 1] = -score @ u[r - i : m - i]
    if s:
        w = _lag_filter(y, phi)  # w_t = phi(L) y_t, aligned so w[0] is t = r
        for j in range(1, s + 1):
            grad[r + j - 1] = -score @ w[j : j + n]
    ratio = (z2 / q).sum()
    grad[r + s] = (
        n * 0.5 * (special.digamma(0.5 * (nu + 1)) - special.digamma(0.5 * nu) - 1.0 / nu)
        - 0.5 * logq.sum()
        + 0.5 * (nu + 1) * ratio / nu**2
    )
    grad[r + s + 1] = -n / sigma + (nu + 1) * ratio / (nu * sigma)
    return float(ll), grad


def mar_loglik_gradient(series: TimeSeries | ArrayLike, spec: MarSpec) -> NDArray[np.float64]:
    """Analytic gradient of the symmetric-t likelihood in (phi, varphi, nu, sigma)."""
    if spec.innovation is None:
        raise DataError("likelihood needs an innovation law")
    if spec.innovation.gamma != 1.0:
        raise DataError("analytic gradient is available for symmetric innovations only")
    y = as_series(series).values
    return _t_loglik_grad(y, spec.phi, spec.varphi, spec.innovation.nu, spec.innovation.sigma)[1]


# --------------------------------------------------------------------------
# stationarity-preserving reparameterisation


def _pacf_to_coeffs(x: NDArray) -> NDArray:
    """Map unconstrained reals to coefficients with reciprocal roots inside ROOT_MARGIN.

    Partial autocorrelations ``tanh(x)`` give a stationary polynomial via the
    Durbin-Levinson recursion; scaling coefficient ``i`` by ``ROOT_MARGIN**i``
    shrinks every reciprocal root by ``ROOT_MARGIN``. Works on complex input
    (used for complex-step Jacobians).
    """
    kappa = np.tanh(x)
    c = np.zeros(0, dtype=kappa.dtype)
    for k in range(kappa.size):
        c = np.r_[c - kappa[k] * c[::-1], kappa[k]]
    return c * ROOT_MARGIN ** np.arange(1, kappa.size + 1)


def _coeffs_to_pacf(c: NDArray[np.float64]) -> NDArray[np.float64]:
    m = c.size
    a = c / ROOT_MARGIN ** np.arange(1, m + 1)
    x = np.zeros(m)
    for k in range(m, 0, -1):
        kap = float(np.clip(a[k - 1], -0.999999, 0.999999))
        x[k - 1] = math.atanh(kap)
        prev = a[: k - 1]
        a = (prev + kap * prev[::-1]) / (1.0 - kap * kap)
    return x


def _pacf_jacobian(x: NDArray[np.float64]) -> NDArray[np.float64]:
    m = x.size
    jac = np.empty((m, m))
    h = 1e-30
    for k in range(m):
        xc = x.astype(complex)
        xc[k] += 1j * h
        jac[:, k] = _pacf_to_coeffs(xc).imag / h
    return jac


def _make_feasible(c: ArrayLike) -> NDArray[np.float64]:
    c = np.asarray(c, dtype=float).copy()
    k = np.arange(1, c.size + 1)
    while reciprocal_root_modulus(c) > 0.97 * ROOT_MARGIN:
        c = c * 0.9**k
    return c


_NU_SPAN = NU_MAX - 2.0


def _nu_from(a: float) -> tuple[float, float]:
    """nu in (2, NU_MAX) from an unconstrained real, with d nu / d a."""
    sig = min(max(0.5 * (1.0 + math.tanh(0.5 * a)), 1e-12), 1.0)
    return 2.0 + _NU_SPAN * sig, _NU_SPAN * sig * (1.0 - sig)


def _nu_to(nu: float) -> float:
    sig = min(max((nu - 2.0) / _NU_SPAN, 1e-12), 1 - 1e-12)
    return math.log(sig / (1.0 - sig))


# --------------------------------------------------------------------------
# estimation


@dataclass(frozen=True, eq=False)
class MarFit:
    spec: MarSpec
    loglik: float
    aic: float
    bic: float
    std_errors: dict[str, float]
    n_effective: int
    n_params: int
    converged: bool
    restricted: bool

    @property
    def r(self) -> int:
        return self.spec.r

    @property
    def s(self) -> int:
        return self.spec.s

    @property
    def label(self) -> str:
        tag = " restricted" if self.restricted else ""
        return f"MAR({self.r},{self.s}){tag}"

    def criterion(self, name: Criterion) -> float:
        if name not in ("aic", "bic"):
            raise DataError(f"unknown information criterion {name!r}")
        return self.aic if name == "aic" else self.bic

    def to_dict(self) -> dict:
        inn = self.spec.innovation
        return {
            "r": self.r,
            "s": self.s,
            "restricted": self.restricted,
            "phi": self.spec.phi.tolist(),
            "varphi": self.spec.varphi.tolist(),
            "nu": inn.nu,
            "sigma": inn.sigma,
            "loglik": self.loglik,
            "aic": self.aic,
            "bic": self.bic,
            "std_errors": dict(self.std_errors),
            "n_effective": self.n_effective,
            "n_params": self.n_params,
            "converged": self.converged,
        }


class _Problem:
    """Negative mean log-likelihood over the unconstrained parameter vector.

    Layout: ``[x_phi (r), x_varphi (s), a, b]`` for unrestricted fits and
    ``[x_c (s), a, b]`` for restricted ones, where ``x`` are PACF-type
    coordinates, ``nu = 2 + (NU_MAX-2) * logistic(a)`` and ``sigma = exp(b)``.
    """

    def __init__(self, y: NDArray[np.float64], r: int, s: int, restricted: bool):
        self.y, self.r, self.s, self.restricted = y, r, s, restricted
        self.n = y.size - r - s

    def split(self, theta: NDArray[np.float64]):
        r, s = self.r, self.s
        if self.restricted:
            xs = [theta[:s], theta[:s]]
        else:
            xs = [theta[:r], theta[r : r + s]]
        return xs, theta[-2], theta[-1]

    def coefficients(self, theta):
        (xp, xv), a, b = self.split(theta)
        return _pacf_to_coeffs(xp), _pacf_to_coeffs(xv), _nu_from(a)[0], math.exp(b)

    def pack(self, phi, varphi, nu, sigma) -> NDArray[np.float64]:
        tail = [_nu_to(nu), math.log(sigma)]
        if self.restricted:
            return np.r_[_coeffs_to_pacf(np.asarray(phi, float)), tail]
        return np.r_[_coeffs_to_pacf(np.asarray(phi, float)), _coeffs_to_pacf(np.asarray(varphi, float)), tail]

    def __call__(self, theta: NDArray[np.float64]) -> tuple[float, NDArray[np.float64]]:
        (xp, xv), a, b = self.split(theta)
        if abs(b) > 700 or not np.all(np.isfinite(theta)):
            return np.inf, np.zeros_like(theta)
        phi, varphi = _pacf_to_coeffs(xp), _pacf_to_coeffs(xv)
        nu, dnu = _nu_from(a)
        sigma = math.exp(b)
        ll, g = _t_loglik_grad(self.y, phi, varphi, nu, sigma)
        r, s = self.r, self.s
        gp = g[:r] @ _pacf_jacobian(xp) if r else np.zeros(0)
        gv = g[r : r + s] @ _pacf_jacobian(xv) if s else np.zeros(0)
        gc = np.r_[gp + gv] if self.restricted else np.r_[gp, gv]
        grad = np.r_[gc, g[-2] * dnu, g[-1] * sigma]
        return -ll / self.n, -grad / self.n


def fit_ar_ols(y: ArrayLike, p: int, start: int | None = None) -> tuple[NDArray, NDArray]:
    """Least-squares AR(p) without intercept on observations ``start..T-1``.

    Returns ``(coefficients, residuals)``; ``start`` defaults to ``p``.
    """
    y = np.asarray(y, dtype=float)
    start = p if start is None else start
    if p == 0:
        return np.zeros(0), y[start:].copy()
    X = np.column_stack([y[start - i : y.size - i] for i in range(1, p + 1)])
    target = y[start:]
    coef, *_ = np.linalg.lstsq(X, target, rcond=None)
    return coef, target - X @ coef


def _root_allocations(ar: NDArray[np.float64], r: int, s: int, limit: int = 6):
    """Split the reciprocal roots of a pseudo-causal AR(r+s) between lag and lead sides."""
    p = r + s
    if ar.size != p or p == 0:
        return []
    roots = np.roots(np.r_[1.0, -ar])
    out = []
    for subset in itertools.combinations(range(p), s):
        lead = roots[list(subset)]
        lag = np.delete(roots, list(subset))
        polys = []
        for rts in (lag, lead):
            c = np.poly(rts) if rts.size else np.ones(1)
            if np.max(np.abs(c.imag)) > 1e-8:
                break
            polys.append(-c.real[1:])
        if len(polys) == 2:
            out.append((polys[0], polys[1]))
        if len(out) >= limit:
            break
    return out


def _sign_patterns(m: int, scale: float = 0.1):
    return [scale * np.array(signs) for signs in itertools.product((1.0, -1.0), repeat=m)]


def _hessian(f, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Central finite-difference Hessian of a scalar function given its gradient."""
    k = x.size
    H = np.empty((k, k))
    for i in range(k):
        h = max(1e-4, 1e-4 * abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        H[:, i] = (f(xp) - f(xm)) / (2 * h)
    return 0.5 * (H + H.T)


def _param_names(r: int, s: int) -> list[str]:
    return [f"phi{i}" for i in range(1, r + 1)] + [f"varphi{j}" for j in range(1, s + 1)]


def _standard_errors(y, phi, varphi, nu, sigma, restricted) -> tuple[dict[str, float], bool]:
    """Inverse negative Hessian in the fitting coordinates, mapped back by the delta method."""
    r, s = phi.size, varphi.size
    base = phi.copy() if restricted else np.r_[phi, varphi]
    m = base.size

    def grad(theta):
        c = theta[:m]
        ph, vp = (c, c) if restricted else (c[:r], c[r:])
        nu_, dnu = _nu_from(theta[m])
        sg = math.exp(theta[m + 1])
        _, g = _t_loglik_grad(y, ph, vp, nu_, sg)
        gc = g[:r] + g[r : r + s] if restricted else g[: r + s]
        return np.r_[gc, g[-2] * dnu, g[-1] * sg]

    theta = np.r_[base, _nu_to(nu), math.log(sigma)]
    H = -_hessian(grad, theta)
    keep = np.arange(theta.size)
    if abs(H[m, m]) < 1e-6 * max(1.0, float(np.max(np.abs(np.diag(H))))):
        keep = np.delete(keep, m)  # flat in nu (at a bound): treat nu as known
    Hk = H[np.ix_(keep, keep)]
    try:
        cov = np.linalg.inv(Hk)
    except np.linalg.LinAlgError:
        cov = np.full_like(Hk, np.nan)
    var = np.full(theta.size, np.nan)
    var[keep] = np.diag(cov)
    ok = bool(np.all(var[keep] > 0) and np.all(np.isfinite(var[keep])))
    se = np.sqrt(np.where(var > 0, var, np.nan))
    se[m] *= _nu_from(theta[m])[1]
    se[m + 1] *= sigma
    out = {}
    if restricted:
        for i in range(s):
            out[f"phi{i + 1}"] = out[f"varphi{i + 1}"] = float(se[i])
    else:
        out.update(zip(_param_names(r, s), map(float, se[:m])))
    out["nu"] = float(se[m])
    out["sigma"] = float(se[m + 1])
    return out, ok


def _information_criteria(loglik: float, k: int, n: int) -> tuple[float, float]:
    return -2.0 * loglik + 2.0 * k, -2.0 * loglik + k * math.log(n)


def _fit_starts(y, r, s, restricted, init, pseudo_ar) -> list[tuple[NDArray, NDArray]]:
    starts: list[tuple[NDArray, NDArray]] = []
    if init is not None:
        starts.append((np.asarray(init[0], float), np.asarray(init[1], float)))
    if restricted:
        if s <= 2:
            starts += [(c, c) for c in _sign_patterns(s)]
        ar_s, _ = fit_ar_ols(y, s)
        starts.append((0.5 * ar_s, 0.5 * ar_s))
    else:
        if pseudo_ar is not None:
            starts += _root_allocations(pseudo_ar, r, s)
        starts.append((fit_ar_ols(y, r)[0], np.zeros(s)))
        starts.append((np.zeros(r), fit_ar_ols(y[::-1], s)[0]))
        if r <= 2 and s <= 2:
            starts += [(c[:r], c[r:]) for c in _sign_patterns(r + s)]
    return starts


def mar_fit(
    series: TimeSeries | ArrayLike,
    r: int,
    s: int,
    restricted: bool = False,
    init: tuple[ArrayLike, ArrayLike] | None = None,
    pseudo_ar: ArrayLike | None = None,
    n_refine: int = 4,
) -> MarFit:
    """Approximate maximum-likelihood fit of a MAR(r, s) with symmetric t errors.

    Several starting points (root allocations of a pseudo-causal AR, the
    plain causal and noncausal AR fits, small sign patterns, and ``init``)
    are screened by likelihood; the ``n_refine`` best are refined with BFGS
    using the analytic gradient and the best optimum is returned. With
    ``restricted`` the lag and lead coefficients are forced equal.
    """
    y = as_series(series).values
    if r < 0 or s < 0:
        raise DataError("orders must be non-negative")
    if restricted and r != s:
        raise DataError("restricted fit requires r == s")
    if y.size < r + s + MIN_EXTRA_OBS:
        raise DataError(f"series of length {y.size} too short for MAR({r},{s}); need {r + s + MIN_EXTRA_OBS}")
    if pseudo_ar is None and not restricted and r and s:
        pseudo_ar = fit_ar_ols(y, r + s)[0]

    problem = _Problem(y, r, s, restricted)
    candidates = []
    for phi0, varphi0 in _fit_starts(y, r, s, restricted, init, pseudo_ar):
        phi0, varphi0 = _make_feasible(phi0), _make_feasible(varphi0)
        if restricted:
            varphi0 = phi0
        resid = _lag_filter(_lead_filter(y, varphi0), phi0)
        sd = float(np.std(resid))
        if not sd > 0:
            continue
        theta0 = problem.pack(phi0, varphi0, NU_START, sd)
        val, _ = problem(theta0)
        if np.isfinite(val):
            candidates.append((val, theta0))
    if not candidates:
        raise FitError(f"MAR({r},{s}): no feasible starting point")
    candidates.sort(key=lambda c: c[0])
    picked: list[NDArray] = []
    for _, th in candidates:
        if all(np.max(np.abs(th - q)) > 1e-3 for q in picked):
            picked.append(th)
        if len(picked) >= n_refine:
            break

    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for theta0 in picked:
            res = optimize.minimize(problem, theta0, jac=True, method="BFGS", options={"gtol": 1e-6, "maxiter": 400})
            if np.isfinite(res.fun) and (best is None or res.fun < best.fun):
                best = res
    if best is None:
        raise FitError(f"MAR({r},{s}): optimisation diverged from every start")

    phi, varphi, nu, sigma = problem.coefficients(best.x)
    feasible = max(reciprocal_root_modulus(phi), reciprocal_root_modulus(varphi)) <= ROOT_MARGIN
    ll, _ = _t_loglik_grad(y, phi, varphi, nu, sigma)
    grad_ok = bool(np.max(np.abs(best.jac)) < 1e-3)
    se, se_ok = _standard_errors(y, phi, varphi, nu, sigma, restricted)
    k = (s if restricted else r + s) + 2
    n = y.size - r - s
    aic, bic = _information_criteria(ll, k, n)
    spec = MarSpec(phi, varphi, SkewedTParams(nu, 1.0, sigma), check_roots=False)
    return MarFit(
        spec=spec,
        loglik=ll,
        aic=aic,
        bic=bic,
        std_errors=se,
        n_effective=n,
        n_params=k,
        converged=bool(feasible and (best.success or grad_ok) and se_ok),
        restricted=restricted,
    )


def _grid_key(fit: MarFit, criterion: Criterion):
    return (fit.criterion(criterion), -fit.s, 0 if fit.restricted else 1)


def mar_grid(
    series: TimeSeries | ArrayLike, p: int, criterion: Criterion = "bic"
) -> list[MarFit]:
    """Fit every MAR(r, s) with ``r + s = p`` plus, for even ``p``, the restricted MAR(p/2, p/2).

    The result is sorted by the criterion, ascending; ties go to the larger
    lead order and then to the restricted model. When the restricted model
    beats its unrestricted parent in likelihood (a local optimum), the
    parent is refitted from the restricted solution so nesting holds.
    """
    if p < 1:
        raise DataError("total order p must be at least 1")
    if criterion not in ("aic", "bic"):
        raise DataError(f"unknown information criterion {criterion!r}")
    y = as_series(series).values
    pseudo_ar = fit_ar_ols(y, p)[0] if y.size > 2 * p else None
    fits: dict[tuple[int, int], MarFit] = {}
    for s in range(p + 1):
        r = p - s
        try:
            fits[(r, s)] = mar_fit(y, r, s, pseudo_ar=pseudo_ar)
        except (DataError, FitError) as exc:
            raise type(exc)(f"MAR({r},{s}): {exc}") from exc
    out = list(fits.values())
    if p % 2 == 0:
        h = p // 2
        parent = fits[(h, h)]
        init = 0.5 * (parent.spec.phi + parent.spec.varphi)
        try:
            rfit = mar_fit(y, h, h, restricted=True, init=(init, init))
        except (DataError, FitError) as exc:
            raise type(exc)(f"restricted MAR({h},{h}): {exc}") from exc
        if rfit.loglik > parent.loglik:
            refit = mar_fit(y, h, h, init=(rfit.spec.phi, rfit.spec.varphi), n_refine=1)
            if refit.loglik > parent.loglik:
                out[out.index(parent)] = refit
        out.append(rfit)
    return sorted(out, key=lambda f: _grid_key(f, criterion))
