"""Two-covariate GARCH-MIDAS estimation.

The conditional variance of daily returns is the product of a unit-mean
GJR-GARCH(1,1) short-run component ``h`` and a monthly long-run component
``tau`` built from beta-weighted lags of two monthly covariates::

    r_i = mu + sqrt(h_i * tau_t) z_i
    h_i = (1 - alpha - gamma/2 - beta)
          + (alpha + gamma * 1[eps_{i-1} < 0]) * eps_{i-1}**2 / tau_t
          + beta * h_{i-1}
    tau_t = exp(m + theta1 * sum_k phi_k(w2_1) x1_{t-k}
                  + theta2 * sum_k phi_k(w2_2) x2_{t-k})      (log form)

The level form drops the ``exp`` and requires ``tau_t > 0`` explicitly.
Parameters are fitted by Gaussian quasi-maximum likelihood.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, fields, replace
from typing import Mapping, Sequence

import numba
import numpy as np
from scipy import optimize

from . import numdiff
from .errors import (
    ConvergenceWarning,
    FrequencyMismatch,
    InsufficientData,
    InsufficientHistory,
    InvalidParams,
    InvalidShape,
    NonStationaryParams,
    NotFitted,
    PositivityViolated,
)
from .series import Frequency, ReturnSeries, TimeSeries, month_ordinal

LOG_2PI = math.log(2.0 * math.pi)
FORMS = ("log", "level")


# -- weights ----------------------------------------------------------------

@dataclass(frozen=True)
class BetaWeights:
    K: int
    w1: float
    w2: float
    weights: np.ndarray


def _beta_weight_values(K: int, w1: float, w2: float) -> np.ndarray:
    u = np.arange(1, K + 1) / (K + 1.0)
    # log-space keeps large shape values from under/overflowing
    logw = (w1 - 1.0) * np.log(u) + (w2 - 1.0) * np.log1p(-u)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def beta_weights(K: int, w1: float = 1.0, w2: float = 1.0) -> BetaWeights:
    """Normalized beta lag weights for lags ``k = 1..K``.

    The beta density is evaluated on the interior grid ``k / (K + 1)`` so
    that neither endpoint receives a zero weight. With ``w1 = 1`` the weights
    decay in ``k`` at a rate set by ``w2``; ``w1 = w2 = 1`` is flat.
    """
    if int(K) != K or K < 1:
        raise InvalidShape(f"K must be a positive integer, got {K}")
    if not (w1 >= 1.0 and w2 >= 1.0):
        raise InvalidShape(f"beta shapes must be >= 1, got w1={w1}, w2={w2}")
    w = _beta_weight_values(int(K), float(w1), float(w2))
    w.setflags(write=False)
    return BetaWeights(int(K), float(w1), float(w2), w)


# -- parameters -------------------------------------------------------------

@dataclass(frozen=True)
class GarchMidasSpec:
    K: int = 12
    w1_fixed: bool = True
    long_run_form: str = "log"
    covariate_names: tuple[str, str] = ("x1", "x2")

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise InvalidShape("K must be >= 1")
        if self.long_run_form not in FORMS:
            raise ValueError(f"long_run_form must be one of {FORMS}")
        if len(self.covariate_names) != 2:
            raise ValueError("exactly two low-frequency covariates are supported")


@dataclass(frozen=True)
class GarchMidasParams:
    mu: float = 0.0
    alpha: float = 0.05
    gamma: float = 0.10
    beta: float = 0.85
    m: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    w2_1: float = 1.0
    w2_2: float = 1.0
    w1_1: float = 1.0
    w1_2: float = 1.0

    @property
    def persistence(self) -> float:
        return self.alpha + 0.5 * self.gamma + self.beta

    def validate(self) -> None:
        if not (self.alpha >= 0 and self.beta >= 0 and self.alpha + self.gamma >= 0):
            raise InvalidParams("need alpha >= 0, beta >= 0 and alpha + gamma >= 0")
        if not self.persistence < 1.0:
            raise NonStationaryParams(
                f"alpha + gamma/2 + beta = {self.persistence:.6g} must be < 1"
            )
        if min(self.w2_1, self.w2_2, self.w1_1, self.w1_2) < 1.0:
            raise InvalidShape("beta weight shapes must be >= 1")

    def as_dict(self) -> dict[str, float]:
        return {f.name: float(getattr(self, f.name)) for f in fields(self)}


PARAM_NAMES = tuple(f.name for f in fields(GarchMidasParams))


def param_names(spec: GarchMidasSpec) -> tuple[str, ...]:
    names = PARAM_NAMES[:9]
    if not spec.w1_fixed:
        names = names + ("w1_1", "w1_2")
    return names


# -- components -------------------------------------------------------------

def lag_matrix(x, K: int) -> np.ndarray:
    """Rows ``[x_{t-1}, ..., x_{t-K}]`` for each period t that has K lags.

    ``x`` is ordered oldest first; the result has ``len(x) - K + 1`` rows,
    the last one belonging to the period after the final observation.
    """
    x = np.asarray(x, dtype=float)
    if x.size < K:
        raise InsufficientHistory(f"need at least K={K} low-frequency observations, got {x.size}")
    windows = np.lib.stride_tricks.sliding_window_view(x, K)
    return windows[:, ::-1].copy()


def _long_run(p: GarchMidasParams, lags1, lags2, form: str) -> np.ndarray:
    phi1 = _beta_weight_values(lags1.shape[1], p.w1_1, p.w2_1)
    phi2 = _beta_weight_values(lags2.shape[1], p.w1_2, p.w2_2)
    index = p.m + p.theta1 * (lags1 @ phi1) + p.theta2 * (lags2 @ phi2)
    if form == "log":
        return np.exp(index)
    return index


def long_run_component(
    params: GarchMidasParams, x1, x2, K: int, form: str = "log"
) -> np.ndarray:
    """Long-run variance for every period with K lags of both covariates.

    See :func:`lag_matrix` for the period convention.

    Raises
    ------
    InsufficientHistory
        Fewer than K observations of either covariate.
    PositivityViolated
        Level form produced a non-positive value.
    """
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != x2.shape:
        raise ValueError("covariate histories must have equal length")
    tau = _long_run(params, lag_matrix(x1, K), lag_matrix(x2, K), form)
    if form == "level" and np.any(tau <= 0):
        bad = int(np.flatnonzero(tau <= 0)[0])
        raise PositivityViolated(f"tau[{bad}] = {tau[bad]:.6g} <= 0 in level form")
    return tau


@numba.njit(cache=True)
def _gjr_midas_nll(eps, tau, alpha, gamma, beta, h_out):
    omega = 1.0 - alpha - 0.5 * gamma - beta
    h = 1.0
    nll = 0.0
    for i in range(eps.size):
        if i > 0:
            e = eps[i - 1]
            a = alpha + gamma if e < 0.0 else alpha
            h = omega + a * e * e / tau[i] + beta * h
        v = h * tau[i]
        if not (v > 0.0) or not np.isfinite(v):
            return np.inf
        h_out[i] = h
        nll += 0.5 * (LOG_2PI + math.log(v) + eps[i] * eps[i] / v)
    return nll


@numba.njit(cache=True)
def _gjr_midas_loglik_terms(eps, tau, alpha, gamma, beta):
    omega = 1.0 - alpha - 0.5 * gamma - beta
    out = np.empty(eps.size)
    h = 1.0
    for i in range(eps.size):
        if i > 0:
            e = eps[i - 1]
            a = alpha + gamma if e < 0.0 else alpha
            h = omega + a * e * e / tau[i] + beta * h
        v = h * tau[i]
        out[i] = -0.5 * (LOG_2PI + math.log(v) + eps[i] * eps[i] / v)
    return out


def short_run_recursion(params: GarchMidasParams, eps, tau) -> np.ndarray:
    """Short-run component for residuals ``eps`` and daily long-run values ``tau``.

    ``h`` starts at its unconditional value 1 and day ``i`` uses the shock of
    day ``i - 1`` scaled by the long-run value of day ``i``.
    """
    p = params
    if not p.persistence < 1.0:
        raise NonStationaryParams(f"alpha + gamma/2 + beta = {p.persistence:.6g} must be < 1")
    eps = np.ascontiguousarray(eps, dtype=float)
    tau = np.ascontiguousarray(np.broadcast_to(np.asarray(tau, dtype=float), eps.shape))
    if np.any(tau <= 0):
        raise PositivityViolated("tau must be positive")
    h = np.empty_like(eps)
    if not np.isfinite(_gjr_midas_nll(eps, tau, p.alpha, p.gamma, p.beta, h)):
        raise InvalidParams("short-run recursion produced a non-positive variance")
    return h


# -- data assembly ----------------------------------------------------------

@dataclass(frozen=True)
class MidasData:
    """Returns restricted to months with K lags of both covariates."""

    dates: np.ndarray
    returns: np.ndarray
    day_period: np.ndarray
    period_dates: np.ndarray
    lags1: np.ndarray
    lags2: np.ndarray

    @property
    def n_periods(self) -> int:
        return len(self.period_dates)


def _contiguous_months(s: TimeSeries) -> np.ndarray:
    if s.frequency is not Frequency.MONTHLY:
        raise FrequencyMismatch(f"covariate '{s.name}' must be monthly")
    mo = month_ordinal(s.dates)
    if np.any(np.diff(mo) != 1):
        raise InsufficientHistory(f"covariate '{s.name}' has gaps between months")
    return mo


def prepare_data(returns: TimeSeries, covariates: Sequence[TimeSeries], K: int) -> MidasData:
    if len(covariates) != 2:
        raise ValueError("exactly two covariates are required")
    c1, c2 = covariates
    mo1, mo2 = _contiguous_months(c1), _contiguous_months(c2)
    day_mo = month_ordinal(returns.dates)
    lo = max(mo1[0], mo2[0]) + K
    hi = min(mo1[-1], mo2[-1]) + 1
    keep = (day_mo >= lo) & (day_mo <= hi)
    if not keep.any():
        raise InsufficientHistory(f"no day has {K} months of covariate history")
    day_mo = day_mo[keep]
    periods = np.unique(day_mo)
    L1 = np.array([c1.values[(periods - k) - mo1[0]] for k in range(1, K + 1)]).T
    L2 = np.array([c2.values[(periods - k) - mo2[0]] for k in range(1, K + 1)]).T
    return MidasData(
        dates=returns.dates[keep],
        returns=np.ascontiguousarray(returns.values[keep]),
        day_period=np.searchsorted(periods, day_mo),
        period_dates=periods.astype("datetime64[M]").astype("datetime64[D]"),
        lags1=np.ascontiguousarray(L1.reshape(len(periods), K)),
        lags2=np.ascontiguousarray(L2.reshape(len(periods), K)),
    )


def _nll_data(p: GarchMidasParams, data: MidasData, form: str, h_out=None, strict=True) -> float:
    if not (p.alpha >= 0 and p.beta >= 0 and p.alpha + p.gamma >= 0 and p.persistence < 1.0):
        return math.inf
    if min(p.w2_1, p.w2_2, p.w1_1, p.w1_2) < (1.0 if strict else 0.5):
        return math.inf
    tau_p = _long_run(p, data.lags1, data.lags2, form)
    if not np.all(tau_p > 0) or not np.all(np.isfinite(tau_p)):
        return math.inf
    tau = tau_p[data.day_period]
    if h_out is None:
        h_out = np.empty(data.returns.size)
    return float(_gjr_midas_nll(data.returns - p.mu, tau, p.alpha, p.gamma, p.beta, h_out))


def neg_log_likelihood(
    params: GarchMidasParams,
    returns: TimeSeries,
    covariates: Sequence[TimeSeries],
    spec: GarchMidasSpec = GarchMidasSpec(),
) -> float:
    """Gaussian quasi negative log-likelihood; ``+inf`` for inadmissible parameters."""
    data = prepare_data(returns, covariates, spec.K)
    return _nll_data(params, data, spec.long_run_form)


# -- estimation -------------------------------------------------------------

_PERSIST = ("alpha", "gamma", "beta")
# Beyond this the beta weights are numerically a point mass on the first lag.
SHAPE_MAX = 300.0
_SHAPES = ("w2_1", "w2_2", "w1_1", "w1_2")


class _Transform:
    """Map between unconstrained vectors and natural free parameters.

    ``(alpha, gamma/2, beta, 1 - alpha - gamma/2 - beta)`` is a softmax of
    ``(u_alpha, u_gamma, u_beta, 0)``; beta shapes map logistically onto
    ``(1, SHAPE_MAX)``; the rest are untransformed.
    """

    def __init__(self, free: Sequence[str]):
        self.free = tuple(free)
        self.idx = {n: i for i, n in enumerate(self.free)}

    def to_natural(self, u: np.ndarray) -> np.ndarray:
        x = np.array(u, dtype=float)
        ia, ig, ib = (self.idx[n] for n in _PERSIST)
        z = np.array([u[ia], u[ig], u[ib], 0.0])
        z = np.exp(z - z.max())
        z /= z.sum()
        x[ia], x[ig], x[ib] = z[0], 2.0 * z[1], z[2]
        for n in _SHAPES:
            if n in self.idx:
                v = u[self.idx[n]]
                x[self.idx[n]] = 1.0 + (SHAPE_MAX - 1.0) * (0.5 * (1.0 + math.tanh(0.5 * v)))
        return x

    def to_unconstrained(self, x: np.ndarray) -> np.ndarray:
        u = np.array(x, dtype=float)
        ia, ig, ib = (self.idx[n] for n in _PERSIST)
        a, g2, b = x[ia], 0.5 * x[ig], x[ib]
        slack = 1.0 - a - g2 - b
        if min(a, g2, b, slack) <= 0:
            raise InvalidParams("start values must satisfy alpha, gamma, beta > 0 and persistence < 1")
        u[ia], u[ig], u[ib] = math.log(a / slack), math.log(g2 / slack), math.log(b / slack)
        for n in _SHAPES:
            if n in self.idx:
                q = (x[self.idx[n]] - 1.0) / (SHAPE_MAX - 1.0)
                q = min(max(q, 1e-12), 1.0 - 1e-12)
                u[self.idx[n]] = math.log(q / (1.0 - q))
        return u


@dataclass(frozen=True)
class GarchMidasFit:
    """Fitted model with its short-run (``stv``) and long-run (``ltv``) paths."""

    params: GarchMidasParams
    spec: GarchMidasSpec
    stv: TimeSeries
    ltv: TimeSeries
    loglik: float
    std_errors: Mapping[str, float]
    converged: bool
    free_names: tuple[str, ...]
    cov: np.ndarray
    nobs: int
    n_starts: int = 0
    message: str = ""

    @property
    def conditional_variance(self) -> np.ndarray:
        """Total daily variance ``h * tau`` on the estimation sample."""
        months = month_ordinal(self.stv.dates)
        pos = np.searchsorted(month_ordinal(self.ltv.dates), months)
        return self.stv.values * self.ltv.values[pos]

    def table(self) -> list[tuple[str, float, float, float]]:
        """``(name, estimate, std_error, t_ratio)`` for every parameter in the report."""
        rows = []
        for name in param_names(self.spec):
            est = getattr(self.params, name)
            se = self.std_errors.get(name, math.nan)
            t = est / se if se and np.isfinite(se) and se > 0 else math.nan
            rows.append((name, est, se, t))
        return rows

    def report(self) -> str:
        lines = [
            "GARCH-MIDAS estimates",
            f"form={self.spec.long_run_form} K={self.spec.K} nobs={self.nobs} "
            f"loglik={self.loglik:.6f} converged={self.converged}",
            f"{'parameter':<10} {'estimate':>14} {'std.error':>14} {'t-ratio':>10}",
        ]
        for name, est, se, t in self.table():
            lines.append(f"{name:<10} {est:>14.6f} {se:>14.6f} {t:>10.3f}")
        return "\n".join(lines) + "\n"


_LONG_RUN_BLOCK = ("m", "theta1", "theta2", "w2_1", "w2_2", "w1_1", "w1_2")


def _start_grid(free: Sequence[str], r: np.ndarray, form: str) -> dict[str, tuple[float, ...]]:
    var = float(np.var(r))
    level = form == "level"
    grid = {
        "mu": (float(np.mean(r)),),
        "alpha": (0.02, 0.05, 0.10),
        "gamma": (0.02, 0.08, 0.16),
        "beta": (0.70, 0.85, 0.92),
        "m": (0.5 * var, var, 1.5 * var) if level else tuple(math.log(var) + d for d in (-0.5, 0.0, 0.5)),
        "theta1": (-0.3 * var, 0.0, 0.3 * var) if level else (-0.3, 0.0, 0.3),
        "theta2": (-0.3 * var, 0.0, 0.3 * var) if level else (-0.3, 0.0, 0.3),
        "w2_1": (1.5, 5.0, 15.0),
        "w2_2": (1.5, 5.0, 15.0),
        "w1_1": (1.001, 2.0, 4.0),
        "w1_2": (1.001, 2.0, 4.0),
    }
    return {n: grid[n] for n in free}


@numba.njit(cache=True)
def _grid_nll(r, tau, mus, alphas, gammas, betas):
    out = np.empty(mus.size)
    for j in range(mus.size):
        alpha, gamma, beta = alphas[j], gammas[j], betas[j]
        omega = 1.0 - alpha - 0.5 * gamma - beta
        h = 1.0
        nll = 0.0
        e_prev = 0.0
        for i in range(r.size):
            if i > 0:
                a = alpha + gamma if e_prev < 0.0 else alpha
                h = omega + a * e_prev * e_prev / tau[i] + beta * h
            e = r[i] - mus[j]
            v = h * tau[i]
            nll += 0.5 * (LOG_2PI + math.log(v) + e * e / v)
            e_prev = e
        out[j] = nll
    return out


def _score_grid(free, base: GarchMidasParams, data: MidasData, form: str):
    """Cost of every grid start as ``[(cost, index, x), ...]`` and the grid size.

    The long-run block is evaluated once per combination and the short-run
    combinations are then scored in a single compiled pass.
    """
    grid = _start_grid(free, data.returns, form)
    outer = [n for n in free if n in _LONG_RUN_BLOCK]
    inner = [n for n in free if n not in _LONG_RUN_BLOCK]
    inner_combos = list(itertools.product(*(grid[n] for n in inner)))
    inner_vals = {n: np.array([c[k] for c in inner_combos]) for k, n in enumerate(inner)}
    sr = {n: inner_vals.get(n, np.full(len(inner_combos), getattr(base, n))) for n in ("mu", "alpha", "gamma", "beta")}
    feasible = (sr["alpha"] + 0.5 * sr["gamma"] + sr["beta"] < 1.0)
    order = {n: k for k, n in enumerate(free)}
    scored = []
    index = 0
    for oc in itertools.product(*(grid[n] for n in outer)):
        p = replace(base, **dict(zip(outer, oc)))
        tau_p = _long_run(p, data.lags1, data.lags2, form)
        ok = np.all(tau_p > 0) and np.all(np.isfinite(tau_p))
        costs = np.full(len(inner_combos), np.inf)
        if ok and feasible.any():
            tau = np.ascontiguousarray(tau_p[data.day_period])
            costs[feasible] = _grid_nll(
                data.returns, tau, *(np.ascontiguousarray(sr[n][feasible]) for n in ("mu", "alpha", "gamma", "beta"))
            )
        for j, ic in enumerate(inner_combos):
            x = np.empty(len(free))
            for n, v in zip(outer, oc):
                x[order[n]] = v
            for n, v in zip(inner, ic):
                x[order[n]] = v
            scored.append((float(costs[j]), index, x))
            index += 1
    return scored, index


def fit(
    returns: ReturnSeries | TimeSeries,
    covariates: Sequence[TimeSeries],
    spec: GarchMidasSpec = GarchMidasSpec(),
    *,
    fixed: Mapping[str, float] | None = None,
    n_starts: int = 3,
    start: GarchMidasParams | None = None,
    sandwich: bool = False,
    gtol: float = 1e-5,
    maxiter: int = 2000,
) -> GarchMidasFit:
    """Fit by quasi-maximum likelihood.

    Every free parameter gets a three-point start grid; the ``n_starts``
    grid points with the lowest likelihood cost are refined with BFGS on an
    unconstrained reparametrization and the best optimum is kept (ties go to
    the earlier grid point). Standard errors come from the numerical Hessian
    in the unconstrained space mapped back by the delta method, or from the
    Hessian/outer-product sandwich when ``sandwich`` is set.

    ``fixed`` pins parameters (any of ``mu``, ``m``, ``theta*``, ``w*``) at
    given values; a covariate loading pinned at zero also pins its shape.

    Raises
    ------
    InsufficientData
        Fewer than ``K + 12`` months in the aligned span, or no return variation.
    """
    data = prepare_data(returns, covariates, spec.K)
    form = spec.long_run_form
    if data.n_periods < 12:
        raise InsufficientData(
            f"need at least {spec.K + 12} low-frequency periods including {spec.K} lags, "
            f"got {data.n_periods + spec.K}"
        )
    if not np.std(data.returns) > 0:
        raise InsufficientData("returns have no variation")

    fixed = dict(fixed or {})
    for j in (1, 2):
        if fixed.get(f"theta{j}") == 0.0:
            fixed.setdefault(f"w2_{j}", 1.0)
            fixed.setdefault(f"w1_{j}", 1.0)
    if spec.w1_fixed:
        fixed.setdefault("w1_1", 1.0)
        fixed.setdefault("w1_2", 1.0)
    bad = set(fixed) & set(_PERSIST)
    if bad:
        raise ValueError(f"cannot fix {sorted(bad)}; the persistence block is always estimated")
    unknown = set(fixed) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)}")

    free = [n for n in PARAM_NAMES if n not in fixed]
    tr = _Transform(free)
    base = GarchMidasParams(**{n: v for n, v in fixed.items()})

    def natural(x):
        return replace(base, **dict(zip(free, map(float, x))))

    h_buf = np.empty(data.returns.size)

    def cost_x(x):
        return _nll_data(natural(x), data, form, h_buf)

    def cost_u(u):
        return cost_x(tr.to_natural(u))

    # start candidates, ranked by cost; ties keep grid order
    if start is not None:
        x0 = np.array([getattr(start, n) for n in free])
        scored = [(cost_x(x0), 0, x0)]
        n_candidates = 1
    else:
        scored, n_candidates = _score_grid(free, base, data, form)
    scored = [t for t in scored if np.isfinite(t[0])]
    if not scored:
        raise InsufficientData("no admissible start value; data may be degenerate")
    scored.sort(key=lambda t: (t[0], t[1]))

    best = None
    for c0, i, x0 in scored[:max(1, n_starts)]:
        u0 = tr.to_unconstrained(x0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                cost_u, u0, jac=lambda u: numdiff.gradient(cost_u, u), method="BFGS",
                options={"gtol": gtol, "maxiter": maxiter},
            )
        if not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best[0].fun - 1e-12:
            best = (res, i)
    if best is None:
        raise InsufficientData("optimizer failed from every start")
    res = best[0]
    u_hat = res.x
    x_hat = tr.to_natural(u_hat)
    g = numdiff.gradient(cost_u, u_hat)
    converged = bool(res.success or np.max(np.abs(g)) < 1e-2)
    if not converged:
        warnings.warn(f"GARCH-MIDAS fit did not converge: {res.message}", ConvergenceWarning)

    # Curvature in natural coordinates; shapes may be stepped just below 1 so a
    # bound-hugging estimate still gets a finite-difference standard error.
    def cost_relaxed(x):
        return _nll_data(natural(x), data, form, h_buf, strict=False)

    H = numdiff.hessian(cost_relaxed, x_hat)
    cov = numdiff.inverse_covariance(H)
    if not np.all(np.isfinite(cov)):
        # A shape sitting on its lower bound is an active constraint: it gets
        # no standard error and the rest come from the reduced Hessian.
        at_bound = np.array([
            n in _SHAPES and (x_hat[k] - 1.0 < 1e-4 or SHAPE_MAX - x_hat[k] < 1e-2)
            for k, n in enumerate(free)
        ])
        if at_bound.any():
            keep = ~at_bound
            cov = np.full_like(H, np.nan)
            cov[np.ix_(keep, keep)] = numdiff.inverse_covariance(H[np.ix_(keep, keep)])
    if sandwich and np.all(np.isfinite(cov)):
        def terms(x):
            p = natural(x)
            tau = _long_run(p, data.lags1, data.lags2, form)[data.day_period]
            return _gjr_midas_loglik_terms(data.returns - p.mu, tau, p.alpha, p.gamma, p.beta)
        S = numdiff.jacobian(terms, x_hat)
        cov = cov @ (S.T @ S) @ cov
    se = {n: float(math.sqrt(cov[i, i])) if cov[i, i] >= 0 else math.nan for i, n in enumerate(free)}

    params = natural(x_hat)
    tau_p = _long_run(params, data.lags1, data.lags2, form)
    h = np.empty(data.returns.size)
    nll = _nll_data(params, data, form, h)
    stv = TimeSeries(data.dates, h, Frequency.DAILY, "stv")
    ltv = TimeSeries(data.period_dates, tau_p, Frequency.MONTHLY, "ltv")
    return GarchMidasFit(
        params=params, spec=spec, stv=stv, ltv=ltv, loglik=-nll, std_errors=se,
        converged=converged, free_names=tuple(free), cov=cov, nobs=int(data.returns.size),
        n_starts=n_candidates, message=str(res.message),
    )


def extract_volatilities(fit: GarchMidasFit | None, *, force: bool = False) -> tuple[TimeSeries, TimeSeries]:
    """Return ``(stv, ltv)``; unconverged fits need ``force=True``."""
    if fit is None:
        raise NotFitted("no GARCH-MIDAS fit available")
    if not fit.converged and not force:
        raise NotFitted("fit did not converge; pass force=True to extract anyway")
    return fit.stv, fit.ltv


# -- plain GJR-GARCH reference ----------------------------------------------

@dataclass(frozen=True)
class GjrGarchFit:
    mu: float
    omega: float
    alpha: float
    gamma: float
    beta: float
    loglik: float
    converged: bool

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - 0.5 * self.gamma - self.beta)


def _gjr_variance(r, mu, omega, alpha, gamma, beta):
    from scipy.signal import lfilter

    eps = r - mu
    drive = np.empty_like(eps)
    drive[0] = omega / (1.0 - alpha - 0.5 * gamma - beta)
    e = eps[:-1]
    drive[1:] = omega + (alpha + gamma * (e < 0)) * e * e
    # sigma2_0 = drive[0]; sigma2_i = drive[i] + beta * sigma2_{i-1}
    return eps, lfilter([1.0], [1.0, -beta], drive)


def fit_gjr_garch(returns, *, start=None) -> GjrGarchFit:
    """Plain GJR-GARCH(1,1) with constant mean, by constrained QML.

    The variance recursion starts at the unconditional variance. Used as the
    reference against which a GARCH-MIDAS fit with zero loadings is checked.
    """
    r = np.asarray(getattr(returns, "values", returns), dtype=float)
    centre, var = float(np.mean(r)), float(np.var(r))
    sd = math.sqrt(var)

    # mu and omega are optimized as (mu - mean)/sd and omega/var so every coordinate is O(1)
    def natural(x):
        return np.array([centre + sd * x[0], var * x[1], x[2], x[3], x[4]])

    def nll(x):
        mu, omega, alpha, gamma, beta = natural(x)
        if omega <= 0 or alpha < 0 or beta < 0 or alpha + gamma < 0:
            return 1e10
        if alpha + 0.5 * gamma + beta >= 1:
            return 1e10
        eps, s2 = _gjr_variance(r, mu, omega, alpha, gamma, beta)
        if np.any(s2 <= 0):
            return 1e10
        return 0.5 * float(np.sum(LOG_2PI + np.log(s2) + eps * eps / s2))

    if start is not None:
        s0 = np.asarray(start, dtype=float)
        starts = [np.array([(s0[0] - centre) / sd, s0[1] / var, *s0[2:]])]
    else:
        starts = [np.array([0.0, 1.0 - a - 0.5 * g - b, a, g, b])
                  for a, g, b in ((0.05, 0.05, 0.85), (0.05, 0.10, 0.80), (0.03, 0.05, 0.90))]
    cons = [{"type": "ineq", "fun": lambda x: 1.0 - 1e-8 - x[2] - 0.5 * x[3] - x[4]}]
    bounds = [(None, None), (1e-10, None), (0.0, 1.0), (0.0, 1.0), (0.0, 1.0)]
    best = None
    for x0 in starts:
        with warnings.catch_warnings():
            # SLSQP clips trial points to the bounds and says so
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                nll, x0, jac=lambda x: numdiff.gradient(nll, x), method="SLSQP",
                bounds=bounds, constraints=cons, options={"ftol": 1e-14, "maxiter": 1000},
            )
        if best is None or (res.success, -res.fun) > (best.success, -best.fun):
            best = res
    res = best
    res.x = natural(res.x)
    mu, omega, alpha, gamma, beta = res.x
    return GjrGarchFit(mu, omega, alpha, gamma, beta, -float(res.fun), bool(res.success))
