"""Unit-root, structural-break, ARCH and collinearity diagnostics."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numba
import numpy as np
from scipy import stats

from .errors import ConstantColumn, InvalidTrim, SingularRegression, TooShort


class Terms(enum.Enum):
    NONE = "n"
    CONSTANT = "c"
    CONSTANT_TREND = "ct"


# Response-surface coefficients b0 + b1/T + b2/T^2 + b3/T^3 for the
# Dickey-Fuller t-statistic (one stochastic regressor).
_CV_SURFACE = {
    Terms.NONE: {
        0.01: (-2.56574, -2.2358, -3.627, 0.0),
        0.05: (-1.94100, -0.2686, -3.365, 31.223),
        0.10: (-1.61682, 0.2656, -2.714, 25.364),
    },
    Terms.CONSTANT: {
        0.01: (-3.43035, -6.5393, -16.786, -79.433),
        0.05: (-2.86154, -2.8903, -4.234, -40.040),
        0.10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    Terms.CONSTANT_TREND: {
        0.01: (-3.95877, -9.0531, -28.428, -134.155),
        0.05: (-3.41049, -4.3904, -9.036, -45.374),
        0.10: (-3.12705, -2.5856, -3.925, -22.380),
    },
}

LEVELS = (0.01, 0.05, 0.10)


def _terms(terms) -> Terms:
    if isinstance(terms, Terms):
        return terms
    return Terms(str(terms).lower())


def critical_values(terms, nobs: int) -> dict[float, float]:
    """Asymptotic-plus-finite-sample critical values for the Dickey-Fuller t-ratio."""
    terms = _terms(terms)
    out = {}
    for level, (b0, b1, b2, b3) in _CV_SURFACE[terms].items():
        out[level] = b0 + b1 / nobs + b2 / nobs**2 + b3 / nobs**3
    return out


@dataclass(frozen=True)
class UnitRootResult:
    statistic: float
    lags_used: int
    critical_values: Mapping[float, float]
    terms: Terms
    nobs: int
    test: str = "ADF"

    @property
    def reject_at_5pct(self) -> bool:
        return bool(self.statistic < self.critical_values[0.05])


@dataclass(frozen=True)
class BreakTestResult:
    breaks: tuple[int, ...]
    segment_ssr: float
    criterion_values: tuple[float, ...]
    criterion: str
    break_dates: tuple = ()
    min_segment: int = 0

    @property
    def num_breaks(self) -> int:
        return len(self.breaks)


@dataclass(frozen=True)
class ArchLmResult:
    lm_statistic: float
    lags: int
    p_value: float
    nobs: int


@dataclass(frozen=True)
class ReportRecord:
    variable: str
    test: str
    statistic: float
    p_value: float = math.nan
    critical_values: Mapping[float, float] = field(default_factory=dict)
    decision: str = ""
    detail: str = ""


# -- regression helpers ------------------------------------------------------

def _ols(y: np.ndarray, X: np.ndarray):
    """Coefficients, residuals and coefficient standard errors."""
    XtX = X.T @ X
    try:
        c = np.linalg.cholesky(XtX)
    except np.linalg.LinAlgError:
        raise SingularRegression("regressor matrix is singular") from None
    if np.linalg.cond(XtX) > 1e14:
        raise SingularRegression("regressor matrix is numerically singular")
    ci = np.linalg.inv(c)
    inv = ci.T @ ci
    beta = inv @ (X.T @ y)
    e = y - X @ beta
    dof = y.size - X.shape[1]
    s2 = e @ e / dof
    return beta, e, np.sqrt(np.diag(inv) * s2)


def _deterministic(terms: Terms, n: int) -> np.ndarray:
    cols = []
    if terms in (Terms.CONSTANT, Terms.CONSTANT_TREND):
        cols.append(np.ones(n))
    if terms is Terms.CONSTANT_TREND:
        cols.append(np.arange(1.0, n + 1.0))
    return np.column_stack(cols) if cols else np.empty((n, 0))


def _clean(y) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        raise ValueError("series contains non-finite values")
    return y


# -- unit roots ---------------------------------------------------------------

def default_max_lags(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _adf_design(y, k, start, terms, breaks):
    """Rows t = start..n-1 of the ADF regression with k lagged differences."""
    dy = np.diff(y)
    n = y.size
    t = np.arange(start, n)
    cols = [y[t - 1]]
    for i in range(1, k + 1):
        cols.append(dy[t - 1 - i])
    X = np.column_stack(cols + [_deterministic(terms, n)[t]])
    for b in breaks:
        X = np.column_stack([X, (t >= b).astype(float)])
    return dy[t - 1], X


def adf_test(y, terms="c", max_lags: int | None = None, *, lags: int | None = None, breaks: Sequence[int] = ()) -> UnitRootResult:
    """Augmented Dickey-Fuller test.

    The lag order minimizes BIC over ``0..max_lags`` on a common sample and
    the chosen model is then refitted on all usable observations. ``breaks``
    adds a level-shift dummy ``1[t >= b]`` for each 0-based index, in which
    case the tabulated critical values are only indicative.
    """
    terms = _terms(terms)
    y = _clean(y)
    n = y.size
    max_lags = default_max_lags(n) if max_lags is None else int(max_lags)
    if lags is not None:
        max_lags = int(lags)
    if n <= max_lags + 10:
        raise TooShort(f"ADF needs more than {max_lags + 10} observations, got {n}")
    if np.ptp(y) == 0:
        raise SingularRegression("series is constant")
    if lags is None:
        best, k_best = math.inf, 0
        for k in range(max_lags + 1):
            dep, X = _adf_design(y, k, max_lags + 1, terms, breaks)
            _, e, _ = _ols(dep, X)
            m = dep.size
            bic = m * math.log(e @ e / m) + X.shape[1] * math.log(m)
            if bic < best - 1e-12:
                best, k_best = bic, k
    else:
        k_best = int(lags)
    dep, X = _adf_design(y, k_best, k_best + 1, terms, breaks)
    beta, _, se = _ols(dep, X)
    stat = float(beta[0] / se[0])
    return UnitRootResult(stat, k_best, critical_values(terms, dep.size), terms, dep.size, "ADF")


def newey_west_lags(n: int) -> int:
    return int(math.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def long_run_variance(e: np.ndarray, lags: int) -> float:
    """Bartlett-kernel long-run variance of a mean-zero series."""
    n = e.size
    lam = e @ e / n
    for j in range(1, lags + 1):
        lam += 2.0 * (1.0 - j / (lags + 1.0)) * (e[j:] @ e[:-j]) / n
    return float(lam)


def pp_test(y, terms="c", lags: int | None = None) -> UnitRootResult:
    """Phillips-Perron Z_t test with a Bartlett long-run variance."""
    terms = _terms(terms)
    y = _clean(y)
    n = y.size
    if n < 12:
        raise TooShort(f"PP test needs at least 12 observations, got {n}")
    if np.ptp(y) == 0:
        raise SingularRegression("series is constant")
    dep = y[1:]
    T = dep.size
    X = np.column_stack([y[:-1], _deterministic(terms, n)[1:]])
    beta, e, se = _ols(dep, X)
    L = newey_west_lags(T) if lags is None else int(lags)
    k = X.shape[1]
    s2 = e @ e / (T - k)
    gamma0 = e @ e / T
    lam2 = long_run_variance(e, L)
    t_rho = (beta[0] - 1.0) / se[0]
    stat = math.sqrt(gamma0 / lam2) * t_rho - 0.5 * (lam2 - gamma0) / math.sqrt(lam2) * (T * se[0] / math.sqrt(s2))
    return UnitRootResult(float(stat), L, critical_values(terms, T), terms, T, "PP")


# -- structural breaks ---------------------------------------------------------

@numba.njit(cache=True)
def _segment_ssr(y, X, h):
    """SSR of OLS on y[i..j] for every admissible segment (length >= h)."""
    T, q = X.shape
    ssr = np.full((T, T), np.inf)
    for i in range(T - h + 1):
        A = np.zeros((q, q))
        b = np.zeros(q)
        yy = 0.0
        for j in range(i, T):
            for a in range(q):
                b[a] += X[j, a] * y[j]
                for c in range(q):
                    A[a, c] += X[j, a] * X[j, c]
            yy += y[j] * y[j]
            if j - i + 1 >= h:
                coef = np.linalg.solve(A, b)
                v = yy - np.dot(coef, b)
                ssr[i, j] = v if v > 0.0 else 0.0
    return ssr


@numba.njit(cache=True)
def _partition(ssr, m_max, h):
    T = ssr.shape[0]
    # cost[m, j]: best SSR of y[0..j] with m breaks; arg[m, j]: last break start
    cost = np.full((m_max + 1, T), np.inf)
    arg = np.full((m_max + 1, T), -1)
    for j in range(T):
        cost[0, j] = ssr[0, j]
    for m in range(1, m_max + 1):
        for j in range((m + 1) * h - 1, T):
            best = np.inf
            bk = -1
            for k in range(m * h, j - h + 2):
                v = cost[m - 1, k - 1] + ssr[k, j]
                if v < best:
                    best = v
                    bk = k
            cost[m, j] = best
            arg[m, j] = bk
    return cost, arg


def _breaks_from(arg, m, T):
    out = []
    j = T - 1
    for mm in range(m, 0, -1):
        k = int(arg[mm, j])
        out.append(k)
        j = k - 1
    return tuple(sorted(out))


# Sequential sup F(l+1 | l) 5% critical values, one regressor, 15% trimming.
SEQ_SUPF_5PCT = (8.58, 10.13, 11.14, 11.83, 12.25)


def bai_perron(
    y,
    X=None,
    max_breaks: int = 5,
    trim: float = 0.15,
    *,
    criterion: str = "bic",
    dates=None,
) -> BreakTestResult:
    """Least-squares multiple structural breaks in all regression coefficients.

    Global SSR minimizers for ``m = 0..max_breaks`` come from dynamic
    programming over segments of at least ``ceil(trim * T)`` observations.
    ``criterion="bic"`` selects ``m`` by ``ln(SSR/T) + p ln(T)/T`` with
    ``p = (m + 1) q + m``; ``"sequential"`` applies sup F(l+1 | l) tests at
    5% (intercept-only models at 15% trimming). Break indices are the
    0-based first observation of each new regime.
    """
    y = _clean(y)
    T = y.size
    X = np.ones((T, 1)) if X is None else np.asarray(X, dtype=float).reshape(T, -1)
    if not 0.05 <= trim <= 0.25:
        raise InvalidTrim(f"trim must lie in [0.05, 0.25], got {trim}")
    q = X.shape[1]
    h = max(int(math.ceil(trim * T)), q + 1)
    if T < (max_breaks + 1) * h:
        raise TooShort(f"{T} observations cannot hold {max_breaks + 1} segments of {h}")
    shift = y.mean()
    ssr = _segment_ssr(y - shift, np.ascontiguousarray(X), h)
    cost, arg = _partition(ssr, max_breaks, h)
    total = cost[:, T - 1]
    ic = tuple(
        float(math.log(total[m] / T) + ((m + 1) * q + m) * math.log(T) / T) if total[m] > 0 else -math.inf
        for m in range(max_breaks + 1)
    )
    if criterion == "bic":
        m_hat = int(np.argmin(ic))
        breaks = _breaks_from(arg, m_hat, T)
    elif criterion == "sequential":
        if q != 1 or abs(trim - 0.15) > 1e-12:
            raise ValueError("sequential selection is tabulated for one regressor at 15% trimming")
        breaks = _sequential(ssr, T, q, h, max_breaks)
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    bounds = (0,) + breaks + (T,)
    seg = float(sum(ssr[bounds[i], bounds[i + 1] - 1] for i in range(len(bounds) - 1)))
    bdates = tuple(np.asarray(dates)[list(breaks)]) if dates is not None else ()
    return BreakTestResult(breaks, seg, ic, criterion, bdates, h)


def _sequential(ssr, T, q, h, max_breaks):
    breaks: list[int] = []
    while len(breaks) < min(max_breaks, len(SEQ_SUPF_5PCT)):
        bounds = [0] + breaks + [T]
        base = sum(ssr[bounds[i], bounds[i + 1] - 1] for i in range(len(bounds) - 1))
        best_gain, best_k = 0.0, -1
        for i in range(len(bounds) - 1):
            a, b = bounds[i], bounds[i + 1]
            for k in range(a + h, b - h + 1):
                gain = ssr[a, b - 1] - ssr[a, k - 1] - ssr[k, b - 1]
                if gain > best_gain:
                    best_gain, best_k = gain, k
        if best_k < 0:
            break
        l = len(breaks)
        ssr_u = base - best_gain
        F = (T - (l + 2) * q - (l + 1)) / q * best_gain / ssr_u if ssr_u > 0 else math.inf
        if F <= SEQ_SUPF_5PCT[l]:
            break
        breaks = sorted(breaks + [best_k])
    return tuple(breaks)


# -- ARCH and collinearity ------------------------------------------------------

def arch_lm(residuals, lags: int = 5) -> ArchLmResult:
    """Engle's LM test: ``n R^2`` from regressing squared residuals on their lags."""
    e = _clean(residuals)
    n = e.size
    if n <= lags + 10:
        raise TooShort(f"ARCH-LM with {lags} lags needs more than {lags + 10} observations")
    e2 = e * e
    scale = e2.mean()
    if scale == 0:
        return ArchLmResult(0.0, lags, 1.0, n - lags)
    e2 = e2 / scale
    dep = e2[lags:]
    X = np.column_stack([np.ones(dep.size)] + [e2[lags - i : n - i] for i in range(1, lags + 1)])
    coef, *_ = np.linalg.lstsq(X, dep, rcond=None)
    resid = dep - X @ coef
    tss = np.sum((dep - dep.mean()) ** 2)
    r2 = 0.0 if tss <= 0 else max(0.0, 1.0 - resid @ resid / tss)
    lm = dep.size * r2
    return ArchLmResult(float(lm), lags, float(stats.chi2.sf(lm, lags)), dep.size)


def vif(X, names: Sequence[str] | None = None) -> dict[str, float]:
    """Variance inflation factors ``1 / (1 - R^2_j)``; perfect collinearity gives ``inf``."""
    if isinstance(X, Mapping):
        names = list(X)
        X = np.column_stack([np.asarray(X[k], dtype=float) for k in names])
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    names = list(names) if names is not None else [f"x{j}" for j in range(k)]
    if k < 2:
        raise ValueError("VIF needs at least two columns")
    for j in range(k):
        if np.ptp(X[:, j]) == 0:
            raise ConstantColumn(f"column {names[j]!r} is constant")
    Xc = (X - X.mean(axis=0)) / X.std(axis=0)
    out = {}
    for j in range(k):
        others = np.delete(Xc, j, axis=1)
        coef, *_ = np.linalg.lstsq(others, Xc[:, j], rcond=None)
        resid = Xc[:, j] - others @ coef
        ratio = (resid @ resid) / (Xc[:, j] @ Xc[:, j])
        out[names[j]] = math.inf if ratio < 1e-12 else float(max(1.0, 1.0 / ratio))
    return out


# -- descriptives and report rows --------------------------------------------------

def describe(values) -> dict[str, float]:
    """Count, moments, extremes and the Jarque-Bera statistic."""
    x = _clean(values)
    jb = stats.jarque_bera(x)
    return {
        "n": float(x.size),
        "mean": float(x.mean()),
        "sd": float(x.std(ddof=1)),
        "min": float(x.min()),
        "max": float(x.max()),
        "skewness": float(stats.skew(x)),
        "kurtosis": float(stats.kurtosis(x, fisher=False)),
        "jarque_bera": float(jb.statistic),
        "jb_p_value": float(jb.pvalue),
    }


def unit_root_record(name: str, res: UnitRootResult) -> ReportRecord:
    decision = "reject unit root" if res.reject_at_5pct else "unit root not rejected"
    return ReportRecord(name, f"{res.test}({res.terms.value})", res.statistic, math.nan,
                        dict(res.critical_values), decision, f"lags={res.lags_used}")


def arch_record(name: str, res: ArchLmResult) -> ReportRecord:
    decision = "ARCH effects" if res.p_value < 0.05 else "no ARCH effects"
    return ReportRecord(name, f"ARCH-LM({res.lags})", res.lm_statistic, res.p_value, {}, decision)


def break_record(name: str, res: BreakTestResult) -> ReportRecord:
    where = res.break_dates if res.break_dates else res.breaks
    detail = ";".join(str(d) for d in where)
    return ReportRecord(name, f"Bai-Perron({res.criterion})", float(res.num_breaks), math.nan, {},
                        f"{res.num_breaks} breaks", detail)
