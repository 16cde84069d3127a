"""Linear quantile regression.

Coefficients solve ``min_b sum_i rho_tau(y_i - x_i' b)`` exactly. The
solver walks between vertices of the linear program: each vertex is a set
of ``p`` observations fitted with zero residual, and each step slides along
an edge as far as the piecewise-linear objective keeps falling, passing
over several breakpoints at once when that pays. Ties are broken towards the
lowest observation index, so results are deterministic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .errors import (
    DegenerateSolution,
    InvalidShape,
    InvalidTau,
    NoIntercept,
    RankDeficient,
    SingularH,
    TooSmallSample,
)

DEFAULT_TAUS = tuple(np.round(np.arange(0.05, 0.951, 0.05), 2))


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise InvalidTau(f"tau must lie in (0, 1), got {tau}")
    return tau


def check_loss(w, tau: float):
    """``rho_tau(w) = w (tau - 1[w < 0])``, elementwise."""
    tau = _check_tau(tau)
    w = np.asarray(w, dtype=float)
    out = w * (tau - (w < 0))
    return float(out) if out.ndim == 0 else out


def _objective(r: np.ndarray, tau: float) -> float:
    return float(np.sum(np.where(r < 0, (tau - 1.0) * r, tau * r)))


# -- simplex ----------------------------------------------------------------

def _initial_basis(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``p`` linearly independent rows, preferring small OLS residuals."""
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    order = np.argsort(np.abs(y - X @ coef), kind="stable")
    p = X.shape[1]
    chosen: list[int] = []
    Q = np.zeros((0, p))
    scale = np.max(np.abs(X))
    for i in order:
        v = X[i] - Q.T @ (Q @ X[i])
        nv = np.linalg.norm(v)
        if nv > 1e-9 * max(scale, 1.0):
            chosen.append(int(i))
            Q = np.vstack([Q, v / nv])
            if len(chosen) == p:
                break
    return np.array(chosen)


def _simplex(X: np.ndarray, y: np.ndarray, tau: float, max_iter: int, basis=None):
    n, p = X.shape
    basis = _initial_basis(X, y) if basis is None else np.asarray(basis)
    scale = max(1.0, float(np.max(np.abs(y))))
    in_basis = np.zeros(n, dtype=bool)
    for it in range(max_iter):
        in_basis[:] = False
        in_basis[basis] = True
        Xh_inv = np.linalg.inv(X[basis])
        beta = Xh_inv @ y[basis]
        r = y - X @ beta
        r[basis] = 0.0
        zero_tol = 1e-11 * scale
        r[np.abs(r) < zero_tol] = 0.0

        # G[:, j] = x_i' X_h^{-1} e_j: the fitted-value change along direction +j
        G = X @ Xh_inv
        nb = ~in_basis
        Gn = G[nb]
        rn = r[nb]
        pos, neg, zer = rn > 0, rn < 0, rn == 0
        # directional derivative of the objective along sign * X_h^{-1} e_j
        base = (-tau * Gn * pos[:, None]).sum(0) + ((1.0 - tau) * Gn * neg[:, None]).sum(0)
        zplus = np.where(Gn > 0, (1.0 - tau) * Gn, -tau * Gn)[zer].sum(0)
        zminus = np.where(-Gn > 0, -(1.0 - tau) * Gn, tau * Gn)[zer].sum(0)
        d_plus = base + zplus + (1.0 - tau)
        d_minus = -base + zminus + tau
        tol = 1e-12 * (1.0 + np.abs(Gn).sum(0))
        best, best_j, best_s = 0.0, -1, 0
        for j in range(p):
            for s, dj in ((1, d_plus[j]), (-1, d_minus[j])):
                if dj < -tol[j] and dj < best:
                    best, best_j, best_s = dj, j, s
        if best_j < 0:
            degenerate = bool(np.any(zer)) or bool(np.any(np.abs(np.r_[d_plus, d_minus]) <= tol.max()))
            return basis, beta, r, it, degenerate

        # line search: breakpoints where nonbasic residuals cross zero
        g = best_s * G[:, best_j]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_break = np.where(nb & (r != 0) & (g != 0), r / g, -1.0)
        cand = np.flatnonzero(t_break > 0)
        order = cand[np.lexsort((cand, t_break[cand]))]
        slope = best
        enter = -1
        for i in order:
            slope += abs(g[i])
            if slope >= 0:
                enter = int(i)
                break
        if enter < 0:  # pragma: no cover - bounded for tau in (0, 1)
            raise RuntimeError("quantile regression objective unbounded")
        basis = basis.copy()
        basis[best_j] = enter
    raise RuntimeError(f"simplex did not terminate in {max_iter} iterations")


# -- inference --------------------------------------------------------------

def hall_sheather_bandwidth(n: int, tau: float, alpha: float = 0.05) -> float:
    """Sparsity bandwidth of order ``n^(-1/3)``, in probability units.

    Clamped to ``0.999 min(tau, 1 - tau)`` so that ``tau - h`` and ``tau + h``
    remain inside (0, 1).
    """
    tau = _check_tau(tau)
    if n < 10:
        raise TooSmallSample(f"bandwidth needs n >= 10, got {n}")
    q = stats.norm.ppf(tau)
    z = stats.norm.ppf(1.0 - alpha / 2.0)
    h = n ** (-1.0 / 3.0) * z ** (2.0 / 3.0) * (1.5 * stats.norm.pdf(q) ** 2 / (2.0 * q * q + 1.0)) ** (1.0 / 3.0)
    return float(min(h, 0.999 * min(tau, 1.0 - tau)))


def bofinger_bandwidth(n: int, tau: float) -> float:
    """Mean-squared-error optimal bandwidth of order ``n^(-1/5)``, in probability units."""
    tau = _check_tau(tau)
    if n < 10:
        raise TooSmallSample(f"bandwidth needs n >= 10, got {n}")
    q = stats.norm.ppf(tau)
    h = n ** (-0.2) * (4.5 * stats.norm.pdf(q) ** 4 / (2.0 * q * q + 1.0) ** 2) ** 0.2
    return float(min(h, 0.999 * min(tau, 1.0 - tau)))


def residual_bandwidth(resid, tau: float, h: float) -> float:
    """Convert a probability-scale bandwidth to the residual scale.

    ``b = kappa (Phi^{-1}(tau + h) - Phi^{-1}(tau - h))`` with the robust
    scale ``kappa = min(sd, IQR / 1.34)``.
    """
    resid = np.asarray(resid, dtype=float)
    q75, q25 = np.percentile(resid, [75, 25])
    kappa = min(float(np.std(resid, ddof=1)), (q75 - q25) / 1.34)
    if kappa <= 0:
        kappa = float(np.std(resid, ddof=1))
    return float(kappa * (stats.norm.ppf(tau + h) - stats.norm.ppf(tau - h)))


def _kernel(u: np.ndarray, kernel: str) -> np.ndarray:
    if kernel == "gaussian":
        return stats.norm.pdf(u)
    if kernel == "epanechnikov":
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)
    raise ValueError(f"unknown kernel {kernel!r}")


def powell_covariance(resid, X, tau: float, bandwidth: float, kernel: str = "gaussian") -> np.ndarray:
    """Kernel sandwich covariance of quantile-regression coefficients.

    ``H = (1/n) sum_i K(u_i / b) / b x_i x_i'`` and
    ``cov = tau (1 - tau) H^{-1} (X'X / n) H^{-1} / n``.
    ``bandwidth`` is on the residual scale.
    """
    tau = _check_tau(tau)
    if not bandwidth > 0:
        raise ValueError("bandwidth must be positive")
    u = np.asarray(resid, dtype=float)
    X = np.asarray(X, dtype=float).reshape(u.size, -1)
    n = u.size
    w = _kernel(u / bandwidth, kernel) / bandwidth
    H = (X * w[:, None]).T @ X / n
    if not np.all(np.isfinite(H)) or np.linalg.cond(H) > 1e12:
        raise SingularH("kernel-weighted design is singular; bandwidth too small or too few residuals near zero")
    Hi = np.linalg.inv(H)
    cov = tau * (1.0 - tau) * Hi @ (X.T @ X / n) @ Hi / n
    return 0.5 * (cov + cov.T)


def _intercept_column(X: np.ndarray) -> int | None:
    for j in range(X.shape[1]):
        c = X[:, j]
        if c[0] != 0 and np.all(c == c[0]):
            return j
    return None


# -- fitting ----------------------------------------------------------------

@dataclass(frozen=True)
class QrFit:
    tau: float
    beta: np.ndarray
    covariance: np.ndarray
    pseudo_r2: float
    objective: float
    residuals: np.ndarray = field(repr=False)
    basis: np.ndarray = field(repr=False)
    bandwidth: float = math.nan
    degenerate: bool = False
    names: tuple[str, ...] = ()
    iterations: int = 0
    covariance_error: str = ""

    @property
    def std_errors(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def table(self):
        """``(name, estimate, std_error, t, p)`` rows."""
        se = self.std_errors
        out = []
        for j, b in enumerate(self.beta):
            t = b / se[j] if se[j] > 0 else math.nan
            pval = 2.0 * stats.norm.sf(abs(t)) if np.isfinite(t) else math.nan
            name = self.names[j] if j < len(self.names) else f"x{j}"
            out.append((name, float(b), float(se[j]), float(t), float(pval)))
        return out


def _validate(y, X):
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != y.size:
        raise InvalidShape(f"X has {X.shape[0]} rows but y has {y.size} values")
    n, p = X.shape
    if n <= p:
        raise InvalidShape(f"need n > p, got n={n}, p={p}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InvalidShape("non-finite values in y or X")
    if np.linalg.matrix_rank(X) < p:
        raise RankDeficient("design matrix does not have full column rank")
    return y, X


def _subgradient_optimal(X, r, tau) -> bool:
    """Whether zero lies in the subdifferential of the objective at residuals ``r``."""
    zero = r == 0
    g = tau * X[r > 0].sum(0) + (tau - 1.0) * X[r < 0].sum(0)
    Z = X[zero]
    res = optimize.linprog(
        np.zeros(Z.shape[0]), A_eq=Z.T, b_eq=-g, bounds=[(tau - 1.0, tau)] * Z.shape[0], method="highs",
    )
    return res.status == 0


def _solve(y, X, tau, max_iter=None):
    n, p = X.shape
    max_iter = max_iter or 50 * n + 1000
    basis, beta, r, it, degenerate = _simplex(X, y, tau, max_iter)
    if np.count_nonzero(r == 0) <= p or _subgradient_optimal(X, r, tau):
        return basis, beta, r, it, degenerate
    # ties stall the edge test at a degenerate vertex; a small fixed
    # perturbation of y separates them, then we polish on the original data
    jitter = np.random.Generator(np.random.Philox(0)).uniform(-1.0, 1.0, n)
    scale = max(1.0, float(np.max(np.abs(y))))
    for eps in (1e-7, 1e-5, 1e-3):
        pb, *_ = _simplex(X, y + eps * scale * jitter, tau, max_iter, basis)
        basis, beta, r, k, degenerate = _simplex(X, y, tau, max_iter, pb)
        it += k
        if _subgradient_optimal(X, r, tau):
            break
    return basis, beta, r, it, degenerate


def fit_qr(
    y,
    X,
    tau: float,
    *,
    names: Sequence[str] = (),
    bandwidth: str = "hall-sheather",
    kernel: str = "gaussian",
    alpha: float = 0.05,
) -> QrFit:
    """Exact quantile-regression fit with covariance and pseudo R-squared.

    The covariance is the kernel sandwich estimator with a Hall-Sheather
    (or ``"bofinger"``) bandwidth mapped to the residual scale. When it
    cannot be formed (fewer than ten observations, singular kernel-weighted
    design) the covariance is NaN and ``covariance_error`` says why.
    ``pseudo_r2`` is NaN when ``X`` has no intercept column.

    Warns
    -----
    DegenerateSolution
        The optimum is not unique or more than ``p`` residuals are zero;
        the vertex found is returned.
    """
    tau = _check_tau(tau)
    y, X = _validate(y, X)
    n, p = X.shape
    basis, beta, r, it, degenerate = _solve(y, X, tau)
    obj = _objective(r, tau)
    if degenerate:
        warnings.warn(f"degenerate quantile-regression solution at tau={tau}", DegenerateSolution, stacklevel=2)

    cov = np.full((p, p), np.nan)
    b = math.nan
    err = ""
    try:
        h = bofinger_bandwidth(n, tau) if bandwidth == "bofinger" else hall_sheather_bandwidth(n, tau, alpha)
        b = residual_bandwidth(r, tau, h)
        cov = powell_covariance(r, X, tau, b, kernel)
    except (TooSmallSample, SingularH, ValueError) as exc:
        err = str(exc)

    r2 = math.nan
    j = _intercept_column(X)
    if j is not None:
        r2 = _pseudo_r2(obj, y, X[:, j : j + 1], tau)
    return QrFit(
        tau=tau, beta=beta, covariance=cov, pseudo_r2=r2, objective=obj, residuals=r,
        basis=np.sort(basis), bandwidth=b, degenerate=degenerate, names=tuple(names),
        iterations=it, covariance_error=err,
    )


def _pseudo_r2(v_full: float, y, ones, tau) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSolution)
        _, _, r0, _, _ = _solve(y, ones, tau)
    v_restricted = _objective(r0, tau)
    if v_restricted <= 0:
        return 0.0
    return float(min(1.0, max(0.0, 1.0 - v_full / v_restricted)))


def pseudo_r_squared(fit: QrFit, y, X, tau: float | None = None) -> float:
    """``1 - V(full) / V(intercept only)`` from minimized check losses."""
    y, X = _validate(y, X)
    tau = fit.tau if tau is None else _check_tau(tau)
    j = _intercept_column(X)
    if j is None:
        raise NoIntercept("pseudo R-squared needs an intercept column")
    v_full = _objective(y - X @ fit.beta, tau)
    return _pseudo_r2(v_full, y, X[:, j : j + 1], tau)


# -- quantile process -------------------------------------------------------

@dataclass(frozen=True)
class QuantileProcess:
    taus: tuple[float, ...]
    fits: tuple[QrFit | None, ...]
    names: tuple[str, ...]
    failures: dict = field(default_factory=dict)
    level: float = 0.95

    def __post_init__(self):
        t = np.asarray(self.taus)
        if t.size == 0 or np.any(np.diff(t) <= 0) or np.any(t <= 0) or np.any(t >= 1):
            raise InvalidTau("taus must be strictly increasing inside (0, 1)")

    def path(self, name_or_index) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Estimate and pointwise band for one coefficient across quantiles."""
        j = self.names.index(name_or_index) if isinstance(name_or_index, str) else int(name_or_index)
        z = stats.norm.ppf(0.5 + self.level / 2.0)
        est, lo, hi = (np.full(len(self.taus), np.nan) for _ in range(3))
        for k, f in enumerate(self.fits):
            if f is None:
                continue
            est[k] = f.beta[j]
            se = f.std_errors[j]
            lo[k], hi[k] = est[k] - z * se, est[k] + z * se
        return est, lo, hi

    def crossings(self, X) -> int:
        """Observations whose fitted quantiles are not monotone in tau."""
        X = np.asarray(X, dtype=float)
        B = np.array([f.beta for f in self.fits if f is not None])
        if len(B) < 2:
            return 0
        q = X @ B.T
        return int(np.sum(np.any(np.diff(q, axis=1) < 0, axis=1)))

    def rows(self):
        """Long format ``(tau, name, estimate, lower, upper)``."""
        out = []
        for j, name in enumerate(self.names):
            est, lo, hi = self.path(j)
            for k, tau in enumerate(self.taus):
                if self.fits[k] is not None:
                    out.append((tau, name, est[k], lo[k], hi[k]))
        return out

    def to_csv(self, path) -> Path:
        path = Path(path)
        lines = ["tau,coefficient,estimate,lower,upper"]
        for tau, name, e, lo, hi in self.rows():
            lines.append(f"{tau!r},{name},{e!r},{lo!r},{hi!r}")
        path.write_text("\n".join(lines) + "\n")
        return path


def quantile_process(y, X, taus: Sequence[float] = DEFAULT_TAUS, *, names: Sequence[str] = (), **kwargs) -> QuantileProcess:
    """One fit per quantile; a quantile whose fit fails is recorded, not raised."""
    taus = tuple(float(t) for t in taus)
    for t in taus:
        _check_tau(t)
    y, X = _validate(y, X)
    names = tuple(names) or tuple(f"x{j}" for j in range(X.shape[1]))
    fits, failures = [], {}
    for t in taus:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DegenerateSolution)
                fits.append(fit_qr(y, X, t, names=names, **kwargs))
        except RuntimeError as exc:
            fits.append(None)
            failures[t] = str(exc)
    return QuantileProcess(taus=taus, fits=tuple(fits), names=names, failures=failures)
