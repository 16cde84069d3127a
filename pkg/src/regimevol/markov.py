"""Markov-switching regression fitted by filtered maximum likelihood.

In regime ``m`` the dependent variable follows::

    y_t = x_t' beta_m + z_t' phi + sigma_m e_t,    e_t ~ N(0, 1)

and the regime follows a Markov chain whose row ``i`` of the transition
matrix is a multinomial logit in observed drivers ``E_{t-1}``::

    Pr(s_t = j | s_{t-1} = i) = exp(E_{t-1}' psi_ij) / sum_k exp(E_{t-1}' psi_ik)

with ``psi_iM = 0`` for identification. Constant transition probabilities
are the special case ``E_t = 1``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numba
import numpy as np
from scipy import optimize

from . import numdiff
from .errors import (
    ConvergenceWarning,
    DegenerateDensity,
    InsufficientData,
    InvalidParams,
    NotFitted,
)

LOG_2PI = math.log(2.0 * math.pi)


# -- transitions ------------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic matrix, ``P[i, j] = Pr(s_t = j | s_{t-1} = i)``."""

    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 2:
            raise InvalidParams("transition matrix must be square with at least two regimes")
        if np.any(P < 0) or np.any(P > 1):
            raise InvalidParams("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(P.sum(axis=1) - 1.0)) > 1e-12:
            raise InvalidParams("transition matrix rows must sum to 1")
        P.setflags(write=False)
        object.__setattr__(self, "P", P)

    @property
    def M(self) -> int:
        return self.P.shape[0]

    def ergodic(self) -> np.ndarray:
        """Stationary distribution; uniform when the chain is reducible."""
        return _ergodic(self.P)


def _ergodic(P: np.ndarray) -> np.ndarray:
    # (I - P' + 11') pi = 1 has a unique solution iff the stationary law is unique
    M = P.shape[0]
    A = np.eye(M) - P.T + 1.0
    try:
        pi = np.linalg.solve(A, np.ones(M))
    except np.linalg.LinAlgError:
        return np.full(M, 1.0 / M)
    if not np.all(np.isfinite(pi)) or np.any(pi < -1e-12):
        return np.full(M, 1.0 / M)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    top = logits.max(axis=-1, keepdims=True)
    inf = np.isposinf(top)
    # rows with a +inf logit put all their mass on those entries (absorbing states)
    with np.errstate(invalid="ignore"):
        z = np.where(inf, np.where(np.isposinf(logits), 0.0, -np.inf), logits - top)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def transition_logit(E, psi) -> TransitionMatrix:
    """Transition matrix implied by drivers ``E`` (one period) and coefficients.

    ``psi`` has shape ``(M, M - 1, k)`` (or ``(M, M - 1)`` when ``k = 1``):
    ``psi[i, j]`` multiplies ``E`` in the logit for moving from ``i`` to
    ``j``; the last regime's coefficients are zero.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim == 2:
        psi = psi[:, :, None]
    E = np.atleast_1d(np.asarray(E, dtype=float))
    if psi.shape[2] != E.size or psi.shape[0] != psi.shape[1] + 1:
        raise InvalidParams(f"psi shape {psi.shape} does not match {E.size} drivers")
    logits = np.concatenate([psi @ E, np.zeros((psi.shape[0], 1))], axis=1)
    P = _softmax_rows(logits)
    # renormalize once more so rows sum to 1 to the last ulp
    P = P / P.sum(axis=1, keepdims=True)
    return TransitionMatrix(P)


def _transition_path(E: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``P[t]`` for each row of E, shape (T, M, M)."""
    logits = np.einsum("ijk,tk->tij", psi, E)
    M = psi.shape[0]
    logits = np.concatenate([logits, np.zeros((E.shape[0], M, 1))], axis=2)
    return _softmax_rows(logits)


def expected_durations(P) -> np.ndarray:
    """Mean regime lengths ``1 / (1 - p_ii)``; absorbing regimes give ``inf``."""
    P = P.P if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    d = np.diag(P)
    with np.errstate(divide="ignore"):
        return np.where(d >= 1.0, np.inf, 1.0 / (1.0 - d))


# -- parameters -------------------------------------------------------------

@dataclass(frozen=True)
class MsrSpec:
    M: int = 2
    switching: tuple[str, ...] = ("const",)
    non_switching: tuple[str, ...] = ()
    switching_variance: bool = True
    transition_drivers: tuple[str, ...] = ()

    def __post_init__(self):
        if self.M < 2:
            raise ValueError("need at least two regimes")
        if self.M > 4:
            raise ValueError("at most four regimes are supported")

    @property
    def kx(self) -> int:
        return len(self.switching)

    @property
    def kz(self) -> int:
        return len(self.non_switching)

    @property
    def ke(self) -> int:
        return max(1, len(self.transition_drivers))

    @property
    def constant_transitions(self) -> bool:
        return not self.transition_drivers

    def n_params(self) -> int:
        ns = self.M if self.switching_variance else 1
        return self.M * self.kx + self.kz + ns + self.M * (self.M - 1) * self.ke


@dataclass(frozen=True)
class MsrParams:
    """``beta`` (M, kx), ``phi`` (kz,), ``sigma`` (M,), ``psi`` (M, M-1, ke)."""

    beta: np.ndarray
    sigma: np.ndarray
    psi: np.ndarray
    phi: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        psi = np.asarray(self.psi, dtype=float)
        if psi.ndim == 2:
            psi = psi[:, :, None]
        M = beta.shape[0]
        if sigma.size == 1:
            sigma = np.full(M, sigma[0])
        if sigma.shape != (M,) or np.any(sigma <= 0):
            raise InvalidParams("sigma must be positive, one per regime")
        if psi.shape[:2] != (M, M - 1):
            raise InvalidParams(f"psi must have shape ({M}, {M - 1}, k), got {psi.shape}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "phi", np.atleast_1d(np.asarray(self.phi, dtype=float)))

    @property
    def M(self) -> int:
        return self.beta.shape[0]

    @classmethod
    def from_transition(cls, beta, sigma, P, phi=()) -> "MsrParams":
        """Constant-transition parameters from a transition matrix."""
        P = np.asarray(P, dtype=float)
        with np.errstate(divide="ignore"):
            psi = np.log(P[:, :-1]) - np.log(P[:, -1:])
        return cls(beta=beta, sigma=sigma, psi=psi[:, :, None], phi=np.asarray(phi, dtype=float))

    def transition(self, E=None) -> TransitionMatrix:
        return transition_logit(np.ones(1) if E is None else E, self.psi)

    def permuted(self, order: Sequence[int]) -> "MsrParams":
        """Relabel regimes so that new regime ``k`` is old regime ``order[k]``."""
        order = np.asarray(order)
        M = self.M
        full = np.concatenate([self.psi, np.zeros((M, 1, self.psi.shape[2]))], axis=1)
        full = full[order][:, order]
        full = full - full[:, -1:, :]
        return MsrParams(self.beta[order], self.sigma[order], full[:, :-1], self.phi)


# -- filter and smoother ----------------------------------------------------

@numba.njit(cache=True)
def _hamilton(y, mean, sigma, P_all, xi0):
    T, M = mean.shape
    filtered = np.empty((T, M))
    predicted = np.empty((T, M))
    logdens = np.empty(M)
    prior = xi0.copy()
    lognorm = -0.5 * LOG_2PI - np.log(sigma)
    loglik = 0.0
    for t in range(T):
        if t > 0:
            Pt = P_all[0] if P_all.shape[0] == 1 else P_all[t]
            for j in range(M):
                s = 0.0
                for i in range(M):
                    s += Pt[i, j] * filtered[t - 1, i]
                prior[j] = s
        mx = -np.inf
        for m in range(M):
            r = (y[t] - mean[t, m]) / sigma[m]
            logdens[m] = lognorm[m] - 0.5 * r * r
            if prior[m] > 0.0 and logdens[m] > mx:
                mx = logdens[m]
        total = 0.0
        for m in range(M):
            predicted[t, m] = prior[m]
            w = prior[m] * math.exp(logdens[m] - mx) if prior[m] > 0.0 else 0.0
            filtered[t, m] = w
            total += w
        if not (total > 0.0) or not np.isfinite(mx):
            return filtered, predicted, np.nan, t
        for m in range(M):
            filtered[t, m] /= total
        loglik += mx + math.log(total)
    return filtered, predicted, loglik, -1


@numba.njit(cache=True)
def _kim(filtered, predicted, P_all):
    T, M = filtered.shape
    smoothed = np.empty((T, M))
    smoothed[T - 1] = filtered[T - 1]
    for t in range(T - 2, -1, -1):
        Pn = P_all[0] if P_all.shape[0] == 1 else P_all[t + 1]
        total = 0.0
        for i in range(M):
            s = 0.0
            for j in range(M):
                if predicted[t + 1, j] > 0.0:
                    s += Pn[i, j] * smoothed[t + 1, j] / predicted[t + 1, j]
            smoothed[t, i] = filtered[t, i] * s
            total += smoothed[t, i]
        for i in range(M):
            smoothed[t, i] /= total
    return smoothed


def _design(y, X, Z, E, T=None):
    y = np.ascontiguousarray(y, dtype=float)
    T = y.size
    X = np.ones((T, 1)) if X is None else np.asarray(X, dtype=float).reshape(T, -1)
    Z = np.zeros((T, 0)) if Z is None else np.asarray(Z, dtype=float).reshape(T, -1)
    E = None if E is None else np.asarray(E, dtype=float).reshape(T, -1)
    return y, X, Z, E


def _transition_inputs(params: MsrParams, E, T):
    if E is None:
        P = _softmax_rows(np.concatenate([params.psi[:, :, 0], np.zeros((params.M, 1))], axis=1))
        return P[None], _ergodic(P)
    P_all = np.empty((T, params.M, params.M))
    P_all[1:] = _transition_path(E[:-1], params.psi)
    P_all[0] = np.eye(params.M)
    return P_all, np.full(params.M, 1.0 / params.M)


@dataclass(frozen=True)
class FilterResult:
    filtered: np.ndarray
    predicted: np.ndarray
    loglik: float
    transitions: np.ndarray


def _run_filter(params: MsrParams, y, X, Z, E, initial=None) -> FilterResult:
    mean = X @ params.beta.T
    if Z.shape[1]:
        mean = mean + (Z @ params.phi)[:, None]
    P_all, xi0 = _transition_inputs(params, E, y.size)
    if initial is not None:
        xi0 = np.asarray(initial, dtype=float)
    filt, pred, ll, bad = _hamilton(y, np.ascontiguousarray(mean), params.sigma, np.ascontiguousarray(P_all), xi0)
    if bad >= 0:
        raise DegenerateDensity(f"all regime densities vanish at t={bad}")
    return FilterResult(filt, pred, float(ll), P_all)


def hamilton_filter(spec: MsrSpec | None, params: MsrParams, y, X=None, Z=None, E=None, *, initial=None):
    """Filtered regime probabilities and the log-likelihood.

    The chain starts from the ergodic distribution of the constant
    transition matrix, or uniformly when transitions vary with ``E``, unless
    ``initial`` is given. Row ``t`` of ``E`` drives the transition into
    ``t + 1``.

    Returns
    -------
    filtered : ndarray, shape (T, M)
        ``Pr(s_t = m | y_1..y_t)``.
    loglik : float
    """
    y, X, Z, E = _design(y, X, Z, E)
    if spec is not None and spec.constant_transitions:
        E = None
    res = _run_filter(params, y, X, Z, E, initial)
    return res.filtered, res.loglik


def kim_smoother(filtered, predicted, transitions) -> np.ndarray:
    """Backward pass giving ``Pr(s_t = m | y_1..y_T)``."""
    P_all = np.asarray(transitions, dtype=float)
    if P_all.ndim == 2:
        P_all = P_all[None]
    return _kim(np.ascontiguousarray(filtered), np.ascontiguousarray(predicted), np.ascontiguousarray(P_all))


# -- estimation -------------------------------------------------------------

@dataclass(frozen=True)
class MsrFit:
    spec: MsrSpec
    params: MsrParams
    transition: TransitionMatrix
    filtered_probs: np.ndarray
    predicted_probs: np.ndarray
    smoothed_probs: np.ndarray
    loglik: float
    expected_durations: np.ndarray
    beta_se: np.ndarray
    phi_se: np.ndarray
    sigma_se: np.ndarray
    transition_se: np.ndarray
    psi_se: np.ndarray
    converged: bool
    nobs: int
    start_logliks: tuple[float, ...] = ()

    @property
    def beta(self) -> np.ndarray:
        return self.params.beta

    @property
    def sigma(self) -> np.ndarray:
        return self.params.sigma

    @property
    def phi(self) -> np.ndarray:
        return self.params.phi

    @property
    def P(self) -> np.ndarray:
        return self.transition.P

    def coefficient_rows(self):
        """``(regime, name, estimate, std_error, z)`` rows; regime 0 marks common terms."""
        rows = []
        for m in range(self.params.M):
            for j, name in enumerate(self.spec.switching):
                rows.append((m + 1, name, self.beta[m, j], self.beta_se[m, j]))
            rows.append((m + 1, "sigma", self.sigma[m], self.sigma_se[m]))
        for j, name in enumerate(self.spec.non_switching):
            rows.append((0, name, self.phi[j], self.phi_se[j]))
        return [(r, n, e, s, e / s if s > 0 else math.nan) for r, n, e, s in rows]


class _Packer:
    """Flatten parameters to an unconstrained vector and back."""

    def __init__(self, spec: MsrSpec):
        self.spec = spec
        M, kx, kz, ke = spec.M, spec.kx, spec.kz, spec.ke
        self.ns = M if spec.switching_variance else 1
        self.sizes = (M * kx, kz, self.ns, M * (M - 1) * ke)

    def unpack(self, u) -> MsrParams:
        s = self.spec
        a, b, c, _ = np.cumsum(self.sizes)
        beta = u[:a].reshape(s.M, s.kx)
        phi = u[a:b]
        sigma = np.exp(np.clip(u[b:c], -700.0, 700.0))
        psi = u[c:].reshape(s.M, s.M - 1, s.ke)
        return MsrParams(beta=beta, sigma=sigma, psi=psi, phi=phi)

    def pack(self, p: MsrParams) -> np.ndarray:
        sig = p.sigma if self.spec.switching_variance else p.sigma[:1]
        return np.concatenate([p.beta.ravel(), p.phi.ravel(), np.log(sig), p.psi.ravel()])


class _Scaling:
    """Affine standardization of y and the regressors.

    With an intercept in ``X`` the other switching columns and ``y`` are
    centred; all columns are divided by their standard deviation. The fitted
    model is equivalent, so estimates map back exactly.
    """

    def __init__(self, y, X, Z):
        icol = None
        for j in range(X.shape[1]):
            if X[0, j] != 0 and np.all(X[:, j] == X[0, j]):
                icol = j
                break
        self.icol = icol
        self.cy = float(y.mean()) if icol is not None else 0.0
        self.sy = float(y.std()) or 1.0
        const = np.all(X == X[0], axis=0)
        self.mx = np.where(const | (icol is None), 0.0, X.mean(axis=0))
        self.sx = np.where(const, 1.0, X.std(axis=0))
        if icol is not None:
            self.sx[icol] = X[0, icol]
        self.sz = Z.std(axis=0) if Z.shape[1] else np.ones(0)
        self.sz = np.where(self.sz > 0, self.sz, 1.0)
        self.data = ((y - self.cy) / self.sy, (X - self.mx) / self.sx, Z / self.sz)
        self.log_jacobian = y.size * math.log(self.sy)

    def to_std(self, p: MsrParams) -> MsrParams:
        beta = p.beta * self.sx / self.sy
        if self.icol is not None:
            shift = p.beta @ self.mx - self.cy
            beta[:, self.icol] += shift / self.sy
        return MsrParams(beta=beta, sigma=p.sigma / self.sy, psi=p.psi, phi=p.phi * self.sz / self.sy)

    def from_std(self, p: MsrParams) -> MsrParams:
        beta = p.beta * self.sy / self.sx
        if self.icol is not None:
            shift = beta @ self.mx - self.cy
            beta[:, self.icol] -= shift / self.sx[self.icol]
        return MsrParams(beta=beta, sigma=p.sigma * self.sy, psi=p.psi, phi=p.phi * self.sy / self.sz)


def _start_params(spec: MsrSpec, y, X, Z, rng, k: int) -> MsrParams:
    W = np.hstack([X, Z])
    coef, *_ = np.linalg.lstsq(W, y, rcond=None)
    resid = y - W @ coef
    s = float(np.sqrt(resid @ resid / max(1, y.size - W.shape[1])))
    b, phi = coef[: spec.kx], coef[spec.kx:]
    M = spec.M
    col_sd = X.std(axis=0)
    col_sd[col_sd == 0] = 1.0
    if k == 0:
        beta = np.tile(b, (M, 1))
        sigma = s * np.linspace(1.5, 0.5, M)
        p_stay = np.full(M, 0.9)
    else:
        beta = b + 0.5 * s * rng.standard_normal((M, spec.kx)) / col_sd
        sigma = np.sort(s * np.exp(0.5 * rng.standard_normal(M)))[::-1]
        p_stay = rng.uniform(0.6, 0.98, M)
    P = np.empty((M, M))
    for i in range(M):
        P[i] = (1.0 - p_stay[i]) / (M - 1)
        P[i, i] = p_stay[i]
    psi = np.zeros((M, M - 1, spec.ke))
    psi[:, :, 0] = np.log(P[:, :-1]) - np.log(P[:, -1:])
    if not spec.switching_variance:
        sigma = np.full(M, s)
    return MsrParams(beta=beta, sigma=sigma, psi=psi, phi=phi)


def _regime_order(spec: MsrSpec, p: MsrParams) -> np.ndarray:
    if spec.switching_variance:
        key = -p.sigma
    else:
        key = -p.beta[:, 0]
    return np.argsort(key, kind="stable")


def fit_msr(
    spec: MsrSpec,
    y,
    X=None,
    Z=None,
    E=None,
    *,
    n_starts: int = 8,
    seed: int = 0,
    start: MsrParams | Sequence[MsrParams] | None = None,
    gtol: float = 1e-6,
    maxiter: int = 2000,
) -> MsrFit:
    """Maximum likelihood fit with seeded multi-start BFGS.

    Regime standard deviations are optimized on the log scale and each row
    of the transition matrix through its logit coefficients. After
    convergence regimes are relabeled by descending ``sigma`` (by descending
    first coefficient when the variance does not switch), so regime 1 is
    the high-volatility regime. Standard errors come from the numerical
    Hessian at the relabeled optimum, mapped to ``sigma`` and the transition
    probabilities by the delta method.

    Raises
    ------
    InsufficientData
        Fewer than ten observations per parameter.
    """
    y, X, Z, E = _design(y, X, Z, E)
    if X.shape[1] != spec.kx or Z.shape[1] != spec.kz:
        raise ValueError(
            f"design has {X.shape[1]} switching / {Z.shape[1]} fixed columns, spec expects {spec.kx} / {spec.kz}"
        )
    if E is not None and E.shape[1] != spec.ke:
        raise ValueError(f"E has {E.shape[1]} columns, spec expects {spec.ke}")
    if spec.constant_transitions:
        E = None
    T = y.size
    k = spec.n_params()
    if T < 10 * k:
        raise InsufficientData(f"{T} observations for {k} parameters; need at least {10 * k}")
    if not np.std(y) > 0:
        raise InsufficientData("dependent variable is constant")

    packer = _Packer(spec)
    scaling = _Scaling(y, X, Z)
    ys, Xs, Zs = scaling.data

    def make_cost(yy, XX, ZZ):
        def cost(u):
            try:
                p = packer.unpack(u)
                return -_run_filter(p, yy, XX, ZZ, E).loglik
            except (DegenerateDensity, InvalidParams, FloatingPointError):
                return math.inf
        return cost

    cost = make_cost(y, X, Z)
    cost_std = make_cost(ys, Xs, Zs)

    def safe_cost(u):
        c = cost_std(u)
        return c if np.isfinite(c) else 1e300

    # optimization runs on standardized data; starts are drawn there too
    if start is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 0])))
        starts = [_start_params(spec, ys, Xs, Zs, rng, i) for i in range(max(1, n_starts))]
    else:
        starts = [start] if isinstance(start, MsrParams) else list(start)
        starts = [scaling.to_std(p) for p in starts]

    best = None
    start_ll = []
    for i, p0 in enumerate(starts):
        u0 = packer.pack(p0)
        c0 = cost_std(u0)
        start_ll.append(-c0 - scaling.log_jacobian)
        if not np.isfinite(c0):
            continue
        with warnings.catch_warnings(), np.errstate(all="ignore"):
            warnings.simplefilter("ignore", RuntimeWarning)
            res = optimize.minimize(
                safe_cost, u0, jac=lambda u: numdiff.gradient(safe_cost, u), method="BFGS",
                options={"gtol": gtol, "maxiter": maxiter},
            )
        if res.fun >= 1e300:
            continue
        if best is None or res.fun < best.fun - 1e-9:
            best = res
    if best is None:
        raise InsufficientData("likelihood is not finite at any start value")

    p_std = packer.unpack(best.x)
    p_std = p_std.permuted(_regime_order(spec, p_std))
    g = numdiff.gradient(cost_std, packer.pack(p_std))
    converged = bool(best.success or np.max(np.abs(g)) < 1e-3)
    if not converged:
        warnings.warn(f"Markov-switching fit did not converge: {best.message}", ConvergenceWarning)
    p_hat = scaling.from_std(p_std)
    u_hat = packer.pack(p_hat)

    cov_u = numdiff.inverse_covariance(numdiff.hessian(cost, u_hat))
    a, b, c, _ = np.cumsum(packer.sizes)
    se_u = np.sqrt(np.clip(np.diag(cov_u), 0.0, None))
    beta_se = se_u[:a].reshape(spec.M, spec.kx)
    phi_se = se_u[a:b]
    sig_se = np.sqrt(np.clip(np.diag(numdiff.delta_method(cov_u[b:c, b:c], np.exp, u_hat[b:c])), 0, None))
    if not spec.switching_variance:
        sig_se = np.full(spec.M, sig_se[0])
    psi_se = se_u[c:].reshape(spec.M, spec.M - 1, spec.ke)

    res = _run_filter(p_hat, y, X, Z, E)
    smoothed = kim_smoother(res.filtered, res.predicted, res.transitions)
    if E is None:
        trans = TransitionMatrix(res.transitions[0] / res.transitions[0].sum(axis=1, keepdims=True))

        def probs(v):
            q = np.concatenate([v.reshape(spec.M, spec.M - 1), np.zeros((spec.M, 1))], axis=1)
            return _softmax_rows(q).ravel()

        trans_se = np.sqrt(np.clip(np.diag(numdiff.delta_method(cov_u[c:, c:], probs, u_hat[c:])), 0, None))
        trans_se = trans_se.reshape(spec.M, spec.M)
    else:
        P_bar = _transition_path(E.mean(axis=0, keepdims=True), p_hat.psi)[0]
        trans = TransitionMatrix(P_bar / P_bar.sum(axis=1, keepdims=True))
        trans_se = np.full((spec.M, spec.M), np.nan)

    return MsrFit(
        spec=spec, params=p_hat, transition=trans,
        filtered_probs=res.filtered, predicted_probs=res.predicted, smoothed_probs=smoothed,
        loglik=res.loglik, expected_durations=expected_durations(trans),
        beta_se=beta_se, phi_se=phi_se, sigma_se=sig_se, transition_se=trans_se, psi_se=psi_se,
        converged=converged, nobs=T, start_logliks=tuple(start_ll),
    )


def smoothed_probabilities(fit: MsrFit | None) -> np.ndarray:
    if fit is None or fit.smoothed_probs is None:
        raise NotFitted("no Markov-switching fit available")
    return fit.smoothed_probs


def ols_loglik(y, X) -> float:
    """Gaussian log-likelihood of the single-regime OLS fit (ML variance)."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float).reshape(y.size, -1)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    e = y - X @ coef
    s2 = e @ e / y.size
    return -0.5 * y.size * (LOG_2PI + math.log(s2) + 1.0)
