"""Finite-difference gradients, Hessians and delta-method covariances."""

from __future__ import annotations

from typing import Callable

import numpy as np

_EPS = np.finfo(float).eps


def _steps(x: np.ndarray, power: float) -> np.ndarray:
    return _EPS ** power * np.maximum(np.abs(x), 1.0)


def gradient(f: Callable[[np.ndarray], float], x, h=None) -> np.ndarray:
    """Central-difference gradient."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, 1.0 / 3.0) if h is None else np.broadcast_to(h, x.shape)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def jacobian(f: Callable[[np.ndarray], np.ndarray], x, h=None) -> np.ndarray:
    """Central-difference Jacobian of a vector function, shape (len(f(x)), len(x))."""
    x = np.asarray(x, dtype=float)
    h = _steps(x, 1.0 / 3.0) if h is None else np.broadcast_to(h, x.shape)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h[i]))
    return np.column_stack(cols)


def hessian(f: Callable[[np.ndarray], float], x, h=None) -> np.ndarray:
    """Symmetric central-difference Hessian (four-point cross terms)."""
    x = np.asarray(x, dtype=float)
    k = x.size
    h = _steps(x, 1.0 / 4.0) if h is None else np.broadcast_to(h, x.shape)
    f0 = f(x)
    H = np.empty((k, k))
    ee = np.diag(h)
    for i in range(k):
        fp = f(x + ee[i])
        fm = f(x - ee[i])
        H[i, i] = (fp - 2.0 * f0 + fm) / h[i] ** 2
        for j in range(i):
            fpp = f(x + ee[i] + ee[j])
            fpm = f(x + ee[i] - ee[j])
            fmp = f(x - ee[i] + ee[j])
            fmm = f(x - ee[i] - ee[j])
            H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
    return H


def inverse_covariance(H: np.ndarray) -> np.ndarray:
    """Invert an observed-information matrix; non-PD input yields NaNs."""
    H = 0.5 * (H + H.T)
    try:
        c = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return np.full_like(H, np.nan)
    ci = np.linalg.inv(c)
    return ci.T @ ci


def delta_method(cov_u: np.ndarray, transform: Callable[[np.ndarray], np.ndarray], u) -> np.ndarray:
    """Covariance of ``transform(u)`` given the covariance of ``u``."""
    J = jacobian(transform, u)
    cov = J @ cov_u @ J.T
    return 0.5 * (cov + cov.T)
