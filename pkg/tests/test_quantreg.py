import math
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from regimevol import quantreg as qr
from regimevol import simulate as sim
from regimevol.errors import (
    DegenerateSolution,
    InvalidTau,
    NoIntercept,
    RankDeficient,
    SingularH,
    TooSmallSample,
)


def _quiet_fit(y, X, tau, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateSolution)
        return qr.fit_qr(y, X, tau, **kw)


def _design(rng, n, p):
    return np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])


def test_check_loss_examples():
    assert qr.check_loss(0.0, 0.3) == 0.0
    assert qr.check_loss(2.0, 0.25) == 0.5
    assert qr.check_loss(-2.0, 0.25) == 1.5
    w = np.linspace(-3, 3, 13)
    assert_allclose(qr.check_loss(w, 0.5), np.abs(w) / 2)
    with pytest.raises(InvalidTau):
        qr.check_loss(1.0, 1.0)


def test_perfect_fit():
    X = np.column_stack([np.ones(3), [1.0, 2.0, 3.0]])
    f = _quiet_fit([1.0, 2.0, 3.0], X, 0.5)
    assert_allclose(f.beta, [0.0, 1.0], atol=1e-12)
    assert f.objective == 0.0
    assert f.pseudo_r2 == 1.0


@pytest.mark.parametrize("tau", [0.25, 0.5, 0.75])
def test_matches_enumeration_n7(tau):
    rng = np.random.default_rng(7)
    X = _design(rng, 7, 2)
    y = rng.standard_normal(7)
    f = _quiet_fit(y, X, tau)
    _, ref = sim.brute_force_qr(y, X, tau)
    assert abs(f.objective - ref) <= 1e-10


@settings(max_examples=150, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(st.integers(0, 10**6), st.integers(4, 9), st.integers(1, 3), st.sampled_from([0.1, 0.25, 0.5, 0.75, 0.9]),
       st.booleans())
def test_matches_enumeration_property(seed, n, p, tau, rounded):
    rng = np.random.default_rng(seed)
    X = _design(rng, n, p)
    y = rng.standard_normal(n)
    if rounded:
        # ties and collinear points stress degenerate vertices
        X, y = np.round(X), np.round(y)
    if np.linalg.matrix_rank(X) < p:
        return
    f = _quiet_fit(y, X, tau)
    _, ref = sim.brute_force_qr(y, X, tau)
    assert abs(f.objective - ref) <= 1e-10


def test_median_odd_sample():
    rng = np.random.default_rng(0)
    y = rng.standard_normal(101)
    f = _quiet_fit(y, np.ones((101, 1)), 0.5)
    assert f.beta[0] == np.median(y)


def test_median_even_sample_is_a_middle_order_statistic():
    y = np.array([4.0, 1.0, 3.0, 2.0])
    f = _quiet_fit(y, np.ones((4, 1)), 0.5)
    assert f.beta[0] in (2.0, 3.0)
    assert f.objective == 2.0


def test_basic_residuals_are_zero_and_signs_balance():
    rng = np.random.default_rng(5)
    n, p = 200, 3
    X = _design(rng, n, p)
    y = X @ [1.0, 2.0, -1.0] + rng.standard_t(3, n)
    for tau in (0.1, 0.5, 0.9):
        f = _quiet_fit(y, X, tau)
        assert np.sum(f.residuals[f.basis] == 0.0) == p
        n_neg, n_pos = np.sum(f.residuals < 0), np.sum(f.residuals > 0)
        assert n_neg <= n * tau <= n - n_pos


def test_errors():
    X = np.column_stack([np.ones(5), np.arange(5.0), 2 * np.arange(5.0)])
    with pytest.raises(RankDeficient):
        qr.fit_qr(np.arange(5.0), X, 0.5)
    with pytest.raises(InvalidTau):
        qr.fit_qr(np.arange(5.0), np.ones((5, 1)), 0.0)


def test_hall_sheather_closed_form():
    ref = 1000 ** (-1 / 3) * 1.959963984540054 ** (2 / 3) * (1.5 / (2 * math.pi)) ** (1 / 3)
    assert_allclose(qr.hall_sheather_bandwidth(1000, 0.5), ref, rtol=0, atol=1e-10)
    assert qr.hall_sheather_bandwidth(10**6, 0.5) < qr.hall_sheather_bandwidth(100, 0.5)
    h = qr.hall_sheather_bandwidth(12, 0.99)
    assert 0.99 + h < 1.0 and 0.99 - h > 0.0
    with pytest.raises(TooSmallSample):
        qr.hall_sheather_bandwidth(9, 0.5)


def test_hall_sheather_general_tau():
    n, tau = 500, 0.2
    z = stats.norm.ppf(tau)
    ref = n ** (-1 / 3) * stats.norm.ppf(0.975) ** (2 / 3) * (1.5 * stats.norm.pdf(z) ** 2 / (2 * z * z + 1)) ** (1 / 3)
    assert_allclose(qr.hall_sheather_bandwidth(n, tau), ref, rtol=1e-12)


def test_median_standard_error_matches_asymptotics():
    rng = np.random.default_rng(2024)
    n, sigma = 5000, 2.0
    y = sigma * rng.standard_normal(n)
    f = _quiet_fit(y, np.ones((n, 1)), 0.5)
    analytic = sigma * math.sqrt(math.pi / 2) / math.sqrt(n)
    assert abs(f.std_errors[0] / analytic - 1) < 0.15


def test_covariance_symmetric_psd():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(50, 300))
        X = _design(rng, n, 3)
        y = X @ rng.standard_normal(3) + rng.standard_normal(n)
        f = _quiet_fit(y, X, float(rng.uniform(0.1, 0.9)))
        assert_array_equal(f.covariance, f.covariance.T)
        assert np.linalg.eigvalsh(f.covariance).min() >= -1e-12


def test_slope_standard_errors_scale_inversely():
    rng = np.random.default_rng(9)
    n = 500
    X = _design(rng, n, 3)
    y = X @ [1.0, 0.5, -0.5] + rng.standard_normal(n)
    c = 4.0
    Xc = X.copy()
    Xc[:, 1:] *= c
    a = _quiet_fit(y, X, 0.4)
    b = _quiet_fit(y, Xc, 0.4)
    assert_allclose(b.std_errors[1:], a.std_errors[1:] / c, rtol=1e-8)
    assert_allclose(b.std_errors[0], a.std_errors[0], rtol=1e-8)


def test_powell_singular_and_epanechnikov():
    X = np.column_stack([np.ones(20), np.arange(20.0)])
    r = np.linspace(-5, 5, 20)
    with pytest.raises(SingularH):
        qr.powell_covariance(r, X, 0.5, 1e-3, kernel="epanechnikov")
    cov = qr.powell_covariance(r, X, 0.5, 3.0, kernel="epanechnikov")
    assert np.all(np.isfinite(cov))


def test_pseudo_r2_cases():
    rng = np.random.default_rng(10)
    n = 5000
    X = _design(rng, n, 3)
    y = rng.standard_normal(n)
    f = _quiet_fit(y, X, 0.5)
    assert 0.0 <= f.pseudo_r2 < 0.01
    assert_allclose(qr.pseudo_r_squared(f, y, X), f.pseudo_r2)
    g = _quiet_fit(y, np.ones((n, 1)), 0.5)
    assert g.pseudo_r2 == 0.0
    with pytest.raises(NoIntercept):
        qr.pseudo_r_squared(f, y, X[:, 1:])
    h = _quiet_fit(y, X[:, 1:], 0.5)
    assert math.isnan(h.pseudo_r2)


def test_objective_non_increasing_in_regressors():
    rng = np.random.default_rng(11)
    n = 300
    X = _design(rng, n, 5)
    y = X @ [0.0, 1.0, 0.5, 0.0, 0.0] + rng.standard_normal(n)
    for tau in (0.25, 0.5, 0.75):
        v = [_quiet_fit(y, X[:, :k], tau).objective for k in range(1, 6)]
        assert np.all(np.diff(v) <= 1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.floats(0.1, 10.0), st.sampled_from([0.2, 0.5, 0.8]))
def test_equivariance(seed, c, tau):
    rng = np.random.default_rng(seed)
    n = 40
    X = _design(rng, n, 2)
    y = X @ [1.0, -1.0] + rng.standard_normal(n)
    d = rng.standard_normal(2)
    base = _quiet_fit(y, X, tau)
    scaled = _quiet_fit(c * y, X, tau)
    shifted = _quiet_fit(y + X @ d, X, tau)
    assert_allclose(scaled.objective, c * base.objective, rtol=1e-9)
    assert_allclose(shifted.objective, base.objective, rtol=1e-9, atol=1e-12)
    if not base.degenerate:
        assert_allclose(scaled.beta, c * base.beta, rtol=1e-9, atol=1e-12)
        assert_allclose(shifted.beta, base.beta + d, rtol=1e-9, atol=1e-9)


def test_small_sample_covariance_is_nan():
    X = np.column_stack([np.ones(6), np.arange(6.0)])
    f = _quiet_fit(np.array([0.1, 1.3, 1.9, 3.2, 3.8, 5.1]), X, 0.5)
    assert np.all(np.isnan(f.covariance))
    assert f.covariance_error


def test_singleton_process_equals_fit():
    s = sim.location_shift(300, seed=1)
    proc = qr.quantile_process(s.y, s.X, [0.5], names=("const", "x"))
    f = _quiet_fit(s.y, s.X, 0.5)
    assert len(proc.fits) == 1
    assert_array_equal(proc.fits[0].beta, f.beta)
    assert_array_equal(proc.fits[0].covariance, f.covariance)


def test_process_rejects_bad_grid():
    s = sim.location_shift(100, seed=1)
    with pytest.raises(InvalidTau):
        qr.quantile_process(s.y, s.X, [0.5, 0.4])


def test_location_scale_slope_increases():
    s = sim.location_scale(1000, seed=4343)
    proc = qr.quantile_process(s.y, s.X, names=("const", "x"))
    est, _, _ = proc.path("x")
    assert np.all(np.diff(est) > 0)


def test_location_shift_slope_flat():
    s = sim.location_shift(1000, seed=4242)
    proc = qr.quantile_process(s.y, s.X, names=("const", "x"))
    est, lo, hi = proc.path("x")
    assert np.all((lo <= 1.0) & (1.0 <= hi))


def test_process_csv(tmp_path):
    s = sim.location_shift(200, seed=3)
    proc = qr.quantile_process(s.y, s.X, [0.25, 0.5, 0.75], names=("const", "x"))
    path = proc.to_csv(tmp_path / "p.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "tau,coefficient,estimate,lower,upper"
    assert len(lines) == 1 + 3 * 2
