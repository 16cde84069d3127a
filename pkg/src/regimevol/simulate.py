"""Seeded data generators with known truth and brute-force reference solvers.

All randomness comes from :func:`stream`, a Philox counter-based generator
keyed by ``(seed, replication)``. Each replication therefore draws from its
own stream and Monte Carlo studies give the same answer whether their
replications run serially, in parallel or out of order.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .errors import InvalidParams, TooLarge
from .series import Frequency, ReturnSeries, TimeSeries, month_ordinal

DEFAULT_START = "2000-01-03"
COVARIATE_PERSISTENCE = 0.9


def stream(seed: int, replication: int = 0) -> np.random.Generator:
    """Independent generator for replication ``replication`` of master ``seed``."""
    ss = np.random.SeedSequence([int(seed), int(replication)])
    return np.random.Generator(np.random.Philox(ss))


def business_days(n: int, start: str = DEFAULT_START) -> np.ndarray:
    first = np.busday_offset(np.datetime64(start, "D"), 0, roll="forward")
    return np.busday_offset(first, np.arange(n), roll="forward")


def ar1(rng: np.random.Generator, n: int, rho: float = COVARIATE_PERSISTENCE, sd: float = 1.0) -> np.ndarray:
    """Stationary Gaussian AR(1) started from its stationary law."""
    innov_sd = sd * math.sqrt(1.0 - rho * rho)
    e = rng.standard_normal(n)
    x = np.empty(n)
    x[0] = sd * e[0]
    for t in range(1, n):
        x[t] = rho * x[t - 1] + innov_sd * e[t]
    return x


# -- GARCH-MIDAS ------------------------------------------------------------

@dataclass(frozen=True)
class GarchMidasSample:
    returns: ReturnSeries
    covariates: tuple[TimeSeries, TimeSeries]
    stv: TimeSeries
    ltv: TimeSeries

    @property
    def variance(self) -> np.ndarray:
        pos = np.searchsorted(month_ordinal(self.ltv.dates), month_ordinal(self.stv.dates))
        return self.stv.values * self.ltv.values[pos]


def simulate_garch_midas(
    params,
    n_days: int,
    seed: int,
    *,
    K: int = 12,
    form: str = "log",
    replication: int = 0,
    start: str = DEFAULT_START,
    names: tuple[str, str] = ("x1", "x2"),
) -> GarchMidasSample:
    """Simulate returns from the two-covariate GARCH-MIDAS model.

    Returns fall on consecutive business days from ``start``; the number of
    months follows from the calendar. Both covariates are stationary AR(1)
    processes with persistence 0.9 and unit variance, observed from K months
    before the first return month through the last return month.
    """
    from .garch_midas import long_run_component

    try:
        params.validate()
    except Exception as exc:
        raise InvalidParams(str(exc)) from exc
    if n_days < 2:
        raise InvalidParams("n_days must be >= 2")
    rng = stream(seed, replication)
    days = business_days(n_days, start)
    day_mo = month_ordinal(days)
    first, last = int(day_mo[0]), int(day_mo[-1])
    n_cov = last - first + K  # months first-K .. last-1 feed months first..last
    x1 = ar1(rng, n_cov + 1)
    x2 = ar1(rng, n_cov + 1)
    cov_months = np.arange(first - K, last + 1)
    tau_months = long_run_component(params, x1[:-1], x2[:-1], K, form)
    tau = tau_months[day_mo - first]
    z = rng.standard_normal(n_days)

    eps = np.empty(n_days)
    h = np.empty(n_days)
    omega = 1.0 - params.persistence
    h_prev = 1.0
    for i in range(n_days):
        if i == 0:
            h[i] = 1.0
        else:
            e = eps[i - 1]
            a = params.alpha + (params.gamma if e < 0 else 0.0)
            h[i] = omega + a * e * e / tau[i] + params.beta * h_prev
        h_prev = h[i]
        eps[i] = math.sqrt(h[i] * tau[i]) * z[i]
    r = params.mu + eps

    cov_dates = cov_months.astype("datetime64[M]").astype("datetime64[D]")
    covs = (
        TimeSeries(cov_dates, x1, Frequency.MONTHLY, names[0]),
        TimeSeries(cov_dates, x2, Frequency.MONTHLY, names[1]),
    )
    period_dates = np.arange(first, last + 1).astype("datetime64[M]").astype("datetime64[D]")
    return GarchMidasSample(
        returns=ReturnSeries(days, r, Frequency.DAILY, "returns"),
        covariates=covs,
        stv=TimeSeries(days, h, Frequency.DAILY, "stv"),
        ltv=TimeSeries(period_dates, tau_months, Frequency.MONTHLY, "ltv"),
    )


# -- Markov switching -------------------------------------------------------

@dataclass(frozen=True)
class MsrSample:
    y: np.ndarray
    X: np.ndarray
    regimes: np.ndarray
    Z: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))


def markov_chain(rng: np.random.Generator, P: np.ndarray, T: int, initial=None) -> np.ndarray:
    """Regime path of length T started from ``initial`` or the ergodic law."""
    from .markov import TransitionMatrix

    tm = TransitionMatrix(P)
    p0 = tm.ergodic() if initial is None else np.asarray(initial, dtype=float)
    cum = np.cumsum(tm.P, axis=1)
    u = rng.random(T)
    s = np.empty(T, dtype=np.int64)
    s[0] = min(int(np.searchsorted(np.cumsum(p0), u[0], side="right")), tm.M - 1)
    for t in range(1, T):
        s[t] = min(int(np.searchsorted(cum[s[t - 1]], u[t], side="right")), tm.M - 1)
    return s


def simulate_msr(params, T: int, seed: int, *, replication: int = 0, initial=None) -> MsrSample:
    """Simulate a constant-transition Markov-switching regression.

    The first column of ``X`` is an intercept and the remaining switching
    regressors, like any non-switching ones in ``Z``, are iid standard
    normal.
    """
    from .markov import MsrParams

    if not isinstance(params, MsrParams):
        raise InvalidParams("params must be MsrParams")
    try:
        P = params.transition().P
    except Exception as exc:
        raise InvalidParams(str(exc)) from exc
    if T < 1:
        raise InvalidParams("T must be positive")
    rng = stream(seed, replication)
    s = markov_chain(rng, P, T, initial)
    kx = params.beta.shape[1]
    X = np.column_stack([np.ones(T), rng.standard_normal((T, kx - 1))]) if kx > 1 else np.ones((T, 1))
    Z = rng.standard_normal((T, params.phi.size))
    e = rng.standard_normal(T)
    y = np.einsum("tk,tk->t", X, params.beta[s]) + Z @ params.phi + params.sigma[s] * e
    return MsrSample(y=y, X=X, regimes=s, Z=Z)


# -- quantile regression and unit-root designs ------------------------------

@dataclass(frozen=True)
class RegressionSample:
    y: np.ndarray
    X: np.ndarray


def location_shift(n: int, seed: int, *, replication: int = 0, slope: float = 1.0) -> RegressionSample:
    """``y = slope x + e`` with ``x ~ U(0, 10)`` and standard normal ``e``."""
    rng = stream(seed, replication)
    x = rng.uniform(0.0, 10.0, n)
    y = slope * x + rng.standard_normal(n)
    return RegressionSample(y, np.column_stack([np.ones(n), x]))


def location_scale(n: int, seed: int, *, replication: int = 0, slope: float = 1.0) -> RegressionSample:
    """``y = slope x + x e`` with ``x ~ U(1, 10)``; the tau-slope is ``slope + Phi^{-1}(tau)``."""
    rng = stream(seed, replication)
    x = rng.uniform(1.0, 10.0, n)
    y = slope * x + x * rng.standard_normal(n)
    return RegressionSample(y, np.column_stack([np.ones(n), x]))


def random_walk(n: int, seed: int, *, replication: int = 0) -> np.ndarray:
    return np.cumsum(stream(seed, replication).standard_normal(n))


def white_noise(n: int, seed: int, *, replication: int = 0) -> np.ndarray:
    return stream(seed, replication).standard_normal(n)


def mean_shift(n: int, breaks, shift: float, seed: int, *, replication: int = 0) -> np.ndarray:
    """White noise whose mean alternates between 0 and ``shift`` at each 0-based break."""
    y = white_noise(n, seed, replication=replication)
    level = np.zeros(n)
    for i, b in enumerate(sorted(breaks)):
        level[b:] = shift * ((i + 1) % 2)
    return y + level


def garch11(n: int, seed: int, *, replication: int = 0, omega: float = 0.05, alpha: float = 0.1, beta: float = 0.85) -> np.ndarray:
    """GARCH(1,1) returns started at the unconditional variance."""
    rng = stream(seed, replication)
    z = rng.standard_normal(n)
    e = np.empty(n)
    h = omega / (1.0 - alpha - beta)
    for t in range(n):
        if t:
            h = omega + alpha * e[t - 1] ** 2 + beta * h
        e[t] = math.sqrt(h) * z[t]
    return e


# -- reference solvers -------------------------------------------------------

def brute_force_qr(y, X, tau: float) -> tuple[np.ndarray, float]:
    """Exact quantile regression by enumerating every interpolating basis."""
    from .quantreg import check_loss

    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float).reshape(y.size, -1)
    n, p = X.shape
    if n > 9 or p > 3:
        raise TooLarge(f"brute force limited to n <= 9 and p <= 3, got n={n}, p={p}")
    best_b, best = None, math.inf
    for subset in itertools.combinations(range(n), p):
        rows = list(subset)
        A = X[rows]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        b = np.linalg.solve(A, y[rows])
        obj = float(np.sum(check_loss(y - X @ b, tau)))
        if obj < best:
            best, best_b = obj, b
    if best_b is None:
        raise InvalidParams("no nonsingular basis; X is rank deficient")
    return best_b, best


def mc_critical_values(kind: str, n: int, terms="c", reps: int = 10_000, seed: int = 0) -> dict[float, float]:
    """Monte Carlo 1%, 5% and 10% quantiles of a unit-root statistic under the null.

    The null is a driftless Gaussian random walk; ``kind="adf"`` uses the
    Dickey-Fuller regression without lag augmentation.
    """
    from .diagnostics import LEVELS, adf_test, pp_test

    if reps < 10_000:
        raise InvalidParams("reps must be at least 10000")
    stat = np.empty(reps)
    for r in range(reps):
        y = random_walk(n, seed, replication=r)
        if kind == "adf":
            stat[r] = adf_test(y, terms, lags=0).statistic
        elif kind == "pp":
            stat[r] = pp_test(y, terms).statistic
        else:
            raise InvalidParams(f"unknown test kind {kind!r}")
    return {lvl: float(np.quantile(stat, lvl)) for lvl in LEVELS}


# -- scenarios ---------------------------------------------------------------

class ModelKind(enum.Enum):
    GARCH_MIDAS = "garch-midas"
    MSR = "msr"
    LOCATION_SHIFT = "location-shift"
    LOCATION_SCALE = "location-scale"
    RANDOM_WALK = "random-walk"
    WHITE_NOISE = "white-noise"
    MEAN_SHIFT = "mean-shift"


@dataclass(frozen=True)
class SimScenario:
    name: str
    kind: ModelKind
    params: Mapping[str, Any]
    size: int
    seed: int
    replications: int = 1

    def generate(self, replication: int = 0):
        return _GENERATORS[self.kind](self, replication)


def _gm_params(p: Mapping[str, Any]):
    from .garch_midas import GarchMidasParams

    keys = ("mu", "alpha", "gamma", "beta", "m", "theta1", "theta2", "w2_1", "w2_2")
    return GarchMidasParams(**{k: float(p[k]) for k in keys})


def _msr_params(p: Mapping[str, Any]):
    from .markov import MsrParams

    beta = np.asarray(p["beta"], dtype=float)
    return MsrParams.from_transition(beta, np.asarray(p["sigma"], dtype=float), np.asarray(p["P"], dtype=float))


_GENERATORS = {
    ModelKind.GARCH_MIDAS: lambda s, r: simulate_garch_midas(
        _gm_params(s.params), s.size, s.seed, K=int(s.params.get("K", 12)), replication=r),
    ModelKind.MSR: lambda s, r: simulate_msr(_msr_params(s.params), s.size, s.seed, replication=r),
    ModelKind.LOCATION_SHIFT: lambda s, r: location_shift(s.size, s.seed, replication=r),
    ModelKind.LOCATION_SCALE: lambda s, r: location_scale(s.size, s.seed, replication=r),
    ModelKind.RANDOM_WALK: lambda s, r: random_walk(s.size, s.seed, replication=r),
    ModelKind.WHITE_NOISE: lambda s, r: white_noise(s.size, s.seed, replication=r),
    ModelKind.MEAN_SHIFT: lambda s, r: mean_shift(
        s.size, s.params.get("breaks", (s.size // 2,)), float(s.params.get("shift", 5.0)), s.seed, replication=r),
}

GARCH_MIDAS_TRUTH = {
    "mu": 0.0, "alpha": 0.05, "gamma": 0.10, "beta": 0.85, "m": 0.1,
    "theta1": -0.3, "theta2": -0.2, "w2_1": 3.0, "w2_2": 3.0,
}
MSR_TRUTH = {
    "beta": [[1.0, 0.5], [-1.0, 0.2]], "sigma": [2.0, 0.5], "P": [[0.95, 0.05], [0.10, 0.90]],
}

SCENARIOS: dict[str, SimScenario] = {
    s.name: s
    for s in (
        SimScenario("garch-midas", ModelKind.GARCH_MIDAS, GARCH_MIDAS_TRUTH, 4000, 12345, 100),
        SimScenario("garch-midas-persistence", ModelKind.GARCH_MIDAS,
                    {**GARCH_MIDAS_TRUTH, "alpha": 0.03, "gamma": 0.06, "beta": 0.896}, 4000, 23456, 100),
        SimScenario("gjr-null", ModelKind.GARCH_MIDAS, {**GARCH_MIDAS_TRUTH, "theta1": 0.0, "theta2": 0.0}, 4000, 34567, 10),
        SimScenario("msr", ModelKind.MSR, MSR_TRUTH, 2000, 777, 100),
        SimScenario("location-shift", ModelKind.LOCATION_SHIFT, {}, 1000, 4242, 100),
        SimScenario("location-scale", ModelKind.LOCATION_SCALE, {}, 1000, 4343, 100),
        SimScenario("random-walk", ModelKind.RANDOM_WALK, {}, 500, 5, 10_000),
        SimScenario("white-noise", ModelKind.WHITE_NOISE, {}, 500, 6, 10_000),
        SimScenario("mean-shift", ModelKind.MEAN_SHIFT, {"breaks": (200,), "shift": 5.0}, 400, 7, 100),
    )
}


def scenario_from_section(name: str, section: Mapping[str, str]) -> SimScenario:
    """Build a scenario from a config section; list values are JSON."""
    import json

    kind = ModelKind(section["kind"])
    base = next((s for s in SCENARIOS.values() if s.kind is kind), None)
    params = dict(base.params) if base else {}
    for key, raw in section.items():
        if key in ("kind", "size", "seed", "replications"):
            continue
        params[key] = json.loads(raw)
    return SimScenario(
        name=name,
        kind=kind,
        params=params,
        size=int(section.get("size", base.size if base else 1000)),
        seed=int(section.get("seed", base.seed if base else 0)),
        replications=int(section.get("replications", 1)),
    )


def load_scenarios(path) -> dict[str, SimScenario]:
    """Read ``[scenario.<name>]`` sections from a config file."""
    import configparser

    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise FileNotFoundError(path)
    out = {}
    for sec in cp.sections():
        if sec.startswith("scenario."):
            name = sec.split(".", 1)[1]
            out[name] = scenario_from_section(name, cp[sec])
    return out


# -- pipeline fixture ---------------------------------------------------------

FIXTURE_REGRESSORS = ("ECU", "EPU", "EPUCH", "GEPU", "VIX")


def write_pipeline_fixture(directory, *, seed: int = 2024, n_days: int = 4000, K: int = 12) -> "Path":
    """Write a complete synthetic input set plus ``config.ini`` for the pipeline.

    Returns come from the GARCH-MIDAS truth used in recovery studies and are
    stored as prices. ``VIX`` and ``EPU`` are daily, the other regressors
    monthly; ``VIX`` tracks the simulated volatility so stage-2 fits have
    signal to find. Returns the config path.
    """
    from pathlib import Path

    from .series import write_csv

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    sample = simulate_garch_midas(_gm_params(GARCH_MIDAS_TRUTH), n_days, seed, K=K, names=("nfci", "indpro"))
    r = sample.returns
    prices = 100.0 * np.exp(np.cumsum(np.r_[0.0, r.values]) / 100.0)
    first = np.busday_offset(r.dates[0], -1, roll="backward")
    write_csv(TimeSeries(np.r_[first, r.dates], prices, Frequency.DAILY, "prices"), d / "prices.csv")
    for s in sample.covariates:
        write_csv(s, d / f"{s.name}.csv")

    rng = stream(seed, 1)
    vol = np.sqrt(sample.variance)
    days = r.dates
    months = np.unique(days.astype("datetime64[M]")).astype("datetime64[D]")
    series = {
        "VIX": TimeSeries(days, 12.0 + 6.0 * vol + 0.8 * ar1(rng, days.size, 0.95), Frequency.DAILY, "VIX"),
        "EPU": TimeSeries(days, 100.0 + 30.0 * ar1(rng, days.size, 0.97), Frequency.DAILY, "EPU"),
        "ECU": TimeSeries(months, 120.0 + 25.0 * ar1(rng, months.size), Frequency.MONTHLY, "ECU"),
        "EPUCH": TimeSeries(months, 300.0 + 80.0 * ar1(rng, months.size), Frequency.MONTHLY, "EPUCH"),
        "GEPU": TimeSeries(months, 150.0 + 30.0 * ar1(rng, months.size), Frequency.MONTHLY, "GEPU"),
    }
    for name in FIXTURE_REGRESSORS:
        write_csv(series[name], d / f"{name.lower()}.csv")

    lines = [
        "[data]",
        "returns = prices.csv",
        "returns_kind = prices",
        "",
        "[covariates]",
        "covariate1 = nfci.csv",
        "covariate1_name = nfci",
        "covariate1_transform = level",
        "covariate2 = indpro.csv",
        "covariate2_name = indpro",
        "covariate2_transform = level",
        "",
        "[regressors]",
        *(f"{name} = {name.lower()}.csv" for name in FIXTURE_REGRESSORS),
        "",
        "[garch_midas]",
        f"K = {K}",
        "",
        "[output]",
        "directory = output",
        "",
        "[run]",
        f"seed = {seed}",
    ]
    cfg = d / "config.ini"
    cfg.write_text("\n".join(lines) + "\n")
    return cfg
