"""Two-stage pipeline: volatility decomposition, then regressions of its components.

Stages run in the order ``garch-midas``, ``diagnostics``, ``msr``, ``qr``.
Each stage writes its artifacts into the output directory. A stage run on
its own reads ``stv.csv`` and ``ltv.csv`` from an earlier run when they
exist; otherwise it fits the decomposition in memory without persisting it.
"""

from __future__ import annotations

import hashlib
import json
import math
import platform
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import garch_midas as gm
from . import markov, quantreg, svg
from .config import PipelineConfig
from .errors import StageError
from .series import (
    Frequency,
    ReturnSeries,
    Schema,
    TimeSeries,
    align,
    difference,
    format_value,
    load_csv,
    log_returns,
    month_ordinal,
    monthly_mean,
    shift_months,
    write_csv,
)

STAGES = ("garch-midas", "diagnostics", "msr", "qr")
MANIFEST = "manifest.json"
FAILED = "FAILED"


@dataclass(frozen=True)
class Inputs:
    returns: ReturnSeries
    covariates: tuple[TimeSeries, TimeSeries]
    regressors: tuple[TimeSeries, ...]


@dataclass
class PipelineResult:
    status: int
    output_dir: Path
    artifacts: list[str] = field(default_factory=list)
    failed_stage: str | None = None
    error: BaseException | None = None


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return format_value(v)
    return str(v)


def _write_rows(path: Path, header, rows) -> Path:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# -- inputs -------------------------------------------------------------------

def load_inputs(cfg: PipelineConfig) -> Inputs:
    src = load_csv(cfg.returns, Schema(cfg.returns_schema), name="returns", frequency=Frequency.DAILY)
    if cfg.returns_kind == "prices":
        ret = log_returns(src)
    else:
        ret = ReturnSeries(src.dates, src.values, Frequency.DAILY, "returns")
    if cfg.start is not None or cfg.end is not None:
        sub = ret.between(cfg.start, cfg.end)
        ret = ReturnSeries(sub.dates, sub.values, Frequency.DAILY, "returns")
    covs = []
    for c in cfg.covariates:
        s = load_csv(c.path, Schema.DATE_VALUE, name=c.name, frequency=Frequency.MONTHLY)
        if c.transform != "level":
            s = difference(s, log=c.transform == "logdiff")
        covs.append(s)
    regs = tuple(load_csv(p, Schema.DATE_VALUE, name=name) for name, p in cfg.regressors)
    return Inputs(ret, (covs[0], covs[1]), regs)


def stage2_data(target: TimeSeries, regressors, *, lag_months: int = 0):
    """``(dates, y, X, names)`` for regressing ``target`` on an intercept and regressors.

    A daily target uses daily regressors on common dates and monthly
    regressors held constant within their month. A monthly target uses
    monthly regressors and month averages of daily ones. ``lag_months``
    shifts monthly regressors only.
    """
    names = [r.name for r in regressors]
    if target.frequency is Frequency.DAILY:
        daily = [r for r in regressors if r.frequency is Frequency.DAILY]
        monthly = [r for r in regressors if r.frequency is Frequency.MONTHLY]
        panel = align([target] + daily, monthly, lag_months=lag_months)
        y = np.array(panel.columns[target.name])
        X = np.column_stack([np.ones(len(panel))] + [panel.columns[n] for n in names])
        return panel.daily_dates, y, X, ["const"] + names
    months = month_ordinal(target.dates)
    cols = []
    for r in regressors:
        m = monthly_mean(r) if r.frequency is Frequency.DAILY else shift_months(r, lag_months)
        cols.append(m)
        months = np.intersect1d(months, month_ordinal(m.dates))
    if months.size == 0:
        raise ValueError("no month is shared by the target and every regressor")
    pick = lambda s: s.values[np.searchsorted(month_ordinal(s.dates), months)]  # noqa: E731
    X = np.column_stack([np.ones(months.size)] + [pick(c) for c in cols])
    dates = months.astype("datetime64[M]").astype("datetime64[D]")
    return dates, pick(target), X, ["const"] + names


# -- runner -------------------------------------------------------------------

class _Run:
    def __init__(self, cfg: PipelineConfig, stages):
        self.cfg = cfg
        self.stages = stages
        self.out = Path(cfg.output_dir)
        self.artifacts: list[str] = []
        self.inputs: Inputs | None = None
        self.stv: TimeSeries | None = None
        self.ltv: TimeSeries | None = None

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    # GARCH-MIDAS ------------------------------------------------------------

    def _fit(self) -> gm.GarchMidasFit:
        cfg = self.cfg
        spec = gm.GarchMidasSpec(K=cfg.K, long_run_form=cfg.form,
                                 covariate_names=tuple(c.name for c in self.inputs.covariates))
        return gm.fit(self.inputs.returns, self.inputs.covariates, spec,
                      n_starts=cfg.n_starts, sandwich=cfg.sandwich)

    def garch_midas(self):
        res = self._fit()
        stv, ltv = gm.extract_volatilities(res, force=True)
        _write_rows(self.path("garch_midas_params.csv"), ("parameter", "estimate", "std_error", "t_ratio"), res.table())
        self.path("garch_midas_report.txt").write_text(res.report())
        write_csv(stv, self.path("stv.csv"))
        write_csv(ltv, self.path("ltv.csv"))
        svg.line_chart(self.path("stv.svg"), stv.dates, {"STV": stv.values}, title="Short-term volatility", reference=1.0)
        svg.line_chart(self.path("ltv.svg"), ltv.dates, {"LTV": ltv.values}, title="Long-term volatility")
        self.stv, self.ltv = stv.rename("stv"), ltv.rename("ltv")

    def components(self):
        if self.stv is not None:
            return self.stv, self.ltv
        sp, lp = self.out / "stv.csv", self.out / "ltv.csv"
        if sp.is_file() and lp.is_file():
            stv = load_csv(sp, name="stv", frequency=Frequency.DAILY)
            ltv = load_csv(lp, name="ltv", frequency=Frequency.MONTHLY)
        else:
            stv, ltv = gm.extract_volatilities(self._fit(), force=True)
        self.stv, self.ltv = stv.rename("stv"), ltv.rename("ltv")
        return self.stv, self.ltv

    # diagnostics ------------------------------------------------------------

    def diagnostics(self):
        cfg = self.cfg
        stv, ltv = self.components()
        inp = self.inputs
        variables = [inp.returns, stv, ltv, *inp.covariates, *inp.regressors]
        desc_rows, test_rows = [], []
        for s in variables:
            d = diag.describe(s.values)
            desc_rows.append((s.name, *d.values()))
            for test in (diag.adf_test, diag.pp_test):
                try:
                    rec = diag.unit_root_record(s.name, test(s.values, "c"))
                except (ValueError, ArithmeticError) as exc:
                    rec = diag.ReportRecord(s.name, test.__name__, math.nan, detail=f"not computed: {exc}")
                test_rows.append(rec)
        for s in (stv, ltv):
            br = diag.bai_perron(s.values, max_breaks=cfg.max_breaks, trim=cfg.trim,
                                 criterion=cfg.break_criterion, dates=s.dates)
            test_rows.append(diag.break_record(s.name, br))
            if br.breaks:
                # unit-root tests allowing level shifts at the detected breaks
                res = diag.adf_test(s.values, "c", breaks=br.breaks)
                rec = diag.unit_root_record(s.name, res)
                test_rows.append(diag.ReportRecord(rec.variable, rec.test + "+breaks", rec.statistic, rec.p_value,
                                                   rec.critical_values, rec.decision, rec.detail))
        for s in (stv, ltv):
            test_rows.append(diag.arch_record(s.name, diag.arch_lm(s.values - s.values.mean(), cfg.arch_lags)))
        header = ("variable",) + tuple(diag.describe(np.arange(3.0)).keys())
        _write_rows(self.path("descriptives.csv"), header, desc_rows)
        _write_rows(
            self.path("diagnostics.csv"),
            ("variable", "test", "statistic", "p_value", "cv_1pct", "cv_5pct", "cv_10pct", "decision", "detail"),
            [(r.variable, r.test, float(r.statistic), float(r.p_value),
              *(float(r.critical_values.get(k, math.nan)) for k in diag.LEVELS), r.decision, r.detail)
             for r in test_rows],
        )
        _, _, X, names = stage2_data(stv, inp.regressors, lag_months=cfg.lag_months)
        if X.shape[1] > 2:
            v = diag.vif(X[:, 1:], names[1:])
            _write_rows(self.path("vif.csv"), ("regressor", "vif"), list(v.items()))

    # stage-2 regressions -------------------------------------------------------

    def _targets(self):
        stv, ltv = self.components()
        if self.cfg.ltv_frequency == "daily":
            pos = np.searchsorted(month_ordinal(ltv.dates), month_ordinal(stv.dates))
            ltv = TimeSeries(stv.dates, ltv.values[pos], Frequency.DAILY, "ltv")
        return (("stv", stv), ("ltv", ltv))

    def msr(self):
        cfg = self.cfg
        for label, target in self._targets():
            dates, y, X, names = stage2_data(target, self.inputs.regressors, lag_months=cfg.lag_months)
            spec = markov.MsrSpec(M=cfg.M, switching=tuple(names), switching_variance=cfg.switching_variance)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                f = markov.fit_msr(spec, y, X, seed=cfg.seed)
            _write_rows(self.path(f"msr_{label}_coefficients.csv"), ("regime", "name", "estimate", "std_error", "z"),
                        f.coefficient_rows())
            M = cfg.M
            _write_rows(self.path(f"msr_{label}_transition.csv"), ("from", "to", "probability", "std_error"),
                        [(i + 1, j + 1, float(f.P[i, j]), float(f.transition_se[i, j])) for i in range(M) for j in range(M)])
            _write_rows(self.path(f"msr_{label}_durations.csv"), ("regime", "expected_duration"),
                        [(m + 1, float(d)) for m, d in enumerate(f.expected_durations)])
            _write_rows(self.path(f"msr_{label}_summary.csv"), ("key", "value"),
                        [("nobs", f.nobs), ("loglik", float(f.loglik)), ("converged", f.converged)])
            for m in range(M):
                ts = TimeSeries(dates, f.smoothed_probs[:, m], target.frequency, f"regime{m + 1}")
                write_csv(ts, self.path(f"msr_{label}_prob_regime{m + 1}.csv"))
            svg.line_chart(self.path(f"msr_{label}_probabilities.svg"), dates,
                           {f"regime {m + 1}": f.smoothed_probs[:, m] for m in range(M)},
                           title=f"Smoothed regime probabilities ({label.upper()})")

    def qr(self):
        cfg = self.cfg
        for label, target in self._targets():
            _, y, X, names = stage2_data(target, self.inputs.regressors, lag_months=cfg.lag_months)
            proc = quantreg.quantile_process(y, X, cfg.taus, names=names, bandwidth=cfg.bandwidth, kernel=cfg.kernel)
            proc.to_csv(self.path(f"qr_{label}_process.csv"))
            rows = []
            for f in proc.fits:
                if f is None:
                    continue
                for name, est, se, t, p in f.table():
                    rows.append((f.tau, name, est, se, t, p, float(f.pseudo_r2)))
            _write_rows(self.path(f"qr_{label}_table.csv"),
                        ("tau", "name", "estimate", "std_error", "t", "p_value", "pseudo_r2"), rows)
            _write_rows(self.path(f"qr_{label}_notes.csv"), ("key", "value"),
                        [("crossing_observations", proc.crossings(X))]
                        + [(f"failed_tau_{t}", msg) for t, msg in sorted(proc.failures.items())])
            taus = np.asarray(proc.taus)
            for j, name in enumerate(names):
                est, lo, hi = proc.path(j)
                svg.line_chart(self.path(f"qr_{label}_{name}.svg"), taus, {name: est}, bands={name: (lo, hi)},
                               title=f"{name} across quantiles ({label.upper()})", reference=0.0)

    # manifest ---------------------------------------------------------------

    def manifest(self, status: str, failed: str | None = None):
        import numba
        import scipy

        from . import __version__

        cfg = self.cfg
        inputs = {str(cfg.returns): _sha256(cfg.returns)}
        for c in cfg.covariates:
            inputs[str(c.path)] = _sha256(c.path)
        for _, p in cfg.regressors:
            inputs[str(p)] = _sha256(p)
        doc = {
            "status": status,
            "failed_stage": failed,
            "stages": list(self.stages),
            "seed": cfg.seed,
            "config_sha256": cfg.config_hash,
            "config": cfg.source_text,
            "inputs_sha256": dict(sorted(inputs.items())),
            "artifacts_sha256": {a: _sha256(self.out / a) for a in sorted(set(self.artifacts)) if (self.out / a).is_file()},
            "versions": {
                "regimevol": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "numba": numba.__version__,
            },
        }
        (self.out / MANIFEST).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def run_pipeline(cfg: PipelineConfig, stage: str | None = None) -> PipelineResult:
    """Run every stage, or only ``stage``.

    Returns status 0 on success and 2 when a stage fails; in that case a
    ``FAILED`` marker naming the stage is written next to whatever
    artifacts were already produced.
    """
    if stage is not None and stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}; choose from {', '.join(STAGES)}")
    stages = STAGES if stage is None else (stage,)
    run = _Run(cfg, stages)
    run.out.mkdir(parents=True, exist_ok=True)
    marker = run.out / FAILED
    if marker.exists():
        marker.unlink()
    current = "inputs"
    try:
        run.inputs = load_inputs(cfg)
        for current in stages:
            getattr(run, current.replace("-", "_"))()
    except Exception as exc:  # noqa: BLE001 - reported with stage context
        err = StageError(current, exc)
        err.__cause__ = exc
        marker.write_text(f"stage: {current}\nerror: {type(exc).__name__}: {exc}\n")
        try:
            run.manifest("failed", current)
        except OSError:
            pass
        return PipelineResult(2, run.out, run.artifacts, current, err)
    run.manifest("ok")
    return PipelineResult(0, run.out, sorted(set(run.artifacts)) + [MANIFEST])
