"""Pipeline configuration: an INI file with fixed sections and keys.

Relative paths are resolved against the directory holding the config file.
Every problem found is reported together in one :class:`ConfigError`.

Sections and keys (defaults in brackets)::

    [data]         returns (required), returns_schema [date_value],
                   returns_kind [prices], start, end
    [covariates]   covariate1, covariate2 (required), covariate1_name,
                   covariate2_name [file stem], covariate1_transform [level],
                   covariate2_transform [logdiff]
    [regressors]   <name> = <path>, one line per stage-2 regressor (at least one)
    [garch_midas]  K [12], form [log], n_starts [3], sandwich [false]
    [diagnostics]  max_breaks [5], trim [0.15], break_criterion [bic], arch_lags [5]
    [msr]          M [2], switching_variance [true], ltv_frequency [monthly]
    [qr]           taus [0.05, 0.10, ..., 0.95], bandwidth [hall-sheather], kernel [gaussian]
    [stage2]       lag_months [0]
    [output]       directory [output]
    [run]          seed [0]
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .quantreg import DEFAULT_TAUS

TRANSFORMS = ("level", "diff", "logdiff")
SCHEMAS = ("date_value", "yahoo_ohlc")

_KEYS = {
    "data": {"returns", "returns_schema", "returns_kind", "start", "end"},
    "covariates": {"covariate1", "covariate2", "covariate1_name", "covariate2_name",
                   "covariate1_transform", "covariate2_transform"},
    "regressors": None,
    "garch_midas": {"k", "form", "n_starts", "sandwich"},
    "diagnostics": {"max_breaks", "trim", "break_criterion", "arch_lags"},
    "msr": {"m", "switching_variance", "ltv_frequency"},
    "qr": {"taus", "bandwidth", "kernel"},
    "stage2": {"lag_months"},
    "output": {"directory"},
    "run": {"seed"},
}


@dataclass(frozen=True)
class CovariateSource:
    path: Path
    name: str
    transform: str


@dataclass(frozen=True)
class PipelineConfig:
    returns: Path
    returns_schema: str
    returns_kind: str
    covariates: tuple[CovariateSource, CovariateSource]
    regressors: tuple[tuple[str, Path], ...]
    start: np.datetime64 | None = None
    end: np.datetime64 | None = None
    K: int = 12
    form: str = "log"
    n_starts: int = 3
    sandwich: bool = False
    max_breaks: int = 5
    trim: float = 0.15
    break_criterion: str = "bic"
    arch_lags: int = 5
    M: int = 2
    switching_variance: bool = True
    ltv_frequency: str = "monthly"
    taus: tuple[float, ...] = DEFAULT_TAUS
    bandwidth: str = "hall-sheather"
    kernel: str = "gaussian"
    lag_months: int = 0
    output_dir: Path = Path("output")
    seed: int = 0
    source_text: str = field(default="", repr=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()

    def with_overrides(self, *, seed: int | None = None, output_dir=None) -> "PipelineConfig":
        from dataclasses import replace

        kw = {}
        if seed is not None:
            kw["seed"] = int(seed)
        if output_dir is not None:
            kw["output_dir"] = Path(output_dir)
        return replace(self, **kw)


class _Collector:
    def __init__(self, cp: configparser.ConfigParser, base: Path, check_files: bool):
        self.cp, self.base, self.check_files = cp, base, check_files
        self.errors: list[tuple[str, str]] = []

    def err(self, key: str, msg: str):
        self.errors.append((key, msg))

    def raw(self, section, key, default=None):
        if self.cp.has_option(section, key):
            return self.cp.get(section, key).strip()
        return default

    def path(self, section, key, required=True):
        v = self.raw(section, key)
        if v is None or v == "":
            if required:
                self.err(f"{section}.{key}", "required file path is missing")
            return None
        p = Path(v)
        p = p if p.is_absolute() else self.base / p
        if self.check_files and not p.is_file():
            self.err(f"{section}.{key}", f"file not found: {p}")
        return p

    def integer(self, section, key, default, low=None):
        v = self.raw(section, key)
        if v is None:
            return default
        try:
            out = int(v)
        except ValueError:
            self.err(f"{section}.{key}", f"expected an integer, got {v!r}")
            return default
        if low is not None and out < low:
            self.err(f"{section}.{key}", f"{key if key != 'k' else 'K'} must be ≥ {low}")
        return out

    def number(self, section, key, default):
        v = self.raw(section, key)
        if v is None:
            return default
        try:
            return float(v)
        except ValueError:
            self.err(f"{section}.{key}", f"expected a number, got {v!r}")
            return default

    def boolean(self, section, key, default):
        v = self.raw(section, key)
        if v is None:
            return default
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
        self.err(f"{section}.{key}", f"expected true or false, got {v!r}")
        return default

    def choice(self, section, key, default, options):
        v = self.raw(section, key, default)
        if v not in options:
            self.err(f"{section}.{key}", f"must be one of {', '.join(options)}; got {v!r}")
            return default
        return v

    def date(self, section, key):
        v = self.raw(section, key)
        if v is None or v == "":
            return None
        try:
            return np.datetime64(v, "D")
        except ValueError:
            self.err(f"{section}.{key}", f"not an ISO date: {v!r}")
            return None


def parse_config(text: str, base_dir=".", *, check_files: bool = True) -> PipelineConfig:
    """Parse and validate config text; raises :class:`ConfigError` listing every problem."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([("<file>", str(exc).splitlines()[0])]) from None
    c = _Collector(cp, Path(base_dir), check_files)

    for sec in cp.sections():
        if sec not in _KEYS:
            c.err(sec, "unknown section")
            continue
        allowed = _KEYS[sec]
        if allowed is not None:
            for key in cp[sec]:
                if key not in allowed:
                    c.err(f"{sec}.{key}", "unknown key")

    returns = c.path("data", "returns")
    schema = c.choice("data", "returns_schema", "date_value", SCHEMAS)
    kind = c.choice("data", "returns_kind", "prices", ("prices", "returns"))
    start, end = c.date("data", "start"), c.date("data", "end")
    if start is not None and end is not None and end < start:
        c.err("data.end", f"end date {end} is before start date {start}")

    covs = []
    for i, default_tf in ((1, "level"), (2, "logdiff")):
        p = c.path("covariates", f"covariate{i}")
        name = c.raw("covariates", f"covariate{i}_name") or (p.stem if p is not None else f"covariate{i}")
        tf = c.choice("covariates", f"covariate{i}_transform", default_tf, TRANSFORMS)
        covs.append(CovariateSource(p, name, tf))
    if covs[0].name == covs[1].name:
        c.err("covariates.covariate2_name", "covariate names must differ")

    regs = []
    if cp.has_section("regressors"):
        # regressor names keep their case; every other key is case-insensitive
        cased = configparser.ConfigParser(interpolation=None)
        cased.optionxform = str
        cased.read_string(text)
        names = list(cased["regressors"])
        if len({n.lower() for n in names}) != len(names):
            c.err("regressors", "regressor names must differ ignoring case")
        for key in names:
            p = c.path("regressors", key.lower())
            regs.append((key, p))
    if not regs:
        c.err("regressors", "at least one stage-2 regressor is required")

    K = c.integer("garch_midas", "k", 12, low=1)
    form = c.choice("garch_midas", "form", "log", ("log", "level"))
    n_starts = c.integer("garch_midas", "n_starts", 3, low=1)
    sandwich = c.boolean("garch_midas", "sandwich", False)

    max_breaks = c.integer("diagnostics", "max_breaks", 5, low=0)
    trim = c.number("diagnostics", "trim", 0.15)
    if not 0.05 <= trim <= 0.25:
        c.err("diagnostics.trim", "trim must lie in [0.05, 0.25]")
    crit = c.choice("diagnostics", "break_criterion", "bic", ("bic", "sequential"))
    arch_lags = c.integer("diagnostics", "arch_lags", 5, low=1)

    M = c.integer("msr", "m", 2, low=2)
    if M > 4:
        c.err("msr.m", "M must be ≤ 4")
    sv = c.boolean("msr", "switching_variance", True)
    ltv_freq = c.choice("msr", "ltv_frequency", "monthly", ("monthly", "daily"))

    taus = DEFAULT_TAUS
    raw_taus = c.raw("qr", "taus")
    if raw_taus is not None:
        try:
            taus = tuple(float(t) for t in raw_taus.replace(";", ",").split(",") if t.strip())
            if not taus or any(not 0 < t < 1 for t in taus) or any(b <= a for a, b in zip(taus, taus[1:])):
                c.err("qr.taus", "taus must be strictly increasing values inside (0, 1)")
        except ValueError:
            c.err("qr.taus", f"could not parse {raw_taus!r}")
            taus = DEFAULT_TAUS
    bw = c.choice("qr", "bandwidth", "hall-sheather", ("hall-sheather", "bofinger"))
    kernel = c.choice("qr", "kernel", "gaussian", ("gaussian", "epanechnikov"))

    lag = c.integer("stage2", "lag_months", 0, low=0)
    out = Path(c.raw("output", "directory", "output"))
    out = out if out.is_absolute() else c.base / out
    seed = c.integer("run", "seed", 0, low=0)

    if c.errors:
        raise ConfigError(c.errors)
    return PipelineConfig(
        returns=returns, returns_schema=schema, returns_kind=kind, covariates=tuple(covs),
        regressors=tuple(regs), start=start, end=end, K=K, form=form, n_starts=n_starts,
        sandwich=sandwich, max_breaks=max_breaks, trim=trim, break_criterion=crit,
        arch_lags=arch_lags, M=M, switching_variance=sv, ltv_frequency=ltv_freq, taus=taus,
        bandwidth=bw, kernel=kernel, lag_months=lag, output_dir=out, seed=seed, source_text=text,
    )


def validate_config(path, *, check_files: bool = True) -> PipelineConfig:
    """Read and validate a config file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([("<file>", f"cannot read {path}: {exc.strerror}")]) from None
    return parse_config(text, path.parent, check_files=check_files)
