import json
import shutil

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from regimevol import cli, markov
from regimevol.config import parse_config, validate_config
from regimevol.errors import ConfigError
from regimevol.pipeline import FAILED, MANIFEST, run_pipeline
from regimevol.quantreg import DEFAULT_TAUS
from regimevol.series import load_csv

MINIMAL = """\
[data]
returns = prices.csv

[covariates]
covariate1 = nfci.csv
covariate2 = indpro.csv

[regressors]
VIX = vix.csv
"""

DIAGNOSTICS_ARTIFACTS = {"descriptives.csv", "diagnostics.csv", "vif.csv", MANIFEST}


def _errors(text, **kw):
    with pytest.raises(ConfigError) as info:
        parse_config(text, check_files=False, **kw)
    return info.value.errors


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("fixture")
    assert cli.main(["simulate", "--scenario", "pipeline-fixture", "--out", str(d)]) == 0
    return d


@pytest.fixture(scope="module")
def full_run(fixture_dir):
    out = fixture_dir / "full"
    assert cli.main(["run", "--config", str(fixture_dir / "config.ini"), "--out", str(out)]) == 0
    return out


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL, "/data", check_files=False)
    assert cfg.K == 12 and cfg.M == 2
    assert_array_equal(cfg.taus, DEFAULT_TAUS)
    assert_array_equal(np.round(cfg.taus, 10), np.round(np.arange(1, 20) * 0.05, 10))
    assert cfg.covariates[0].name == "nfci" and cfg.covariates[0].transform == "level"
    assert cfg.covariates[1].transform == "logdiff"
    assert cfg.regressors[0][0] == "VIX"
    assert str(cfg.returns) == "/data/prices.csv"


def test_k_zero_rejected():
    errs = _errors(MINIMAL + "[garch_midas]\nK = 0\n")
    assert ("garch_midas.k", "K must be ≥ 1") in errs


def test_date_range_checked():
    errs = _errors(MINIMAL.replace("returns = prices.csv", "returns = prices.csv\nstart = 2020-01-01\nend = 2019-01-01"))
    assert any(key == "data.end" and "before" in msg for key, msg in errs)


def test_all_errors_reported_together():
    text = MINIMAL + "[garch_midas]\nK = 0\nform = cubic\n[mystery]\nx = 1\n"
    keys = {k for k, _ in _errors(text)}
    assert {"garch_midas.k", "garch_midas.form", "mystery"} <= keys


def test_missing_regressor_file(tmp_path, fixture_dir, capsys):
    for f in fixture_dir.glob("*.csv"):
        shutil.copy(f, tmp_path)
    text = (fixture_dir / "config.ini").read_text().replace("vix.csv", "nowhere.csv")
    (tmp_path / "config.ini").write_text(text)
    out = tmp_path / "out"
    code = cli.main(["run", "--config", str(tmp_path / "config.ini"), "--out", str(out)])
    assert code == 1
    assert "regressors.vix" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())
    with pytest.raises(ConfigError):
        validate_config(tmp_path / "config.ini")


def test_full_run_artifacts(full_run):
    names = {p.name for p in full_run.iterdir()}
    expected = {
        "garch_midas_params.csv", "garch_midas_report.txt", "stv.csv", "ltv.csv", "stv.svg", "ltv.svg",
        "descriptives.csv", "diagnostics.csv", "vif.csv", MANIFEST,
    }
    for label in ("stv", "ltv"):
        expected |= {f"msr_{label}_{k}.csv" for k in ("coefficients", "transition", "durations", "summary",
                                                       "prob_regime1", "prob_regime2")}
        expected |= {f"msr_{label}_probabilities.svg", f"qr_{label}_process.csv", f"qr_{label}_table.csv",
                     f"qr_{label}_notes.csv", f"qr_{label}_VIX.svg", f"qr_{label}_const.svg"}
    assert expected <= names
    assert FAILED not in names
    manifest = json.loads((full_run / MANIFEST).read_text())
    assert manifest["status"] == "ok"
    assert set(manifest["artifacts_sha256"]) == names - {MANIFEST}


def test_stage_two_consumes_emitted_components(full_run):
    stv = load_csv(full_run / "stv.csv")
    prob = load_csv(full_run / "msr_stv_prob_regime1.csv")
    assert set(prob.dates.tolist()) <= set(stv.dates.tolist())
    summary = dict(line.split(",") for line in (full_run / "msr_stv_summary.csv").read_text().splitlines()[1:])
    assert int(summary["nobs"]) == len(prob)


def test_stage_rerun_uses_persisted_components(full_run, tmp_path, fixture_dir, monkeypatch):
    work = tmp_path / "rerun"
    shutil.copytree(full_run, work)
    from regimevol import garch_midas

    def no_refit(*a, **k):
        raise AssertionError("stage rerun must not refit")

    monkeypatch.setattr(garch_midas, "fit", no_refit)
    code = cli.main(["run", "--config", str(fixture_dir / "config.ini"), "--out", str(work), "--stage", "qr"])
    assert code == 0
    for name in ("qr_stv_table.csv", "qr_ltv_process.csv"):
        assert (work / name).read_bytes() == (full_run / name).read_bytes()


def test_stage_diagnostics_only(fixture_dir, tmp_path):
    out = tmp_path / "diag"
    code = cli.main(["run", "--config", str(fixture_dir / "config.ini"), "--out", str(out), "--stage", "diagnostics"])
    assert code == 0
    assert {p.name for p in out.iterdir()} == DIAGNOSTICS_ARTIFACTS


def test_failed_stage_leaves_marker(fixture_dir, full_run, tmp_path, monkeypatch):
    work = tmp_path / "fail"
    shutil.copytree(full_run, work)

    def boom(*a, **k):
        raise RuntimeError("simulated estimation failure")

    monkeypatch.setattr(markov, "fit_msr", boom)
    cfg = validate_config(fixture_dir / "config.ini").with_overrides(output_dir=work)
    res = run_pipeline(cfg, stage="msr")
    assert res.status == 2 and res.failed_stage == "msr"
    assert "msr" in (work / FAILED).read_text()
    assert (work / "stv.csv").is_file()
    assert json.loads((work / MANIFEST).read_text())["status"] == "failed"
    code = cli.main(["run", "--config", str(fixture_dir / "config.ini"), "--out", str(work), "--stage", "msr"])
    assert code == 2


def test_test_oracle_command(capsys):
    assert cli.main(["test-oracle", "--instances", "30"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_simulate_command(tmp_path, capsys):
    assert cli.main(["simulate", "--scenario", "location-shift", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "regression.csv").read_text().splitlines()
    assert lines[0] == "y,x" and len(lines) == 1001
    assert cli.main(["simulate", "--scenario", "msr", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "msr.csv").is_file()
    assert cli.main(["simulate", "--scenario", "no-such", "--out", str(tmp_path)]) == 1
    assert "unknown scenario" in capsys.readouterr().err
