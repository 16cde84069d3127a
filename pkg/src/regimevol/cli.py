"""Command-line entry point.

Exit status: 0 on success, 1 for configuration errors, 2 when estimation
or an oracle check fails.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import validate_config
from .errors import ConfigError, RegimeVolError
from .pipeline import STAGES, run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2


def _cmd_run(args) -> int:
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        for key, msg in exc.errors:
            print(f"config error: {key}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = cfg.with_overrides(seed=args.seed, output_dir=args.out)
    res = run_pipeline(cfg, stage=args.stage)
    if res.status != 0:
        print(f"error: {res.error}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"wrote {len(res.artifacts)} artifacts to {res.output_dir}")
    return EXIT_OK


def _write_table(path: Path, header, columns) -> None:
    lines = [",".join(header)]
    for row in zip(*columns):
        lines.append(",".join(repr(float(v)) if not isinstance(v, (int, np.integer)) else str(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _cmd_simulate(args) -> int:
    from . import simulate as sim
    from .series import write_csv

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.scenario == "pipeline-fixture":
        cfg = sim.write_pipeline_fixture(out, seed=args.seed if args.seed is not None else 2024)
        print(f"wrote fixture config {cfg}")
        return EXIT_OK
    scenarios = dict(sim.SCENARIOS)
    if args.scenarios:
        try:
            scenarios.update(sim.load_scenarios(args.scenarios))
        except (OSError, KeyError, ValueError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    if args.scenario not in scenarios:
        names = ", ".join(sorted(scenarios) + ["pipeline-fixture"])
        print(f"config error: unknown scenario {args.scenario!r}; choose from {names}", file=sys.stderr)
        return EXIT_CONFIG
    sc = scenarios[args.scenario]
    if args.seed is not None:
        from dataclasses import replace

        sc = replace(sc, seed=args.seed)
    try:
        data = sc.generate(args.replication)
    except RegimeVolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if isinstance(data, sim.GarchMidasSample):
        write_csv(data.returns, out / "returns.csv")
        for s in data.covariates:
            write_csv(s, out / f"{s.name}.csv")
        write_csv(data.stv, out / "true_stv.csv")
        write_csv(data.ltv, out / "true_ltv.csv")
    elif isinstance(data, sim.MsrSample):
        k = data.X.shape[1]
        _write_table(out / "msr.csv", ["y"] + [f"x{j}" for j in range(k)] + ["regime"],
                     [data.y] + [data.X[:, j] for j in range(k)] + [data.regimes + 1])
    elif isinstance(data, sim.RegressionSample):
        _write_table(out / "regression.csv", ["y", "x"], [data.y, data.X[:, 1]])
    else:
        _write_table(out / "series.csv", ["t", "value"], [np.arange(data.size), data])
    print(f"wrote scenario {sc.name!r} (seed {sc.seed}, replication {args.replication}) to {out}")
    return EXIT_OK


def oracle_checks(instances: int = 100, seed: int = 0):
    """Cross-check the simplex against enumeration and the filter against a hand recursion.

    Yields ``(name, passed, detail)``.
    """
    import warnings

    from . import markov, quantreg
    from . import simulate as sim

    worst, failures = 0.0, 0
    for r in range(instances):
        rng = sim.stream(seed, r)
        n = int(rng.integers(4, 10))
        p = int(rng.integers(1, 4))
        X = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
        y = rng.standard_normal(n)
        tau = float(rng.choice([0.1, 0.25, 0.5, 0.75, 0.9]))
        if np.linalg.matrix_rank(X) < p:
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            f = quantreg.fit_qr(y, X, tau)
        _, ref = sim.brute_force_qr(y, X, tau)
        gap = abs(f.objective - ref)
        worst = max(worst, gap)
        failures += gap > 1e-10
    yield "simplex vs enumeration", failures == 0, f"{instances} instances, max objective gap {worst:.2e}"

    y = np.array([0.3, -1.2, 2.5])
    params = markov.MsrParams.from_transition([[1.0], [-0.5]], [1.5, 0.7], [[0.8, 0.2], [0.3, 0.7]])
    filt, ll = markov.hamilton_filter(None, params, y)
    P = np.array([[0.8, 0.2], [0.3, 0.7]])
    xi = np.array([0.6, 0.4])
    ref_ll = 0.0
    for t in range(3):
        prior = xi if t == 0 else P.T @ xi
        dens = np.exp(-0.5 * ((y[t] - np.array([1.0, -0.5])) / np.array([1.5, 0.7])) ** 2) / (np.sqrt(2 * np.pi) * np.array([1.5, 0.7]))
        joint = prior * dens
        ref_ll += np.log(joint.sum())
        xi = joint / joint.sum()
    err = max(abs(ll - ref_ll), float(np.max(np.abs(filt[-1] - xi))))
    yield "filter vs hand recursion", err < 1e-12, f"max abs difference {err:.2e}"


def _cmd_oracle(args) -> int:
    ok = True
    for name, passed, detail in oracle_checks(args.instances, args.seed):
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="regimevol", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the estimation pipeline")
    r.add_argument("--config", required=True, help="pipeline config file")
    r.add_argument("--stage", choices=STAGES, help="run a single stage from persisted inputs")
    r.add_argument("--seed", type=int, help="override the configured master seed")
    r.add_argument("--out", help="override the configured output directory")
    r.set_defaults(func=_cmd_run)

    s = sub.add_parser("simulate", help="generate data from a named scenario")
    s.add_argument("--scenario", required=True, help="scenario name, or pipeline-fixture")
    s.add_argument("--out", default=".", help="output directory")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.add_argument("--replication", type=int, default=0)
    s.add_argument("--scenarios", help="config file with extra [scenario.<name>] sections")
    s.set_defaults(func=_cmd_simulate)

    o = sub.add_parser("test-oracle", help="run brute-force cross-checks")
    o.add_argument("--instances", type=int, default=100)
    o.add_argument("--seed", type=int, default=0)
    o.set_defaults(func=_cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
