"""Command-line entry point ``oukraichnan``.

Exit codes: 0 success, 2 configuration error, 3 schedule violation,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, oracle, ou_field, spectra, transport

EXIT_OK, EXIT_CONFIG, EXIT_SCHEDULE, EXIT_NUMERICAL = 0, 2, 3, 4

log = logging.getLogger("oukraichnan")


def _config(args) -> harness.SweepConfig:
    if args.config is None:
        return harness.SweepConfig()
    return harness.load_config(args.config)


def _epsilon(cfg: harness.SweepConfig, args) -> float:
    return cfg.schedule.epsilons[-1] if args.epsilon is None else args.epsilon


def cmd_synth(args) -> int:
    cfg = _config(args)
    eps = _epsilon(cfg, args)
    params = harness.row_params(cfg, eps)
    tr = cfg.transport
    ms = spectra.build_modeset(params, spectra.ExponentChoice.BASE, tr.shells, tr.dirs_per_shell)
    state = ou_field.init_stationary(ms, eps, seed=args.seed)
    ou_field.dump_snapshot(state, args.out)
    back = ou_field.load_snapshot(args.out, eps)
    same = np.array_equal(back.xi[0], state.xi[0]) and np.array_equal(back.modeset.k, ms.k)
    r = np.array([params.ell0 / 4.0] + [0.0] * (params.dim - 1))
    rows = []
    for sep in (np.zeros(params.dim), r):
        mode = ms.covariance(sep)
        exact = spectra.covariance(params, spectra.ExponentChoice.BASE, sep)
        rows.append(float(np.max(np.abs(mode - exact)) / np.max(np.abs(exact))))
    print(json.dumps({"snapshot": str(args.out), "modes": len(ms), "roundtrip": same,
                      "covariance_rel_error": {"r=0": rows[0], "r=ell0/4": rows[1]}}, indent=2))
    return EXIT_OK if same else EXIT_NUMERICAL


def cmd_simulate(args) -> int:
    cfg = _config(args)
    eps = _epsilon(cfg, args)
    params = harness.row_params(cfg, eps)
    tr = cfg.transport
    ms = spectra.build_modeset(params, spectra.ExponentChoice.BASE, tr.shells, tr.dirs_per_shell)
    dt = min(transport.default_dt(ms, eps, tr.rate_fraction, tr.cfl), tr.horizon)
    state = ou_field.init_stationary(ms, eps, seed=args.seed)
    theta = cfg.theta
    grid = transport.ScalarGrid.covering(theta.center, theta.support_radius, args.spacing or theta.width / 8)
    pts = grid.points()
    ens = transport.backward_flow(state, pts, tr.horizon, params.kappa, dt, args.samples, args.seed, tr.cfl)
    est, se = transport.feynman_kac(ens, cfg.T0, args.samples)
    grid.values, grid.stderr = est[0], np.nan_to_num(se[0])
    w = theta(pts) * grid.cell_volume
    value = float(w @ grid.values)
    stderr = float(math.sqrt(np.sum((w * grid.stderr) ** 2)))
    if args.out:
        grid.write_csv(args.out)
    print(json.dumps({"epsilon": eps, "dt": dt, "weak_observable": value, "stderr": stderr,
                      "min_estimate": float(est.min()), "max_estimate": float(est.max())}, indent=2))
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = _config(args)
    params = harness.oracle_params(cfg)
    tr = cfg.transport
    times = np.linspace(0.0, tr.horizon, tr.n_records + 1)
    curve = oracle.pair_dispersion_curve(params, tr.pair_separation, times, tr.oracle_dt, tr.oracle_samples, args.seed)
    if args.out:
        curve.write_csv(args.out)
    print(json.dumps({
        "dispersion_slope": oracle.single_dispersion_slope(params),
        "weak_mean": oracle.mean_weak_exact(cfg.theta, cfg.T0, params, tr.horizon),
        "pair_dispersion_final": [float(curve.mean_sq_separation[-1]), float(curve.stderr[-1])],
    }, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    report = harness.run_sweep(cfg, args.seed, override=args.override)
    out = args.out_dir or cfg.output.directory
    for path in harness.report_emit(report, out, cfg.output.prefix):
        print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    verdict = harness.validate_schedule(cfg.spectrum, cfg.schedule, cfg.transport.threshold)
    print(verdict.describe())
    return EXIT_OK if verdict.valid else EXIT_SCHEDULE


def cmd_report(args) -> int:
    report = harness.SweepReport.from_json(Path(args.json).read_text())
    for path in harness.report_emit(report, args.out_dir, args.prefix):
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oukraichnan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fun, help_, seed_required=False, config=True):
        p = sub.add_parser(name, help=help_)
        if config:
            p.add_argument("--config", type=Path, help="TOML configuration file")
        p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)
        p.set_defaults(func=fun)
        return p

    p = add("synth", cmd_synth, "dump one field snapshot and check its covariance")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", type=Path, default=Path("field.ouf"))

    p = add("simulate", cmd_simulate, "one transport run on a grid covering theta", seed_required=True)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--samples", type=int, default=16, help="characteristics per grid point")
    p.add_argument("--spacing", type=float)
    p.add_argument("--out", type=Path)

    p = add("oracle", cmd_oracle, "limit-model predictions")
    p.add_argument("--out", type=Path, help="pair-dispersion curve CSV")

    p = add("sweep", cmd_sweep, "full eps sweep against the oracle", seed_required=True)
    p.add_argument("--out-dir", type=Path)
    p.add_argument("--override", action="store_true", help="run even if the schedule is invalid")

    add("validate", cmd_validate, "check the schedule against the convergence conditions")

    p = sub.add_parser("report", help="re-emit files from a report JSON")
    p.add_argument("json", type=Path)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default="sweep")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except harness.ScheduleViolation as exc:
        print(f"schedule violation: {exc}", file=sys.stderr)
        return EXIT_SCHEDULE
    except (spectra.QuadratureError, transport.StepSizeError, oracle.CovarianceFactorError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (harness.ConfigError, spectra.IllPosedLimitError, OSError, ValueError, KeyError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
