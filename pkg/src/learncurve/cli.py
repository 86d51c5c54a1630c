"""Command line front end.

Verbs::

    learncurve evaluate --config run.cfg
    learncurve simulate --config study.cfg
    learncurve fit-curve --trajectory traj.csv [--family power_law] [--metric auc]

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.  The ``LEARNCURVE_WORKERS`` environment variable
overrides the configured worker count.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import _parallel
from .config import RunConfig, SimulationConfig
from .core import CLASSIFICATION, MetricKind
from .curvefit import evaluate_curve, fit_curve
from .errors import ConfigError, LearnCurveError
from .estimator import learn2evaluate
from .io import ingest_csv, read_trajectory_csv
from .plotting import curve_grid, plot_coverage, plot_report
from .simharness import run_coverage_study, write_tables

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
REPORT_FILES = ("report.json", "curve.csv", "curve.svg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value) if math.isfinite(value) else None
    return value


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _workers(configured):
    env = os.environ.get(_parallel.WORKERS_ENV)
    if not env:
        return configured
    try:
        return _parallel.worker_count(env)
    except ValueError as exc:
        raise ConfigError(f"{_parallel.WORKERS_ENV}: {exc}") from None


def _resolve(path, base_dir):
    return path if os.path.isabs(path) or base_dir is None else os.path.join(base_dir, path)


def report_document(report, dataset, config: RunConfig) -> dict:
    traj = report.trajectory
    doc = report.to_dict()
    doc["dataset"] = {"n_samples": dataset.n_samples, "n_features": dataset.n_features,
                      "task": dataset.task, "n_pos": dataset.n_pos, "n_neg": dataset.n_neg}
    doc["trajectory"] = {
        "sizes": [int(n) for n in traj.sizes],
        "estimates": traj.estimates.tolist(),
        "hyperparameters": {str(k): v for k, v in traj.hyperparameters.items()},
        "splits": [s.to_dict() for n in traj.sizes for s in traj.split_estimates[int(n)]],
    }
    config_doc = {k: v for k, v in vars(config).items() if k not in ("workers", "output_dir")}
    doc["config"] = config_doc
    return doc


def write_curve_csv(report, path):
    grid = curve_grid(report.trajectory, report.n_total)
    values = evaluate_curve(report.curve, grid)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "f_n"])
        for n, f in zip(grid, values):
            writer.writerow([repr(float(n)), repr(float(f))])


def _remove(paths):
    for path in paths:
        if os.path.exists(path):
            os.remove(path)


def run_evaluate(config: RunConfig, base_dir=None) -> int:
    dataset = ingest_csv(_resolve(config.input, base_dir), config.response, config.task)
    metric = MetricKind.parse(config.metric) if config.metric else (
        MetricKind.AUC if dataset.task == CLASSIFICATION else MetricKind.PMSE)
    learner = config.learner_spec(config.learner, dataset.task)
    est = config.estimator_config()
    est.workers = _workers(config.workers)
    report = learn2evaluate(dataset, learner, metric, est)

    out_dir = _resolve(config.output_dir, base_dir)
    os.makedirs(out_dir, exist_ok=True)
    paths = [os.path.join(out_dir, name) for name in REPORT_FILES]
    try:
        with open(paths[0], "w", encoding="utf-8") as fh:
            fh.write(dumps(report_document(report, dataset, config)))
        write_curve_csv(report, paths[1])
        plot_report(report, paths[2], title=f"{config.learner}, {metric.value.upper()}")
    except BaseException:
        _remove(paths)
        raise
    print(f"f(N) = {report.point_estimate:.6g}  n_opt = {report.n_opt}  "
          f"bound = {report.bound:.6g}  bound_bc = {report.bound_bc:.6g}")
    print(f"wrote {', '.join(paths)}")
    return EXIT_OK


def run_simulation(config: SimulationConfig, base_dir=None) -> int:
    study = config.study()
    study.workers = _workers(config.workers)
    result = run_coverage_study(config.scenario(), study)
    out_dir = _resolve(config.output_dir, base_dir)
    written = []
    try:
        written = write_tables(result, out_dir)
        written.append(os.path.join(out_dir, "coverage.svg"))
        plot_coverage(result, written[-1], nominal=1 - config.alpha)
    except BaseException:
        _remove(written)
        raise
    for row in result.summary():
        print(", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in row.items()))
    if result.failures():
        print(f"{len(result.failures())} replicate(s) failed; see failures.csv",
              file=sys.stderr)
    print(f"wrote {', '.join(written)}")
    return EXIT_OK


def run_fit_curve(path, family, metric, output=None) -> int:
    trajectory = read_trajectory_csv(path, MetricKind.parse(metric))
    fit = fit_curve(trajectory, family)
    text = dumps({"fit": fit.to_dict(), "sizes": trajectory.sizes.tolist(),
                  "fitted": np.atleast_1d(fit.evaluate(trajectory.sizes)).tolist()})
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="learncurve",
                     description="Learning-curve based performance estimates and bounds.")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    ev = sub.add_parser("evaluate", help="point estimate and confidence bound for a dataset")
    ev.add_argument("--config", required=True)
    ev.add_argument("--output-dir")
    sim = sub.add_parser("simulate", help="synthetic coverage study")
    sim.add_argument("--config", required=True)
    sim.add_argument("--output-dir")
    fc = sub.add_parser("fit-curve", help="fit a learning curve to a trajectory CSV")
    fc.add_argument("--trajectory", required=True)
    fc.add_argument("--family", default="power_law", choices=("power_law", "spline", "logistic"))
    fc.add_argument("--metric", default="auc", choices=("auc", "pmse"))
    fc.add_argument("--output")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "fit-curve":
            return run_fit_curve(args.trajectory, args.family, args.metric, args.output)
        base_dir = os.path.dirname(os.path.abspath(args.config))
        kind = RunConfig if args.verb == "evaluate" else SimulationConfig
        try:
            config = kind.load(args.config)
        except OSError as exc:
            print(f"learncurve: cannot read config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        if args.output_dir:
            config.output_dir = os.path.abspath(args.output_dir)
        if args.verb == "evaluate":
            return run_evaluate(config, base_dir)
        return run_simulation(config, base_dir)
    except LearnCurveError as exc:
        print(f"learncurve: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"learncurve: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
