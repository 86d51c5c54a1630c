"""Synthetic scenarios with known generative law, oracle truth and coverage studies.

Each replicate draws coefficients and a dataset, fits the learner on the
full data to obtain the model whose performance is being estimated, scores
that model on a large fresh sample (the truth), and runs the estimators.
"""

from __future__ import annotations

import csv
import functools
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _parallel
from .baselines import BootstrapConfig, cv10_point_estimate, loob
from .core import CLASSIFICATION, REGRESSION, Dataset, MetricKind, evaluate
from .errors import DegenerateScenario, InvalidInput, LearnCurveError
from .estimator import EstimatorConfig, learn2evaluate
from .learners import LearnerSpec

COVARIANCES = ("identity", "ar1", "block")
COEFFICIENT_LAWS = ("expo", "sparse")
METHODS = ("l2e", "loob", "cv10")
MAX_RESPONSE_REDRAWS = 10


@dataclass
class SimScenario:
    N: int = 100
    p: int = 200
    covariance: str = "ar1"
    rho: float = 0.5
    block_size: int = 10
    coef_rate: float = 20.0
    task: str = CLASSIFICATION
    replicates: int = 200
    oracle_test_size: int = 10_000
    seed: int = 0
    coefficients: str = "expo"
    sparse_count: int = 5
    sparse_value: float = 0.6
    noise_sd: float = 0.2 ** 0.5  # noise variance 0.2

    def __post_init__(self):
        if self.covariance not in COVARIANCES:
            raise InvalidInput(f"unknown covariance {self.covariance!r}")
        if self.coefficients not in COEFFICIENT_LAWS:
            raise InvalidInput(f"unknown coefficient law {self.coefficients!r}")
        if self.task not in (CLASSIFICATION, REGRESSION):
            raise InvalidInput(f"unknown task {self.task!r}")
        if not self.coef_rate > 0:
            raise InvalidInput("coef_rate must be positive")
        if self.covariance != "identity" and not -1 < self.rho < 1:
            raise InvalidInput("rho must lie in (-1, 1)")
        if self.covariance == "block" and self.block_size < 1:
            raise InvalidInput("block size must be positive")
        if self.coefficients == "sparse" and not 0 <= self.sparse_count <= self.p:
            raise InvalidInput("sparse_count must lie in [0, p]")
        if self.N < 2 or self.p < 1 or self.replicates < 1 or self.oracle_test_size < 2:
            raise InvalidInput("N, p, replicates and oracle_test_size must be positive")
        if self.noise_sd < 0:
            raise InvalidInput("noise_sd must be nonnegative")

    @property
    def metric(self) -> MetricKind:
        return MetricKind.AUC if self.task == CLASSIFICATION else MetricKind.PMSE

    def covariance_matrix(self) -> np.ndarray:
        idx = np.arange(self.p)
        if self.covariance == "identity":
            return np.eye(self.p)
        if self.covariance == "ar1":
            return self.rho ** np.abs(idx[:, None] - idx[None, :])
        block = idx // self.block_size
        same = block[:, None] == block[None, :]
        return np.where(same, self.rho, 0.0) + (1.0 - self.rho) * np.eye(self.p)

    @functools.cached_property
    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.covariance_matrix())
        except np.linalg.LinAlgError:
            raise InvalidInput("covariance is not positive definite") from None

    def replicate_rng(self, replicate: int, stream: int = 0) -> np.random.Generator:
        key = (int(replicate),) if stream == 0 else (int(replicate), int(stream))
        return np.random.default_rng(np.random.SeedSequence(int(self.seed), spawn_key=key))


def draw_coefficients(scenario: SimScenario, rng) -> np.ndarray:
    if scenario.coefficients == "sparse":
        beta = np.zeros(scenario.p)
        beta[:scenario.sparse_count] = scenario.sparse_value
        return beta
    return rng.exponential(1.0 / scenario.coef_rate, scenario.p)


def draw_features(scenario: SimScenario, n: int, rng) -> np.ndarray:
    Z = rng.standard_normal((n, scenario.p))
    if scenario.covariance == "identity":
        return Z
    return Z @ scenario.cholesky.T


def draw_response(scenario: SimScenario, X, beta, rng) -> np.ndarray:
    eta = X @ beta
    if scenario.task == REGRESSION:
        return eta + scenario.noise_sd * rng.standard_normal(len(eta))
    prob = 1.0 / (1.0 + np.exp(-eta))
    return (rng.random(len(eta)) < prob).astype(float)


def generate_dataset(scenario: SimScenario, replicate_index: int):
    """Dataset and true coefficients for one replicate; bit-identical per (seed, index)."""
    rng = scenario.replicate_rng(replicate_index)
    beta = draw_coefficients(scenario, rng)
    X = draw_features(scenario, scenario.N, rng)
    for _ in range(MAX_RESPONSE_REDRAWS):
        y = draw_response(scenario, X, beta, rng)
        if scenario.task == REGRESSION or 0 < y.sum() < len(y):
            return Dataset(X, y, scenario.task), beta
    raise DegenerateScenario(
        f"replicate {replicate_index}: responses fell in one class {MAX_RESPONSE_REDRAWS} times")


def oracle_performance(model, scenario: SimScenario, coefficients, rng) -> float:
    """Metric of ``model`` on ``oracle_test_size`` fresh draws from the scenario's law."""
    rng = np.random.default_rng(rng)
    X = draw_features(scenario, scenario.oracle_test_size, rng)
    y = draw_response(scenario, X, coefficients, rng)
    return evaluate(scenario.metric, np.asarray(model.predict(X), dtype=float), y)


@dataclass
class StudyConfig:
    learners: tuple = (LearnerSpec("ridge"),)
    methods: tuple = ("l2e",)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    workers: Optional[int] = None

    def __post_init__(self):
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise InvalidInput(f"unknown methods {sorted(unknown)}")
        if "l2e" not in self.methods:
            self.methods = ("l2e",) + tuple(self.methods)
        if not self.learners:
            raise InvalidInput("at least one learner is needed")


def _learner_name(learner) -> str:
    return getattr(learner, "family", type(learner).__name__)


def _stream_seed(scenario, replicate, stream) -> int:
    return int(np.random.SeedSequence(int(scenario.seed), spawn_key=(replicate, stream))
               .generate_state(1)[0])


def run_replicate(replicate: int, scenario: SimScenario, config: StudyConfig) -> list[dict]:
    """One record per learner; failures are recorded, not raised."""
    dataset, beta = generate_dataset(scenario, replicate)
    metric = scenario.metric
    records = []
    for j, learner in enumerate(config.learners):
        rec = {"replicate": replicate, "learner": _learner_name(learner),
               "n_total": dataset.n_samples, "error": ""}
        try:
            rng = scenario.replicate_rng(replicate, 10 + j)
            model = learner.fit(dataset.features, dataset.response, rng)
            rec["true_perf"] = oracle_performance(model, scenario, beta,
                                                  scenario.replicate_rng(replicate, 1))
            est = EstimatorConfig(**{**config.estimator.__dict__,
                                     "seed": _stream_seed(scenario, replicate, 2),
                                     "workers": 1})
            report = learn2evaluate(dataset, learner, metric, est)
            rec.update(l2e_estimate=report.point_estimate, l2e_bound=report.bound,
                       l2e_bound_bc=report.bound_bc, n_opt=report.n_opt)
            if "loob" in config.methods:
                boot = BootstrapConfig(config.bootstrap.n_boot, config.bootstrap.alpha,
                                       _stream_seed(scenario, replicate, 3))
                res = loob(dataset, learner, metric, boot)
                rec.update(loob_estimate=res.point, loob_bound=res.bound)
            if "cv10" in config.methods:
                rec["cv10_estimate"] = cv10_point_estimate(
                    dataset, learner, metric, _stream_seed(scenario, replicate, 4))
        except LearnCurveError as exc:
            rec = {"replicate": replicate, "learner": rec["learner"],
                   "n_total": dataset.n_samples, "error": f"{type(exc).__name__}: {exc}"}
        records.append(rec)
    return records


def covered(bound: float, truth: float, metric: MetricKind) -> bool:
    """Inclusive coverage: a lower bound covers when it does not exceed the truth."""
    return bound <= truth if metric is MetricKind.AUC else bound >= truth


def bound_distance(bound: float, truth: float, metric: MetricKind) -> float:
    """Distance from bound to truth, positive on the covering side."""
    return truth - bound if metric is MetricKind.AUC else bound - truth


@dataclass
class SimResult:
    scenario: SimScenario
    methods: tuple
    learners: tuple
    records: list

    @property
    def metric(self) -> MetricKind:
        return self.scenario.metric

    def ok(self, learner: str) -> list[dict]:
        return [r for r in self.records if r["learner"] == learner and not r["error"]]

    def failures(self) -> list[dict]:
        return [r for r in self.records if r["error"]]

    def estimate_columns(self):
        return [m for m in METHODS if m in self.methods]

    def bound_columns(self):
        cols = ["l2e", "l2e_bc"]
        if "loob" in self.methods:
            cols.append("loob")
        return cols

    def summary(self) -> list[dict]:
        """Per learner and method: RMSE, bias, coverage, mean bound distance, mean n_opt."""
        rows = []
        for learner in self.learners:
            recs = self.ok(learner)
            failed = sum(1 for r in self.records if r["learner"] == learner and r["error"])
            truth = np.array([r["true_perf"] for r in recs])
            n_opt = np.array([r["n_opt"] for r in recs], dtype=float)
            for method in ("l2e", "l2e_bc", "loob", "cv10"):
                if method not in self.estimate_columns() + self.bound_columns():
                    continue
                row = {"learner": learner, "method": method, "replicates": len(recs),
                       "failed": failed, "rmse": "", "bias": "", "coverage": "",
                       "mean_distance": "", "mean_n_opt": ""}
                est_key = f"{method.split('_')[0]}_estimate"
                if len(recs) and method != "l2e_bc" and est_key in recs[0]:
                    err = np.array([r[est_key] for r in recs]) - truth
                    row["rmse"] = math.sqrt(float(np.mean(err**2)))
                    row["bias"] = float(np.mean(err))
                bound_key = {"l2e": "l2e_bound", "l2e_bc": "l2e_bound_bc",
                             "loob": "loob_bound"}.get(method)
                if len(recs) and bound_key:
                    bounds = [r[bound_key] for r in recs]
                    row["coverage"] = float(np.mean([covered(b, t, self.metric)
                                                     for b, t in zip(bounds, truth)]))
                    row["mean_distance"] = float(np.mean([bound_distance(b, t, self.metric)
                                                          for b, t in zip(bounds, truth)]))
                if method.startswith("l2e") and len(recs):
                    row["mean_n_opt"] = float(np.mean(n_opt))
                rows.append(row)
        return rows

    def tables(self) -> dict:
        """Per-replicate tables keyed by output file name."""
        m = self.metric
        cov, err, nopt, dist = [], [], [], []
        for r in self.records:
            if r["error"]:
                continue
            key = {"replicate": r["replicate"], "learner": r["learner"]}
            t = r["true_perf"]
            c = dict(key, true_perf=t)
            d = dict(key)
            for col in self.bound_columns():
                b = r["l2e_bound_bc"] if col == "l2e_bc" else r[f"{col}_bound"]
                c[f"{col}_bound"] = b
                c[f"{col}_covered"] = int(covered(b, t, m))
                d[f"{col}_distance"] = bound_distance(b, t, m)
            e = dict(key, true_perf=t)
            for col in self.estimate_columns():
                e[f"{col}_estimate"] = r[f"{col}_estimate"]
                e[f"{col}_error"] = r[f"{col}_estimate"] - t
            cov.append(c)
            err.append(e)
            nopt.append(dict(key, n_opt=r["n_opt"], n_total=r["n_total"]))
            dist.append(d)
        return {"coverage.csv": cov, "rmse_bias.csv": err, "nopt.csv": nopt,
                "bound_distance.csv": dist}


def run_coverage_study(scenario: SimScenario, config: StudyConfig = None,
                       replicates=None) -> SimResult:
    """Run every replicate (in parallel when workers > 1) and collect the records.

    ``replicates`` optionally restricts the run to a subset of replicate
    indices; results do not depend on the subset or the worker count.
    """
    config = config or StudyConfig()
    indices = range(scenario.replicates) if replicates is None else list(replicates)
    task = functools.partial(run_replicate, scenario=scenario, config=config)
    per_rep = _parallel.ordered_map(task, indices, config.workers)
    records = [rec for recs in per_rep for rec in recs]
    learners = tuple(dict.fromkeys(_learner_name(lr) for lr in config.learners))
    return SimResult(scenario, tuple(config.methods), learners, records)


def _write_csv(path, rows, columns=None):
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k, "")) for k in columns})


def _fmt(value):
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else ""
    return value


def table_columns(result: SimResult) -> dict:
    """Fixed column schema of every output file for this study's methods."""
    bounds = result.bound_columns()
    ests = result.estimate_columns()
    key = ["replicate", "learner"]
    return {
        "coverage.csv": key + ["true_perf"] + [f"{b}_{s}" for b in bounds
                                               for s in ("bound", "covered")],
        "rmse_bias.csv": key + ["true_perf"] + [f"{e}_{s}" for e in ests
                                                for s in ("estimate", "error")],
        "nopt.csv": key + ["n_opt", "n_total"],
        "bound_distance.csv": key + [f"{b}_distance" for b in bounds],
        "summary.csv": ["learner", "method", "replicates", "failed", "rmse", "bias",
                        "coverage", "mean_distance", "mean_n_opt"],
        "failures.csv": ["replicate", "learner", "error"],
    }


def write_tables(result: SimResult, out_dir) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    columns = table_columns(result)
    tables = dict(result.tables(), **{"summary.csv": result.summary(),
                                      "failures.csv": result.failures()})
    written = []
    for name, rows in tables.items():
        path = os.path.join(out_dir, name)
        _write_csv(path, rows, columns[name])
        written.append(path)
    return written
