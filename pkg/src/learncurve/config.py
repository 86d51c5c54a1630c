"""Flat ``key = value`` configuration files for the command line front end.

Grammar: one ``key = value`` pair per line; blank lines and everything after
``#`` are ignored; keys are case-sensitive and may appear once.  An empty
value selects the default for optional keys.  Lists are comma-separated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .errors import ConfigError, InvalidInput
from .estimator import EstimatorConfig
from .learners import LearnerSpec
from .simharness import SimScenario, StudyConfig
from .baselines import BootstrapConfig


def parse_pairs(text: str) -> dict:
    """``{key: (value, line)}`` from config text."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno)
        if key in pairs:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        pairs[key] = (value, lineno)
    return pairs


def _to_int(value):
    return int(value)


def _to_optional(convert):
    def inner(value):
        return None if value == "" or value.lower() == "none" else convert(value)
    return inner


def _to_list(value):
    return tuple(v.strip() for v in value.split(",") if v.strip())


_CONVERTERS = {
    "int": _to_int,
    "float": float,
    "str": str,
    "Optional[int]": _to_optional(_to_int),
    "Optional[str]": _to_optional(str),
    "tuple": _to_list,
}


def _render(value) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(value)
    return str(value)


class _FlatConfig:
    @classmethod
    def from_mapping(cls, pairs: dict):
        fields = {f.name: f for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, item in pairs.items():
            value, line = item if isinstance(item, tuple) else (item, None)
            if key not in fields:
                raise ConfigError(f"unknown key {key!r}", line)
            try:
                kwargs[key] = _CONVERTERS[fields[key].type](str(value))
            except ValueError:
                raise ConfigError(f"bad value {value!r} for {key!r}", line) from None
        try:
            return cls(**kwargs)
        except InvalidInput as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def parse(cls, text: str):
        return cls.from_mapping(parse_pairs(text))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def serialize(self) -> str:
        return "".join(f"{f.name} = {_render(getattr(self, f.name))}\n"
                       for f in dataclasses.fields(self))


@dataclass
class PipelineFields(_FlatConfig):
    """Learner and estimator settings shared by both verbs."""

    penalty: str = "auto"
    cv_folds: int = 10
    cv_repeats: int = 5
    grid_size: int = 50
    trees: int = 250
    mtry: str = "sqrt_p"
    min_leaf: int = 5
    fitter: str = "power_law"
    selection: str = "mse_min"
    margin: float = 0.02
    alpha: float = 0.05
    n_min: int = 20
    count: int = 10
    n_max: Optional[int] = None
    repeats: int = 50
    min_test: int = 10
    seed: int = 0
    workers: Optional[int] = None

    def learner_spec(self, family: str, task: str) -> LearnerSpec:
        mtry = int(self.mtry) if self.mtry.isdigit() else self.mtry
        return LearnerSpec(family=family, task=task, penalty=self.penalty,
                           cv_folds=self.cv_folds, cv_repeats=self.cv_repeats,
                           grid_size=self.grid_size, trees=self.trees, mtry=mtry,
                           min_leaf=self.min_leaf)

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(fitter=self.fitter, selection=self.selection,
                               margin_fraction=self.margin, alpha=self.alpha, n_min=self.n_min,
                               count=self.count, n_max=self.n_max, repeats=self.repeats,
                               seed=self.seed, min_test=self.min_test, workers=self.workers)

    def validate(self):
        self.estimator_config()


@dataclass
class RunConfig(PipelineFields):
    """Settings of ``evaluate``: data source, learner, metric, curve and outputs.

    ``response`` names a header column; a bare integer that matches no header
    is taken as a 0-based column index.  ``task`` and ``metric`` are inferred
    from the response when empty.
    """

    input: str = ""
    response: str = ""
    task: Optional[str] = None
    metric: Optional[str] = None
    learner: str = "ridge"
    output_dir: str = "l2e_output"

    def __post_init__(self):
        if not self.input:
            raise ConfigError("'input' is required")
        if not self.response:
            raise ConfigError("'response' is required")
        LearnerSpec(family=self.learner, penalty=self.penalty)
        self.validate()


@dataclass
class SimulationConfig(PipelineFields):
    """Settings of ``simulate``: scenario, learners, comparator methods and outputs."""

    N: int = 100
    p: int = 200
    covariance: str = "ar1"
    rho: float = 0.5
    block_size: int = 10
    coef_rate: float = 20.0
    task: str = "classification"
    replicates: int = 200
    oracle_test_size: int = 10_000
    coefficients: str = "expo"
    sparse_count: int = 5
    sparse_value: float = 0.6
    noise_sd: float = 0.2 ** 0.5  # noise variance 0.2
    learners: tuple = ("ridge",)
    methods: tuple = ("l2e",)
    n_boot: int = 500
    output_dir: str = "sim_output"

    def __post_init__(self):
        self.scenario()
        self.study()

    def scenario(self) -> SimScenario:
        return SimScenario(N=self.N, p=self.p, covariance=self.covariance, rho=self.rho,
                           block_size=self.block_size, coef_rate=self.coef_rate, task=self.task,
                           replicates=self.replicates, oracle_test_size=self.oracle_test_size,
                           seed=self.seed, coefficients=self.coefficients,
                           sparse_count=self.sparse_count, sparse_value=self.sparse_value,
                           noise_sd=self.noise_sd)

    def study(self) -> StudyConfig:
        learners = tuple(self.learner_spec(f, self.task) for f in self.learners)
        return StudyConfig(learners=learners, methods=self.methods,
                           estimator=self.estimator_config(),
                           bootstrap=BootstrapConfig(self.n_boot, self.alpha, self.seed),
                           workers=self.workers)
