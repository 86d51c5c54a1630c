"""CSV ingestion and serialization of datasets and trajectories."""

from __future__ import annotations

import csv
import math

import numpy as np

from .core import CLASSIFICATION, REGRESSION, Dataset, LearningTrajectory, MetricKind
from .errors import InvalidInput, ParseError


def _read_table(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not UTF-8: {exc}") from None
    except OSError as exc:
        raise InvalidInput(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise ParseError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} cells, found {len(row)}", row=line)
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                what = "missing" if not cell.strip() else f"non-numeric {cell.strip()!r}"
                raise ParseError(f"{what} cell", row=line, column=header[j])
            values[i, j] = v
    return header, values


def resolve_column(header, response_column) -> int:
    """Column index from a header name or, failing that, a 0-based integer index."""
    name = str(response_column).strip()
    if name in header:
        if header.count(name) > 1:
            raise InvalidInput(f"response column {name!r} is ambiguous")
        return header.index(name)
    try:
        idx = int(name)
    except ValueError:
        raise InvalidInput(f"response column {name!r} not found") from None
    if not 0 <= idx < len(header):
        raise InvalidInput(f"response column index {idx} out of range")
    return idx


def ingest_csv(path, response_column, task=None) -> Dataset:
    """Dataset from a headed numeric CSV.

    Features are all other columns in file order.  A response with exactly
    two distinct values is a classification target (larger value mapped to
    1); more values make it a regression target.
    """
    header, values = _read_table(path)
    idx = resolve_column(header, response_column)
    y = values[:, idx]
    X = np.delete(values, idx, axis=1)
    levels = np.unique(y)
    if len(levels) < 2:
        raise InvalidInput("response is constant")
    detected = CLASSIFICATION if len(levels) == 2 else REGRESSION
    if task is None:
        task = detected
    if task == CLASSIFICATION:
        if len(levels) != 2:
            raise InvalidInput(f"classification response has {len(levels)} distinct values")
        y = (y == levels[1]).astype(float)
    return Dataset(X, y, task)


def feature_names(path, response_column) -> list[str]:
    header, _ = _read_table(path)
    idx = resolve_column(header, response_column)
    return [h for j, h in enumerate(header) if j != idx]


def write_dataset_csv(dataset: Dataset, path, response_name="y", names=None):
    names = names or [f"x{j + 1}" for j in range(dataset.n_features)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(names) + [response_name])
        for row, target in zip(dataset.features, dataset.response):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(target))])


def read_trajectory_csv(path, metric=None) -> LearningTrajectory:
    """Trajectory from a CSV with columns ``n`` and ``estimate``; other columns are ignored."""
    header, values = _read_table(path)
    for col in ("n", "estimate"):
        if col not in header:
            raise ParseError(f"trajectory file needs a column {col!r}")
    if metric is None:
        metric = MetricKind.AUC
    order = np.argsort(values[:, header.index("n")], kind="stable")
    values = values[order]
    return LearningTrajectory(values[:, header.index("n")], values[:, header.index("estimate")],
                              metric)


def write_trajectory_csv(trajectory: LearningTrajectory, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "estimate"])
        for n, est in trajectory.points:
            writer.writerow([repr(float(n)), repr(float(est))])
