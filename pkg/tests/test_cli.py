import csv
import json
import os
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from learncurve.cli import main
from learncurve.config import RunConfig, SimulationConfig, parse_pairs
from learncurve.core import Dataset
from learncurve.curvefit import evaluate_curve, fit_power_law
from learncurve.errors import ConfigError, InvalidInput, ParseError
from learncurve.io import (feature_names, ingest_csv, read_trajectory_csv, write_dataset_csv,
                           write_trajectory_csv)

GOLDEN = Path(__file__).parent / "golden" / "schema.json"

RUN_CFG = """\
# tiny evaluate run
input = data.csv
response = label
learner = ridge
penalty = 1.0
repeats = 6
count = 5
seed = 7
output_dir = out
"""

SIM_CFG = """\
N = 60
p = 10
coef_rate = 2.0
replicates = 2
oracle_test_size = 2000
learners = ridge
methods = l2e,loob
penalty = 1.0
repeats = 4
count = 4
n_boot = 100
seed = 3
output_dir = sim
"""


@pytest.fixture
def workdir(tmp_path):
    rng = np.random.default_rng(0)
    y = np.r_[np.ones(30), np.zeros(30)]
    X = rng.normal(size=(60, 4)) + np.outer(y, [1.2, 0.6, 0.0, 0.0])
    write_dataset_csv(Dataset(X, y, "classification"), tmp_path / "data.csv", "label")
    (tmp_path / "run.cfg").write_text(RUN_CFG)
    (tmp_path / "sim.cfg").write_text(SIM_CFG)
    return tmp_path


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def key_tree(obj):
    """Nested key structure of a JSON document, with list items collapsed to the first."""
    if isinstance(obj, dict):
        return {k: key_tree(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [key_tree(obj[0])] if obj and isinstance(obj[0], dict) else []
    return None


class TestConfig:
    def test_round_trip(self):
        cfg = RunConfig.parse(RUN_CFG)
        again = RunConfig.parse(cfg.serialize())
        assert again == cfg
        assert again.serialize() == cfg.serialize()

    def test_simulation_round_trip(self):
        cfg = SimulationConfig.parse(SIM_CFG)
        assert SimulationConfig.parse(cfg.serialize()) == cfg
        assert cfg.methods == ("l2e", "loob") and cfg.scenario().N == 60

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 10**6), st.sampled_from(["power_law", "spline", "auto_s_shape"]),
           st.floats(0.01, 0.49), st.one_of(st.none(), st.integers(30, 90)))
    def test_round_trip_property(self, seed, fitter, alpha, n_max):
        cfg = RunConfig(input="a.csv", response="y", seed=seed, fitter=fitter, alpha=alpha,
                        n_max=n_max)
        assert RunConfig.parse(cfg.serialize()) == cfg

    def test_comments_and_blank_lines(self):
        pairs = parse_pairs("# header\n\na = 1  # trailing\n b=two \n")
        assert pairs == {"a": ("1", 3), "b": ("two", 4)}

    @pytest.mark.parametrize("text,line", [("a = 1\na = 2\n", 2), ("a = 1\nnonsense\n", 2),
                                           (" = 3\n", 1)])
    def test_malformed(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_pairs(text)
        assert info.value.line == line

    @pytest.mark.parametrize("text", ["input = a\nresponse = y\ncolour = red\n",
                                      "input = a\nresponse = y\nrepeats = many\n",
                                      "input = a\n",
                                      "input = a\nresponse = y\nfitter = cubic\n",
                                      "input = a\nresponse = y\nlearner = svm\n"])
    def test_invalid_run_config(self, text):
        with pytest.raises(ConfigError):
            RunConfig.parse(text)


class TestIngest:
    def test_small_classification(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,b,y\n1,2,0\n3,4,1\n5,6,1\n")
        d = ingest_csv(tmp_path / "d.csv", "y")
        assert (d.task, d.n_samples, d.n_features) == ("classification", 3, 2)
        assert feature_names(tmp_path / "d.csv", "y") == ["a", "b"]

    def test_regression_detected(self, tmp_path):
        (tmp_path / "d.csv").write_text("y,x\n1.2,0\n3.4,1\n5.6,2\n")
        assert ingest_csv(tmp_path / "d.csv", "y").task == "regression"

    def test_larger_level_is_positive(self, tmp_path):
        (tmp_path / "d.csv").write_text("x,y\n0,2\n1,7\n2,7\n")
        assert ingest_csv(tmp_path / "d.csv", "y").response.tolist() == [0.0, 1.0, 1.0]

    def test_index_column(self, tmp_path):
        (tmp_path / "d.csv").write_text("x,y\n0,0\n1,1\n2,1\n")
        assert ingest_csv(tmp_path / "d.csv", "1").n_pos == 2

    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        d = Dataset(rng.normal(size=(20, 3)), rng.normal(size=20), "regression")
        write_dataset_csv(d, tmp_path / "a.csv")
        back = ingest_csv(tmp_path / "a.csv", "y")
        write_dataset_csv(back, tmp_path / "b.csv")
        again = ingest_csv(tmp_path / "b.csv", "y")
        assert np.array_equal(back.features, d.features)
        assert np.array_equal(again.response, d.response)

    @pytest.mark.parametrize("body,row,column", [("1,,0\n", 2, "b"), ("1,x,0\n", 2, "b"),
                                                 ("1,2,0\n3,4,nan\n", 3, "y")])
    def test_bad_cells(self, tmp_path, body, row, column):
        (tmp_path / "d.csv").write_text("a,b,y\n" + body)
        with pytest.raises(ParseError) as info:
            ingest_csv(tmp_path / "d.csv", "y")
        assert (info.value.row, info.value.column) == (row, column)

    def test_constant_response(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,y\n1,1\n2,1\n")
        with pytest.raises(InvalidInput):
            ingest_csv(tmp_path / "d.csv", "y")

    def test_missing_column(self, tmp_path):
        (tmp_path / "d.csv").write_text("a,y\n1,1\n2,0\n")
        with pytest.raises(InvalidInput):
            ingest_csv(tmp_path / "d.csv", "label")

    def test_trajectory_round_trip(self, tmp_path):
        from learncurve.core import LearningTrajectory
        t = LearningTrajectory([20, 40, 60], [0.6, 0.7, 0.72], "auc")
        write_trajectory_csv(t, tmp_path / "t.csv")
        back = read_trajectory_csv(tmp_path / "t.csv")
        assert back.points == t.points


class TestEvaluate:
    def test_outputs(self, workdir, capsys):
        assert main(["evaluate", "--config", str(workdir / "run.cfg")]) == 0
        out = workdir / "out"
        report = json.loads((out / "report.json").read_text())
        assert report["bound_bc"] - report["bound"] == pytest.approx(report["empirical_bias"],
                                                                     abs=1e-15)
        assert report["dataset"]["n_samples"] == 60
        assert len(report["trajectory"]["splits"]) == 6 * len(report["trajectory"]["sizes"])
        assert "f(N) =" in capsys.readouterr().out

    def test_curve_csv_matches_curve(self, workdir):
        main(["evaluate", "--config", str(workdir / "run.cfg")])
        report = json.loads((workdir / "out" / "report.json").read_text())
        rows = read_rows(workdir / "out" / "curve.csv")
        n = np.array([float(r["n"]) for r in rows])
        f = np.array([float(r["f_n"]) for r in rows])
        assert n[0] == report["trajectory"]["sizes"][0] and n[-1] == report["n_total"]
        assert np.all(np.diff(n) > 0) and len(n) >= 200
        # independent re-fit of the stored trajectory reproduces the curve
        traj = report["trajectory"]
        refit = fit_power_law((traj["sizes"], traj["estimates"]), "increasing")
        for size in traj["sizes"]:
            value = f[np.flatnonzero(n == size)[0]]
            assert value == pytest.approx(float(evaluate_curve(refit, size)), abs=1e-9)

    def test_svg_well_formed_and_self_contained(self, workdir):
        main(["evaluate", "--config", str(workdir / "run.cfg")])
        root = ET.parse(workdir / "out" / "curve.svg").getroot()
        assert root.tag.endswith("svg")
        for el in root.iter():
            for key, value in el.attrib.items():
                if key.endswith("href"):
                    assert value.startswith("#")

    def test_byte_identical_across_runs_and_workers(self, workdir, monkeypatch):
        cfg = str(workdir / "run.cfg")
        main(["evaluate", "--config", cfg, "--output-dir", str(workdir / "a")])
        monkeypatch.setenv("LEARNCURVE_WORKERS", "2")
        main(["evaluate", "--config", cfg, "--output-dir", str(workdir / "b")])
        for name in ("report.json", "curve.csv", "curve.svg"):
            assert (workdir / "a" / name).read_bytes() == (workdir / "b" / name).read_bytes()

    def test_golden_schema(self, workdir):
        main(["evaluate", "--config", str(workdir / "run.cfg")])
        report = json.loads((workdir / "out" / "report.json").read_text())
        golden = json.loads(GOLDEN.read_text())
        assert key_tree(report) == golden["report.json"]
        header = next(csv.reader(open(workdir / "out" / "curve.csv")))
        assert header == golden["curve.csv"]

    def test_data_error_removes_outputs(self, workdir, capsys):
        (workdir / "bad.csv").write_text("a,label\n1,1\n2,1\n")
        (workdir / "bad.cfg").write_text(RUN_CFG.replace("data.csv", "bad.csv"))
        assert main(["evaluate", "--config", str(workdir / "bad.cfg")]) == 2
        assert "constant" in capsys.readouterr().err
        assert not (workdir / "out" / "report.json").exists()

    def test_config_error_exit(self, workdir):
        (workdir / "bad.cfg").write_text("input = data.csv\n")
        assert main(["evaluate", "--config", str(workdir / "bad.cfg")]) == 1
        assert main(["evaluate", "--config", str(workdir / "missing.cfg")]) == 1

    def test_bad_worker_env(self, workdir, monkeypatch):
        monkeypatch.setenv("LEARNCURVE_WORKERS", "lots")
        assert main(["evaluate", "--config", str(workdir / "run.cfg")]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["evaluate"])
        assert info.value.code == 1


class TestSimulate:
    def test_smoke(self, workdir):
        assert main(["simulate", "--config", str(workdir / "sim.cfg")]) == 0
        golden = json.loads(GOLDEN.read_text())
        for name in ("coverage.csv", "rmse_bias.csv", "nopt.csv", "bound_distance.csv"):
            rows = read_rows(workdir / "sim" / name)
            assert len(rows) == 2
            assert list(rows[0]) == golden[name]
        assert list(read_rows(workdir / "sim" / "summary.csv")[0]) == golden["summary.csv"]
        root = ET.parse(workdir / "sim" / "coverage.svg").getroot()
        assert root.tag.endswith("svg")


class TestFitCurve:
    def test_fit_curve(self, tmp_path, capsys):
        sizes = np.arange(20.0, 91.0, 10.0)
        (tmp_path / "t.csv").write_text(
            "n,estimate\n" + "".join(f"{n},{0.85 - 0.9 * n ** -0.6}\n" for n in sizes))
        assert main(["fit-curve", "--trajectory", str(tmp_path / "t.csv")]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["fit"]["gamma"] == pytest.approx(0.6, abs=1e-4)
        assert main(["fit-curve", "--trajectory", str(tmp_path / "t.csv"), "--family",
                     "spline", "--output", str(tmp_path / "fit.json")]) == 0
        assert json.loads((tmp_path / "fit.json").read_text())["fit"]["family"] == "spline"

    def test_too_short(self, tmp_path):
        (tmp_path / "t.csv").write_text("n,estimate\n20,0.6\n40,0.7\n")
        assert main(["fit-curve", "--trajectory", str(tmp_path / "t.csv")]) == 3


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "learncurve.cli", "--help"],
                         capture_output=True, text=True, env={**os.environ})
    assert out.returncode == 0 and "fit-curve" in out.stdout
