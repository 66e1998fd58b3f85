import json
import time

import numpy as np
import pytest

from etsc import bench
from etsc.bench import ALGORITHMS, EXIT_FATAL, EXIT_OK, EXIT_PARTIAL, RunConfig, register_algorithm, run_experiment
from etsc.cli import main
from etsc.core import dump_csv
from etsc.ensemble import FixedPrefixModel
from etsc.synthetic import make_onset_dataset


class Sleepy(FixedPrefixModel):
    def fit(self, X, y):
        time.sleep(30)
        return super().fit(X, y)


class Broken(FixedPrefixModel):
    def fit(self, X, y):
        raise RuntimeError("boom")


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "small.csv"
    dump_csv(make_onset_dataset(n=40, length=20, onset=4, seed=1, name="small"), path)
    return str(path)


def config(tmp_path, data, algorithms, **kw):
    return RunConfig(datasets=[data], algorithms=algorithms, folds=2, output_dir=str(tmp_path / "out"), **kw)


@pytest.fixture
def extra_algorithms():
    saved = dict(ALGORITHMS)
    register_algorithm("sleepy", Sleepy)
    register_algorithm("broken", Broken)
    yield
    ALGORITHMS.clear()
    ALGORITHMS.update(saved)


def test_timeout_and_error_give_partial_exit(tmp_path, small_csv, extra_algorithms):
    cfg = config(tmp_path, small_csv, ["sleepy", "broken", "fixed-prefix"], timeout_seconds=1.0, workers=3)
    t0 = time.monotonic()
    records, code = run_experiment(cfg)
    assert time.monotonic() - t0 < 20
    assert code == EXIT_PARTIAL
    status = {(r.algorithm, r.fold): r.status for r in records}
    assert status[("sleepy", 0)] == "timeout" and status[("broken", 1)] == "error"
    assert status[("fixed-prefix", 0)] == "ok"
    broken = next(r for r in records if r.algorithm == "broken")
    assert "boom" in broken.error
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert {a["algorithm"] for a in report["aggregates"]} == {"fixed-prefix"}


def test_reports_are_byte_identical(tmp_path, small_csv):
    algs = [{"id": "fixed-prefix"}, {"id": "ects"}, {"id": "economy-k", "params": {"k": 2}}]
    outputs = []
    for run in ("a", "b"):
        cfg = config(tmp_path / run, small_csv, algs, workers=2)
        records, code = run_experiment(cfg)
        assert code == EXIT_OK
        outputs.append((tmp_path / run / "out" / "report.json").read_bytes())
    assert outputs[0] == outputs[1]
    timings = json.loads((tmp_path / "a" / "out" / "timings.json").read_text())
    assert all(r["train_seconds"] >= 0 for r in timings)
    assert (tmp_path / "a" / "out" / "records.csv").read_text().count("\n") == 7


def test_config_validation(tmp_path, small_csv):
    with pytest.raises(ValueError, match="unknown config keys"):
        RunConfig.from_dict({"datasets": [], "algorithms": [], "nope": 1})
    with pytest.raises(ValueError, match="folds"):
        RunConfig([small_csv], ["ects"], folds=1)
    with pytest.raises(ValueError, match="unknown algorithm"):
        run_experiment(config(tmp_path, small_csv, ["nope"]))


def test_multivariate_wrapping():
    assert isinstance(bench.make_model("ects", {}, 3), bench.VotingClassifier)
    assert isinstance(bench.make_model("economy-k", {}, 3), bench.EconomyK)
    assert bench.make_model("teaser-z", {"n_prefixes": 4}, 1).znorm


def test_stream_predict_uses_checkpoints(onset_data):
    X, y = onset_data
    m = FixedPrefixModel().fit(X, y)
    labels, trig = bench.stream_predict(m, X[:5, np.newaxis, :])
    assert np.all(trig == m.prefix_length_)


def test_cli_run_with_overrides(tmp_path, small_csv, capsys):
    cfg = {"datasets": [small_csv], "algorithms": [{"id": "ecec"}, {"id": "economy-k"}], "folds": 2,
           "output_dir": str(tmp_path / "out")}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code = main(["run", "--config", str(tmp_path / "cfg.json"), "--ecec-n", "5", "--ecok-k", "1,2",
                 "--ecok-cost", "0.01"])
    assert code == EXIT_OK
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    params = {a["id"]: a["params"] for a in report["config"]["algorithms"]}
    assert params == {"ecec": {"n_prefixes": 5}, "economy-k": {"k": [1, 2], "time_cost": 0.01}}
    assert "4/4 jobs ok" in capsys.readouterr().out


def test_cli_stats_and_folds(small_csv, gunpoint_path, capsys):
    assert main(["stats", str(gunpoint_path)]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["name"] == "GunPoint"
    assert main(["folds", small_csv, "--k", "4", "--seed", "3"]) == 0
    plan = json.loads(capsys.readouterr().out)
    assert plan


def test_cli_errors(tmp_path, capsys):
    assert main(["stats", str(tmp_path / "missing.csv")]) == EXIT_FATAL
    (tmp_path / "cfg.json").write_text(json.dumps({"datasets": [], "algorithms": ["nope"]}))
    assert main(["run", "--config", str(tmp_path / "cfg.json")]) == EXIT_FATAL
    assert "error" in capsys.readouterr().err
