from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from nvsd.cli import SCHEMA_VERSION, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_csv(tmp_path, rng):
    X = rng.uniform(-2, 2, (150, 4))
    y = np.sin(2 * X[:, 0]) + X[:, 1] + 0.2 * rng.standard_normal(150)
    path = tmp_path / "small.csv"
    pd.DataFrame(X, columns=["a", "b", "c", "d"]).assign(y=y).to_csv(path, index=False, float_format="%.17g")
    return str(path)


class TestRank:
    def test_json(self, capsys, small_csv):
        code, out, _ = run(capsys, "rank", "--response", "y", "--perms", "200", small_csv)
        assert code == 0
        doc = json.loads(out)
        assert doc["schema_version"] == SCHEMA_VERSION
        assert [v["variable"] for v in doc["variables"]][:2] == ["b", "a"]

    def test_single_predictor(self, capsys, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("x,y\n" + "".join(f"{i},{i * i % 7}\n" for i in range(20)))
        code, out, _ = run(capsys, "rank", "--response", "y", "--format", "csv", str(path))
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 2 and lines[1].startswith("x,")


class TestSelect:
    def test_trace(self, capsys, small_csv):
        # the default cap of 10 iterations per predictor is too short here
        code, out, _ = run(capsys, "select", "--alpha", "0.001", "--max-iters", "1000", "--response", "y",
                           small_csv)
        doc = json.loads(out)
        assert code == 0
        assert set(doc["selected_set"]) >= {"a", "b"}
        assert doc["stop_reason"] == "threshold"

    def test_default_cap(self, capsys, small_csv):
        code, out, _ = run(capsys, "select", "--response", "y", small_csv)
        doc = json.loads(out)
        assert doc["stop_reason"] == "max_iters"
        assert len(doc["iterations"]) == 40

    def test_boston(self, capsys, boston_csv):
        code, out, _ = run(capsys, "select", "--alpha", "0.001", "--response", "medv", boston_csv)
        assert code == 0
        assert json.loads(out)["selected_set"][:2] == ["lstat", "rm"]

    def test_spline_roughening(self, capsys, small_csv):
        code, out, _ = run(capsys, "select", "--roughening", "spline", "--theta", "0.1", "--response", "y",
                           small_csv)
        assert code == 0
        assert json.loads(out)["selected_set"]

    def test_out_file(self, capsys, small_csv, tmp_path):
        dest = tmp_path / "trace.json"
        code, out, _ = run(capsys, "select", "--response", "y", "--out", str(dest), small_csv)
        assert code == 0 and out == ""
        assert json.loads(dest.read_text())["command"] == "select"


class TestModelCommands:
    def test_fit_predict(self, capsys, small_csv, tmp_path):
        model = tmp_path / "m.json"
        code, _, _ = run(capsys, "fit", "--response", "y", "--variables", "a,b", "--out", str(model), small_csv)
        assert code == 0
        code, out, _ = run(capsys, "predict", "--model", str(model), small_csv)
        assert code == 0
        preds = np.array(json.loads(out)["predictions"])
        y = pd.read_csv(small_csv)["y"].to_numpy()
        assert np.sqrt(np.mean((preds - y) ** 2)) < 0.3

    def test_fit_default_selects(self, capsys, small_csv):
        code, out, _ = run(capsys, "fit", "--response", "y", small_csv)
        assert code == 0
        assert set(json.loads(out)["model"]["components"][0]) >= {"variable", "knots"}

    def test_predict_missing_column(self, capsys, small_csv, tmp_path):
        model = tmp_path / "m.json"
        run(capsys, "fit", "--response", "y", "--variables", "a", "--out", str(model), small_csv)
        other = tmp_path / "other.csv"
        other.write_text("b,c\n1,2\n")
        code, _, err = run(capsys, "predict", "--model", str(model), str(other))
        assert code == 1
        assert json.loads(err)["error"]["type"] == "SchemaError"

    def test_cv(self, capsys, small_csv):
        code, out, _ = run(capsys, "cv", "--response", "y", "--variables", "b,a,c", small_csv)
        doc = json.loads(out)
        assert code == 0
        assert len(doc["cv_nrmse"]) == 3
        assert doc["chosen"] == ["b", "a", "c"][: doc["k"]]

    def test_plotdata(self, capsys, small_csv):
        code, out, _ = run(capsys, "plotdata", "--response", "y", "--variables", "a", small_csv)
        panel = json.loads(out)["panels"][0]
        assert panel["variable"] == "a" and len(panel["x"]) == len(panel["y"]) == 150

    def test_groups(self, capsys, small_csv):
        code, out, _ = run(capsys, "groups", "--response", "y", small_csv)
        assert code == 0
        assert len(json.loads(out)["groups"]) == 1


class TestImpute:
    def test_fills(self, capsys, tmp_path):
        path = tmp_path / "na.csv"
        path.write_text("a,b\n1,2\n2,NA\n3,6\n4,8\n")
        code, out, _ = run(capsys, "impute", "--knn-k", "1", str(path))
        assert code == 0
        df = pd.read_csv(pd.io.common.StringIO(out))
        assert not df.isna().any().any()
        assert df.loc[1, "b"] in (2.0, 6.0)


class TestSimulate:
    def test_runs(self, capsys, tmp_path):
        table = tmp_path / "rows.csv"
        code, out, _ = run(capsys, "simulate", "--q", "2", "--p", "10", "--n", "80", "--replicates", "2",
                           "--table", str(table))
        assert code == 0
        doc = json.loads(out)
        assert doc["summary"]["replicates"] == 2
        assert len(table.read_text().splitlines()) == 3

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "spec.json"
        cfg.write_text(json.dumps({"q": 1, "p": 5, "n": 60, "sigma": 0.5}))
        code, out, _ = run(capsys, "simulate", "--config", str(cfg), "--replicates", "1")
        assert code == 0
        assert json.loads(out)["spec"]["p"] == 5


class TestErrors:
    def test_unknown_subcommand(self, capsys):
        code, _, err = run(capsys, "frobnicate")
        assert code == 2
        assert json.loads(err)["error"]["type"] == "UsageError"

    def test_unknown_flag(self, capsys, small_csv):
        code, _, _ = run(capsys, "rank", "--bogus", small_csv)
        assert code == 2

    def test_missing_response_flag(self, capsys, small_csv):
        assert run(capsys, "rank", small_csv)[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "rank", "--response", "y", str(tmp_path / "nope.csv"))
        assert code == 1
        assert json.loads(err)["error"]["type"] == "IngestError"

    def test_bad_response(self, capsys, small_csv):
        assert run(capsys, "rank", "--response", "zzz", small_csv)[0] == 1

    def test_bad_theta(self, capsys, small_csv):
        assert run(capsys, "select", "--theta", "2", "--response", "y", small_csv)[0] == 1


def test_deterministic_output(capsys, small_csv):
    args = ("select", "--seed", "7", "--response", "y", small_csv)
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b


def test_module_entry_point(small_csv):
    proc = subprocess.run([sys.executable, "-m", "nvsd.cli", "rank", "--response", "y", "--perms", "50",
                           small_csv], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "rank"
