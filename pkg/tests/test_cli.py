import json

import numpy as np
import pytest

from matrix_tails.cli import main
from matrix_tails.io import save_family, save_matrix
from matrix_tails.linalg import MatrixFamily


@pytest.fixture(autouse=True)
def _in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)


def test_bound_prints_d_at_zero(capsys):
    assert main(["bound", "--theorem", "gaussian", "--sigma2", "1", "--d", "2", "--t", "0"]) == 0
    assert capsys.readouterr().out.strip() == "2"


def test_bound_grid_writes_csv(tmp_path, capsys):
    out = tmp_path / "b.json"
    code = main(["--output", str(out), "bound", "--theorem", "bernstein-bounded", "--sigma2", "1",
                 "--R", "1", "--d", "1", "--t-max", "4", "--t-count", "5"])
    assert code == 0
    report = json.loads(out.read_text())
    assert report["provenance"][0]["theorem"] == "bernstein-bounded"
    assert (tmp_path / "b.csv").read_text().startswith("t,bound_raw,bound_clipped")


def test_master_bound_from_models(tmp_path, capsys):
    (tmp_path / "m.json").write_text(json.dumps([{"kind": "gaussian", "shape_matrix": np.eye(2).tolist()}]))
    assert main(["bound", "--theorem", "master", "--models", "m.json", "--t", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(2 * np.exp(-0.5), rel=1e-6)


def test_usage_errors_exit_2(capsys):
    assert main(["bound", "--theorem", "gaussian", "--t", "1"]) == 2
    assert main(["bound", "--theorem", "chernoff-i", "--n", "3", "--d", "2", "--mu-bar", "0.5",
                 "--side", "upper", "--t", "0.1"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--ensemble", "goe", "--dim", "2", "--trials", "100"])
    assert exc.value.code == 2


def test_simulate_coupon_lower_tail(tmp_path, capsys):
    code = main(["--deterministic", "--output", "s.json", "simulate", "--ensemble", "coupon", "--dim", "8",
                 "--n", "8", "--trials", "100000", "--seed", "1", "--stat", "lambda_min", "--t", "0"])
    assert code == 0
    result = json.loads((tmp_path / "s.json").read_text())["result"]
    assert result["empirical"][0] > 0.5
    exact = 1 - 40320 / 8**8
    assert result["ci_low"][0] <= exact <= result["ci_high"][0]


def test_simulate_reports_are_byte_identical(tmp_path):
    args = ["--deterministic", "simulate", "--ensemble", "goe", "--dim", "3", "--trials", "500",
            "--seed", "4", "--theorem", "gaussian", "--t-max", "8", "--t-count", "5"]
    assert main(["--output", "a.json"] + args) == 0
    assert main(["--output", "b.json"] + args) == 0
    assert (tmp_path / "a.json").read_bytes() != b""
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    a = json.loads((tmp_path / "a.json").read_text())
    b = json.loads((tmp_path / "b.json").read_text())
    a["config"].pop("output"), b["config"].pop("output")
    assert a == b and "timestamp" not in a


def test_simulate_dominance_failure_exits_1(tmp_path, monkeypatch):
    from matrix_tails import bounds as B
    from matrix_tails import verify as V

    real = V.theorem_curve

    def shrunk(*args):
        c = real(*args)
        return B.BoundCurve(c.t_grid, c.values * 1e-3, c.label, c.parameters)

    monkeypatch.setattr(V, "theorem_curve", shrunk)
    save_family(tmp_path / "f.json", MatrixFamily.self_adjoint([np.eye(2)]))
    code = main(["simulate", "--ensemble", "gaussian_series", "--family", "f.json", "--trials", "1000",
                 "--seed", "1", "--theorem", "gaussian", "--t-max", "2", "--t-count", "3"])
    assert code == 1


def test_verify_lemmas_and_suites(tmp_path, capsys):
    assert main(["--deterministic", "verify-lemmas", "--dim", "2", "--instances", "20", "--seed", "7"]) == 0
    assert main(["verify-lemmas", "--dim", "2", "--instances", "5", "--seed", "7", "--tol", "-1"]) == 1
    assert main(["khintchine", "--n", "4", "--dim", "3", "--seed", "2", "--p-max", "3"]) == 0
    save_matrix(tmp_path / "B.csv", [[1.0, 2.0], [3.0, 4.0]])
    assert main(["mean-study", "--ensemble", "nonuniform_gaussian", "--matrix", "B.csv",
                 "--trials", "2000", "--seed", "1"]) == 0
    assert main(["compare-variance", "--n", "3", "--dim", "3", "--seed", "1"]) == 0
    report = json.loads((tmp_path / "matrix_tails_compare_variance.json").read_text())
    assert report["version"] and report["config"]["seed"] == 1
