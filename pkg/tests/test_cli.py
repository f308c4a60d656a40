import csv

import numpy as np
import pytest

from sparse_cca import estimate_covariance, solve_cca
from sparse_cca.cli import main
from sparse_cca.model import DataSet


def _write(path, mat):
    np.savetxt(path, np.atleast_2d(mat), delimiter=",", fmt="%.17g")
    return str(path)


def _solve_out(capsys):
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["name", "index", "value"]
    return {(r[0], r[1]): float(r[2]) for r in rows[1:]}


@pytest.fixture
def pls_files(tmp_path):
    return [
        "--cov-x", _write(tmp_path / "sx.csv", np.eye(2)),
        "--cov-y", _write(tmp_path / "sy.csv", np.eye(2)),
        "--cov-xy", _write(tmp_path / "sxy.csv", np.diag([0.5, 0.3])),
    ]


@pytest.fixture
def paired(tmp_path):
    rng = np.random.default_rng(0)
    Z = rng.standard_normal((10, 16))
    return _write(tmp_path / "x.csv", Z[:, :8]), _write(tmp_path / "y.csv", Z[:, 8:])


def test_solve_covariance_files(pls_files, capsys):
    assert main(["solve", *pls_files]) == 0
    out = _solve_out(capsys)
    assert out[("rho", "")] == 0.5
    assert out[("a", "0")] == 1.0


def test_solve_prints_round_trip_floats(tmp_path, capsys):
    rng = np.random.default_rng(1)
    Z = rng.standard_normal((50, 5))
    fx, fy = _write(tmp_path / "x.csv", Z[:, :3]), _write(tmp_path / "y.csv", Z[:, 3:])
    assert main(["solve", "--x", fx, "--y", fy]) == 0
    expected = solve_cca(estimate_covariance(DataSet(Z[:, :3], Z[:, 3:]), center=True)).rho
    assert _solve_out(capsys)[("rho", "")] == expected


def test_ridge_breaks_rank_deficiency(paired, capsys):
    fx, fy = paired
    assert main(["solve", "--x", fx, "--y", fy]) == 0
    plain = _solve_out(capsys)[("rho", "")]
    assert main(["solve", "--x", fx, "--y", fy, "--ridge-x", "1e-3", "--ridge-y", "1e-3"]) == 0
    ridged = _solve_out(capsys)[("rho", "")]
    assert plain == pytest.approx(1.0, abs=1e-8)
    assert np.isfinite(ridged) and ridged < 1.0


def test_swapped_inputs_same_rho(tmp_path, capsys):
    rng = np.random.default_rng(2)
    Z = rng.standard_normal((40, 7))
    fx, fy = _write(tmp_path / "x.csv", Z[:, :4]), _write(tmp_path / "y.csv", Z[:, 4:])
    main(["solve", "--x", fx, "--y", fy])
    a = _solve_out(capsys)[("rho", "")]
    main(["solve", "--x", fy, "--y", fx])
    b = _solve_out(capsys)[("rho", "")]
    assert a == pytest.approx(b, abs=1e-12)


def test_header_flag(tmp_path, capsys):
    files = []
    for name, mat in (("sx", np.eye(2)), ("sy", np.eye(1)), ("sxy", [[0.2], [0.4]])):
        p = tmp_path / f"{name}.csv"
        p.write_text("c1,c2\n" + "\n".join(",".join(map(repr, map(float, r))) for r in np.atleast_2d(mat)) + "\n")
        files.append(str(p))
    assert main(["solve", "--header", "--cov-x", files[0], "--cov-y", files[1], "--cov-xy", files[2]]) == 0
    assert _solve_out(capsys)[("rho", "")] == pytest.approx(np.hypot(0.2, 0.4), abs=1e-15)


def test_ragged_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    good = _write(tmp_path / "g.csv", np.eye(2))
    assert main(["solve", "--cov-x", str(bad), "--cov-y", good, "--cov-xy", good]) == 2
    assert "bad.csv: row 2" in capsys.readouterr().err


def test_missing_input_exit_2(capsys):
    assert main(["solve"]) == 2
    assert main(["solve", "--x", "only_x.csv"]) == 2


def test_indefinite_exit_3(tmp_path, capsys):
    assert main([
        "solve",
        "--cov-x", _write(tmp_path / "sx.csv", [[1.0, 2.0], [2.0, 1.0]]),
        "--cov-y", _write(tmp_path / "sy.csv", np.eye(1)),
        "--cov-xy", _write(tmp_path / "sxy.csv", [[0.1], [0.1]]),
    ]) == 3


def test_greedy_single_row(tmp_path):
    out = tmp_path / "p.csv"
    assert main(["greedy", "--wishart", "5", "5", "--ka", "1", "--kb", "1", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2
    assert (tmp_path / "p_weights.csv").exists()


def test_greedy_solve_counts(capsys):
    args = ["greedy", "--wishart", "10", "10", "--seed", "3", "--ka", "4", "--kb", "3"]
    assert main([*args, "--mode", "approx", "--solve-counts"]) == 0
    approx = capsys.readouterr().err.strip()
    assert main([*args, "--mode", "exact", "--solve-counts"]) == 0
    exact = capsys.readouterr().err.strip()
    assert approx == "solve_count,6"
    assert int(exact.split(",")[1]) > 6


def test_greedy_pls_variant_full(tmp_path):
    rng = np.random.default_rng(4)
    sxy = rng.standard_normal((4, 3))
    files = [
        "--cov-x", _write(tmp_path / "sx.csv", np.eye(4) * 2),
        "--cov-y", _write(tmp_path / "sy.csv", np.eye(3) * 3),
        "--cov-xy", _write(tmp_path / "sxy.csv", sxy * 0.1),
    ]
    out = tmp_path / "p.csv"
    assert main(["greedy", *files, "--variant", "pls", "--ka", "4", "--kb", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    top = np.linalg.svd(sxy * 0.1, compute_uv=False)[0]
    assert float(rows[-1]["rho"]) == pytest.approx(top, abs=1e-10)


def test_greedy_backward_approx_rejected(capsys):
    assert main(["greedy", "--wishart", "4", "4", "--ka", "1", "--kb", "1",
                 "--direction", "backward", "--mode", "approx"]) == 2


def test_oracle_budget_exit_4(capsys):
    assert main(["oracle", "--wishart", "20", "20", "--ka", "5", "--kb", "5"]) == 4
    assert "240374016" in capsys.readouterr().err


def test_oracle_curve(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["oracle", "--wishart", "4", "4", "--curve", "8", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [int(r["card_I"]) + int(r["card_J"]) for r in rows] == list(range(2, 9))
    assert (tmp_path / "c_weights.csv").exists()


def test_experiment_tradeoff_schema(tmp_path, capsys):
    args = ["experiment", "tradeoff", "--n", "3", "--m", "3", "--trials", "4",
            "--out-dir", str(tmp_path)]
    assert main(args) == 0
    target = capsys.readouterr().out.splitlines()[0]
    rows = list(csv.DictReader(open(target)))
    assert list(rows[0]) == ["total_cardinality", "method", "mode", "mean_rho", "std_rho", "trials"]
    keys = [(r["total_cardinality"], r["mode"]) for r in rows]
    assert len(keys) == len(set(keys)) == 5 * 4


def test_experiment_regularize_deterministic(tmp_path, capsys):
    args = ["experiment", "regularize", "--n", "3", "--m", "3", "--trials", "8",
            "--samples", "10", "--out-dir"]
    assert main([*args, str(tmp_path / "a"), "--threads", "1"]) == 0
    out_a = capsys.readouterr().out
    assert main([*args, str(tmp_path / "b"), "--threads", "3"]) == 0
    out_b = capsys.readouterr().out
    fa = sorted((tmp_path / "a").iterdir())
    fb = sorted((tmp_path / "b").iterdir())
    assert [f.name for f in fa] == [f.name for f in fb]
    for x, y in zip(fa, fb):
        assert x.read_bytes() == y.read_bytes()
    assert out_a.replace("/a/", "/b/") == out_b


def test_experiment_bad_mode_exit_2(tmp_path):
    assert main(["experiment", "tradeoff", "--modes", "lasso", "--out-dir", str(tmp_path)]) == 2
