"""End-to-end CLI runs through main(argv)."""

import numpy as np

from gscopt import bench_io
from gscopt.cli import main


def test_kernels_output(capsys):
    assert main(["kernels", "--nu", "2", "--tau", "1"]) == 0
    out = capsys.readouterr().out
    assert "0.718281828459" in out   # omega(2, 1) = e - 2
    assert "1.71828182846" in out    # omega_bar(2, 1) = e - 1


def test_fit_logistic_synthetic(tmp_path, capsys):
    out_path = str(tmp_path / "trace.csv")
    code = main(["fit-logistic", "--synthetic", "n=400,p=30", "--nu", "2",
                 "--gamma", "1e-5", "--eps", "1e-8", "--seed", "5",
                 "--out", out_path, "--deterministic"])
    assert code == 0
    out = capsys.readouterr().out
    assert "status=converged" in out and "train_error=" in out
    trace = bench_io.read_trace(out_path, "csv")
    assert trace and trace[-1].lam <= 1e-8 * max(1.0, trace[0].lam)


def test_fit_logistic_deterministic_traces(tmp_path):
    args = ["fit-logistic", "--synthetic", "n=200,p=15", "--nu", "2", "--seed", "3",
            "--deterministic"]
    p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert main(args + ["--out", p1]) == 0
    assert main(args + ["--out", p2]) == 0
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_fit_logistic_from_file(tmp_path):
    path = tmp_path / "tiny.txt"
    rng = np.random.default_rng(0)
    lines = []
    for i in range(40):
        v = rng.normal(size=3)
        lab = "+1" if v.sum() > 0 else "-1"
        lines.append(f"{lab} 1:{v[0]:.6f} 2:{v[1]:.6f} 3:{v[2]:.6f}")
    path.write_text("\n".join(lines) + "\n")
    assert main(["fit-logistic", "--data", str(path), "--gamma", "1e-4",
                 "--deterministic"]) == 0


def test_portfolio_prox_newton(capsys):
    code = main(["portfolio", "--synthetic", "n=50,p=10", "--solver", "prox-newton",
                 "--seed", "7", "--eps", "1e-9", "--deterministic"])
    assert code == 0
    out = capsys.readouterr().out
    assert "sum=1.000000000000" in out


def test_portfolio_first_order_solvers(capsys):
    for solver in ("pg-bb", "fw", "fw-ls"):
        code = main(["portfolio", "--synthetic", "n=30,p=6", "--solver", solver,
                     "--seed", "2", "--eps", "1e-5"])
        assert code == 0


def test_fit_dwd(capsys):
    code = main(["fit-dwd", "--synthetic", "n=50,p=6", "--q", "1",
                 "--gammas", "1e-5,1e-5,1e-7", "--deterministic"])
    assert code == 0
    assert "status=converged" in capsys.readouterr().out


def test_exit_codes(capsys, tmp_path):
    # usage/data error -> 1
    assert main(["fit-logistic", "--deterministic"]) == 1
    assert main(["fit-logistic", "--data", "/does/not/exist"]) == 1
    # max_iter -> 2
    code = main(["fit-logistic", "--synthetic", "n=200,p=15", "--nu", "3",
                 "--max-iter", "2", "--deterministic"])
    assert code == 2


def test_bench_subset(capsys):
    assert main(["bench", "--only", "2,3"]) == 0
    out = capsys.readouterr().out
    assert "criterion  2 [PASS]" in out
    assert "criterion  3 [PASS]" in out
    assert "2/2 criteria passed" in out
