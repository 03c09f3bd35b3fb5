"""Data ingestion, generators, baselines, and trace persistence."""

import numpy as np
import pytest

from gscopt import atoms, models
from gscopt.bench_io import (LibsvmParseError, fast_gradient, frank_wolfe,
                             gen_logistic, gen_portfolio, pg_bb, read_libsvm,
                             read_trace, write_trace)
from gscopt.errors import ParameterError
from gscopt.newton import IterRecord, SolveOptions, minimize
from gscopt.prox import ProxSpec


# ---------------------------------------------------------------------------
# LIBSVM parsing
# ---------------------------------------------------------------------------

def _write(tmp_path, text, name="data.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_and_normalize(tmp_path):
    path = _write(tmp_path, "+1 1:0.6 3:0.8\n-1 2:3 4:4\n")
    ds = read_libsvm(path, normalize=True)
    arr = ds.a.toarray()
    assert np.allclose(arr[0], [0.6, 0.0, 0.8, 0.0])
    assert np.allclose(arr[1], [0.0, 0.6, 0.0, 0.8])
    assert set(ds.labels) == {-1.0, 1.0}
    assert np.allclose(np.linalg.norm(arr, axis=1), 1.0, atol=1e-12)


def test_binary_label_mapping(tmp_path):
    path = _write(tmp_path, "0 1:1\n1 1:2\n0 1:3\n")
    ds = read_libsvm(path)
    assert np.array_equal(ds.labels, [-1.0, 1.0, -1.0])


def test_empty_file(tmp_path):
    with pytest.warns(UserWarning):
        ds = read_libsvm(_write(tmp_path, ""))
    assert ds.n == 0


def test_parse_errors(tmp_path):
    with pytest.raises(LibsvmParseError) as err:
        read_libsvm(_write(tmp_path, "+1 1:0.5\n-1 notanumber:1\n"))
    assert err.value.line_no == 2
    with pytest.raises(LibsvmParseError) as err:
        read_libsvm(_write(tmp_path, "+1 3:1 2:5\n"))
    assert err.value.line_no == 1
    with pytest.raises(LibsvmParseError):
        read_libsvm(_write(tmp_path, "+1 0:1\n"))  # not 1-based


def test_roundtrip_random_sparse(tmp_path):
    rng = np.random.default_rng(3)
    n, p = 20, 15
    rows = []
    for i in range(n):
        idx = np.sort(rng.choice(np.arange(1, p + 1), size=rng.integers(1, 6), replace=False))
        vals = rng.normal(size=idx.size)
        rows.append(("+1" if i % 2 else "-1") + "".join(
            f" {j}:{format(v, '.17g')}" for j, v in zip(idx, vals)))
    path = _write(tmp_path, "\n".join(rows) + "\n")
    ds = read_libsvm(path, n_features=p)
    # write back and re-read: identical matrices
    out = []
    arr = ds.a
    for i in range(n):
        row = arr.getrow(i)
        toks = " ".join(f"{j+1}:{format(v, '.17g')}" for j, v in zip(row.indices, row.data))
        out.append(("+1" if ds.labels[i] > 0 else "-1") + " " + toks)
    path2 = _write(tmp_path, "\n".join(out) + "\n", name="again.txt")
    ds2 = read_libsvm(path2, n_features=p)
    assert (ds.a != ds2.a).nnz == 0
    assert np.array_equal(ds.labels, ds2.labels)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def test_gen_portfolio_deterministic():
    w1 = gen_portfolio(50, 10, seed=7)
    w2 = gen_portfolio(50, 10, seed=7)
    assert w1.tobytes() == w2.tobytes()
    assert gen_portfolio(50, 10, seed=8).tobytes() != w1.tobytes()


def test_gen_portfolio_moments():
    w = gen_portfolio(1000, 100, seed=3)  # n p = 1e5
    assert abs(w.mean() - 1.0) <= 0.01
    assert abs(w.std() - 0.1) <= 0.01
    assert w.min() >= 1e-3


def test_gen_portfolio_validation():
    with pytest.raises(ParameterError):
        gen_portfolio(0, 5, seed=1)


def test_gen_logistic_normalized():
    a, labels = gen_logistic(40, 7, seed=5)
    assert np.allclose(np.linalg.norm(a, axis=1), 1.0, atol=1e-12)
    assert set(np.unique(labels)) <= {-1.0, 1.0}


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def _logistic_model(n=300, p=20, seed=5, gamma=1e-5):
    a, labels = gen_logistic(n, p, seed=seed)
    return models.GlmModel(a * labels[:, None], atoms.logistic(), q_diag=gamma)


def test_fast_gradient_slower_than_newton():
    model = _logistic_model()
    x0 = np.zeros(model.dim)
    mu, lips = model.smoothness_bounds()
    x, hist = fast_gradient(model, x0, mu, lips, eps=1e-6)
    assert np.linalg.norm(model.grad(x)) <= 1e-6
    res = minimize(model, x0, SolveOptions(nu_choice="force_2", record_time=False))
    newton_iters = next(r.k for r in res.trace if r.grad_norm <= 1e-6)
    assert len(hist) >= 5 * newton_iters


def test_fast_gradient_needs_constants():
    model = _logistic_model()
    with pytest.raises(ParameterError):
        fast_gradient(model, np.zeros(model.dim), 0.0, 1.0)
    with pytest.raises(ParameterError):
        fast_gradient(model, np.zeros(model.dim), 1.0, np.inf)


def test_frank_wolfe_stays_on_simplex():
    port = models.PortfolioModel(gen_portfolio(40, 8, seed=2))
    x0 = np.full(8, 1.0 / 8.0)
    for ls in (False, True):
        x, hist = frank_wolfe(port, x0, eps=1e-5, linesearch=ls)
        assert x.sum() == pytest.approx(1.0, abs=1e-9)
        assert x.min() >= -1e-15


def test_pg_bb_matches_prox_newton():
    from gscopt.prox_newton import CompositeProblem, minimize_composite
    port = models.PortfolioModel(gen_portfolio(50, 10, seed=7))
    x0 = np.full(10, 0.1)
    xbb, _ = pg_bb(port, ProxSpec("simplex"), x0, eps=1e-10)
    res = minimize_composite(CompositeProblem(port, ProxSpec("simplex"), x0),
                             SolveOptions(eps=1e-9, record_time=False))
    f_bb, f_pn = port.value(xbb), port.value(res.x)
    assert abs(f_bb - f_pn) <= 1e-6 * (1.0 + abs(f_pn))


# ---------------------------------------------------------------------------
# trace files
# ---------------------------------------------------------------------------

def _demo_trace():
    model = _logistic_model(n=60, p=5, seed=9)
    return minimize(model, np.zeros(5), SolveOptions(record_time=False)).trace


def test_csv_schema_and_roundtrip(tmp_path):
    trace = _demo_trace()
    path = str(tmp_path / "t.csv")
    write_trace(trace, path, "csv")
    text = open(path).read()
    assert text.splitlines()[0] == "iter,phase,f,grad_norm,lambda,beta,d_k,tau,cum_time_s"
    back = read_trace(path, "csv")
    for a, b in zip(trace, back):
        assert (a.k, a.phase) == (b.k, b.phase)
        for field in ("f", "grad_norm", "lam", "beta", "d_k", "tau", "cum_time"):
            assert getattr(a, field) == getattr(b, field)  # bit-exact floats
    # byte-identical rewrite
    path2 = str(tmp_path / "t2.csv")
    write_trace(back, path2, "csv")
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_json_roundtrip_bit_exact(tmp_path):
    trace = _demo_trace()
    path = str(tmp_path / "t.json")
    write_trace(trace, path, "json")
    back = read_trace(path, "json")
    for a, b in zip(trace, back):
        assert a.f == b.f and a.lam == b.lam and a.tau == b.tau


def test_empty_trace(tmp_path):
    path = str(tmp_path / "empty.csv")
    write_trace([], path, "csv")
    assert open(path).read() == "iter,phase,f,grad_norm,lambda,beta,d_k,tau,cum_time_s\n"
    assert read_trace(path, "csv") == []


def test_three_records_four_lines(tmp_path):
    trace = [IterRecord(k, 1.0 / (k + 1), 0.1, 0.2, 0.3, 0.4, 1.0, "damped", 0.0)
             for k in range(3)]
    path = str(tmp_path / "three.csv")
    write_trace(trace, path, "csv")
    assert len(open(path).read().splitlines()) == 4


def test_write_error_carries_path():
    with pytest.raises(OSError) as err:
        write_trace([], "/nonexistent-dir/trace.csv", "csv")
    assert "/nonexistent-dir/trace.csv" in str(err.value)
