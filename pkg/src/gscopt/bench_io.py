"""Data ingestion, synthetic generators, first-order baselines, and trace files.

PRNG identity: all synthetic generators draw Gaussians by Box-Muller over a
splitmix64 stream (state_i = seed + i * 0x9E3779B97F4A7C15 mod 2^64, output
murmur-style mixed; uniforms from the top 53 bits), so a port in any language
reproduces the same matrices bit-for-bit from the seed alone.

Trace files serialize floats with 17 significant digits, which round-trips
IEEE doubles exactly; the CSV column set is fixed (see TRACE_COLUMNS).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .newton import IterRecord
from .prox import ProxSpec, prox_apply

PRNG_NAME = "splitmix64+box-muller"

TRACE_COLUMNS = ["iter", "phase", "f", "grad_norm", "lambda", "beta", "d_k", "tau", "cum_time_s"]


# ---------------------------------------------------------------------------
# LIBSVM text format
# ---------------------------------------------------------------------------

@dataclass
class Dataset:
    a: sp.csr_matrix
    labels: np.ndarray
    name: str = ""
    normalized: bool = False

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def p(self):
        return self.a.shape[1]


class LibsvmParseError(ParameterError):
    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def read_libsvm(path, normalize: bool = False, n_features: int | None = None) -> Dataset:
    """Parse 'label idx:val ...' lines (1-based, ascending indices) into a sparse dataset.

    Binary label sets are mapped onto {-1, +1} (smaller value -> -1); rows are
    l2-normalized when requested.  An empty file yields an n = 0 dataset.
    """
    labels, indptr, indices, data = [], [0], [], []
    with open(path, "r") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            try:
                labels.append(float(parts[0]))
            except ValueError:
                raise LibsvmParseError(f"bad label {parts[0]!r}", line_no) from None
            prev = 0
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise LibsvmParseError(f"bad feature token {tok!r}", line_no) from None
                if idx < 1:
                    raise LibsvmParseError(f"index {idx} is not 1-based", line_no)
                if idx <= prev:
                    raise LibsvmParseError(
                        f"indices not strictly ascending ({prev} then {idx})", line_no
                    )
                prev = idx
                indices.append(idx - 1)
                data.append(val)
            indptr.append(len(indices))
    n = len(labels)
    if n == 0:
        warnings.warn(f"{path}: no data rows", stacklevel=2)
    p = n_features if n_features is not None else (max(indices) + 1 if indices else 0)
    a = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(n, p),
    )
    y = np.asarray(labels)
    uniq = np.unique(y)
    if uniq.size == 2:
        mapped = np.where(y == uniq[0], -1.0, 1.0)
        y = mapped
    if normalize and n:
        norms = np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
        inv = np.where(norms > 0.0, 1.0 / np.maximum(norms, 1e-300), 0.0)
        a = sp.diags(inv) @ a
        a = sp.csr_matrix(a)
    return Dataset(a=a, labels=y, normalized=normalize)


# ---------------------------------------------------------------------------
# Deterministic synthetic generators
# ---------------------------------------------------------------------------

def _splitmix64(seed: int, count: int) -> np.ndarray:
    """count raw 64-bit outputs of the splitmix64 stream started at seed.

    The state advance is a plain counter (state_i = seed + i * golden mod 2^64),
    so the whole stream vectorizes.
    """
    golden = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + golden * np.arange(1, count + 1, dtype=np.uint64)
        z = (z ^ (z >> np.uint64(30))) * m1
        z = (z ^ (z >> np.uint64(27))) * m2
        return z ^ (z >> np.uint64(31))


def _uniform01(seed: int, count: int) -> np.ndarray:
    # top 53 bits -> [0, 1)
    return (_splitmix64(seed, count) >> np.uint64(11)).astype(np.float64) * 2.0**-53


def gaussian_stream(seed: int, count: int) -> np.ndarray:
    """count standard normals via Box-Muller on consecutive uniform pairs."""
    pairs = (count + 1) // 2
    u = _uniform01(seed, 2 * pairs)
    u1 = np.maximum(u[0::2], 2.0**-53)  # guard log(0)
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = r * np.cos(2.0 * math.pi * u2)
    z[1::2] = r * np.sin(2.0 * math.pi * u2)
    return z[:count]


def gen_portfolio(n: int, p: int, seed: int, sigma: float = 0.1, clamp: float = 1e-3) -> np.ndarray:
    """Price-ratio matrix W = 1 + N(0, sigma^2), entries clamped to >= clamp.

    The clamp keeps the portfolio domain valid even for extreme draws (at
    sigma = 0.1 negative entries are ~1e-23 probable, but the guard makes
    positivity certain).
    """
    if n < 1 or p < 1:
        raise ParameterError("gen_portfolio needs n, p >= 1")
    w = 1.0 + sigma * gaussian_stream(seed, n * p).reshape(n, p)
    return np.maximum(w, clamp)


def gen_logistic(n: int, p: int, seed: int, normalize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic binary classification rows (optionally unit-norm) and labels."""
    z = gaussian_stream(seed, n * p + p + n)
    a = z[: n * p].reshape(n, p)
    if normalize:
        a = a / np.linalg.norm(a, axis=1, keepdims=True)
    x_true = z[n * p: n * p + p]
    noise = z[n * p + p:]
    labels = np.sign(a @ x_true + 0.1 * noise)
    labels[labels == 0.0] = 1.0
    return a, labels


# ---------------------------------------------------------------------------
# First-order baselines
# ---------------------------------------------------------------------------

def fast_gradient(model, x0, mu: float, lips: float, eps: float = 1e-6,
                  max_iter: int = 100000) -> tuple[np.ndarray, list]:
    """Accelerated gradient method with the constant momentum for strongly convex f.

    Stops at ||grad f(x)|| <= eps.  Needs 0 < mu <= lips < inf.
    """
    if not (0.0 < mu <= lips < math.inf):
        raise ParameterError("fast_gradient needs 0 < mu <= L < inf")
    x = np.asarray(x0, dtype=float).copy()
    y = x.copy()
    q = math.sqrt(mu / lips)
    theta = (1.0 - q) / (1.0 + q)
    hist = []
    for k in range(max_iter):
        g = model.grad(x)
        gn = float(np.linalg.norm(g))
        hist.append((k, model.value(x), gn))
        if gn <= eps:
            break
        gy = model.grad(y)
        x_new = y - gy / lips
        y = x_new + theta * (x_new - x)
        x = x_new
    return x, hist


def pg_bb(model, prox_spec: ProxSpec, x0, eps: float = 1e-6, max_iter: int = 100000,
          step_bounds=(1e-12, 1e12)) -> tuple[np.ndarray, list]:
    """Projected/proximal gradient with the Barzilai-Borwein step.

    Stops at ||x_{k+1} - x_k|| <= eps max(1, ||x_k||).
    """
    x = np.asarray(x0, dtype=float).copy()
    g = model.grad(x)
    step = 1.0 / max(np.linalg.norm(g), 1.0)
    hist = []
    for k in range(max_iter):
        x_new = prox_apply(prox_spec, x - step * g, step)
        if not getattr(model, "feasible", lambda _: True)(x_new):
            step *= 0.5
            continue
        hist.append((k, model.value(x_new), float(np.linalg.norm(x_new - x))))
        if np.linalg.norm(x_new - x) <= eps * max(1.0, float(np.linalg.norm(x))):
            x = x_new
            break
        g_new = model.grad(x_new)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 0.0:
            step = float(s @ s) / sy
        step = min(max(step, step_bounds[0]), step_bounds[1])
        x, g = x_new, g_new
    return x, hist


def frank_wolfe(model, x0, eps: float = 1e-4, max_iter: int = 100000,
                linesearch: bool = False) -> tuple[np.ndarray, list]:
    """Frank-Wolfe over the probability simplex; linear oracle is the best vertex.

    Default step 2/(k+2); the linesearch variant minimizes along the segment
    by bisection on the directional derivative.  Stops at
    ||x_{k+1} - x_k|| <= eps max(1, ||x_k||).
    """
    x = np.asarray(x0, dtype=float).copy()
    hist = []
    for k in range(max_iter):
        g = model.grad(x)
        vertex = np.zeros_like(x)
        vertex[int(np.argmin(g))] = 1.0
        d = vertex - x
        if linesearch:
            t = _segment_linesearch(model, x, d)
        else:
            t = 2.0 / (k + 2.0)
        x_new = x + t * d
        hist.append((k, model.value(x_new), float(np.linalg.norm(x_new - x))))
        if np.linalg.norm(x_new - x) <= eps * max(1.0, float(np.linalg.norm(x))):
            x = x_new
            break
        x = x_new
    return x, hist


def _segment_linesearch(model, x, d, iters=60):
    """t in [0, 1] minimizing the convex restriction via derivative bisection."""
    def dphi(t):
        return float(model.grad(x + t * d) @ d)

    if dphi(0.0) >= 0.0:
        return 0.0
    t_hi = 1.0
    # keep strictly feasible for barrier-type objectives
    while t_hi > 1e-16 and not getattr(model, "feasible", lambda _: True)(x + t_hi * d):
        t_hi *= 0.5
    if dphi(t_hi) <= 0.0:
        return t_hi
    lo, hi = 0.0, t_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if dphi(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Trace persistence
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _record_row(r: IterRecord) -> list:
    return [r.k, r.phase, _fmt(r.f), _fmt(r.grad_norm), _fmt(r.lam), _fmt(r.beta),
            _fmt(r.d_k), _fmt(r.tau), _fmt(r.cum_time)]


def trace_to_csv(trace: list[IterRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for r in trace:
        writer.writerow(_record_row(r))
    return buf.getvalue()


def write_trace(trace: list[IterRecord], path, fmt: str = "csv") -> None:
    """Persist a solver trace; floats carry 17 significant digits (lossless)."""
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                fh.write(trace_to_csv(trace))
        elif fmt == "json":
            rows = [
                {
                    "iter": r.k, "phase": r.phase, "f": r.f, "grad_norm": r.grad_norm,
                    "lambda": r.lam, "beta": r.beta, "d_k": r.d_k, "tau": r.tau,
                    "cum_time_s": r.cum_time,
                }
                for r in trace
            ]
            with open(path, "w") as fh:
                json.dump(rows, fh, indent=1)
                fh.write("\n")
        else:
            raise ParameterError(f"unknown trace format {fmt!r}")
    except OSError as exc:
        raise OSError(f"writing trace to {path}: {exc}") from exc


def read_trace(path, fmt: str = "csv") -> list[IterRecord]:
    try:
        if fmt == "csv":
            with open(path, newline="") as fh:
                rows = list(csv.reader(fh))
            if rows and rows[0] == TRACE_COLUMNS:
                rows = rows[1:]
            return [
                IterRecord(int(r[0]), float(r[2]), float(r[3]), float(r[4]), float(r[5]),
                           float(r[6]), float(r[7]), r[1], float(r[8]))
                for r in rows
            ]
        if fmt == "json":
            with open(path) as fh:
                rows = json.load(fh)
            return [
                IterRecord(int(r["iter"]), float(r["f"]), float(r["grad_norm"]),
                           float(r["lambda"]), float(r["beta"]), float(r["d_k"]),
                           float(r["tau"]), r["phase"], float(r["cum_time_s"]))
                for r in rows
            ]
        raise ParameterError(f"unknown trace format {fmt!r}")
    except OSError as exc:
        raise OSError(f"reading trace from {path}: {exc}") from exc
