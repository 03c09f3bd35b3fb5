"""Proximal operators and the scaled-prox subproblem solver."""

import itertools
import math

import numpy as np
import pytest

from gscopt import linops
from gscopt.errors import ParameterError
from gscopt.prox import (ProxSpec, project_simplex, prox_apply, prox_residual,
                         scaled_prox_subproblem)


def test_soft_threshold_values():
    assert prox_apply(ProxSpec("l1", weight=1.0), np.array([1.5]), 1.0)[0] == pytest.approx(0.5)
    assert prox_apply(ProxSpec("l1", weight=0.5), np.array([0.3]), 1.0)[0] == 0.0
    got = prox_apply(ProxSpec("l1", weight=0.5), np.array([-2.0, 0.2, 1.0]), 2.0)
    assert np.allclose(got, [-1.0, 0.0, 0.0])


def test_simplex_values():
    assert np.allclose(prox_apply(ProxSpec("simplex"), np.array([2.0, 0.0])), [1.0, 0.0])
    assert np.allclose(prox_apply(ProxSpec("simplex"), np.array([0.6, 0.6])), [0.5, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = project_simplex(rng.normal(size=rng.integers(2, 30)) * 3.0)
        assert x.sum() == pytest.approx(1.0, abs=1e-12)
        assert x.min() >= 0.0


def test_box_and_zero():
    u = np.array([-3.0, 0.5, 7.0])
    assert np.allclose(prox_apply(ProxSpec("box", lo=-1.0, hi=2.0), u), [-1.0, 0.5, 2.0])
    assert np.allclose(prox_apply(ProxSpec("zero"), u), u)
    with pytest.raises(ParameterError):
        ProxSpec("box", lo=2.0, hi=-2.0)
    with pytest.raises(ParameterError):
        ProxSpec("huber")


def _simplex_active_set(u):
    p = u.size
    best, best_val = None, math.inf
    for k in range(1, p + 1):
        for support in itertools.combinations(range(p), k):
            s = list(support)
            shift = (1.0 - u[s].sum()) / k
            x = np.zeros(p)
            x[s] = u[s] + shift
            if x[s].min() < -1e-12:
                continue
            val = float(np.sum((x - u) ** 2))
            if val < best_val:
                best, best_val = x, val
    return best


def test_simplex_matches_active_set_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        p = int(rng.integers(2, 7))
        u = rng.normal(size=p) * 2.0
        assert np.max(np.abs(project_simplex(u) - _simplex_active_set(u))) <= 1e-12


def test_prox_nonexpansive_euclidean():
    rng = np.random.default_rng(2)
    specs = [ProxSpec("l1", weight=0.7), ProxSpec("simplex"),
             ProxSpec("box", lo=-1.0, hi=1.0), ProxSpec("zero")]
    for spec in specs:
        for _ in range(50):
            u, v = rng.normal(size=8), rng.normal(size=8)
            pu, pv = prox_apply(spec, u), prox_apply(spec, v)
            assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


def test_subproblem_reductions():
    rng = np.random.default_rng(3)
    h = np.diag([2.0, 1.0])
    grad = np.array([1.0, 0.0])
    x = np.array([1.0, 1.0])
    z = scaled_prox_subproblem(h, grad, x, ProxSpec("zero"), tol=1e-12)
    assert np.allclose(z, x - np.linalg.solve(h, grad), atol=1e-10)
    z = scaled_prox_subproblem(np.eye(2), grad, x, ProxSpec("l1", weight=0.3), tol=1e-12)
    assert np.allclose(z, prox_apply(ProxSpec("l1", weight=0.3), x - grad, 1.0), atol=1e-11)


def _brute_force_2d(h, grad, x, weight):
    # grid + polish oracle for min <g, z-x> + 1/2 (z-x)'H(z-x) + w ||z||_1
    def obj(z):
        dz = z - x
        return float(grad @ dz) + 0.5 * float(dz @ h @ dz) + weight * np.abs(z).sum()

    grid = np.linspace(-3.0, 3.0, 241)
    best, best_val = None, math.inf
    for z0 in grid:
        for z1 in grid:
            z = np.array([z0, z1])
            val = obj(z)
            if val < best_val:
                best, best_val = z, val
    # coordinate-descent polish (each scalar subproblem is a soft-threshold)
    z = best.copy()
    for _ in range(400):
        for i in range(2):
            rest = grad[i] + h[i] @ (z - x) - h[i, i] * (z[i] - x[i])
            center = x[i] - rest / h[i, i]
            z[i] = math.copysign(max(abs(center) - weight / h[i, i], 0.0), center)
    return z


def test_subproblem_against_brute_force_2d():
    h = np.diag([2.0, 1.0])
    grad = np.array([1.0, 0.0])
    x = np.array([1.0, 1.0])
    for weight in (10.0, 0.8, 0.05):
        z = scaled_prox_subproblem(h, grad, x, ProxSpec("l1", weight=weight), tol=1e-12)
        want = _brute_force_2d(h, grad, x, weight)
        assert np.max(np.abs(z - want)) <= 1e-8, (weight, z, want)
    # heavy weight zeroes the solution outright
    z = scaled_prox_subproblem(h, grad, x, ProxSpec("l1", weight=10.0), tol=1e-12)
    assert np.allclose(z, 0.0, atol=1e-10)


def test_subproblem_first_order_optimality():
    rng = np.random.default_rng(4)
    for trial in range(20):
        p = 6
        base = rng.normal(size=(p, p))
        h = base @ base.T + np.eye(p)
        grad = rng.normal(size=p)
        x = rng.normal(size=p)
        spec = ProxSpec("l1", weight=0.4) if trial % 2 else ProxSpec("simplex")
        z = scaled_prox_subproblem(h, grad, x, spec, tol=1e-11)
        s = 1.0 / linops.largest_eigenvalue(h, dim=p)
        res = prox_residual(spec, z, grad + h @ (z - x), s)
        assert res <= 1e-10


def test_scaled_prox_nonexpansive_in_h_norm():
    # ||P(u) - P(v)||_H <= ||u - v||_{H^-1}; P computed via the subproblem
    # solver with Q(z) = 1/2 z'Hz - u'z, whose minimizer with g is prox_{H,g}
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = int(rng.integers(2, 11))
        base = rng.normal(size=(p, p))
        h = base @ base.T + np.eye(p)
        u, v = rng.normal(size=p), rng.normal(size=p)
        spec = ProxSpec("l1", weight=0.3)

        def scaled_prox(w):
            # argmin g(z) + 1/2 ||z - H^{-1}w||_H^2 = argmin g(z) + 1/2 z'Hz - w'z
            xc = np.linalg.solve(h, w)
            return scaled_prox_subproblem(h, np.zeros(p), xc, spec, tol=1e-12)

        pu, pv = scaled_prox(u), scaled_prox(v)
        lhs = math.sqrt((pu - pv) @ h @ (pu - pv))
        rhs = math.sqrt((u - v) @ np.linalg.solve(h, u - v))
        assert lhs <= rhs + 1e-8
