"""Exact proximal operators and the scaled-prox subproblem solver.

prox_apply evaluates argmin_z g(z) + (1/(2 step)) ||z - u||^2 in closed form
for the supported regularizers.  scaled_prox_subproblem minimizes the local
quadratic model Q(z) + g(z) of a composite objective with an accelerated
proximal-gradient loop (function-value restart), which is the inner solve of
the proximal Newton method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, SubproblemError
from .linops import _as_matvec, largest_eigenvalue


@dataclass(frozen=True)
class ProxSpec:
    """Simple regularizer with an exact prox: zero, l1(weight), simplex, box(lo, hi)."""

    kind: str
    weight: float = 0.0
    lo: float = -math.inf
    hi: float = math.inf

    def __post_init__(self):
        if self.kind not in ("zero", "l1", "simplex", "box"):
            raise ParameterError(f"unknown regularizer kind {self.kind!r}")
        if self.kind == "l1" and self.weight < 0.0:
            raise ParameterError("l1 weight must be nonnegative")
        if self.kind == "box" and not (self.lo <= self.hi):
            raise ParameterError("box needs lo <= hi")

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.kind == "l1":
            return self.weight * float(np.abs(x).sum())
        if self.kind == "simplex":
            feas = abs(x.sum() - 1.0) <= 1e-9 and np.all(x >= -1e-12)
            return 0.0 if feas else math.inf
        if self.kind == "box":
            feas = np.all(x >= self.lo - 1e-12) and np.all(x <= self.hi + 1e-12)
            return 0.0 if feas else math.inf
        return 0.0

    def feasible(self, x) -> bool:
        return self.value(x) < math.inf


def project_simplex(u: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = 1}, sort-based O(p log p)."""
    u = np.asarray(u, dtype=float)
    s = np.sort(u)[::-1]
    css = np.cumsum(s) - 1.0
    idx = np.arange(1, u.size + 1)
    cond = s - css / idx > 0.0
    rho = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[rho - 1] / rho
    return np.maximum(u - theta, 0.0)


def prox_apply(g: ProxSpec, u, step: float = 1.0) -> np.ndarray:
    """Exact minimizer of g(z) + (1/(2 step)) ||z - u||^2."""
    if step <= 0.0:
        raise ParameterError("step must be positive")
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if g.kind == "zero":
        return u.copy()
    if g.kind == "l1":
        thr = g.weight * step
        return np.sign(u) * np.maximum(np.abs(u) - thr, 0.0)
    if g.kind == "simplex":
        return project_simplex(u)
    return np.clip(u, g.lo, g.hi)


def prox_residual(g: ProxSpec, z, grad_z, step: float) -> float:
    """Norm of the composite gradient mapping (1/s)(z - prox_g(z - s grad, s))."""
    z = np.asarray(z, dtype=float)
    return float(np.linalg.norm(z - prox_apply(g, z - step * grad_z, step)) / step)


def scaled_prox_subproblem(h, grad, x, g: ProxSpec, tol: float = 1e-10,
                           max_inner: int = 20000, l_h: float | None = None) -> np.ndarray:
    """argmin_z <grad, z-x> + 1/2 (z-x)' H (z-x) + g(z) by accelerated prox-gradient.

    Stops when the composite gradient-mapping residual at step 1/L falls
    below tol; restarts the momentum whenever the objective increases.
    For g = zero the result matches the Newton system solve; for H = I it is
    a single exact prox step.
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(grad, dtype=float)
    matvec = _as_matvec(h)
    if l_h is None:
        l_h = largest_eigenvalue(h, dim=x.size)
    if l_h <= 0.0:
        raise ParameterError("subproblem needs a positive curvature bound")
    s = 1.0 / l_h

    def q_grad(z):
        return grad + matvec(z - x)

    def q_val(z):
        dz = z - x
        return float(grad @ dz) + 0.5 * float(dz @ matvec(dz)) + g.value(z)

    z = prox_apply(g, x - s * grad, s)
    y = z.copy()
    t_m = 1.0
    f_prev = q_val(z)
    for it in range(max_inner):
        gz = q_grad(z)
        res = prox_residual(g, z, gz, s)
        if res <= tol:
            return z
        z_new = prox_apply(g, y - s * q_grad(y), s)
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_m * t_m))
        y = z_new + ((t_m - 1.0) / t_new) * (z_new - z)
        f_new = q_val(z_new)
        if f_new > f_prev:
            # restart: drop momentum and retake a plain prox-gradient step
            t_new = 1.0
            z_new = prox_apply(g, z - s * q_grad(z), s)
            y = z_new.copy()
            f_new = q_val(z_new)
        z, t_m, f_prev = z_new, t_new, f_new
    res = prox_residual(g, z, q_grad(z), s)
    if res <= tol:
        return z
    raise SubproblemError(
        f"prox subproblem stalled at residual {res:.3e} (target {tol:.1e})",
        residual=res,
    )
