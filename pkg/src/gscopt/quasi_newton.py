"""BFGS quasi-Newton scheme with secant maintenance and Dennis-More diagnostics.

The Hessian approximation H and its inverse B are both updated by the
matching rank-two formulas; updates are skipped (never damped) when the
curvature pairing <y, s> fails its guard, since for GSC objectives the
pairing is positive in exact arithmetic and a failure indicates numerics.

The step rule is repo policy rather than a claim from the analysis: the
analytic GSC step computed with the surrogate decrement
lambda_hat = sqrt(g' B g) serves as a floor under an Armijo backtracking
that starts at min(1, 2 tau_floor).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from . import kernel
from .errors import DomainError, NotPositiveDefiniteError, ParameterError
from .newton import IterRecord, SolveOptions, SolveResult, resolve_params

CURVATURE_GUARD = 1e-12


@dataclass(frozen=True)
class BfgsState:
    h: np.ndarray          # Hessian approximation
    b: np.ndarray          # its inverse
    x_prev: np.ndarray | None = None
    g_prev: np.ndarray | None = None
    n_skipped: int = 0

    @classmethod
    def identity(cls, p, scale=1.0):
        return cls(h=np.eye(p) * scale, b=np.eye(p) / scale)


def bfgs_update(state: BfgsState, s, y) -> BfgsState:
    """Rank-two update H' = H + y y'/<y,s> - (H s)(H s)'/<H s, s>.

    The inverse is maintained by the matching Sherman-Morrison form.  When
    <y, s> <= guard * ||y|| ||s|| the update is skipped and the state is
    returned unchanged except for the skip counter.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    ys = float(y @ s)
    if ys <= CURVATURE_GUARD * np.linalg.norm(y) * np.linalg.norm(s):
        return replace(state, n_skipped=state.n_skipped + 1)
    hs = state.h @ s
    shs = float(s @ hs)
    if shs <= 0.0:
        return replace(state, n_skipped=state.n_skipped + 1)
    h_new = state.h + np.outer(y, y) / ys - np.outer(hs, hs) / shs
    rho = 1.0 / ys
    v = np.eye(s.size) - rho * np.outer(s, y)
    b_new = v @ state.b @ v.T + rho * np.outer(s, s)
    return replace(state, h=h_new, b=b_new)


def _exact_quadratic_step(model, x, d, g):
    curv = float(d @ model.hvp(x, d))
    if curv <= 0.0:
        raise NotPositiveDefiniteError("nonpositive curvature along the QN direction")
    return -float(g @ d) / curv


def minimize_qn(model, x0, opts: SolveOptions | None = None, h0=None) -> SolveResult:
    """Quasi-Newton iteration x+ = x - tau B grad f with BFGS updates.

    h0 seeds the Hessian approximation (default: identity scaled by
    ||grad f(x0)|| / max(1, ||x0||)).  step_rule "full" takes tau computed
    by the analytic rule with the surrogate decrement; "linesearch_floor"
    and "analytic"/"auto" run the floored Armijo search described in the
    module docstring.  An "exact" rule (one-dimensional Newton step along
    the direction; exact on quadratics) is accepted as well.
    Terminates on ||grad f|| <= eps max(1, ||grad f(x0)||).
    """
    opts = opts or SolveOptions()
    params = resolve_params(model, opts.nu_choice)
    nu, m = params.nu, params.m
    x = np.asarray(x0, dtype=float).copy()
    model.check_domain(x)
    p = x.size

    if h0 is None:
        g_start = model.grad(x)
        scale = max(np.linalg.norm(g_start), 1e-8) / max(1.0, float(np.linalg.norm(x)))
        state = BfgsState.identity(p, scale)
    else:
        h0 = np.asarray(h0, dtype=float)
        state = BfgsState(h=h0.copy(), b=np.linalg.inv(h0))

    t0 = time.perf_counter()
    trace: list[IterRecord] = []
    status = "max_iter"
    g = model.grad(x)
    g0_norm = float(np.linalg.norm(g))
    f_x = model.value(x)
    states = [state]

    for k in range(opts.max_iter + 1):
        gnorm = float(np.linalg.norm(g))
        cum = (time.perf_counter() - t0) if opts.record_time else 0.0
        d = -(state.b @ g)
        lam_hat = math.sqrt(max(0.0, -float(g @ d)))
        beta = m * float(np.linalg.norm(d))
        tau_floor, d_k = kernel.step_size(nu, m, lam_hat, beta)

        if gnorm <= opts.eps * max(1.0, g0_norm):
            trace.append(IterRecord(k, f_x, gnorm, lam_hat, beta, d_k, 1.0, "full", cum))
            status = "converged"
            break
        if k == opts.max_iter:
            trace.append(IterRecord(k, f_x, gnorm, lam_hat, beta, d_k, 1.0, "damped", cum))
            status = "max_iter"
            break
        if lam_hat == 0.0:
            # B lost positive definiteness numerically; restart from identity
            state = BfgsState.identity(p, 1.0)
            states.append(state)
            continue

        if opts.step_rule == "exact":
            tau = _exact_quadratic_step(model, x, d, g)
        else:
            tau = _floored_armijo(model, x, d, g, f_x, tau_floor, opts.armijo_c1)
        phase = "full" if tau >= 1.0 else "damped"
        trace.append(IterRecord(k, f_x, gnorm, lam_hat, beta, d_k, min(tau, 1.0), phase, cum))

        x_new = x + tau * d
        g_new = model.grad(x_new)
        state = bfgs_update(
            replace(state, x_prev=x, g_prev=g), x_new - x, g_new - g
        )
        states.append(state)
        x, g = x_new, g_new
        f_x = model.value(x)

    return SolveResult(
        x=x, trace=trace, status=status, params=params,
        iterations=max(len(trace) - 1, 0),
        grad_criterion_met=(status == "converged"),
        extra={"state": state, "states": states, "skipped_updates": state.n_skipped},
    )


def _floored_armijo(model, x, d, g, f0, tau_floor, c1):
    """Armijo halving from min(1, 2 tau_floor) with the analytic step as floor.

    The floor is accepted if it still decreases f; otherwise halving
    continues below it (pure backtracking guard, keeps descent monotone
    even when the surrogate decrement misjudges a direction).
    """
    slope = float(g @ d)
    if slope >= 0.0:
        raise ParameterError("quasi-Newton direction lost descent")
    tau = min(1.0, 2.0 * tau_floor)
    for _ in range(80):
        try:
            f_try = model.value(x + tau * d)
            if f_try <= f0 + c1 * tau * slope:
                return tau
            if tau <= tau_floor and f_try < f0:
                return tau
        except DomainError:
            pass
        tau *= 0.5
    return tau


def dennis_more_ratio(h_k, hess_star, x_k, x_star) -> float:
    """||(H_k - H*)(x_k - x*)||_{H*^-1} / ||x_k - x*||_{H*} in the solution metric."""
    h_k = np.asarray(h_k, dtype=float)
    hess_star = np.asarray(hess_star, dtype=float)
    delta = np.asarray(x_k, dtype=float) - np.asarray(x_star, dtype=float)
    den2 = float(delta @ (hess_star @ delta))
    if den2 <= 0.0:
        raise ParameterError("dennis_more_ratio is undefined at coincident points")
    w = (h_k - hess_star) @ delta
    num2 = float(w @ np.linalg.solve(hess_star, w))
    return math.sqrt(max(0.0, num2) / den2)
