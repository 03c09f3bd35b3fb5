"""Damped-step / two-phase Newton method for generalized self-concordant objectives.

The damped phase uses the closed-form step size from the (M, nu) certificate,
which guarantees a computable decrease without any line search.  Phase 2
switches to full steps, either heuristically (analytic step close to 1) or
by checking the theorem entry radius with a smallest-eigenvalue estimate.
A floor-augmented Armijo line search is available as an alternative step rule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernel, linops
from .errors import DomainError, ParameterError
from .kernel import GscParams
from .models import GlmModel, glm_gsc_params

MAX_HALVINGS = 60


@dataclass
class SolveOptions:
    nu_choice: str = "native"          # native | force_2 | force_3
    step_rule: str = "analytic"        # analytic | linesearch_floor | full | auto
    eps: float = 1e-8
    max_iter: int = 500
    phase2: str = "heuristic_tau"      # heuristic_tau | strict_theorem | off
    phase2_tau_threshold: float = 0.9
    armijo_c1: float = 1e-6
    inner_method: str = "auto"         # auto | cholesky | cg
    inner_tol: float = 1e-10
    inner_max_iter: int | None = None
    record_time: bool = True

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ParameterError("eps must be positive")
        if not (0.0 < self.armijo_c1 < 1.0):
            raise ParameterError("armijo_c1 must lie in (0, 1)")
        if self.step_rule not in ("analytic", "linesearch_floor", "full", "auto", "exact"):
            raise ParameterError(f"unknown step_rule {self.step_rule!r}")
        if self.phase2 not in ("heuristic_tau", "strict_theorem", "off"):
            raise ParameterError(f"unknown phase2 mode {self.phase2!r}")


@dataclass
class IterRecord:
    k: int
    f: float
    grad_norm: float
    lam: float
    beta: float
    d_k: float
    tau: float
    phase: str          # "damped" | "full"
    cum_time: float


@dataclass
class SolveResult:
    x: np.ndarray
    trace: list[IterRecord]
    status: str         # "converged" | "max_iter" | "domain_error"
    params: GscParams
    iterations: int = 0
    grad_criterion_met: bool = False
    nfval: int = 0
    extra: dict = field(default_factory=dict)


def resolve_params(model, nu_choice: str) -> GscParams:
    """Map a model's native certificate through the requested nu classification."""
    if nu_choice == "native":
        p = model.params
        p.require_solver_range()
        return p
    if nu_choice == "force_2":
        if isinstance(model, GlmModel):
            return glm_gsc_params(model, 2)
        if model.params.nu == 2.0:
            return model.params
        raise ParameterError(
            "force_2 needs a Lipschitz gradient constant; only GLM models expose one"
        )
    if nu_choice == "force_3":
        if model.params.nu == 3.0:
            return model.params
        if isinstance(model, GlmModel):
            return glm_gsc_params(model, 3)
        raise ParameterError("force_3 needs a strong convexity constant or a nu=3 model")
    raise ParameterError(f"unknown nu_choice {nu_choice!r}")


class LinesearchResult(NamedTuple):
    tau: float
    nfval: int


def linesearch_step(model, x, n, tau_floor: float, c1: float = 1e-6,
                    f0: float | None = None, g0=None) -> LinesearchResult:
    """Halving Armijo search over tau in [tau_floor, 1].

    Starts at tau = 1 and halves until f(x + tau n) <= f(x) + c1 tau <grad, n>;
    the floor is accepted unconditionally (the analytic step guarantees
    descent there), so the search never returns below it.  tau_floor = 0
    gives plain backtracking.  Points outside the domain count as failures.
    """
    if f0 is None:
        f0 = model.value(x)
    if g0 is None:
        g0 = model.grad(x)
    slope = float(np.asarray(g0) @ n)
    if slope >= 0.0:
        raise ParameterError("linesearch needs a descent direction")
    tau, nfval = 1.0, 0
    for _ in range(MAX_HALVINGS):
        if tau <= tau_floor:
            return LinesearchResult(max(tau, tau_floor), nfval)
        try:
            nfval += 1
            if model.value(x + tau * n) <= f0 + c1 * tau * slope:
                return LinesearchResult(tau, nfval)
        except DomainError:
            pass
        tau *= 0.5
    return LinesearchResult(max(tau, tau_floor), nfval)


def _feasible(model, x):
    check = getattr(model, "feasible", None)
    if check is None:
        return True
    return check(x)


def minimize(model, x0, opts: SolveOptions | None = None) -> SolveResult:
    """Newton iteration with analytic damped steps and an optional full-step phase.

    Terminates when the decrement satisfies lambda_k <= eps max(1, lambda_0)
    or at max_iter; the gradient-norm criterion
    ||grad f|| <= eps max(1, ||grad f(x0)||) is tracked separately.
    """
    opts = opts or SolveOptions()
    if opts.step_rule == "exact":
        raise ParameterError("step_rule 'exact' is only meaningful for minimize_qn")
    params = resolve_params(model, opts.nu_choice)
    nu, m = params.nu, params.m
    x = np.asarray(x0, dtype=float).copy()
    model.check_domain(x)

    threshold = None
    if opts.phase2 == "strict_theorem":
        threshold = kernel.phase2_threshold(nu, "newton")

    t0 = time.perf_counter()
    trace: list[IterRecord] = []
    nfval = 0
    g0_norm = None
    lam0 = None
    warm = None
    in_full_phase = False
    status = "max_iter"
    f_x = model.value(x)

    for k in range(opts.max_iter + 1):
        g = model.grad(x)
        gnorm = float(np.linalg.norm(g))
        if g0_norm is None:
            g0_norm = gnorm

        if model.has_dense_hessian and opts.inner_method != "cg":
            h = model.hessian(x)
        else:
            h = lambda v, _x=x.copy(): model.hvp(_x, v)
        direction = linops.newton_direction(
            linops.NewtonSystem(h, g),
            method=opts.inner_method,
            tol=opts.inner_tol,
            max_iter=opts.inner_max_iter,
            warm_start=warm,
        )
        n, lam = direction.n, direction.lam
        warm = n
        if lam0 is None:
            lam0 = lam

        beta = m * float(np.linalg.norm(n))
        tau_an, d_k = kernel.step_size(nu, m, lam, beta)
        cum = (time.perf_counter() - t0) if opts.record_time else 0.0

        if lam <= opts.eps * max(1.0, lam0):
            trace.append(IterRecord(k, f_x, gnorm, lam, beta, d_k, 1.0,
                                    "full" if in_full_phase else "damped", cum))
            status = "converged"
            break
        if k == opts.max_iter:
            trace.append(IterRecord(k, f_x, gnorm, lam, beta, d_k, 1.0,
                                    "full" if in_full_phase else "damped", cum))
            status = "max_iter"
            break

        # phase-2 entry
        if not in_full_phase and opts.phase2 == "strict_theorem":
            sigma = None
            if nu < 3.0:
                est = linops.smallest_eigenvalue(h, dim=x.size) if callable(h) \
                    else linops.smallest_eigenvalue(h)
                sigma = est.value if est.converged else None
            try:
                if lam < threshold.entry_lambda_max(m, sigma):
                    in_full_phase = True
            except ParameterError:
                pass
        if not in_full_phase and opts.phase2 == "heuristic_tau" \
                and opts.step_rule != "full" and tau_an >= opts.phase2_tau_threshold:
            in_full_phase = True

        if in_full_phase or opts.step_rule == "full":
            tau = 1.0
        elif opts.step_rule == "linesearch_floor":
            ls = linesearch_step(model, x, n, tau_an, opts.armijo_c1, f0=f_x, g0=g)
            tau, nfval = ls.tau, nfval + ls.nfval
        else:  # analytic / auto
            tau = tau_an

        # numerical domain guard: theory keeps analytic steps feasible, but
        # full steps on bounded domains may exit; halve until inside
        for _ in range(MAX_HALVINGS):
            if _feasible(model, x + tau * n):
                break
            tau *= 0.5
        else:
            trace.append(IterRecord(k, f_x, gnorm, lam, beta, d_k, tau, "damped", cum))
            status = "domain_error"
            break

        phase = "full" if tau == 1.0 else "damped"
        trace.append(IterRecord(k, f_x, gnorm, lam, beta, d_k, tau, phase, cum))
        x = x + tau * n
        f_x = model.value(x)
        nfval += 1

    grad_ok = float(np.linalg.norm(model.grad(x))) <= opts.eps * max(1.0, g0_norm)
    return SolveResult(
        x=x, trace=trace, status=status, params=params,
        iterations=max(len(trace) - 1, 0), grad_criterion_met=grad_ok, nfval=nfval,
    )


@dataclass
class ExistenceCheck:
    satisfied: bool
    lhs: float
    rhs: float
    sigma_min: float | None = None


def existence_check(model, x) -> ExistenceCheck:
    """Diagnostic for the solution-existence condition.

    lhs is the local dual gradient norm lambda(x), rhs the radius
    2 sigma_min(x)^((3-nu)/2) / ((4-nu) M); rhs = inf when M = 0.  Never
    gates the solver.
    """
    x = np.asarray(x, dtype=float)
    model.check_domain(x)
    params = model.params
    nu, m = params.nu, params.m
    g = model.grad(x)
    if model.has_dense_hessian:
        h = model.hessian(x)
    else:
        h = lambda v: model.hvp(x, v)
    try:
        direction = linops.newton_direction(linops.NewtonSystem(h, g))
    except linops.NotPositiveDefiniteError:
        return ExistenceCheck(False, math.inf, 0.0)
    lam = direction.lam
    if m == 0.0:
        return ExistenceCheck(True, lam, math.inf)
    if nu == 3.0:
        return ExistenceCheck(lam < 2.0 / m, lam, 2.0 / m)
    est = linops.smallest_eigenvalue(h, dim=x.size) if callable(h) else linops.smallest_eigenvalue(h)
    sigma = est.value
    rhs = 2.0 * sigma ** ((3.0 - nu) / 2.0) / ((4.0 - nu) * m)
    return ExistenceCheck(lam < rhs, lam, rhs, sigma)
