"""Multivariate objective oracles: GLM finite sums, the log-utility portfolio
objective, and the DWD objective, each carrying certified (M, nu) parameters.

All models expose the same oracle surface:

    value(x), grad(x), hessian(x), hvp(x, v), dim, params,
    check_domain(x)  (raises DomainError with the violating row)

The dense Hessian is assembled only for dim <= p_dense (default 2000);
larger problems are served through hvp (conjugate-gradient path).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import kernel
from .atoms import LossAtom, neg_power
from .errors import DomainError, ParameterError
from .kernel import GscParams

P_DENSE_DEFAULT = 2000


def _row_norms(a):
    if sp.issparse(a):
        return np.sqrt(np.asarray(a.multiply(a).sum(axis=1)).ravel())
    return np.linalg.norm(a, axis=1)


def _power_iteration_lmax(matvec, p, tol=1e-3, max_iter=500):
    """Largest eigenvalue of a symmetric PSD operator, deterministic start."""
    v = np.ones(p) / math.sqrt(p)
    lam = 0.0
    for _ in range(max_iter):
        w = matvec(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ matvec(v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        v, lam = v_new, lam_new
    return lam


class GlmModel:
    """f(x) = sum_i w_i phi(a_i' x + b_i) + (1/2) x' Q x + c' x with diagonal Q."""

    def __init__(self, a, atom: LossAtom, b=None, weights=None, q_diag=0.0, c=None,
                 p_dense=P_DENSE_DEFAULT):
        self.a = a if sp.issparse(a) else np.asarray(a, dtype=float)
        self.n, self.dim = self.a.shape
        self.atom = atom
        self.b = np.zeros(self.n) if b is None else np.asarray(b, dtype=float)
        if weights is None:
            self.w = np.full(self.n, 1.0 / self.n)
        else:
            self.w = np.asarray(weights, dtype=float)
            if np.any(self.w <= 0.0):
                raise ParameterError("GLM weights must be positive")
        q = np.asarray(q_diag, dtype=float)
        self.q_diag = np.full(self.dim, float(q)) if q.ndim == 0 else q.copy()
        if self.q_diag.shape != (self.dim,):
            raise ParameterError("q_diag must be a scalar or a vector of length p")
        if np.any(self.q_diag < 0.0):
            raise ParameterError("q_diag must be nonnegative")
        self.c = np.zeros(self.dim) if c is None else np.asarray(c, dtype=float)
        self.p_dense = p_dense
        self.row_norms = _row_norms(self.a)
        self.params = glm_gsc_params(self, "native")

    # -- domain ------------------------------------------------------------
    def _z(self, x):
        return (self.a @ x) + self.b

    def check_domain(self, x):
        lo, hi = self.atom.domain
        if math.isinf(lo) and math.isinf(hi):
            return
        z = self._z(x)
        bad = np.flatnonzero((z <= lo) | (z >= hi))
        if bad.size:
            raise DomainError(
                f"row {bad[0]}: margin {z[bad[0]]} outside atom domain ({lo}, {hi})",
                row=int(bad[0]),
            )

    def feasible(self, x):
        lo, hi = self.atom.domain
        if math.isinf(lo) and math.isinf(hi):
            return True
        z = self._z(x)
        return bool(np.all((z > lo) & (z < hi)))

    # -- oracle ------------------------------------------------------------
    def value(self, x):
        self.check_domain(x)
        z = self._z(x)
        quad = 0.5 * float(x @ (self.q_diag * x)) + float(self.c @ x)
        return float(self.w @ self.atom._derivs[0](z)) + quad

    def grad(self, x):
        self.check_domain(x)
        z = self._z(x)
        g = self.a.T @ (self.w * self.atom._derivs[1](z))
        return np.asarray(g).ravel() + self.q_diag * x + self.c

    def _d2w(self, x):
        return self.w * self.atom._derivs[2](self._z(x))

    def hessian(self, x):
        if self.dim > self.p_dense:
            raise ParameterError(
                f"dense Hessian disabled for p={self.dim} > p_dense={self.p_dense}; use hvp"
            )
        self.check_domain(x)
        d = self._d2w(x)
        if sp.issparse(self.a):
            h = (self.a.multiply(d[:, None])).T @ self.a
            h = np.asarray(h.todense())
        else:
            h = self.a.T @ (d[:, None] * self.a)
        h[np.diag_indices_from(h)] += self.q_diag
        return h

    def hvp(self, x, v):
        self.check_domain(x)
        d = self._d2w(x)
        av = self.a @ v
        out = self.a.T @ (d * av)
        return np.asarray(out).ravel() + self.q_diag * v

    @property
    def has_dense_hessian(self):
        return self.dim <= self.p_dense

    # -- structure helpers ---------------------------------------------------
    def lambda_min_q(self):
        """Exact smallest eigenvalue of the diagonal regularizer."""
        return float(self.q_diag.min()) if self.dim else 0.0

    def smoothness_bounds(self):
        """(mu, L): strong convexity from Q, Lipschitz gradient when phi'' is bounded.

        L must not undershoot (a too-large 1/L step breaks gradient methods),
        so the power-iteration estimate is tightened and padded slightly.
        """
        mu = self.lambda_min_q()
        if math.isinf(self.atom.d2_sup):
            return mu, math.inf
        lmax = _power_iteration_lmax(
            lambda v: np.asarray(self.a.T @ (self.w * (self.a @ v))).ravel(), self.dim,
            tol=1e-8, max_iter=5000,
        )
        return mu, self.atom.d2_sup * lmax * 1.001 + float(self.q_diag.max())


def glm_gsc_params(model: GlmModel, target_nu="native") -> GscParams:
    """Certified (M, nu) of a GLM under the requested classification.

    native: sum rule over the affine-composed atoms,
            M = max_i w_i^(1-nu/2) M_phi ||a_i||^(3-nu) (the 1/n-weighted
            case gives n^(nu/2-1) max_i M_phi ||a_i||^(3-nu)).
    2:      Lipschitz-gradient reclassification; needs a bounded phi''.
    3:      strongly convex quadratic route,
            M = lam_min(Q)^((nu-3)/2) max_i (n w_i)^(1-nu/2) M_phi ||a_i||^(3-nu).
    """
    nu = model.atom.params.nu
    if not (2.0 <= nu <= 3.0):
        raise ParameterError(
            f"finite-sum construction requires atom nu in [2, 3], got {nu}"
        )
    if target_nu in ("native", None):
        parts = [
            (kernel.transform_affine(model.atom.params, rn), wi)
            for rn, wi in zip(model.row_norms, model.w)
        ]
        return kernel.combine_sum(parts)
    if target_nu in (2, 2.0, "2"):
        native = glm_gsc_params(model, "native")
        if native.nu == 2.0:
            return native
        _, lips = model.smoothness_bounds()
        if math.isinf(lips):
            raise ParameterError(
                f"cannot force nu=2: atom {model.atom.kind} has unbounded curvature"
            )
        return kernel.reparam(native, "lipschitz_gradient", lips)
    if target_nu in (3, 3.0, "3"):
        if nu == 3.0:
            return glm_gsc_params(model, "native")
        lam_min = model.lambda_min_q()
        if lam_min <= 0.0:
            raise ParameterError("forcing nu=3 needs lam_min(Q) > 0 or a nu=3 atom")
        scaled = (model.w * model.n) ** (1.0 - nu / 2.0) * model.atom.params.m
        m_hat = lam_min ** ((nu - 3.0) / 2.0) * float(
            np.max(scaled * model.row_norms ** (3.0 - nu))
        )
        return GscParams(m_hat, 3.0)
    raise ParameterError(f"unknown target_nu {target_nu!r}")


class QuadraticModel:
    """f(x) = 1/2 x' A x - b' x; certified (0, nu) for every nu (we report nu = 2)."""

    def __init__(self, a_mat, b=None, nu=2.0):
        self.a_mat = np.asarray(a_mat, dtype=float)
        self.dim = self.a_mat.shape[0]
        self.b = np.zeros(self.dim) if b is None else np.asarray(b, dtype=float)
        self.params = GscParams(0.0, nu)

    def check_domain(self, x):
        return None

    def feasible(self, x):
        return True

    def value(self, x):
        return 0.5 * float(x @ (self.a_mat @ x)) - float(self.b @ x)

    def grad(self, x):
        return self.a_mat @ x - self.b

    def hessian(self, x):
        return self.a_mat

    def hvp(self, x, v):
        return self.a_mat @ v

    @property
    def has_dense_hessian(self):
        return True


class PortfolioModel:
    """f(x) = -sum_i log(w_i' x) over the rows of a positive returns matrix; (M, nu) = (2, 3)."""

    def __init__(self, w_mat, p_dense=P_DENSE_DEFAULT):
        self.w_mat = np.asarray(w_mat, dtype=float)
        if np.any(self.w_mat <= 0.0):
            raise ParameterError("portfolio returns matrix must be strictly positive")
        self.n, self.dim = self.w_mat.shape
        self.params = GscParams(2.0, 3.0)
        self.p_dense = p_dense

    def _z(self, x):
        return self.w_mat @ x

    def check_domain(self, x):
        z = self._z(x)
        bad = np.flatnonzero(z <= 0.0)
        if bad.size:
            raise DomainError(
                f"row {bad[0]}: nonpositive portfolio return {z[bad[0]]}", row=int(bad[0])
            )

    def feasible(self, x):
        return bool(np.all(self._z(x) > 0.0))

    def value(self, x):
        self.check_domain(x)
        return -float(np.sum(np.log(self._z(x))))

    def grad(self, x):
        self.check_domain(x)
        return -(self.w_mat.T @ (1.0 / self._z(x)))

    def hessian(self, x):
        self.check_domain(x)
        inv = 1.0 / self._z(x)
        return self.w_mat.T @ (inv[:, None] ** 2 * self.w_mat)

    def hvp(self, x, v):
        self.check_domain(x)
        inv2 = self._z(x) ** -2
        return self.w_mat.T @ (inv2 * (self.w_mat @ v))

    @property
    def has_dense_hessian(self):
        return self.dim <= self.p_dense


@dataclass
class DwdModel:
    """Distance-weighted discrimination data: rows a_i, labels y_i, slack cost c, power q.

    Variable layout of the induced GLM is x = [w (p), mu (1), xi (n)].
    """

    a: object
    y: np.ndarray
    c: np.ndarray
    q: float
    gammas: tuple[float, float, float]

    def __post_init__(self):
        if self.q <= 0.0:
            raise ParameterError("DWD requires q > 0")
        if any(g <= 0.0 for g in self.gammas):
            raise ParameterError("DWD requires positive regularizers")


def dwd_as_glm(model: DwdModel, p_dense=P_DENSE_DEFAULT) -> GlmModel:
    """Extended-design GLM for the DWD objective.

    Rows become (a_i', y_i, e_i'), the loss atom is t^(-q)/weighted by 1/n,
    Q = diag(g1 1_p, g2, g3 1_n) and the linear slack cost sits on the xi
    block.  The native parameters reproduce the closed-form constant
    M = (q+2)/(q(q+1))^(1/(q+2)) n^(1/(q+2)) max_i ||(a_i', y_i, e_i')||^(q/(q+2)).
    """
    y = np.asarray(model.y, dtype=float).ravel()
    n = y.size
    g1, g2, g3 = model.gammas
    if sp.issparse(model.a):
        a_ext = sp.hstack([model.a, y[:, None], sp.identity(n, format="csr")], format="csr")
    else:
        a = np.asarray(model.a, dtype=float)
        a_ext = np.hstack([a, y[:, None], np.eye(n)])
    p = a_ext.shape[1] - 1 - n
    q_diag = np.concatenate([np.full(p, g1), [g2], np.full(n, g3)])
    c_ext = np.concatenate([np.zeros(p + 1), np.asarray(model.c, dtype=float).ravel()])
    return GlmModel(a_ext, neg_power(model.q), q_diag=q_diag, c=c_ext, p_dense=p_dense)


def oracle(model, x, request: str, v=None):
    """Uniform oracle dispatch: request in {value, gradient, hessian, hvp}."""
    x = np.asarray(x, dtype=float)
    if request == "value":
        return model.value(x)
    if request == "gradient":
        return model.grad(x)
    if request == "hessian":
        return model.hessian(x)
    if request == "hvp":
        if v is None:
            raise ParameterError("hvp request needs a direction v")
        return model.hvp(x, np.asarray(v, dtype=float))
    raise ParameterError(f"unknown oracle request {request!r}")


def third_directional(model, x, v, u, h=None):
    """<D^3 f(x)[v] u, u> by central finite differences of the Hessian along v.

    Independent check of the certified parameters; h defaults to a scale-aware
    1e-5 step.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(x)) / max(np.linalg.norm(v), 1e-30)
    hp = model.hvp(x + h * v, u)
    hm = model.hvp(x - h * v, u)
    return float(u @ (hp - hm)) / (2.0 * h)
