"""Objective functions: the two benchmark regression losses plus analytic
test problems, bundled as value/gradient/Hessian-action evaluators.

All evaluators are pure functions of the point; models are safe to share
across workers once constructed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .data import Dataset
from .errors import ConfigurationError, NumericError

# Below this dimension a dense Hessian is materialized, enabling the exact
# subproblem solver and exact minimum-eigenvalue computations.
DENSE_CAP = 256

REGRESSION_KINDS = ("logistic_nonconvex", "robust_linear")
ANALYTIC_KINDS = ("quadratic", "rosenbrock")


@dataclass(frozen=True)
class ObjectiveModel:
    """Bundle of evaluators for a twice-differentiable objective.

    ``dense_hessian`` is None above DENSE_CAP; ``hessian_vec(x, v)`` is the
    Hessian action and must be linear in v.
    """

    dim: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian_vec: Callable[[np.ndarray, np.ndarray], np.ndarray]
    dense_hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "objective"


@dataclass(frozen=True)
class ModelSpec:
    """Recipe for building an ObjectiveModel.

    ``dataset`` is required for the two regression kinds and rejected for
    the analytic kinds; ``dim`` is mandatory for analytic kinds and, when
    given for a regression kind, must match the dataset width.
    """

    kind: str
    dataset: Optional[Dataset] = None
    chi: float = 0.1
    dim: Optional[int] = None

    def __post_init__(self):
        if self.kind not in REGRESSION_KINDS + ANALYTIC_KINDS:
            raise ConfigurationError(f"unknown model kind {self.kind!r}")
        if self.chi < 0:
            raise ConfigurationError("chi must be nonnegative")
        if self.kind in REGRESSION_KINDS:
            if self.dataset is None:
                raise ConfigurationError(f"kind {self.kind!r} requires a dataset")
            if self.dim is not None and self.dim != self.dataset.dim:
                raise ConfigurationError(
                    f"spec.dim={self.dim} does not match dataset dimension "
                    f"{self.dataset.dim}"
                )
        else:
            if self.dataset is not None:
                raise ConfigurationError(f"kind {self.kind!r} takes no dataset")
            if self.dim is None or self.dim < 1:
                raise ConfigurationError(f"kind {self.kind!r} requires a positive dim")


@dataclass
class DerivativeReport:
    max_rel_err_grad: float
    max_rel_err_hvp: float


def _as_point(x, dim) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (dim,):
        raise ConfigurationError(f"point has shape {x.shape}, expected ({dim},)")
    return x


def make_objective(spec: ModelSpec) -> ObjectiveModel:
    """Build the objective described by ``spec``.

    The two regression losses carry analytic gradients and Hessian actions;
    a dense Hessian evaluator is attached whenever the dimension is at most
    DENSE_CAP.
    """
    if spec.kind == "logistic_nonconvex":
        return _logistic_model(spec.dataset, spec.chi)
    if spec.kind == "robust_linear":
        return _robust_linear_model(spec.dataset)
    if spec.kind == "quadratic":
        return quadratic_objective(np.eye(spec.dim), np.zeros(spec.dim))
    if spec.kind == "rosenbrock":
        return rosenbrock_objective(spec.dim)
    raise ConfigurationError(f"unknown model kind {spec.kind!r}")


def _logistic_model(ds: Dataset, chi: float) -> ObjectiveModel:
    """Mean negative log-likelihood of a sigmoid classifier plus the smooth
    nonconvex penalty chi * sum w_j^2/(1+w_j^2).

    The per-sample term is evaluated as softplus(z) - b*z, which is the
    stable form of -[b log psi(z) + (1-b) log(1-psi(z))] and never
    overflows.
    """
    a = ds.features
    b = ds.labels.astype(np.float64)
    n, d = a.shape

    def value(w):
        w = _as_point(w, d)
        z = a @ w
        loss = float(np.mean(np.logaddexp(0.0, z) - b * z))
        w2 = w * w
        return loss + chi * float(np.sum(w2 / (1.0 + w2)))

    def gradient(w):
        w = _as_point(w, d)
        z = a @ w
        resid = expit(z) - b
        w2 = w * w
        reg = 2.0 * w / (1.0 + w2) ** 2
        return a.T @ resid / n + chi * reg

    def _curvature_weights(w):
        z = a @ w
        p = expit(z)
        return p * (1.0 - p)

    def hessian_vec(w, v):
        w = _as_point(w, d)
        v = _as_point(v, d)
        dz = _curvature_weights(w)
        w2 = w * w
        reg2 = (2.0 - 6.0 * w2) / (1.0 + w2) ** 3
        return a.T @ (dz * (a @ v)) / n + chi * reg2 * v

    dense = None
    if d <= DENSE_CAP:

        def dense(w):
            w = _as_point(w, d)
            dz = _curvature_weights(w)
            w2 = w * w
            reg2 = (2.0 - 6.0 * w2) / (1.0 + w2) ** 3
            h = (a * dz[:, None]).T @ a / n
            h[np.diag_indices(d)] += chi * reg2
            return 0.5 * (h + h.T)

    return ObjectiveModel(d, value, gradient, hessian_vec, dense,
                          name=f"logistic_nonconvex({ds.name})")


def _robust_linear_model(ds: Dataset) -> ObjectiveModel:
    """Mean robust loss log(r^2/2 + 1) of the residuals r = b - Aw."""
    a = ds.features
    b = ds.labels.astype(np.float64)
    n, d = a.shape

    def value(w):
        w = _as_point(w, d)
        r = b - a @ w
        return float(np.mean(np.log1p(0.5 * r * r)))

    def gradient(w):
        w = _as_point(w, d)
        r = b - a @ w
        # rho'(r) = r / (r^2/2 + 1); chain rule brings a minus sign
        return -(a.T @ (r / (0.5 * r * r + 1.0))) / n

    def _rho2(r):
        u = 0.5 * r * r + 1.0
        return (1.0 - 0.5 * r * r) / (u * u)

    def hessian_vec(w, v):
        w = _as_point(w, d)
        v = _as_point(v, d)
        r = b - a @ w
        return a.T @ (_rho2(r) * (a @ v)) / n

    dense = None
    if d <= DENSE_CAP:

        def dense(w):
            w = _as_point(w, d)
            r = b - a @ w
            h = (a * _rho2(r)[:, None]).T @ a / n
            return 0.5 * (h + h.T)

    return ObjectiveModel(d, value, gradient, hessian_vec, dense,
                          name=f"robust_linear({ds.name})")


def quadratic_objective(a_matrix: np.ndarray, b: np.ndarray) -> ObjectiveModel:
    """Convex quadratic 0.5 x'Ax - b'x with closed-form minimum A^-1 b."""
    a_matrix = np.asarray(a_matrix, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = b.shape[0]
    if a_matrix.shape != (d, d):
        raise ConfigurationError("quadratic matrix/vector dimensions disagree")

    def value(x):
        x = _as_point(x, d)
        return float(0.5 * x @ (a_matrix @ x) - b @ x)

    def gradient(x):
        x = _as_point(x, d)
        return a_matrix @ x - b

    def hessian_vec(x, v):
        v = _as_point(v, d)
        return a_matrix @ v

    def dense(x):
        return a_matrix.copy()

    return ObjectiveModel(d, value, gradient, hessian_vec,
                          dense if d <= DENSE_CAP else None, name="quadratic")


def rosenbrock_objective(dim: int = 2) -> ObjectiveModel:
    """Chained two-term Rosenbrock function; minimum at the all-ones point."""
    if dim < 2:
        raise ConfigurationError("rosenbrock needs dim >= 2")
    d = dim

    def value(x):
        x = _as_point(x, d)
        head, tail = x[:-1], x[1:]
        return float(np.sum(100.0 * (tail - head * head) ** 2 + (1.0 - head) ** 2))

    def gradient(x):
        x = _as_point(x, d)
        g = np.zeros(d)
        head, tail = x[:-1], x[1:]
        g[:-1] += -400.0 * head * (tail - head * head) - 2.0 * (1.0 - head)
        g[1:] += 200.0 * (tail - head * head)
        return g

    def dense(x):
        x = _as_point(x, d)
        h = np.zeros((d, d))
        for i in range(d - 1):
            h[i, i] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0
            h[i + 1, i + 1] += 200.0
            h[i, i + 1] += -400.0 * x[i]
            h[i + 1, i] += -400.0 * x[i]
        return h

    def hessian_vec(x, v):
        v = _as_point(v, d)
        return dense(x) @ v

    return ObjectiveModel(d, value, gradient, hessian_vec,
                          dense if d <= DENSE_CAP else None, name="rosenbrock")


def check_derivatives(model: ObjectiveModel, x, h: float,
                      n_dirs: int = 5, seed: int = 0) -> DerivativeReport:
    """Validate analytic derivatives against central differences.

    The gradient is compared coordinate-wise against differences of the
    value; the Hessian action against differences of the gradient along
    ``n_dirs`` seeded random unit directions. Errors are relative to
    max(1, norm of the analytic quantity).
    """
    if h <= 0:
        raise ConfigurationError("step size h must be positive")
    x = _as_point(x, model.dim)
    d = model.dim

    g_analytic = model.gradient(x)
    g_fd = np.zeros(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        f_plus = model.value(x + e)
        f_minus = model.value(x - e)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericError(f"non-finite value perturbing coordinate {j}")
        g_fd[j] = (f_plus - f_minus) / (2.0 * h)
    err_grad = float(np.linalg.norm(g_analytic - g_fd)
                     / max(1.0, np.linalg.norm(g_analytic)))

    rng = np.random.Generator(np.random.Philox(seed))
    err_hvp = 0.0
    for _ in range(n_dirs):
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        hv = model.hessian_vec(x, u)
        g_plus = model.gradient(x + h * u)
        g_minus = model.gradient(x - h * u)
        if not (np.all(np.isfinite(g_plus)) and np.all(np.isfinite(g_minus))):
            bad = int(np.flatnonzero(~np.isfinite(g_plus - g_minus))[0])
            raise NumericError(f"non-finite gradient perturbing coordinate {bad}")
        hv_fd = (g_plus - g_minus) / (2.0 * h)
        err_hvp = max(err_hvp, float(np.linalg.norm(hv - hv_fd)
                                     / max(1.0, np.linalg.norm(hv))))
    return DerivativeReport(max_rel_err_grad=err_grad, max_rel_err_hvp=err_hvp)
