"""Outer iteration loops: momentum-accelerated adaptive cubic regularization
(ARCm) and the baselines ARC, CR, CRm, and TR.

All five share one state shape and one record shape so traces are directly
comparable. Steps are deterministic given the state, so repeated runs of
the same configuration produce bit-identical traces apart from wall time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import ConfigurationError, NumericError, SolverFailureError
from .objective import ObjectiveModel
from .subproblem import (
    CubicModel,
    InexactnessCertificate,
    cauchy_point,
    certify_inexact,
    lanczos_lambda_min,
    solve_exact,
    solve_krylov,
    solve_tr_krylov,
)

KINDS = ("ARCm", "ARC", "CR", "CRm", "TR")
SOLVERS = ("exact", "krylov", "cauchy")
STAGNATION_LIMIT = 50
RHO_DEGENERATE = float("-inf")


@dataclass(frozen=True)
class HyperParams:
    """Algorithm inputs; constraints are validated on construction.

    alpha1 = alpha2 = 0 is allowed and turns the momentum step off, which
    reduces ARCm to ARC exactly.
    """

    gamma1: float = 2.0
    gamma2: float = 1.0
    gamma3: float = 0.5
    eta1: float = 0.1
    eta2: float = 0.9
    sigma0: float = 1.0
    sigma_min: float = 1e-4
    tau: float = 0.5
    alpha1: float = 0.1
    alpha2: float = 1.0
    krylov_max_dim: int = 50
    momentum_halvings: int = 5
    fixed_m: float = 10.0
    tr_radius0: float = 1.0
    tr_radius_max: float = 100.0

    def __post_init__(self):
        if not self.gamma1 > 1.0:
            raise ConfigurationError("gamma1 must satisfy gamma1 > 1")
        if not (1.0 >= self.gamma2 > self.gamma3):
            raise ConfigurationError("gamma2 must satisfy 1 >= gamma2 > gamma3")
        if not self.gamma3 > 0.0:
            raise ConfigurationError("gamma3 must satisfy gamma3 > 0")
        if not (1.0 > self.eta2 > self.eta1 > 0.0):
            raise ConfigurationError("eta1/eta2 must satisfy 1 > eta2 > eta1 > 0")
        if not self.sigma_min > 0.0:
            raise ConfigurationError("sigma_min must be positive")
        if not self.sigma0 >= self.sigma_min:
            raise ConfigurationError("sigma0 must satisfy sigma0 >= sigma_min")
        if not (0.0 < self.tau < 1.0):
            raise ConfigurationError("tau must lie in (0, 1)")
        if self.alpha1 < 0.0 or self.alpha2 < 0.0:
            raise ConfigurationError("alpha1 and alpha2 must be nonnegative")
        if self.krylov_max_dim < 1:
            raise ConfigurationError("krylov_max_dim must be at least 1")
        if self.momentum_halvings < 0:
            raise ConfigurationError("momentum_halvings must be nonnegative")
        if self.fixed_m <= 0.0:
            raise ConfigurationError("fixed_m must be positive")
        if self.tr_radius0 <= 0.0 or self.tr_radius_max < self.tr_radius0:
            raise ConfigurationError(
                "trust-region radii must satisfy tr_radius_max >= tr_radius0 > 0")


@dataclass(frozen=True)
class StopCriteria:
    grad_tol: float = 1e-6
    max_iter: int = 1000
    max_seconds: Optional[float] = None

    def __post_init__(self):
        if self.grad_tol <= 0.0:
            raise ConfigurationError("grad_tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")


@dataclass
class SolverState:
    x: np.ndarray
    v: np.ndarray
    sigma: float
    f_x: float
    k: int = 0
    successes: int = 0
    failures: int = 0
    consecutive_failures: int = 0
    radius: float = 1.0                     # TR only
    y_prev: Optional[np.ndarray] = None     # CRm only


@dataclass
class IterationRecord:
    k: int
    f: float
    grad_norm: float
    sigma: float
    step_norm: float
    rho: float
    accepted: str
    beta: float
    momentum_sign: int
    krylov_dim: int
    model_decrease: float
    wall_time_s: float
    # in-memory extras, not part of the CSV trace format
    f_trial: Optional[float] = None
    cert: Optional[InexactnessCertificate] = None


@dataclass
class Trace:
    records: list[IterationRecord]
    final_x: np.ndarray
    final_f: float
    final_grad_norm: float
    stop_reason: str
    error_message: Optional[str] = None

    @property
    def n_successes(self) -> int:
        return sum(1 for r in self.records if r.accepted != "fail")

    @property
    def n_failures(self) -> int:
        return sum(1 for r in self.records if r.accepted == "fail")


def rho(f_x: float, f_trial: float, model_decrease: float) -> float:
    """Acceptance ratio of actual to model decrease.

    Degenerate model decrease (below 1e-15 * max(1, |f|)) returns -inf so
    the caller treats the step as unsuccessful.
    """
    if model_decrease < 1e-15 * max(1.0, abs(f_x)):
        return RHO_DEGENERATE
    return (f_x - f_trial) / model_decrease


def sigma_update(sigma: float, rho_k: float, p: HyperParams) -> float:
    """Penalty schedule: shrink on very successful steps (floored at
    sigma_min), hold/scale on successful, grow on unsuccessful."""
    if rho_k > p.eta2:
        return max(p.sigma_min, p.gamma3 * sigma)
    if rho_k > p.eta1:
        return p.gamma2 * sigma
    return p.gamma1 * sigma


def _largest_admissible(model, origin, direction, f_ref, beta_max, halvings):
    """Largest beta on the halving grid with f(origin + beta*direction)
    <= f_ref; beta = 0 (staying at origin) is the fallback."""
    beta = beta_max
    for _ in range(halvings + 1):
        z = origin + beta * direction
        f_z = model.value(z)
        if math.isfinite(f_z) and f_z <= f_ref:
            return beta, z, f_z
        beta *= 0.5
    return 0.0, origin, f_ref


def momentum_search(model: ObjectiveModel, x, y, f_y: float, v_prev, s,
                    p: HyperParams):
    """Pick the momentum step size for one accepted cubic step.

    Candidates are beta_max, beta_max/2, ..., beta_max/2^halvings with
    beta_max = min(tau, alpha1 ||s||, alpha2 ||s||^2); the largest candidate
    whose trial point does not increase the objective wins, so the result
    always satisfies f(z) <= f(y).
    """
    s = np.asarray(s, dtype=np.float64)
    snorm = float(np.linalg.norm(s))
    beta_max = min(p.tau, p.alpha1 * snorm, p.alpha2 * snorm * snorm)
    if beta_max <= 0.0:
        return 0.0, y, f_y
    if not np.any(v_prev):
        # z does not depend on beta; any candidate is admissible
        return beta_max, y, f_y
    return _largest_admissible(model, y, v_prev, f_y, beta_max,
                               p.momentum_halvings)


def _momentum_sign(s, direction, beta) -> int:
    if beta <= 0.0:
        return 0
    return int(np.sign(float(s @ direction)))


def _failed_record(state: SolverState, gnorm: float, t0: float,
                   step_norm: float = 0.0, rho_k: float = RHO_DEGENERATE,
                   model_decrease: float = 0.0, krylov_dim: int = 0,
                   sigma_value: Optional[float] = None) -> IterationRecord:
    return IterationRecord(
        k=state.k, f=state.f_x, grad_norm=gnorm,
        sigma=state.sigma if sigma_value is None else sigma_value,
        step_norm=step_norm, rho=rho_k, accepted="fail", beta=0.0,
        momentum_sign=0, krylov_dim=krylov_dim, model_decrease=model_decrease,
        wall_time_s=time.perf_counter() - t0)


def _solve_cubic(model, state, p, solver, sigma, g, krylov_seed=None):
    x = state.x

    def hvp(v):
        return model.hessian_vec(x, v)

    dense = None
    if solver == "exact":
        if model.dense_hessian is None:
            raise ConfigurationError(
                "exact solver requires a model with a dense Hessian")
        dense = model.dense_hessian(x)
    cubic = CubicModel(g=g, hess_vec=hvp, sigma=sigma, dense_h=dense)
    if solver == "exact":
        return cubic, solve_exact(cubic)
    if solver == "krylov":
        return cubic, solve_krylov(cubic, p.krylov_max_dim, start=krylov_seed)
    if solver == "cauchy":
        return cubic, cauchy_point(cubic)
    raise ConfigurationError(f"unknown solver {solver!r}")


def _cubic_step(state, model, p, solver, momentum, g=None, krylov_seed=None):
    """One adaptive cubic-regularization iteration (ARCm when momentum is
    on, ARC when off)."""
    t0 = time.perf_counter()
    if g is None:
        g = model.gradient(state.x)
    gnorm = float(np.linalg.norm(g))

    try:
        cubic, sol = _solve_cubic(model, state, p, solver, state.sigma, g,
                                  krylov_seed)
        f_trial = model.value(state.x + sol.s)
    except (SolverFailureError, NumericError):
        new_state = replace(state, sigma=p.gamma1 * state.sigma, k=state.k + 1,
                            failures=state.failures + 1,
                            consecutive_failures=state.consecutive_failures + 1)
        return new_state, _failed_record(state, gnorm, t0)

    rho_k = rho(state.f_x, f_trial, sol.model_decrease) \
        if math.isfinite(f_trial) else RHO_DEGENERATE
    cert = None
    if solver != "exact" and sol.model_decrease > 0.0:
        cert = certify_inexact(cubic, sol)

    step_norm = float(np.linalg.norm(sol.s))
    if rho_k > p.eta1:
        y = state.x + sol.s
        if momentum:
            beta, z, f_z = momentum_search(model, state.x, y, f_trial,
                                           state.v, sol.s, p)
        else:
            beta, z, f_z = 0.0, y, f_trial
        msign = _momentum_sign(sol.s, state.v, beta)
        new_state = replace(
            state, x=z, v=beta * state.v + sol.s,
            sigma=sigma_update(state.sigma, rho_k, p), f_x=f_z, k=state.k + 1,
            successes=state.successes + 1, consecutive_failures=0)
        accepted = "very_success" if rho_k > p.eta2 else "success"
        rec = IterationRecord(
            k=state.k, f=state.f_x, grad_norm=gnorm, sigma=state.sigma,
            step_norm=step_norm, rho=rho_k, accepted=accepted, beta=beta,
            momentum_sign=msign, krylov_dim=sol.krylov_dim,
            model_decrease=sol.model_decrease,
            wall_time_s=time.perf_counter() - t0, f_trial=f_trial, cert=cert)
        return new_state, rec

    new_state = replace(state, sigma=p.gamma1 * state.sigma, k=state.k + 1,
                        failures=state.failures + 1,
                        consecutive_failures=state.consecutive_failures + 1)
    rec = _failed_record(state, gnorm, t0, step_norm=step_norm, rho_k=rho_k,
                         model_decrease=sol.model_decrease,
                         krylov_dim=sol.krylov_dim)
    rec.cert = cert
    return new_state, rec


def arcm_step(state: SolverState, model: ObjectiveModel, p: HyperParams,
              solver: str = "exact", g=None, krylov_seed=None):
    """One full ARCm loop body: solve the CRS at the current penalty, test
    the step quality, take the momentum step on success, update sigma."""
    return _cubic_step(state, model, p, solver, momentum=True, g=g,
                       krylov_seed=krylov_seed)


def _fixed_penalty_step(state, model, p, solver, extrapolate, g=None):
    """CR (and CRm when extrapolate is on): fixed cubic penalty, every step
    accepted."""
    t0 = time.perf_counter()
    if g is None:
        g = model.gradient(state.x)
    gnorm = float(np.linalg.norm(g))

    try:
        _, sol = _solve_cubic(model, state, p, solver, p.fixed_m, g)
        f_trial = model.value(state.x + sol.s)
    except (SolverFailureError, NumericError):
        new_state = replace(state, k=state.k + 1, failures=state.failures + 1,
                            consecutive_failures=state.consecutive_failures + 1)
        return new_state, _failed_record(state, gnorm, t0)

    if not math.isfinite(f_trial):
        new_state = replace(state, k=state.k + 1, failures=state.failures + 1,
                            consecutive_failures=state.consecutive_failures + 1)
        return new_state, _failed_record(state, gnorm, t0,
                                         step_norm=float(np.linalg.norm(sol.s)))

    rho_k = rho(state.f_x, f_trial, sol.model_decrease)
    y = state.x + sol.s
    beta, z, f_z, msign = 0.0, y, f_trial, 0
    y_prev = state.y_prev
    if extrapolate:
        direction = y - (y_prev if y_prev is not None else state.x)
        snorm = float(np.linalg.norm(sol.s))
        beta_max = min(p.tau, p.alpha1 * snorm, p.alpha2 * snorm * snorm)
        if beta_max > 0.0 and np.any(direction):
            beta, z, f_z = _largest_admissible(model, y, direction, f_trial,
                                               beta_max, p.momentum_halvings)
        elif beta_max > 0.0:
            beta = beta_max
        msign = _momentum_sign(sol.s, direction, beta)
        y_prev = y

    new_state = replace(state, x=z, v=beta * state.v + sol.s, f_x=f_z,
                        k=state.k + 1, successes=state.successes + 1,
                        consecutive_failures=0, y_prev=y_prev)
    accepted = "very_success" if rho_k > p.eta2 else "success"
    rec = IterationRecord(
        k=state.k, f=state.f_x, grad_norm=gnorm, sigma=p.fixed_m,
        step_norm=float(np.linalg.norm(sol.s)), rho=rho_k, accepted=accepted,
        beta=beta, momentum_sign=msign, krylov_dim=sol.krylov_dim,
        model_decrease=sol.model_decrease, wall_time_s=time.perf_counter() - t0,
        f_trial=f_trial)
    return new_state, rec


def _trust_region_step(state, model, p, g=None):
    """Quadratic model step with norm constraint; radius halves on failure
    and doubles (capped) on very successful steps."""
    t0 = time.perf_counter()
    if g is None:
        g = model.gradient(state.x)
    gnorm = float(np.linalg.norm(g))
    x = state.x

    def hvp(v):
        return model.hessian_vec(x, v)

    try:
        sol = solve_tr_krylov(g, hvp, state.radius, p.krylov_max_dim)
        f_trial = model.value(state.x + sol.s)
    except (SolverFailureError, NumericError):
        new_state = replace(state, radius=0.5 * state.radius, k=state.k + 1,
                            failures=state.failures + 1,
                            consecutive_failures=state.consecutive_failures + 1)
        return new_state, _failed_record(state, gnorm, t0)

    rho_k = rho(state.f_x, f_trial, sol.model_decrease) \
        if math.isfinite(f_trial) else RHO_DEGENERATE
    step_norm = float(np.linalg.norm(sol.s))
    if rho_k > p.eta1:
        if rho_k > p.eta2:
            new_radius = min(2.0 * state.radius, p.tr_radius_max)
            accepted = "very_success"
        else:
            new_radius = state.radius
            accepted = "success"
        new_state = replace(state, x=state.x + sol.s, f_x=f_trial,
                            radius=new_radius, k=state.k + 1,
                            successes=state.successes + 1,
                            consecutive_failures=0)
        rec = IterationRecord(
            k=state.k, f=state.f_x, grad_norm=gnorm, sigma=state.radius,
            step_norm=step_norm, rho=rho_k, accepted=accepted, beta=0.0,
            momentum_sign=0, krylov_dim=sol.krylov_dim,
            model_decrease=sol.model_decrease,
            wall_time_s=time.perf_counter() - t0, f_trial=f_trial)
        return new_state, rec

    new_state = replace(state, radius=0.5 * state.radius, k=state.k + 1,
                        failures=state.failures + 1,
                        consecutive_failures=state.consecutive_failures + 1)
    rec = _failed_record(state, gnorm, t0, step_norm=step_norm, rho_k=rho_k,
                         model_decrease=sol.model_decrease,
                         krylov_dim=sol.krylov_dim)
    return new_state, rec


def baseline_step(kind: str, state: SolverState, model: ObjectiveModel,
                  p: HyperParams, solver: str = "exact", g=None):
    """Dispatch one iteration of the requested baseline method."""
    if kind == "ARC":
        return _cubic_step(state, model, p, solver, momentum=False, g=g)
    if kind == "CR":
        return _fixed_penalty_step(state, model, p, solver, extrapolate=False, g=g)
    if kind == "CRm":
        return _fixed_penalty_step(state, model, p, solver, extrapolate=True, g=g)
    if kind == "TR":
        return _trust_region_step(state, model, p, g=g)
    raise ConfigurationError(f"unknown optimizer kind {kind!r}")


def make_state(kind: str, model: ObjectiveModel, x0, p: HyperParams) -> SolverState:
    if kind not in KINDS:
        raise ConfigurationError(f"unknown optimizer kind {kind!r}")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.dim,):
        raise ConfigurationError(
            f"x0 has shape {x0.shape}, expected ({model.dim},)")
    f0 = model.value(x0)
    if not math.isfinite(f0):
        raise NumericError(f"objective is not finite at x0 (f = {f0})")
    return SolverState(x=x0.copy(), v=np.zeros(model.dim), sigma=p.sigma0,
                       f_x=f0, radius=p.tr_radius0,
                       y_prev=x0.copy() if kind == "CRm" else None)


def _negative_curvature_probe(model: ObjectiveModel, x, threshold: float):
    """Return a bottom-eigenvector direction when the Hessian has an
    eigenvalue below -threshold, else None."""
    if model.dense_hessian is not None:
        h = model.dense_hessian(x)
        w, q = np.linalg.eigh(h)
        if w[0] < -threshold:
            return q[:, 0]
        return None
    lam, vec, _ = lanczos_lambda_min(lambda v: model.hessian_vec(x, v),
                                     model.dim)
    if lam < -threshold:
        return vec
    return None


def run(kind: str, model: ObjectiveModel, x0, p: HyperParams,
        stop: StopCriteria, solver: str = "exact") -> Trace:
    """Iterate ``kind`` until the gradient tolerance, a budget, or 50
    consecutive failed iterations.

    A first-order stationary point with an eigenvalue below
    -sqrt(grad_tol) does not stop the run; the Krylov solver is reseeded
    with the negative-curvature direction instead.
    """
    state = make_state(kind, model, x0, p)
    records: list[IterationRecord] = []
    stop_reason = None
    error_message = None
    t_start = time.perf_counter()
    gnorm = math.inf

    while True:
        g = model.gradient(state.x)
        if not np.all(np.isfinite(g)):
            stop_reason, error_message = "error", "non-finite gradient at iterate"
            break
        gnorm = float(np.linalg.norm(g))
        krylov_seed = None
        if gnorm <= stop.grad_tol:
            probe = _negative_curvature_probe(model, state.x,
                                              math.sqrt(stop.grad_tol))
            if probe is None:
                stop_reason = "grad_tol"
                break
            krylov_seed = probe
        if len(records) >= stop.max_iter:
            stop_reason = "max_iter"
            break
        if stop.max_seconds is not None \
                and time.perf_counter() - t_start > stop.max_seconds:
            stop_reason = "max_seconds"
            break
        if state.consecutive_failures >= STAGNATION_LIMIT:
            stop_reason = "stagnation"
            break

        try:
            if kind == "ARCm":
                state, rec = arcm_step(state, model, p, solver, g=g,
                                       krylov_seed=krylov_seed)
            else:
                state, rec = baseline_step(kind, state, model, p, solver, g=g)
        except NumericError as exc:
            stop_reason, error_message = "error", str(exc)
            break
        records.append(rec)

    if stop_reason != "grad_tol":
        g_final = model.gradient(state.x)
        gnorm = float(np.linalg.norm(g_final)) \
            if np.all(np.isfinite(g_final)) else math.inf
    return Trace(records=records, final_x=state.x, final_f=state.f_x,
                 final_grad_norm=gnorm, stop_reason=stop_reason,
                 error_message=error_message)
