"""Cubic-regularized subproblem (CRS) solvers and inexactness certificates.

The cubic model relative to the current objective value is

    q(s) = g's + 1/2 s'Hs + sigma/6 ||s||^3,

minimized exactly through the secular equation in the eigenbasis of H, or
approximately by Lanczos projection onto a Krylov subspace, or along the
steepest-descent ray (Cauchy point). A trust-region variant of the Krylov
solver backs the TR baseline.

Global minimizers satisfy (H + lam I) s = -g with lam = sigma ||s|| / 2 and
H + lam I positive semidefinite; the hard case (g orthogonal to the bottom
eigenspace with no interior secular root) is resolved by adding a bottom
eigenvector component that restores ||s|| = 2 lam / sigma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _kernels
from .errors import CertificateError, ConfigurationError, NumericError, SolverFailureError

EXACT_TOL = 1e-9
KRYLOV_TOL = 1e-6
LANCZOS_BREAKDOWN = 1e-12
HARD_CASE_TOL = 1e-12
SECULAR_MAX_ITER = 200


@dataclass
class CubicModel:
    """One CRS instance: gradient, Hessian action, optional dense Hessian,
    and the cubic penalty."""

    g: np.ndarray
    hess_vec: Callable[[np.ndarray], np.ndarray]
    sigma: float
    dense_h: Optional[np.ndarray] = None

    def __post_init__(self):
        self.g = np.asarray(self.g, dtype=np.float64)
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")

    @property
    def dim(self) -> int:
        return self.g.shape[0]


@dataclass
class CrsSolution:
    s: np.ndarray
    model_decrease: float
    model_grad_norm: float
    lam: Optional[float]
    solver: str
    krylov_dim: int = 0
    zero_gradient: bool = False


@dataclass
class TrsSolution:
    s: np.ndarray
    model_decrease: float
    kkt_residual: float
    lam: float
    krylov_dim: int = 0
    interior: bool = False
    zero_gradient: bool = False


@dataclass
class InexactnessCertificate:
    """Smallest per-item deltas under which a step satisfies the three-part
    inexactness condition, plus their ratio to the cubic term."""

    delta1: float
    delta2: float
    delta3: Optional[float]
    delta: float
    ratio_to_cubic: float


def model_value(m: CubicModel, s) -> float:
    """q(s) relative to the current objective value."""
    s = np.asarray(s, dtype=np.float64)
    sn = np.linalg.norm(s)
    return float(m.g @ s + 0.5 * s @ m.hess_vec(s) + m.sigma / 6.0 * sn**3)


def model_gradient(m: CubicModel, s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    sn = np.linalg.norm(s)
    return m.g + m.hess_vec(s) + 0.5 * m.sigma * sn * s


def _finish(m: CubicModel, s: np.ndarray, hs: np.ndarray, solver: str,
            lam: Optional[float], krylov_dim: int = 0,
            zero_gradient: bool = False) -> CrsSolution:
    """Assemble a solution record from one honest Hessian action."""
    sn = float(np.linalg.norm(s))
    decrease = -float(m.g @ s + 0.5 * s @ hs + m.sigma / 6.0 * sn**3)
    grad = m.g + hs + 0.5 * m.sigma * sn * s
    return CrsSolution(s=s, model_decrease=decrease,
                       model_grad_norm=float(np.linalg.norm(grad)),
                       lam=lam, solver=solver, krylov_dim=krylov_dim,
                       zero_gradient=zero_gradient)


def _minimize_in_eigenbasis(w: np.ndarray, g_eig: np.ndarray, sigma: float,
                            tol_abs: float):
    """Global CRS minimizer for a diagonal Hessian (eigenvalues ``w``,
    ascending). Returns (u, lam)."""
    gnorm = float(np.linalg.norm(g_eig))
    lam_lo = max(0.0, -float(w[0]))
    u = np.zeros_like(g_eig)

    if gnorm == 0.0:
        if w[0] >= 0.0:
            return u, 0.0
        u[0] = 2.0 * lam_lo / sigma
        return u, lam_lo

    if lam_lo > 0.0:
        bottom = (w - w[0]) <= HARD_CASE_TOL * max(1.0, abs(w[0]))
        if np.all(np.abs(g_eig[bottom]) <= HARD_CASE_TOL * gnorm):
            rest = ~bottom
            den = w[rest] + lam_lo
            u_rest = -g_eig[rest] / den
            target = 2.0 * lam_lo / sigma
            rest_norm = float(np.linalg.norm(u_rest))
            if rest_norm < target:
                # hard case: no interior secular root; pad with a bottom
                # eigenvector component up to the stationarity norm
                u[rest] = u_rest
                u[np.flatnonzero(bottom)[0]] = math.sqrt(target**2 - rest_norm**2)
                return u, lam_lo

    g2 = g_eig * g_eig
    lam, _, status = _kernels.crs_root(w, g2, sigma, lam_lo,
                                       0.5 * tol_abs, SECULAR_MAX_ITER)
    den = w + lam
    if status == _kernels.STATUS_OK:
        return -g_eig / den, lam
    # near-hard case or slow root: rebuild away from the pole and pad
    safe = den > 1e-14 * max(1.0, lam)
    u[safe] = -g_eig[safe] / den[safe]
    un = float(np.linalg.norm(u))
    target = 2.0 * lam / sigma
    if un < target:
        pad = math.sqrt(target**2 - un**2)
        u[0] = u[0] + pad if safe[0] else pad
    return u, lam


def solve_exact(m: CubicModel, tol: float = EXACT_TOL) -> CrsSolution:
    """Globally minimize q via eigendecomposition and the secular equation.

    Requires the dense Hessian. The returned model gradient norm is at most
    tol * max(1, ||g||); exceeding it raises SolverFailureError with the
    best step found attached.
    """
    if m.dense_h is None:
        raise ConfigurationError("solve_exact requires a dense Hessian")
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    try:
        w, q = np.linalg.eigh(np.asarray(m.dense_h, dtype=np.float64))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigendecomposition failed: {exc}") from None
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(q))):
        raise NumericError("non-finite eigendecomposition")

    gnorm = float(np.linalg.norm(m.g))
    tol_abs = tol * max(1.0, gnorm)
    g_eig = q.T @ m.g
    u, lam = _minimize_in_eigenbasis(w, g_eig, m.sigma, tol_abs)
    s = q @ u
    sol = _finish(m, s, m.dense_h @ s, solver="exact", lam=lam,
                  zero_gradient=(gnorm == 0.0 and w[0] >= 0.0))
    if sol.model_grad_norm > tol_abs and not sol.zero_gradient:
        raise SolverFailureError(
            f"secular iteration stalled at model gradient {sol.model_grad_norm:.3e} "
            f"(tolerance {tol_abs:.3e})", best=sol)
    return sol


def solve_krylov(m: CubicModel, max_dim: int, tol: float = KRYLOV_TOL,
                 start: Optional[np.ndarray] = None) -> CrsSolution:
    """Approximately minimize q over an expanding Krylov subspace.

    Lanczos tridiagonalization with full reorthogonalization, started from
    g (or ``start``, e.g. a negative-curvature probe). After each expansion
    the reduced problem is solved exactly; iteration stops once the model
    gradient estimate falls below tol * max(1, ||g||), the subspace becomes
    invariant, or ``max_dim`` is reached.
    """
    if max_dim < 1:
        raise ConfigurationError("max_dim must be at least 1")
    d = m.dim
    g = m.g
    gnorm = float(np.linalg.norm(g))
    v0 = g if start is None else np.asarray(start, dtype=np.float64)
    v0norm = float(np.linalg.norm(v0))
    if v0norm == 0.0:
        return CrsSolution(s=np.zeros(d), model_decrease=0.0, model_grad_norm=gnorm,
                           lam=None, solver="krylov", krylov_dim=0,
                           zero_gradient=True)

    tol_abs = tol * max(1.0, gnorm)
    max_j = min(max_dim, d)
    basis = np.empty((max_j, d))
    alphas: list[float] = []
    offdiags: list[float] = []
    g_red: list[float] = []

    q = v0 / v0norm
    u = np.zeros(1)
    n_dims = 0
    for j in range(max_j):
        basis[j] = q
        g_red.append(float(q @ g))
        hq = m.hess_vec(q)
        if not np.all(np.isfinite(hq)):
            raise NumericError("non-finite Hessian action in Lanczos recurrence")
        alpha = float(q @ hq)
        alphas.append(alpha)
        r = hq - alpha * q
        if j > 0:
            r = r - offdiags[-1] * basis[j - 1]
        # full reorthogonalization, two passes
        r = r - basis[: j + 1].T @ (basis[: j + 1] @ r)
        r = r - basis[: j + 1].T @ (basis[: j + 1] @ r)
        beta = float(np.linalg.norm(r))
        n_dims = j + 1

        if n_dims == 1:
            w = np.array(alphas)
            vecs = np.ones((1, 1))
        else:
            w, vecs = eigh_tridiagonal(np.array(alphas), np.array(offdiags))
        g_red_vec = np.array(g_red)
        g_eig = vecs.T @ g_red_vec
        u_eig, _ = _minimize_in_eigenbasis(w, g_eig, m.sigma,
                                           min(tol_abs, 1e-9 * max(1.0, gnorm)))
        u = vecs @ u_eig
        un = float(np.linalg.norm(u_eig))
        reduced_resid = float(np.linalg.norm(
            g_eig + w * u_eig + 0.5 * m.sigma * un * u_eig))
        out_of_span2 = max(gnorm**2 - float(g_red_vec @ g_red_vec), 0.0)
        grad_est = math.sqrt(reduced_resid**2 + (beta * u[-1])**2 + out_of_span2)
        if grad_est <= tol_abs or beta < LANCZOS_BREAKDOWN or n_dims == max_j:
            break
        offdiags.append(beta)
        q = r / beta

    s = basis[:n_dims].T @ u
    return _finish(m, s, m.hess_vec(s), solver="krylov", lam=None,
                   krylov_dim=n_dims)


def cauchy_point(m: CubicModel) -> CrsSolution:
    """Minimize q along the steepest-descent ray s = -alpha g, alpha >= 0.

    The optimal alpha is the unique positive root of the scalar
    stationarity -||g||^2 + alpha g'Hg + (sigma/2) alpha^2 ||g||^3 = 0.
    """
    gnorm = float(np.linalg.norm(m.g))
    if gnorm == 0.0:
        raise ConfigurationError("cauchy_point requires a nonzero gradient")
    hg = m.hess_vec(m.g)
    ghg = float(m.g @ hg)
    a = 0.5 * m.sigma * gnorm**3
    disc = ghg * ghg + 4.0 * a * gnorm**2
    alpha = 2.0 * gnorm**2 / (ghg + math.sqrt(disc))
    s = -alpha * m.g
    return _finish(m, s, -alpha * hg, solver="cauchy", lam=None)


def certify_inexact(m: CubicModel, approx: CrsSolution,
                    exact_norm: Optional[float] = None) -> InexactnessCertificate:
    """Measure how far an approximate step is from exactness.

    delta1 bounds the shortfall against the guaranteed (sigma/12)||s||^3
    model decrease, delta2 converts the model-gradient norm, delta3 (when
    the exact step norm is known) the step-norm mismatch.
    """
    if approx.model_decrease <= 0.0:
        raise CertificateError(
            f"model decrease {approx.model_decrease:.3e} is not positive")
    sn = float(np.linalg.norm(approx.s))
    cubic = m.sigma * sn**3
    delta1 = max(0.0, cubic / 12.0 - approx.model_decrease)
    delta2 = approx.model_grad_norm ** 1.5
    delta3 = None if exact_norm is None else abs(sn - exact_norm) ** 3
    delta = max(delta1, delta2) if delta3 is None else max(delta1, delta2, delta3)
    return InexactnessCertificate(delta1=delta1, delta2=delta2, delta3=delta3,
                                  delta=delta, ratio_to_cubic=delta / cubic)


def _lanczos_bottom_ritz(hess_vec, dim, start, max_iter):
    """One Lanczos cycle; returns (ritz_value, ritz_vector, residual)."""
    max_j = min(max_iter, dim)
    basis = np.empty((max_j, dim))
    alphas: list[float] = []
    offdiags: list[float] = []
    q = start / np.linalg.norm(start)
    beta = 0.0
    n = 1
    for j in range(max_j):
        basis[j] = q
        hq = hess_vec(q)
        if not np.all(np.isfinite(hq)):
            raise NumericError("non-finite Hessian action in Lanczos recurrence")
        alpha = float(q @ hq)
        alphas.append(alpha)
        r = hq - alpha * q
        if j > 0:
            r = r - offdiags[-1] * basis[j - 1]
        r = r - basis[: j + 1].T @ (basis[: j + 1] @ r)
        beta = float(np.linalg.norm(r))
        n = j + 1
        if beta < LANCZOS_BREAKDOWN or n == max_j:
            break
        offdiags.append(beta)
        q = r / beta
    if n == 1:
        w = np.array(alphas)
        vecs = np.ones((1, 1))
    else:
        w, vecs = eigh_tridiagonal(np.array(alphas), np.array(offdiags))
    bottom = vecs[:, 0]
    vec = basis[:n].T @ bottom
    resid = abs(beta * bottom[-1]) if beta >= LANCZOS_BREAKDOWN else 0.0
    return float(w[0]), vec, resid


def lanczos_lambda_min(hess_vec, dim: int, max_iter: int = 100, seed: int = 0,
                       tol: float = 1e-8):
    """Estimate the smallest Hessian eigenvalue and its eigenvector.

    Runs a seeded Lanczos cycle with full reorthogonalization and restarts
    once from the bottom Ritz vector if the residual is still large.
    Returns (value, unit vector, converged flag).
    """
    rng = np.random.Generator(np.random.Philox(seed))
    start = rng.standard_normal(dim)
    lam, vec, resid = _lanczos_bottom_ritz(hess_vec, dim, start, max_iter)
    converged = resid <= tol * max(1.0, abs(lam))
    if not converged and dim > 1:
        lam, vec, resid = _lanczos_bottom_ritz(hess_vec, dim, vec, max_iter)
        converged = resid <= tol * max(1.0, abs(lam))
    return lam, vec / np.linalg.norm(vec), converged


def _tr_in_eigenbasis(w: np.ndarray, g_eig: np.ndarray, radius: float):
    """Trust-region minimizer for a diagonal Hessian. Returns
    (u, lam, interior)."""
    gnorm = float(np.linalg.norm(g_eig))
    u = np.zeros_like(g_eig)
    lam_lo = max(0.0, -float(w[0]))

    if gnorm == 0.0:
        if w[0] >= 0.0:
            return u, 0.0, True
        u[0] = radius
        return u, lam_lo, False

    if w[0] > 0.0:
        u_newton = -g_eig / w
        if float(np.linalg.norm(u_newton)) <= radius:
            return u_newton, 0.0, True

    bottom = (w - w[0]) <= HARD_CASE_TOL * max(1.0, abs(w[0]))
    if np.all(np.abs(g_eig[bottom]) <= HARD_CASE_TOL * gnorm):
        rest = ~bottom
        den = w[rest] + lam_lo
        if np.all(den > 0.0):
            u_rest = -g_eig[rest] / den
            rest_norm = float(np.linalg.norm(u_rest))
            if rest_norm < radius:
                if lam_lo == 0.0 and w[0] >= 0.0:
                    # singular PSD Hessian, unconstrained pseudo-solution fits
                    u[rest] = u_rest
                    return u, 0.0, True
                u[rest] = u_rest
                u[np.flatnonzero(bottom)[0]] = math.sqrt(radius**2 - rest_norm**2)
                return u, lam_lo, False

    g2 = g_eig * g_eig
    lam, _, status = _kernels.trs_root(w, g2, radius, lam_lo, 1e-11,
                                       SECULAR_MAX_ITER)
    den = w + lam
    if status == _kernels.STATUS_OK:
        return -g_eig / den, lam, False
    safe = den > 1e-14 * max(1.0, lam)
    u[safe] = -g_eig[safe] / den[safe]
    un = float(np.linalg.norm(u))
    if un < radius:
        pad = math.sqrt(radius**2 - un**2)
        u[0] = u[0] + pad if safe[0] else pad
    return u, lam, False


def solve_tr_krylov(g: np.ndarray, hess_vec: Callable[[np.ndarray], np.ndarray],
                    radius: float, max_dim: int,
                    tol: float = KRYLOV_TOL) -> TrsSolution:
    """Minimize the quadratic model over ||s|| <= radius by the same Lanczos
    machinery as solve_krylov, with the reduced trust-region problem solved
    exactly after each expansion."""
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    g = np.asarray(g, dtype=np.float64)
    d = g.shape[0]
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return TrsSolution(s=np.zeros(d), model_decrease=0.0, kkt_residual=0.0,
                           lam=0.0, krylov_dim=0, interior=True,
                           zero_gradient=True)

    tol_abs = tol * max(1.0, gnorm)
    max_j = min(max_dim, d)
    basis = np.empty((max_j, d))
    alphas: list[float] = []
    offdiags: list[float] = []

    q = g / gnorm
    u = np.zeros(1)
    lam = 0.0
    interior = True
    n_dims = 0
    for j in range(max_j):
        basis[j] = q
        hq = hess_vec(q)
        if not np.all(np.isfinite(hq)):
            raise NumericError("non-finite Hessian action in Lanczos recurrence")
        alpha = float(q @ hq)
        alphas.append(alpha)
        r = hq - alpha * q
        if j > 0:
            r = r - offdiags[-1] * basis[j - 1]
        r = r - basis[: j + 1].T @ (basis[: j + 1] @ r)
        r = r - basis[: j + 1].T @ (basis[: j + 1] @ r)
        beta = float(np.linalg.norm(r))
        n_dims = j + 1

        if n_dims == 1:
            w = np.array(alphas)
            vecs = np.ones((1, 1))
        else:
            w, vecs = eigh_tridiagonal(np.array(alphas), np.array(offdiags))
        g_red = np.zeros(n_dims)
        g_red[0] = gnorm
        g_eig = vecs.T @ g_red
        u_eig, lam, interior = _tr_in_eigenbasis(w, g_eig, radius)
        u = vecs @ u_eig
        reduced_resid = float(np.linalg.norm(g_eig + (w + lam) * u_eig))
        kkt_est = math.sqrt(reduced_resid**2 + (beta * u[-1])**2)
        if kkt_est <= tol_abs or beta < LANCZOS_BREAKDOWN or n_dims == max_j:
            break
        offdiags.append(beta)
        q = r / beta

    s = basis[:n_dims].T @ u
    hs = hess_vec(s)
    decrease = -float(g @ s + 0.5 * s @ hs)
    kkt = float(np.linalg.norm(g + hs + lam * s))
    return TrsSolution(s=s, model_decrease=decrease, kkt_residual=kkt, lam=lam,
                       krylov_dim=n_dims, interior=interior)
