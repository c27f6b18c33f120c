"""Pure numpy fallback for the secular-equation root kernels.

Mirrors ``arcm._kernels._secular`` (the Cython module) step for step so the
two backends walk the same iteration sequence, up to floating-point
reduction order.
"""

import math

import numpy as np

STATUS_OK = 0
STATUS_COLLAPSED = 1
STATUS_MAXITER = 2


def _eval(eigvals, g2, lam):
    """Return (snorm, sum3) at lam with snorm = ||s(lam)||_2.

    s(lam) is the shifted-inverse step in the eigenbasis,
    snorm^2 = sum g2_i/(w_i+lam)^2 and sum3 = sum g2_i/(w_i+lam)^3.
    """
    den = eigvals + lam
    with np.errstate(divide="ignore", over="ignore"):
        r2 = g2 / (den * den)
        sn2 = float(np.sum(r2))
        sum3 = float(np.sum(r2 / den))
    return math.sqrt(sn2), sum3


def crs_root(eigvals, g2, sigma, lam_lo, tol_abs, max_iter):
    """Find lam in (lam_lo, inf) with 1/||s(lam)|| = sigma/(2 lam).

    The target is the cubic-model stationarity multiplier; iteration stops
    once the implied model-gradient norm |sigma*||s||/2 - lam|*||s|| falls
    below tol_abs. Returns (lam, iterations, status).
    """
    gnorm = math.sqrt(float(np.sum(g2)))
    lo = lam_lo
    hi = lam_lo + math.sqrt(0.5 * sigma * gnorm) + 1e-12
    for _ in range(200):
        sn, _ = _eval(eigvals, g2, hi)
        if sn == 0.0 or 1.0 / sn - 0.5 * sigma / hi >= 0.0:
            break
        lo = hi
        hi = 2.0 * hi + 1e-12

    lam = hi
    best_lam = lam
    best_resid = math.inf
    for i in range(max_iter):
        sn, sum3 = _eval(eigvals, g2, lam)
        if sn == 0.0:
            # step vanished: lam far above the root, shrink toward lo
            hi = lam
            lam = 0.5 * (lo + hi)
            continue
        resid = abs(0.5 * sigma * sn - lam) * sn
        if resid < best_resid:
            best_resid = resid
            best_lam = lam
        if resid <= tol_abs:
            return lam, i, STATUS_OK
        phi = 1.0 / sn - 0.5 * sigma / lam
        if phi < 0.0:
            lo = lam
        else:
            hi = lam
        dphi = sum3 / (sn * sn * sn) + 0.5 * sigma / (lam * lam)
        lam_new = lam - phi / dphi
        if not (lo < lam_new < hi) or not math.isfinite(lam_new):
            lam_new = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            return best_lam, i, STATUS_COLLAPSED
        lam = lam_new
    return best_lam, max_iter, STATUS_MAXITER


def trs_root(eigvals, g2, radius, lam_lo, tol_rel, max_iter):
    """Find lam in (lam_lo, inf) with ||s(lam)|| = radius.

    Boundary case of the trust-region subproblem; stops when
    | ||s|| - radius | <= tol_rel * radius. Returns (lam, iterations, status).
    """
    gnorm = math.sqrt(float(np.sum(g2)))
    lo = lam_lo
    hi = lam_lo + gnorm / radius + 1e-12
    for _ in range(200):
        sn, _ = _eval(eigvals, g2, hi)
        if sn == 0.0 or 1.0 / sn - 1.0 / radius >= 0.0:
            break
        lo = hi
        hi = 2.0 * hi + 1e-12

    lam = hi
    best_lam = lam
    best_resid = math.inf
    for i in range(max_iter):
        sn, sum3 = _eval(eigvals, g2, lam)
        if sn == 0.0:
            hi = lam
            lam = 0.5 * (lo + hi)
            continue
        resid = abs(sn - radius)
        if resid < best_resid:
            best_resid = resid
            best_lam = lam
        if resid <= tol_rel * radius:
            return lam, i, STATUS_OK
        phi = 1.0 / sn - 1.0 / radius
        if phi < 0.0:
            lo = lam
        else:
            hi = lam
        dphi = sum3 / (sn * sn * sn)
        if dphi <= 0.0 or not math.isfinite(dphi):
            lam_new = 0.5 * (lo + hi)
        else:
            lam_new = lam - phi / dphi
            if not (lo < lam_new < hi) or not math.isfinite(lam_new):
                lam_new = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            return best_lam, i, STATUS_COLLAPSED
        lam = lam_new
    return best_lam, max_iter, STATUS_MAXITER
