# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled secular-equation root kernels.

Same algorithm as ``arcm._kernels._secular_py`` with tight C loops; this is
the hot scalar iteration inside every cubic and trust-region subproblem
solve.
"""

from libc.math cimport sqrt, fabs, isfinite, INFINITY

STATUS_OK = 0
STATUS_COLLAPSED = 1
STATUS_MAXITER = 2


cdef inline void _eval(const double[::1] eigvals, const double[::1] g2,
                       double lam, double* snorm, double* sum3) noexcept nogil:
    cdef Py_ssize_t i, n = eigvals.shape[0]
    cdef double den, r2, sn2 = 0.0, s3 = 0.0
    for i in range(n):
        den = eigvals[i] + lam
        r2 = g2[i] / (den * den)
        sn2 += r2
        s3 += r2 / den
    snorm[0] = sqrt(sn2)
    sum3[0] = s3


def crs_root(const double[::1] eigvals, const double[::1] g2, double sigma,
             double lam_lo, double tol_abs, int max_iter):
    """See arcm._kernels._secular_py.crs_root."""
    cdef double gnorm2 = 0.0
    cdef Py_ssize_t i
    for i in range(g2.shape[0]):
        gnorm2 += g2[i]
    cdef double gnorm = sqrt(gnorm2)

    cdef double lo = lam_lo
    cdef double hi = lam_lo + sqrt(0.5 * sigma * gnorm) + 1e-12
    cdef double sn = 0.0, sum3 = 0.0
    cdef int k
    for k in range(200):
        _eval(eigvals, g2, hi, &sn, &sum3)
        if sn == 0.0 or 1.0 / sn - 0.5 * sigma / hi >= 0.0:
            break
        lo = hi
        hi = 2.0 * hi + 1e-12

    cdef double lam = hi
    cdef double best_lam = lam
    cdef double best_resid = INFINITY
    cdef double resid, phi, dphi, lam_new
    cdef int it
    for it in range(max_iter):
        _eval(eigvals, g2, lam, &sn, &sum3)
        if sn == 0.0:
            hi = lam
            lam = 0.5 * (lo + hi)
            continue
        resid = fabs(0.5 * sigma * sn - lam) * sn
        if resid < best_resid:
            best_resid = resid
            best_lam = lam
        if resid <= tol_abs:
            return lam, it, STATUS_OK
        phi = 1.0 / sn - 0.5 * sigma / lam
        if phi < 0.0:
            lo = lam
        else:
            hi = lam
        dphi = sum3 / (sn * sn * sn) + 0.5 * sigma / (lam * lam)
        lam_new = lam - phi / dphi
        if not (lo < lam_new < hi) or not isfinite(lam_new):
            lam_new = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            return best_lam, it, STATUS_COLLAPSED
        lam = lam_new
    return best_lam, max_iter, STATUS_MAXITER


def trs_root(const double[::1] eigvals, const double[::1] g2, double radius,
             double lam_lo, double tol_rel, int max_iter):
    """See arcm._kernels._secular_py.trs_root."""
    cdef double gnorm2 = 0.0
    cdef Py_ssize_t i
    for i in range(g2.shape[0]):
        gnorm2 += g2[i]
    cdef double gnorm = sqrt(gnorm2)

    cdef double lo = lam_lo
    cdef double hi = lam_lo + gnorm / radius + 1e-12
    cdef double sn = 0.0, sum3 = 0.0
    cdef int k
    for k in range(200):
        _eval(eigvals, g2, hi, &sn, &sum3)
        if sn == 0.0 or 1.0 / sn - 1.0 / radius >= 0.0:
            break
        lo = hi
        hi = 2.0 * hi + 1e-12

    cdef double lam = hi
    cdef double best_lam = lam
    cdef double best_resid = INFINITY
    cdef double resid, phi, dphi, lam_new
    cdef int it
    for it in range(max_iter):
        _eval(eigvals, g2, lam, &sn, &sum3)
        if sn == 0.0:
            hi = lam
            lam = 0.5 * (lo + hi)
            continue
        resid = fabs(sn - radius)
        if resid < best_resid:
            best_resid = resid
            best_lam = lam
        if resid <= tol_rel * radius:
            return lam, it, STATUS_OK
        phi = 1.0 / sn - 1.0 / radius
        if phi < 0.0:
            lo = lam
        else:
            hi = lam
        dphi = sum3 / (sn * sn * sn)
        if dphi <= 0.0 or not isfinite(dphi):
            lam_new = 0.5 * (lo + hi)
        else:
            lam_new = lam - phi / dphi
            if not (lo < lam_new < hi) or not isfinite(lam_new):
                lam_new = 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(1.0, hi):
            return best_lam, it, STATUS_COLLAPSED
        lam = lam_new
    return best_lam, max_iter, STATUS_MAXITER
