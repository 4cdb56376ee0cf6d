# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels. Must stay in step with ``_kernels_py.py``."""

from libc.math cimport erfc, log, sqrt, NAN

import numpy as np

cdef double _SQRT2 = sqrt(2.0)
cdef double THETA_CAP = 1.0 - 1e-9


cdef inline double _residual(double p, double log_nu, double mu, double varrho,
                             double half_gap, double denom) nogil:
    cdef double log_ratio = log(p) - log(1.0 - p)
    cdef double theta = (log_ratio + half_gap + varrho * log_nu) / denom
    if theta >= 1.0:
        theta = THETA_CAP
    cdef double prob_f = 0.5 * erfc((log(1.0 - theta) - mu) / _SQRT2)
    return p - prob_f


def share_residual(double p, double log_nu, double mu, double varrho,
                   double half_gap, double denom):
    return _residual(p, log_nu, mu, varrho, half_gap, denom)


cdef double _solve_one(double log_nu, double mu, double varrho, double half_gap,
                       double denom, double p_lo, double p_hi) nogil:
    cdef double lo = p_lo, hi = p_hi, mid, r_mid
    cdef double r_lo = _residual(lo, log_nu, mu, varrho, half_gap, denom)
    cdef double r_hi = _residual(hi, log_nu, mu, varrho, half_gap, denom)
    cdef int it
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if (r_lo < 0.0) == (r_hi < 0.0):
        return NAN
    for it in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r_mid = _residual(mid, log_nu, mu, varrho, half_gap, denom)
        if r_mid == 0.0:
            return mid
        if (r_mid < 0.0) == (r_lo < 0.0):
            lo = mid
            r_lo = r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def education_shares(log_nu, double mu, double varrho, double half_gap, double denom,
                     double p_lo, double p_hi):
    cdef double[::1] values = np.ascontiguousarray(log_nu, dtype=np.float64)
    cdef Py_ssize_t n = values.shape[0], t
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    with nogil:
        for t in range(n):
            res[t] = _solve_one(values[t], mu, varrho, half_gap, denom, p_lo, p_hi)
    return out


def ar1_path(double rho, double x0, innovations):
    cdef double[::1] eta = np.ascontiguousarray(innovations, dtype=np.float64)
    cdef Py_ssize_t n = eta.shape[0], t
    out = np.empty(n + 1, dtype=np.float64)
    cdef double[::1] res = out
    cdef double x = x0
    res[0] = x
    with nogil:
        for t in range(n):
            x = rho * x + eta[t]
            res[t + 1] = x
    return out
