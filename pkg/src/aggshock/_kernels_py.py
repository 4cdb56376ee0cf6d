"""Pure-Python kernels. Mirrors ``_ckernels.pyx`` operation for operation."""

import math

import numpy as np

_SQRT2 = math.sqrt(2.0)
THETA_CAP = 1.0 - 1e-9


def share_residual(p, log_nu, mu, varrho, half_gap, denom):
    """p minus the probability of choosing F implied by the share p."""
    log_ratio = math.log(p) - math.log(1.0 - p)
    theta = (log_ratio + half_gap + varrho * log_nu) / denom
    if theta >= 1.0:
        theta = THETA_CAP
    prob_f = 0.5 * math.erfc((math.log(1.0 - theta) - mu) / _SQRT2)
    return p - prob_f


def _solve_one(log_nu, mu, varrho, half_gap, denom, p_lo, p_hi):
    lo, hi = p_lo, p_hi
    r_lo = share_residual(lo, log_nu, mu, varrho, half_gap, denom)
    r_hi = share_residual(hi, log_nu, mu, varrho, half_gap, denom)
    if r_lo == 0.0:
        return lo
    if r_hi == 0.0:
        return hi
    if (r_lo < 0.0) == (r_hi < 0.0):
        return math.nan
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r_mid = share_residual(mid, log_nu, mu, varrho, half_gap, denom)
        if r_mid == 0.0:
            return mid
        if (r_mid < 0.0) == (r_lo < 0.0):
            lo, r_lo = mid, r_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def education_shares(log_nu, mu, varrho, half_gap, denom, p_lo, p_hi):
    """Fixed-point share for each shock value; NaN where no sign change exists."""
    values = np.asarray(log_nu, dtype=np.float64)
    out = np.empty(values.shape[0], dtype=np.float64)
    for t in range(values.shape[0]):
        out[t] = _solve_one(float(values[t]), mu, varrho, half_gap, denom, p_lo, p_hi)
    return out


def ar1_path(rho, x0, innovations):
    """x[0] = x0 and x[t] = rho * x[t-1] + innovations[t-1]."""
    eta = np.asarray(innovations, dtype=np.float64)
    out = np.empty(eta.shape[0] + 1, dtype=np.float64)
    x = float(x0)
    out[0] = x
    for t in range(eta.shape[0]):
        x = rho * x + float(eta[t])
        out[t + 1] = x
    return out
