"""Random streams, Gaussian distribution functions and small numerical routines."""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.special

from .errors import (
    DomainError,
    EvaluationError,
    NoBracket,
    SingularDesign,
    SingularMatrix,
)

__all__ = [
    "RngStream",
    "std_normal_cdf",
    "std_normal_quantile",
    "ols",
    "ols_with_covariance",
    "bisect_root",
    "golden_section_min",
    "numeric_jacobian",
    "invert",
    "CONDITION_WARNING",
]

_SQRT2 = math.sqrt(2.0)
_UINT64_MAX = 2**64 - 1
CONDITION_WARNING = 1e12


class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_id)``.

    Backed by the Philox4x64 generator with the two 64-bit key words set to
    the seed and the stream id, so stream ``r`` is the same sequence no matter
    which worker draws it. Normals are produced by the inverse CDF, one uniform
    per normal.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        for name, value in (("seed", seed), ("stream_id", stream_id)):
            if not 0 <= int(value) <= _UINT64_MAX:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=key)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, size=None):
        """Uniform draws on the open interval (0, 1) with 53-bit resolution."""
        count = 1 if size is None else int(np.prod(size))
        raw = self._bitgen.random_raw(count)
        u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        if size is None:
            return float(u[0])
        return u.reshape(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        z = scipy.special.ndtri(self.uniform(size))
        return loc + scale * z


def std_normal_cdf(x):
    """Standard normal CDF via the complementary error function."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return 0.5 * scipy.special.erfc(-np.asarray(x, dtype=float) / _SQRT2)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise DomainError(f"quantile requires 0 < p < 1, got {p}")
    q = scipy.special.ndtri(arr)
    return float(q) if np.ndim(p) == 0 else q


def _check_design(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise DomainError(f"response length {y.shape} does not match design rows {n}")
    if n < k:
        raise SingularDesign(f"{n} observations for {k} regressors")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise EvaluationError("non-finite values in regression data")
    return X, y


def ols(X, y) -> np.ndarray:
    """Least-squares coefficients of ``y`` on the columns of ``X``."""
    X, y = _check_design(X, y)
    coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise SingularDesign(f"design has rank {rank} < {X.shape[1]} columns")
    return coef


def ols_with_covariance(X, y):
    """OLS coefficients, residuals and the homoskedastic coefficient covariance."""
    X, y = _check_design(X, y)
    coef = ols(X, y)
    resid = y - X @ coef
    n, k = X.shape
    dof = max(n - k, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * invert(X.T @ X)
    return coef, resid, cov


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12,
                max_iter: int = 500) -> float:
    """Root of ``f`` on ``[lo, hi]`` by bisection."""
    if not lo < hi:
        raise DomainError(f"empty bracket [{lo}, {hi}]")
    f_lo, f_hi = f(lo), f(hi)
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)):
        raise EvaluationError("non-finite function value at bracket end")
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if (f_lo > 0) == (f_hi > 0):
        raise NoBracket(f"no sign change on [{lo}, {hi}]: f={f_lo:.3g}, {f_hi:.3g}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if not math.isfinite(f_mid):
            raise EvaluationError(f"non-finite function value at {mid}")
        if abs(f_mid) <= tol or hi - lo <= tol:
            return mid
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f: Callable[[float], float], lo: float, hi: float,
                       tol: float = 1e-8, max_iter: int = 500):
    """Minimize a unimodal function on ``[lo, hi]``; returns ``(x, f(x))``."""
    if not lo < hi:
        raise DomainError(f"empty interval [{lo}, {hi}]")
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def numeric_jacobian(F: Callable[[np.ndarray], np.ndarray], x, h_rel: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian; row i holds the partials of output i."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = h_rel * max(1.0, abs(x[j]))
        up = x.copy()
        down = x.copy()
        up[j] += h
        down[j] -= h
        f_up = np.atleast_1d(np.asarray(F(up), dtype=float))
        f_down = np.atleast_1d(np.asarray(F(down), dtype=float))
        if not (np.all(np.isfinite(f_up)) and np.all(np.isfinite(f_down))):
            raise EvaluationError(f"non-finite evaluation while differentiating coordinate {j}")
        cols.append((f_up - f_down) / (2.0 * h))
    return np.column_stack(cols)


def invert(M) -> np.ndarray:
    """Inverse by LU with partial pivoting. Warns above the condition threshold."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"inversion needs a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise SingularMatrix("matrix has non-finite entries")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0 or np.min(pivots) <= np.finfo(float).eps * scale * M.shape[0] * 1e-4:
        raise SingularMatrix("matrix is singular to working precision")
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > CONDITION_WARNING:
        warnings.warn(f"ill-conditioned matrix (condition number {cond:.3g})", RuntimeWarning,
                      stacklevel=2)
    return scipy.linalg.lu_solve((lu, piv), np.eye(M.shape[0]), check_finite=False)
