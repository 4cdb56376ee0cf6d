"""Sandwich standard errors for the joint cross-section and time-series estimator.

Both sets of estimating equations are stacked in one exactly identified system
with parameter vector ``(mu, delta1, delta2, sigma, delta3, sigma_F_sq,
sigma_R_sq, varrho, omega_sq)``. Each block's moment covariance is scaled by
its own sample size, which is what makes the two-sample variance differ from a
textbook GMM sandwich. Aggregates are held fixed as data throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularJacobian, SingularMatrix, ThetaOutOfRange
from .ge_estimation import GEEstimate
from .ge_model import Economy, GEParams
from .numerics import invert, numeric_jacobian, std_normal_cdf

__all__ = [
    "PARAM_NAMES",
    "N_CROSS",
    "CrossSectionData",
    "TimeSeriesData",
    "SandwichResult",
    "phi_from_estimate",
    "true_phi",
    "cross_moment",
    "time_moment",
    "stacked_moments",
    "sandwich",
    "coverage_indicator",
    "Z_90",
]

PARAM_NAMES = ("mu", "delta1", "delta2", "sigma", "delta3", "sigma_F_sq", "sigma_R_sq",
               "varrho", "omega_sq")
N_CROSS = 7
Z_90 = 1.645
RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class CrossSectionData:
    """Individual records of both waves plus the aggregates they condition on."""

    F1: np.ndarray
    log_w1: np.ndarray
    cl_ratio1: np.ndarray
    F2: np.ndarray
    log_w2: np.ndarray
    log_n1F: float
    log_n2F: float
    log_n1R: float
    log_n2R: float
    log_w1F_agg: float
    log_w1R_agg: float

    @classmethod
    def from_economy(cls, economy: Economy) -> "CrossSectionData":
        w1, w2 = economy.waves
        path = economy.path
        return cls(
            F1=w1.F_dummy.astype(float), log_w1=w1.log_wage,
            cl_ratio1=w1.consumption / w1.leisure,
            F2=w2.F_dummy.astype(float), log_w2=w2.log_wage,
            log_n1F=math.log(path.n_F[1]), log_n2F=math.log(path.n_F[2]),
            log_n1R=math.log(path.n_R[1]), log_n2R=math.log(path.n_R[2]),
            log_w1F_agg=float(path.log_wF_agg[1]), log_w1R_agg=float(path.log_wR_agg[1]))

    @property
    def n(self) -> int:
        return self.F1.size

    def alpha1(self, delta1: float, delta2: float) -> float:
        if delta1 == delta2:
            raise DomainError("delta1 equals delta2")
        return (self.log_n1F - self.log_n2F) / (delta1 - delta2)


@dataclass(frozen=True)
class TimeSeriesData:
    """Aggregate log gaps from which the shock series is rebuilt for any alpha1."""

    log_wage_gap: np.ndarray
    log_measure_gap: np.ndarray
    log_n1F: float
    log_n2F: float

    @classmethod
    def from_economy(cls, economy: Economy) -> "TimeSeriesData":
        path = economy.path
        return cls(log_wage_gap=path.log_wF_agg - path.log_wR_agg,
                   log_measure_gap=np.log(path.n_F) - np.log(path.n_R),
                   log_n1F=math.log(path.n_F[1]), log_n2F=math.log(path.n_F[2]))

    @property
    def tau(self) -> int:
        return self.log_wage_gap.size - 1

    def log_nu(self, delta1: float, delta2: float) -> np.ndarray:
        if delta1 == delta2:
            raise DomainError("delta1 equals delta2")
        alpha1 = (self.log_n1F - self.log_n2F) / (delta1 - delta2)
        return alpha1 * self.log_wage_gap - self.log_measure_gap


@dataclass(frozen=True)
class SandwichResult:
    phi: np.ndarray
    A: np.ndarray
    W: np.ndarray
    V: np.ndarray
    se: np.ndarray
    ci_90: np.ndarray
    omega_f: np.ndarray = field(repr=False)
    omega_g: np.ndarray = field(repr=False)

    def interval(self, name: str):
        j = PARAM_NAMES.index(name)
        return float(self.ci_90[j, 0]), float(self.ci_90[j, 1])


def phi_from_estimate(est: GEEstimate) -> np.ndarray:
    return np.array([est.mu, est.delta1, est.delta2, est.sigma, est.delta3, est.sigma_F_sq,
                     est.sigma_R_sq, est.varrho, est.omega_sq], dtype=float)


def true_phi(params: GEParams, economy: Economy) -> np.ndarray:
    """Population values given the realized aggregates of one economy."""
    path = economy.path
    return np.array([
        params.mu,
        path.log_wF_agg[1] - 0.5 * params.sigma_F_sq,
        path.log_wF_agg[2] - 0.5 * params.sigma_F_sq,
        params.sigma,
        path.log_wR_agg[1] - 0.5 * params.sigma_R_sq,
        params.sigma_F_sq,
        params.sigma_R_sq,
        params.varrho,
        params.omega_sq,
    ])


def _theta_from_phi(phi, data: CrossSectionData) -> float:
    _, d1, d2, sig, _, s_F, s_R, rho, om2 = phi
    alpha1 = data.alpha1(d1, d2)
    log_nu1 = alpha1 * (data.log_w1F_agg - data.log_w1R_agg) - (data.log_n1F - data.log_n1R)
    gap = s_R - s_F
    denom = sig * (gap + om2) / (2.0 * alpha1)
    if denom == 0.0:
        raise DomainError("theta denominator is zero")
    return (data.log_n2F - data.log_n2R + 0.5 * gap + rho * log_nu1) / denom


def cross_moment(phi, data: CrossSectionData) -> np.ndarray:
    """Per-individual cross-section moments, shape (n, 7)."""
    mu, d1, d2, sig, d3, s_F, s_R, _, _ = phi
    th = _theta_from_phi(phi, data)
    if th >= 1.0:
        raise ThetaOutOfRange(f"theta {th:.6g} >= 1 at the evaluation point")
    w1F = math.exp(data.log_w1F_agg)
    F1, R1, F2 = data.F1, 1.0 - data.F1, data.F2
    lw1, lw2 = data.log_w1, data.log_w2
    prob_F = 1.0 - std_normal_cdf(math.log1p(-th) - mu)
    return np.column_stack([
        F1 * (lw1 - d1),
        F1 * (data.cl_ratio1 - w1F * sig / (1.0 - sig)),
        F1 * (lw1**2 - (s_F + d1**2)),
        R1 * (lw1 - d3),
        R1 * (lw1**2 - (s_R + d3**2)),
        F2 * (lw2 - d2),
        F2 - prob_F,
    ])


def time_moment(phi, data: TimeSeriesData) -> np.ndarray:
    """Per-period time-series moments, shape (tau, 2)."""
    d1, d2, rho, om2 = phi[1], phi[2], phi[7], phi[8]
    log_nu = data.log_nu(d1, d2)
    lagged, current = log_nu[:-1], log_nu[1:]
    resid = current - rho * lagged
    return np.column_stack([lagged * resid, resid**2 - om2])


def stacked_moments(phi, cross: CrossSectionData, series: TimeSeriesData) -> np.ndarray:
    """Sample averages of both moment blocks, length 9."""
    return np.concatenate([cross_moment(phi, cross).mean(axis=0),
                           time_moment(phi, series).mean(axis=0)])


def sandwich(phi_hat, cross: CrossSectionData, series: TimeSeriesData,
             h_rel: float = 1e-6, check_residual: bool = True) -> SandwichResult:
    phi_hat = np.asarray(phi_hat, dtype=float)
    f = cross_moment(phi_hat, cross)
    g = time_moment(phi_hat, series)
    n, tau = f.shape[0], g.shape[0]
    if check_residual:
        resid = np.concatenate([f.mean(axis=0), g.mean(axis=0)])
        worst = float(np.max(np.abs(resid)))
        if worst > RESIDUAL_TOL:
            raise DomainError(f"estimating equations not solved at phi_hat (max residual {worst:.3g})")
    A = numeric_jacobian(lambda p: stacked_moments(p, cross, series), phi_hat, h_rel=h_rel)
    omega_f = f.T @ f / n
    omega_g = g.T @ g / tau
    W = np.zeros((9, 9))
    W[:N_CROSS, :N_CROSS] = omega_f / n
    W[N_CROSS:, N_CROSS:] = omega_g / tau
    try:
        A_inv = invert(A)
    except SingularMatrix as exc:
        raise SingularJacobian(str(exc)) from exc
    V = A_inv @ W @ A_inv.T
    se = np.sqrt(np.clip(np.diag(V), 0.0, None))
    ci = np.column_stack([phi_hat - Z_90 * se, phi_hat + Z_90 * se])
    return SandwichResult(phi=phi_hat, A=A, W=W, V=V, se=se, ci_90=ci, omega_f=omega_f,
                          omega_g=omega_g)


def coverage_indicator(ci, true_value: float) -> bool:
    """Closed-interval membership."""
    lo, hi = float(ci[0]), float(ci[1])
    if lo > hi:
        raise DomainError("interval lower end exceeds upper end")
    return bool(lo <= true_value <= hi)
