"""Overlapping-generations economy with an education choice and a sector shock.

Young individuals pick a flexible (F) or rigid (R) education. Their choice
depends on their risk aversion and on the expected relative wage in the next
period, which moves with an AR(1) aggregate shock hitting the R sector. The
share choosing F is a rational-expectations fixed point because next-period
wages depend on how many people choose each sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import DomainError, NoFixedPoint, ThetaOutOfRange
from .numerics import RngStream, std_normal_cdf

__all__ = [
    "GEParams",
    "AggregatePath",
    "CrossSectionWave",
    "Economy",
    "theta",
    "chooses_F",
    "choice_probability",
    "fraction_choosing_F",
    "education_shares",
    "equilibrium_log_wages",
    "simulate_economy",
    "SHARE_BOUNDS",
]

SHARE_BOUNDS = (1e-6, 1.0 - 1e-6)


@dataclass(frozen=True)
class GEParams:
    mu: float = 0.2
    varrho: float = 0.75
    omega_sq: float = 0.48
    sigma_F_sq: float = 1.0
    sigma_R_sq: float = 1.4
    sigma: float = 0.6
    alpha0: float = 7.0
    alpha1: float = -1.0
    time_endowment: float = 1.0
    discount: float = 0.95  # cancels from the education choice; carried for completeness

    def __post_init__(self):
        if not self.alpha1 < 0:
            raise DomainError("alpha1 must be negative")
        if not 0 < self.sigma < 1:
            raise DomainError("sigma must lie in (0, 1)")
        if not self.sigma_R_sq > self.sigma_F_sq >= 0:
            raise DomainError("need sigma_R_sq > sigma_F_sq >= 0")
        if not self.omega_sq > 0:
            raise DomainError("omega_sq must be positive")
        if not self.time_endowment > 0:
            raise DomainError("time endowment must be positive")
        if not self.alpha0 > 0:
            raise DomainError("alpha0 must be positive")
        if not abs(self.varrho) < 1:
            raise DomainError("varrho must lie inside (-1, 1) for a stationary start")

    def with_(self, **changes) -> "GEParams":
        return replace(self, **changes)

    @property
    def half_variance_gap(self) -> float:
        return 0.5 * (self.sigma_R_sq - self.sigma_F_sq)

    @property
    def theta_denominator(self) -> float:
        return self.sigma * (self.sigma_R_sq - self.sigma_F_sq + self.omega_sq) / (2.0 * self.alpha1)

    @property
    def stationary_variance(self) -> float:
        return self.omega_sq / (1.0 - self.varrho**2)


@dataclass(frozen=True)
class AggregatePath:
    """Aggregates for periods t = 0..tau.

    ``choice_log_nu[t]`` is the shock the generation working at t saw when
    young (the shock of period t - 1), and ``theta[t]`` is their choice index.
    """

    log_nu: np.ndarray
    choice_log_nu: np.ndarray
    n_F: np.ndarray
    n_R: np.ndarray
    log_wF_agg: np.ndarray
    log_wR_agg: np.ndarray
    theta: np.ndarray

    @property
    def tau(self) -> int:
        return self.log_nu.size - 1


@dataclass(frozen=True)
class CrossSectionWave:
    period: int
    gamma: np.ndarray
    F_dummy: np.ndarray
    log_wage: np.ndarray
    consumption: np.ndarray
    leisure: np.ndarray
    eps: np.ndarray

    @property
    def n(self) -> int:
        return self.F_dummy.size


@dataclass(frozen=True)
class Economy:
    params: GEParams
    path: AggregatePath
    waves: tuple


def theta(params: GEParams, log_nF_over_nR, log_nu_t):
    """Choice index; an individual picks F iff gamma >= 1 - theta."""
    denom = params.theta_denominator
    if denom == 0:
        raise DomainError("theta denominator is zero")
    return (np.asarray(log_nF_over_nR) + params.half_variance_gap
            + params.varrho * np.asarray(log_nu_t)) / denom


def chooses_F(gamma_i, theta_t):
    return np.asarray(gamma_i) >= 1.0 - np.asarray(theta_t)


def choice_probability(theta_value, mu):
    """Probability that log-normal gamma with mean mu exceeds 1 - theta."""
    th = np.asarray(theta_value, dtype=float)
    if np.any(th >= 1.0):
        raise ThetaOutOfRange(f"theta >= 1 (max {np.max(th):.6g})")
    prob = 1.0 - std_normal_cdf(np.log1p(-th) - mu)
    return float(prob) if np.ndim(theta_value) == 0 else prob


def education_shares(params: GEParams, choice_log_nu) -> np.ndarray:
    """Fixed-point share choosing F for each shock value seen when young."""
    shares = kernels.education_shares(
        np.atleast_1d(np.asarray(choice_log_nu, dtype=np.float64)),
        params.mu, params.varrho, params.half_variance_gap, params.theta_denominator,
        SHARE_BOUNDS[0], SHARE_BOUNDS[1])
    if np.any(np.isnan(shares)):
        bad = np.flatnonzero(np.isnan(shares))
        raise NoFixedPoint(f"no sign change of the share equation at shock index {bad[:5].tolist()}")
    return shares


def fraction_choosing_F(params: GEParams, log_nu_t: float) -> float:
    return float(education_shares(params, [log_nu_t])[0])


def equilibrium_log_wages(params: GEParams, n_F, n_R, log_nu_t):
    """Market-clearing log wages in both sectors."""
    n_F = np.asarray(n_F, dtype=float)
    n_R = np.asarray(n_R, dtype=float)
    if np.any(n_F <= 0) or np.any(n_R <= 0):
        raise DomainError("sector measures must be positive")
    common = math.log(params.sigma) + math.log(params.time_endowment) - params.alpha0
    log_wF = (np.log(n_F) + common) / params.alpha1
    log_wR = (np.log(n_R) + common - np.asarray(log_nu_t)) / params.alpha1
    return log_wF, log_wR


def _simulate_wave(params: GEParams, path: AggregatePath, period: int, n: int,
                   rng: RngStream) -> CrossSectionWave:
    gamma = np.exp(rng.normal(params.mu, 1.0, size=n))
    eps_F = rng.normal(-0.5 * params.sigma_F_sq, math.sqrt(params.sigma_F_sq), size=n)
    eps_R = rng.normal(-0.5 * params.sigma_R_sq, math.sqrt(params.sigma_R_sq), size=n)
    in_F = chooses_F(gamma, path.theta[period])
    eps = np.where(in_F, eps_F, eps_R)
    log_wage = np.where(in_F, path.log_wF_agg[period], path.log_wR_agg[period]) + eps
    leisure = np.full(n, (1.0 - params.sigma) * params.time_endowment)
    consumption = params.sigma * params.time_endowment * np.exp(log_wage)
    return CrossSectionWave(period=period, gamma=gamma, F_dummy=in_F, log_wage=log_wage,
                            consumption=consumption, leisure=leisure, eps=eps)


def simulate_economy(params: GEParams, tau: int, n: int, rng: RngStream) -> Economy:
    """Aggregates for t = 0..tau and cross-section waves at t = 1 and t = 2.

    The shock starts from its stationary law one period before t = 0 so that
    the generation working at t = 0 also has a well-defined choice.
    """
    if tau < 3 or n < 100:
        raise DomainError("need tau >= 3 and n >= 100")
    start = rng.normal(0.0, math.sqrt(params.stationary_variance))
    innovations = rng.normal(0.0, math.sqrt(params.omega_sq), size=tau + 1)
    shocks = kernels.ar1_path(params.varrho, start, innovations)  # periods -1..tau
    choice_log_nu = shocks[:-1]
    log_nu = shocks[1:]
    n_F = education_shares(params, choice_log_nu)
    n_R = 1.0 - n_F
    log_wF, log_wR = equilibrium_log_wages(params, n_F, n_R, log_nu)
    theta_path = theta(params, np.log(n_F) - np.log(n_R), choice_log_nu)
    path = AggregatePath(log_nu=log_nu, choice_log_nu=choice_log_nu, n_F=n_F, n_R=n_R,
                         log_wF_agg=log_wF, log_wR_agg=log_wR, theta=theta_path)
    waves = (_simulate_wave(params, path, 1, n, rng), _simulate_wave(params, path, 2, n, rng))
    return Economy(params=params, path=path, waves=waves)
