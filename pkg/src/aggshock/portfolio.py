"""Portfolio choice with a common return shock.

Investors with CARA utility split unit wealth between a safe asset paying ``r``
and a risky asset paying ``u_i = nu + eps_i``. The common component ``nu`` is
the aggregate shock. A single cross-section identifies the risk-aversion
coefficient only conditionally on the realized shock; adding a time series of
shocks restores consistency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, DomainError
from .numerics import RngStream, bisect_root

__all__ = [
    "PortfolioParams",
    "PortfolioCrossSection",
    "TwoStepEstimate",
    "optimal_share",
    "simulate_cross_section",
    "simulate_shock_series",
    "naive_mm_estimate",
    "naive_plim",
    "euler_foc_estimate",
    "two_step_estimate",
    "asymptotic_variance",
    "EULER_BRACKET",
]

EULER_BRACKET = (1e-4, 100.0)
EULER_TOL = 1e-10


@dataclass(frozen=True)
class PortfolioParams:
    delta: float = 2.0
    mu: float = 0.06
    sigma_nu_sq: float = 0.01
    sigma_eps_sq: float = 0.03
    sigma_e_sq: float = 0.01
    r: float = 0.02

    def __post_init__(self):
        if self.sigma_nu_sq < 0 or self.sigma_e_sq < 0:
            raise DomainError("variances must be nonnegative")
        if self.sigma_nu_sq + self.sigma_eps_sq <= 0:
            raise DomainError("total return variance must be positive")

    @property
    def total_variance(self) -> float:
        return self.sigma_nu_sq + self.sigma_eps_sq


@dataclass(frozen=True)
class PortfolioCrossSection:
    nu_1: float
    u: np.ndarray
    alpha_obs: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.alpha_obs.shape or self.u.size < 2:
            raise DomainError("u and alpha_obs must have equal length of at least 2")


@dataclass(frozen=True)
class TwoStepEstimate:
    delta: float
    mu: float
    sigma_nu_sq: float
    sigma_eps_sq: float
    alpha_bar: float


def optimal_share(params: PortfolioParams) -> float:
    """Share of wealth held in the safe asset."""
    scale = params.delta * params.total_variance
    if scale == 0:
        raise DomainError("delta * sigma^2 must be nonzero")
    return (scale + params.r - params.mu) / scale


def simulate_cross_section(params: PortfolioParams, n: int, rng: RngStream,
                           nu_1: float | None = None) -> PortfolioCrossSection:
    """One cross-section at t = 1. Pass ``nu_1`` to condition on a shock value."""
    if n < 2:
        raise DomainError("need at least two investors")
    if nu_1 is None:
        nu_1 = float(rng.normal(params.mu, math.sqrt(params.sigma_nu_sq)))
    eps = rng.normal(0.0, math.sqrt(params.sigma_eps_sq), size=n)
    err = rng.normal(0.0, math.sqrt(params.sigma_e_sq), size=n)
    u = nu_1 + eps
    alpha_obs = optimal_share(params) + err
    return PortfolioCrossSection(nu_1=float(nu_1), u=u, alpha_obs=alpha_obs)


def simulate_shock_series(params: PortfolioParams, tau: int, rng: RngStream) -> np.ndarray:
    """i.i.d. aggregate shocks nu_1..nu_tau."""
    if tau < 2:
        raise DomainError("need at least two periods")
    return rng.normal(params.mu, math.sqrt(params.sigma_nu_sq), size=tau)


def _cross_moments(data: PortfolioCrossSection):
    u_bar = float(np.mean(data.u))
    var_u = float(np.mean((data.u - u_bar) ** 2))
    alpha_bar = float(np.mean(data.alpha_obs))
    if var_u <= 0:
        raise DegenerateSample("cross-sectional return variance is zero")
    if alpha_bar == 1.0:
        raise DegenerateSample("mean safe share equals one")
    return u_bar, var_u, alpha_bar


def naive_mm_estimate(data: PortfolioCrossSection, r: float) -> float:
    """Cross-section-only method of moments; converges to a shock-dependent limit."""
    u_bar, var_u, alpha_bar = _cross_moments(data)
    return (u_bar - r) / (var_u * (1.0 - alpha_bar))


def naive_plim(params: PortfolioParams, nu_1: float) -> float:
    """Probability limit of the cross-section-only estimators given the shock."""
    alpha = optimal_share(params)
    return (nu_1 - params.r) / (params.sigma_eps_sq * (1.0 - alpha))


def euler_foc_estimate(data: PortfolioCrossSection, r: float, params: PortfolioParams) -> float:
    """Root in delta of the sample Euler condition mean(exp(-delta c)(r - u)) = 0.

    Consumption follows the budget constraint with the model share, so the
    estimator only uses the curvature of utility across investors.
    """
    alpha = optimal_share(params)
    consumption = 1.0 + alpha * r + (1.0 - alpha) * data.u
    centered = consumption - consumption.mean()
    excess = r - data.u

    def condition(delta: float) -> float:
        # exp(-delta * mean c) is a positive factor and leaves the root unchanged
        weights = np.exp(-delta * centered)
        return float(np.mean(weights * excess))

    return bisect_root(condition, *EULER_BRACKET, tol=EULER_TOL)


def two_step_estimate(data: PortfolioCrossSection, nu_series, r: float) -> TwoStepEstimate:
    """Cross-section for the idiosyncratic variance, time series for the shock law."""
    nu_series = np.asarray(nu_series, dtype=float)
    if nu_series.size < 2:
        raise DomainError("need at least two shock observations")
    _, var_u, alpha_bar = _cross_moments(data)
    mu_hat = float(nu_series.mean())
    var_nu = float(np.mean((nu_series - mu_hat) ** 2))
    delta_hat = (mu_hat - r) / ((var_u + var_nu) * (1.0 - alpha_bar))
    return TwoStepEstimate(delta=delta_hat, mu=mu_hat, sigma_nu_sq=var_nu,
                           sigma_eps_sq=var_u, alpha_bar=alpha_bar)


def asymptotic_variance(params: PortfolioParams, kappa: float) -> float:
    """Limiting variance of sqrt(n)(delta_hat - delta) for the two-step estimator.

    ``kappa`` is the limit of n / tau. Delta-method variance using the
    Gaussian fourth moments: var(sample variance) = 2 sigma^4.
    """
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    alpha = optimal_share(params)
    if alpha == 1.0:
        raise DomainError("optimal share equals one")
    premium = params.mu - params.r
    s_eps, s_nu, s_e = params.sigma_eps_sq, params.sigma_nu_sq, params.sigma_e_sq
    total = s_eps + s_nu
    one_minus = 1.0 - alpha
    numerator = (2.0 * one_minus**2 * premium**2 * (s_eps**2 + kappa * s_nu**2)
                 + total**2 * (premium**2 * s_e + one_minus**2 * kappa * s_nu))
    return numerator / (one_minus**4 * total**4)
