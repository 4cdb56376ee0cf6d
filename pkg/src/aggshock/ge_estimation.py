"""Estimators for the education economy and the long-panel toy model.

Wave-level cross sections identify the labor-demand slope, the consumption
share and the sector wage variances. Those estimates turn aggregate wages into
a series of shocks whose AR(1) law is fit by least squares. The risk-aversion
mean then comes from the wave-2 education share through a closed-form probit
first-order condition. The misspecified variant replaces the expected shock by
the realized one, which is what a cross-section-only analysis would do.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateSample, DomainError, SingularDesign, ThetaOutOfRange
from .ge_model import AggregatePath, CrossSectionWave, Economy
from .kernels import ar1_path
from .numerics import RngStream, std_normal_quantile

__all__ = [
    "GEEstimate",
    "MuEstimate",
    "POLICIES",
    "CENSOR_VALUE",
    "estimate_alpha1",
    "estimate_sigma",
    "estimate_shock_variances",
    "recover_log_nu",
    "estimate_ar1",
    "estimate_mu",
    "theta_plug_in",
    "theta_misspecified",
    "estimate_mu_misspecified",
    "estimate_components",
    "estimate_ge",
    "infeasible_mu",
    "LongPanel",
    "LongPanelEstimate",
    "simulate_long_panel",
    "fit_long_panel",
    "long_panel_two_step",
]

POLICIES = ("censored", "truncated")
CENSOR_VALUE = 0.99


@dataclass(frozen=True)
class GEEstimate:
    alpha1: float
    sigma: float
    sigma_F_sq: float
    sigma_R_sq: float
    delta1: float
    delta2: float
    delta3: float
    varrho: float
    omega_sq: float
    p_hat_F: float
    log_nu_hat: np.ndarray = field(repr=False)
    mu: float = math.nan
    theta: float = math.nan
    censor_flag: bool = False


@dataclass(frozen=True)
class MuEstimate:
    mu: float
    theta_used: float
    censor_flag: bool


def _sector_log_wages(wave: CrossSectionWave, sector_F: bool) -> np.ndarray:
    mask = wave.F_dummy if sector_F else ~wave.F_dummy
    return wave.log_wage[mask]


def _mean_F_log_wage(wave: CrossSectionWave) -> float:
    values = _sector_log_wages(wave, True)
    if values.size == 0:
        raise DegenerateSample(f"wave {wave.period} has no F-sector workers")
    return float(values.mean())


def estimate_alpha1(wave1: CrossSectionWave, wave2: CrossSectionWave, n1_F: float,
                    n2_F: float) -> float:
    """Labor-demand slope from the change in mean F wages between the waves."""
    gap = _mean_F_log_wage(wave1) - _mean_F_log_wage(wave2)
    if gap == 0.0:
        raise DegenerateSample("equal mean F wages in the two waves")
    return (math.log(n1_F) - math.log(n2_F)) / gap


def estimate_sigma(wave1: CrossSectionWave, wF_agg_1: float) -> float:
    """Consumption share from the consumption-to-leisure ratio of F workers."""
    if not wF_agg_1 > 0:
        raise DomainError("aggregate F wage must be positive")
    mask = wave1.F_dummy
    if not np.any(mask):
        raise DegenerateSample("wave 1 has no F-sector workers")
    ratio = float(np.mean(wave1.consumption[mask] / wave1.leisure[mask]))
    if not ratio > 0:
        raise DegenerateSample("nonpositive mean consumption-leisure ratio")
    return ratio / (wF_agg_1 + ratio)


def estimate_shock_variances(wave1: CrossSectionWave):
    """Sector variances of log wages with divisor equal to the sector count."""
    out = []
    for sector_F in (True, False):
        values = _sector_log_wages(wave1, sector_F)
        if values.size < 2:
            raise DegenerateSample("fewer than two workers in a sector")
        out.append(float(np.mean((values - values.mean()) ** 2)))
    return tuple(out)


def recover_log_nu(path: AggregatePath, alpha1_hat: float) -> np.ndarray:
    """Shock series implied by aggregate wages and sector sizes."""
    return (alpha1_hat * (path.log_wF_agg - path.log_wR_agg)
            - (np.log(path.n_F) - np.log(path.n_R)))


def estimate_ar1(log_nu_hat):
    """No-intercept AR(1) by least squares; variance is the mean squared residual."""
    series = np.asarray(log_nu_hat, dtype=float)
    if series.size < 3:
        raise DomainError("need at least three observations")
    lagged, current = series[:-1], series[1:]
    denom = float(lagged @ lagged)
    if denom == 0.0:
        raise DegenerateSample("lagged shock series is identically zero")
    rho = float(lagged @ current) / denom
    resid = current - rho * lagged
    return rho, float(np.mean(resid**2))


def _share_F(wave: CrossSectionWave) -> float:
    p = float(np.mean(wave.F_dummy))
    if p <= 0.0 or p >= 1.0:
        raise DegenerateSample(f"wave {wave.period} F share is {p}")
    return p


def _mu_from_share(p_hat_F: float, theta_hat: float, policy: str) -> MuEstimate:
    if policy not in POLICIES:
        raise DomainError(f"unknown theta policy {policy!r}")
    if not math.isfinite(theta_hat):
        raise DomainError("theta estimate is not finite")
    censored = False
    if theta_hat >= 1.0:
        if policy == "truncated":
            raise ThetaOutOfRange(f"theta estimate {theta_hat:.6g} >= 1")
        theta_hat, censored = CENSOR_VALUE, True
    mu = math.log1p(-theta_hat) - std_normal_quantile(1.0 - p_hat_F)
    return MuEstimate(mu=mu, theta_used=theta_hat, censor_flag=censored)


def estimate_mu(wave2: CrossSectionWave, theta_hat: float, policy: str = "truncated") -> MuEstimate:
    """Closed-form root of the probit score for the log-normal risk aversion mean."""
    return _mu_from_share(_share_F(wave2), theta_hat, policy)


def _check_denominator(value: float) -> float:
    if value == 0.0 or not math.isfinite(value):
        raise DomainError("theta denominator is zero or not finite")
    return value


def theta_plug_in(estimates: GEEstimate, path: AggregatePath) -> float:
    """Wave-2 choice index built only from estimated quantities."""
    gap = estimates.sigma_R_sq - estimates.sigma_F_sq
    numerator = (math.log(path.n_F[2]) - math.log(path.n_R[2]) + 0.5 * gap
                 + estimates.varrho * estimates.log_nu_hat[1])
    denom = _check_denominator(estimates.sigma * (gap + estimates.omega_sq) / (2.0 * estimates.alpha1))
    return numerator / denom


def theta_misspecified(estimates: GEEstimate, path: AggregatePath) -> float:
    """Index used when next-period shocks are treated as known at the choice date."""
    gap = estimates.sigma_R_sq - estimates.sigma_F_sq
    numerator = (math.log(path.n_F[2]) - math.log(path.n_R[2]) + 0.5 * gap
                 + estimates.log_nu_hat[2])
    denom = _check_denominator(estimates.sigma * gap / (2.0 * estimates.alpha1))
    return numerator / denom


def estimate_mu_misspecified(wave2: CrossSectionWave, path: AggregatePath, estimates: GEEstimate,
                             policy: str = "truncated") -> MuEstimate:
    return _mu_from_share(_share_F(wave2), theta_misspecified(estimates, path), policy)


def estimate_components(economy: Economy) -> GEEstimate:
    """Every estimate except the risk-aversion mean."""
    path = economy.path
    wave1, wave2 = economy.waves
    delta1 = _mean_F_log_wage(wave1)
    delta2 = _mean_F_log_wage(wave2)
    r_wages = _sector_log_wages(wave1, False)
    if r_wages.size == 0:
        raise DegenerateSample("wave 1 has no R-sector workers")
    alpha1 = estimate_alpha1(wave1, wave2, path.n_F[1], path.n_F[2])
    sigma = estimate_sigma(wave1, math.exp(path.log_wF_agg[1]))
    s_F, s_R = estimate_shock_variances(wave1)
    log_nu_hat = recover_log_nu(path, alpha1)
    varrho, omega_sq = estimate_ar1(log_nu_hat)
    return GEEstimate(alpha1=alpha1, sigma=sigma, sigma_F_sq=s_F, sigma_R_sq=s_R,
                      delta1=delta1, delta2=delta2, delta3=float(r_wages.mean()),
                      varrho=varrho, omega_sq=omega_sq, p_hat_F=_share_F(wave2),
                      log_nu_hat=log_nu_hat)


def estimate_ge(economy: Economy, policy: str = "truncated") -> GEEstimate:
    """Full feasible chain; raises ThetaOutOfRange under the truncated policy."""
    est = estimate_components(economy)
    theta_hat = theta_plug_in(est, economy.path)
    mu = _mu_from_share(est.p_hat_F, theta_hat, policy)
    return replace(est, mu=mu.mu, theta=theta_hat, censor_flag=mu.censor_flag)


def infeasible_mu(economy: Economy) -> float:
    """Risk-aversion mean using the true wave-2 choice index."""
    true_theta = float(economy.path.theta[2])
    return estimate_mu(economy.waves[1], true_theta, policy="truncated").mu


@dataclass(frozen=True)
class LongPanel:
    q: np.ndarray
    x: np.ndarray
    nu: np.ndarray


@dataclass(frozen=True)
class LongPanelEstimate:
    gamma: float
    delta: float
    omega: float
    nu_hat: np.ndarray = field(repr=False)


def simulate_long_panel(gamma: float, omega: float, n: int, T: int, rng: RngStream,
                        sigma_eps: float = 1.0, sigma_u: float = 1.0,
                        initial_sd: float | None = None) -> LongPanel:
    """q[i, t] = x[i, t] gamma / omega + nu[t] + eps[i, t] with AR(1) nu."""
    if n < 10 or T < 10:
        raise DomainError("need n >= 10 and T >= 10")
    if omega == 0 or not abs(omega) < 1:
        raise DomainError("omega must be nonzero with |omega| < 1")
    if initial_sd is None:
        initial_sd = sigma_u / math.sqrt(1.0 - omega**2)
    start = rng.normal(0.0, initial_sd)
    innovations = rng.normal(0.0, sigma_u, size=T - 1)
    nu = ar1_path(omega, start, innovations)
    x = rng.normal(0.0, 1.0, size=(n, T))
    eps = rng.normal(0.0, sigma_eps, size=(n, T))
    q = x * (gamma / omega) + nu[None, :] + eps
    return LongPanel(q=q, x=x, nu=nu)


def fit_long_panel(q, x) -> LongPanelEstimate:
    """Slope with period effects, then AR(1) on the estimated effects.

    The slope is computed after removing period means, which is numerically
    the same as least squares with one dummy per period.
    """
    q = np.asarray(q, dtype=float)
    x = np.asarray(x, dtype=float)
    xd = x - x.mean(axis=0)
    qd = q - q.mean(axis=0)
    sxx = float(np.sum(xd * xd))
    if sxx == 0.0:
        raise SingularDesign("regressor has no within-period variation")
    delta = float(np.sum(xd * qd)) / sxx
    nu_hat = q.mean(axis=0) - delta * x.mean(axis=0)
    lagged = nu_hat[:-1]
    denom = float(lagged @ lagged)
    if denom == 0.0:
        raise SingularDesign("estimated period effects are identically zero")
    omega = float(lagged @ nu_hat[1:]) / denom
    return LongPanelEstimate(gamma=delta * omega, delta=delta, omega=omega, nu_hat=nu_hat)


def long_panel_two_step(gamma: float, omega_panel: float, n: int, T: int, rng: RngStream,
                        **kwargs) -> LongPanelEstimate:
    panel = simulate_long_panel(gamma, omega_panel, n, T, rng, **kwargs)
    return fit_long_panel(panel.q, panel.x)
