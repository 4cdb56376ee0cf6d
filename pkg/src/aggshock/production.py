"""Production-function estimation with a proxy variable and aggregate shocks.

Firms share an aggregate productivity shock on top of their own persistent
productivity. Investment is a monotone function of total productivity and
capital, so a polynomial in investment and capital stands in for the
unobserved productivity. The first stage runs period by period. The second
stage fits the productivity transition either with one polynomial for all
period pairs or with a separate polynomial per pair. Only the second is
valid when the aggregate shock shifts the transition over time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoBracket, SingularDesign
from .kernels import ar1_path
from .numerics import RngStream, golden_section_min, ols, ols_with_covariance

__all__ = [
    "ProductionParams",
    "FirmPanel",
    "FirstStage",
    "simulate_firm_panel",
    "polynomial_terms",
    "proxy_polynomial",
    "first_stage",
    "pooled_first_stage",
    "second_stage_ssr",
    "second_stage",
]


@dataclass(frozen=True)
class ProductionParams:
    beta0: float = 0.2
    beta_l: float = 0.6
    beta_k: float = 0.4
    dep: float = 0.1
    rho_eps: float = 0.3
    sigma_zeta_sq: float = 0.1
    varrho_nu: float = 0.7
    omega_nu_sq: float = 0.2
    sigma_eta_sq: float = 0.05
    # investment: i = exp(a0 + a1 * omega + a2 * k)
    a0: float = -1.0
    a1: float = 0.8
    a2: float = -0.1
    # labor: l = b0 + b1 * omega + b2 * k + noise
    b0: float = 0.5
    b1: float = 0.6
    b2: float = 0.3
    labor_noise_sq: float = 0.01
    # initial log capital across firms
    k0_mean: float = 2.5
    k0_sd: float = 1.0

    def __post_init__(self):
        if not self.a1 > 0:
            raise DomainError("investment must increase with productivity (a1 > 0)")
        if not 0 < self.dep < 1:
            raise DomainError("depreciation must lie in (0, 1)")
        for name in ("sigma_zeta_sq", "omega_nu_sq", "sigma_eta_sq", "labor_noise_sq", "k0_sd"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be nonnegative")
        if not (abs(self.rho_eps) < 1 and abs(self.varrho_nu) < 1):
            raise DomainError("persistence parameters must lie inside (-1, 1)")


@dataclass(frozen=True)
class FirmPanel:
    """Arrays of shape (J, T); ``nu`` has length T. Latent states kept for checks."""

    y: np.ndarray
    l: np.ndarray
    k: np.ndarray
    i: np.ndarray
    nu: np.ndarray = field(repr=False)
    eps: np.ndarray = field(repr=False)

    @property
    def J(self) -> int:
        return self.y.shape[0]

    @property
    def T(self) -> int:
        return self.y.shape[1]


@dataclass(frozen=True)
class FirstStage:
    beta_l: float
    phi_hat: np.ndarray
    period_beta_l: np.ndarray
    period_var: np.ndarray


def _stationary_draw(rng: RngStream, rho: float, innov_var: float, size=None):
    sd = math.sqrt(innov_var / (1.0 - rho**2))
    return rng.normal(0.0, sd, size=size)


def simulate_firm_panel(params: ProductionParams, J: int, T: int, rng: RngStream) -> FirmPanel:
    if J < 50 or T < 3:
        raise DomainError("need J >= 50 and T >= 3")
    p = params
    nu = ar1_path(p.varrho_nu, _stationary_draw(rng, p.varrho_nu, p.omega_nu_sq),
                  rng.normal(0.0, math.sqrt(p.omega_nu_sq), size=T - 1))
    eps = np.empty((J, T))
    eps[:, 0] = _stationary_draw(rng, p.rho_eps, p.sigma_zeta_sq, size=J)
    zeta = rng.normal(0.0, math.sqrt(p.sigma_zeta_sq), size=(J, T - 1))
    for t in range(1, T):
        eps[:, t] = p.rho_eps * eps[:, t - 1] + zeta[:, t - 1]
    omega = nu[None, :] + eps
    k = np.empty((J, T))
    inv = np.empty((J, T))
    k[:, 0] = rng.normal(p.k0_mean, p.k0_sd, size=J)
    for t in range(T):
        inv[:, t] = np.exp(p.a0 + p.a1 * omega[:, t] + p.a2 * k[:, t])
        if t + 1 < T:
            k[:, t + 1] = (1.0 - p.dep) * k[:, t] + inv[:, t]
    labor = (p.b0 + p.b1 * omega + p.b2 * k
             + rng.normal(0.0, math.sqrt(p.labor_noise_sq), size=(J, T)))
    eta = rng.normal(0.0, math.sqrt(p.sigma_eta_sq), size=(J, T))
    y = p.beta0 + p.beta_l * labor + p.beta_k * k + omega + eta
    return FirmPanel(y=y, l=labor, k=k, i=inv, nu=nu, eps=eps)


def polynomial_terms(a, b, degree: int) -> np.ndarray:
    """All monomials a^p b^q with p + q <= degree, constant first."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    cols = [a**p * b**q for total in range(degree + 1) for p in range(total, -1, -1)
            for q in [total - p]]
    return np.column_stack(cols)


def _standardize(values: np.ndarray) -> np.ndarray:
    sd = values.std()
    return (values - values.mean()) / (sd if sd > 0 else 1.0)


def proxy_polynomial(inv, k, degree: int) -> np.ndarray:
    """Polynomial in (i, k) built from standardized inputs.

    Standardizing leaves the spanned function space unchanged and keeps the
    design well conditioned at higher degrees.
    """
    return polynomial_terms(_standardize(np.asarray(inv, float)), _standardize(np.asarray(k, float)),
                            degree)


def first_stage(panel: FirmPanel, poly_degree: int = 3) -> FirstStage:
    """Period-by-period regression of output on labor and a polynomial in (i, k).

    The labor coefficient is the inverse-variance weighted average of the
    period estimates. ``phi_hat`` holds the fitted polynomial part per period.
    """
    if poly_degree < 2:
        raise DomainError("polynomial degree must be at least 2")
    J, T = panel.y.shape
    betas = np.empty(T)
    variances = np.empty(T)
    phi = np.empty((J, T))
    for t in range(T):
        poly = proxy_polynomial(panel.i[:, t], panel.k[:, t], poly_degree)
        X = np.column_stack([panel.l[:, t], poly])
        if J <= X.shape[1]:
            raise SingularDesign(f"{J} firms for {X.shape[1]} regressors in period {t}")
        coef, _, cov = ols_with_covariance(X, panel.y[:, t])
        betas[t] = coef[0]
        variances[t] = cov[0, 0]
        phi[:, t] = poly @ coef[1:]
    weights = 1.0 / variances
    beta_l = float(weights @ betas / weights.sum())
    return FirstStage(beta_l=beta_l, phi_hat=phi, period_beta_l=betas, period_var=variances)


def pooled_first_stage(panel: FirmPanel, poly_degree: int = 3) -> FirstStage:
    """One polynomial for all periods plus additive period dummies."""
    J, T = panel.y.shape
    poly = proxy_polynomial(panel.i.T.ravel(), panel.k.T.ravel(), poly_degree)[:, 1:]
    dummies = np.kron(np.eye(T), np.ones((J, 1)))
    X = np.column_stack([panel.l.T.ravel(), poly, dummies])
    coef, _, cov = ols_with_covariance(X, panel.y.T.ravel())
    phi = (X[:, 1:] @ coef[1:]).reshape(T, J).T
    return FirstStage(beta_l=float(coef[0]), phi_hat=phi, period_beta_l=np.full(T, coef[0]),
                      period_var=np.full(T, cov[0, 0]))


def _power_basis(x, degree: int) -> np.ndarray:
    return np.column_stack([x**p for p in range(degree + 1)])


def second_stage_ssr(beta_k: float, panel: FirmPanel, beta_l_hat: float, phi_hat: np.ndarray,
                     g_degree: int = 3, time_varying_g: bool = True) -> float:
    """Concentrated sum of squared residuals for a candidate capital coefficient."""
    T = panel.T
    lhs = panel.y[:, 1:] - beta_l_hat * panel.l[:, 1:] - beta_k * panel.k[:, 1:]
    index = phi_hat[:, :-1] - beta_k * panel.k[:, :-1]
    if time_varying_g:
        total = 0.0
        for t in range(T - 1):
            Z = _power_basis(index[:, t], g_degree)
            resid = lhs[:, t] - Z @ ols(Z, lhs[:, t])
            total += float(resid @ resid)
        return total
    Z = _power_basis(index.T.ravel(), g_degree)
    target = lhs.T.ravel()
    resid = target - Z @ ols(Z, target)
    return float(resid @ resid)


def second_stage(panel: FirmPanel, beta_l_hat: float, phi_hat: np.ndarray, g_degree: int = 3,
                 time_varying_g: bool = True, bracket=(-0.6, 1.4), grid_points: int = 41,
                 max_widen: int = 5, tol: float = 1e-8) -> float:
    """Capital coefficient minimizing the second-stage SSR.

    A coarse grid locates the best basin, widening the bracket while the best
    point sits on its edge; golden-section search then refines inside the
    neighbouring grid cells.
    """
    if phi_hat.shape != panel.y.shape:
        raise DomainError("phi_hat must cover every period")

    def objective(b):
        return second_stage_ssr(b, panel, beta_l_hat, phi_hat, g_degree, time_varying_g)

    lo, hi = map(float, bracket)
    for _ in range(max_widen + 1):
        grid = np.linspace(lo, hi, grid_points)
        values = np.array([objective(b) for b in grid])
        j = int(np.argmin(values))
        if 0 < j < grid_points - 1:
            x, _ = golden_section_min(objective, grid[j - 1], grid[j + 1], tol=tol)
            return float(x)
        width = hi - lo
        if j == 0:
            lo -= width
        else:
            hi += width
    raise NoBracket("second-stage minimum stays on the edge of the widened bracket")
