"""Monte Carlo harness, configuration handling and table output."""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .errors import AggShockError, ConfigError, IoError, NoBracket
from .ge_estimation import (
    POLICIES,
    estimate_components,
    estimate_mu,
    infeasible_mu,
    long_panel_two_step,
    theta_misspecified,
    theta_plug_in,
)
from .ge_model import GEParams, simulate_economy
from .inference import (
    PARAM_NAMES,
    CrossSectionData,
    TimeSeriesData,
    coverage_indicator,
    phi_from_estimate,
    sandwich,
    true_phi,
)
from .numerics import RngStream
from .portfolio import (
    PortfolioParams,
    asymptotic_variance,
    euler_foc_estimate,
    naive_mm_estimate,
    simulate_cross_section,
    simulate_shock_series,
    two_step_estimate,
)
from .production import (
    ProductionParams,
    first_stage,
    pooled_first_stage,
    second_stage,
    simulate_firm_panel,
)

__all__ = [
    "MODELS",
    "FORMATS",
    "LongPanelParams",
    "ProductionOptions",
    "MCConfig",
    "ParameterSummary",
    "MonteCarloSummary",
    "MonteCarloFailure",
    "run_ge_mc",
    "run_ge_records",
    "summarize_ge",
    "run_portfolio_mc",
    "run_production_mc",
    "run_long_panel_mc",
    "run_mc",
    "run_robustness",
    "check_failures",
    "emit_table",
    "write_table",
    "summaries_from_json",
    "parse_config_text",
    "load_config_file",
    "build_config",
    "CONFIG_KEYS",
    "FAILURE_LIMIT",
    "THETA_POLICY_CHOICES",
    "default_threads",
]

MODELS = ("ge", "portfolio", "production", "long_panel")
FORMATS = ("csv", "json", "markdown")
FAILURE_LIMIT = 0.01
THETA_POLICY_CHOICES = POLICIES + ("both",)
CSV_COLUMNS = ("spec_id", "model", "n", "tau", "reps", "policy", "parameter", "true_value",
               "mean_estimate", "bias", "coverage_90", "theta_incidents", "reps_used", "seed")
DEFAULT_SEED = 20240607
DEFAULT_SIZES = {"ge": (10000, 100), "portfolio": (10000, 1000), "production": (2000, 5),
                 "long_panel": (100, 50)}


@dataclass(frozen=True)
class LongPanelParams:
    gamma: float = 1.0
    omega: float = 0.5
    sigma_eps: float = 1.0
    sigma_u: float = 1.0


@dataclass(frozen=True)
class ProductionOptions:
    poly_degree: int = 3
    g_degree: int = 3


PARAM_CLASSES = {
    "ge": GEParams,
    "portfolio": PortfolioParams,
    "production": ProductionParams,
    "long_panel": LongPanelParams,
}


def _override_keys() -> dict:
    keys = {}
    for model, cls in PARAM_CLASSES.items():
        for f in dataclasses.fields(cls):
            keys[f"{model}.{f.name}"] = f.type
    for f in dataclasses.fields(ProductionOptions):
        keys[f"production.{f.name}"] = f.type
    return keys


PARAM_OVERRIDE_KEYS = _override_keys()
CONFIG_KEYS = ("model", "reps", "n", "tau", "seed", "theta_policy", "format", "out", "threads",
               "varrho_grid")


@dataclass(frozen=True)
class MCConfig:
    model: str = "ge"
    reps: int = 500
    n: tuple = ()
    tau: tuple = ()
    seed: int = DEFAULT_SEED
    params: tuple = ()  # sorted (dotted key, value) pairs
    theta_policy: str = "truncated"
    format: str = "csv"
    out: str | None = None
    threads: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.reps < 1:
            raise ConfigError("reps must be at least 1")
        if self.theta_policy not in THETA_POLICY_CHOICES:
            raise ConfigError(f"theta_policy must be one of {', '.join(THETA_POLICY_CHOICES)}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        n_default, tau_default = DEFAULT_SIZES[self.model]
        object.__setattr__(self, "n", tuple(int(v) for v in (self.n or (n_default,))))
        object.__setattr__(self, "tau", tuple(int(v) for v in (self.tau or (tau_default,))))
        object.__setattr__(self, "params", tuple(sorted(dict(self.params).items())))
        for key, _ in self.params:
            if key not in PARAM_OVERRIDE_KEYS:
                raise ConfigError(f"unknown parameter override {key!r}")

    def model_params(self):
        prefix = f"{self.model}."
        overrides = {k[len(prefix):]: v for k, v in self.params if k.startswith(prefix)}
        cls = PARAM_CLASSES[self.model]
        names = {f.name for f in dataclasses.fields(cls)}
        try:
            return cls(**{k: v for k, v in overrides.items() if k in names})
        except AggShockError as exc:
            raise ConfigError(str(exc)) from exc

    def production_options(self) -> ProductionOptions:
        values = {k.split(".", 1)[1]: int(v) for k, v in self.params
                  if k in ("production.poly_degree", "production.g_degree")}
        return ProductionOptions(**values)

    def with_params(self, **overrides) -> "MCConfig":
        merged = dict(self.params)
        merged.update(overrides)
        return dataclasses.replace(self, params=tuple(sorted(merged.items())))

    def effective(self) -> dict:
        """Plain mapping of the settings that determine the output."""
        return {
            "model": self.model, "reps": self.reps, "n": list(self.n), "tau": list(self.tau),
            "seed": self.seed, "theta_policy": self.theta_policy, "format": self.format,
            "params": dict(self.params),
        }


@dataclass(frozen=True)
class ParameterSummary:
    parameter: str
    true_value: float
    mean_estimate: float
    bias: float
    coverage_90: float | None
    theta_incidents: int
    reps_used: int
    sd: float
    mean_abs_error: float
    rmse: float

    @property
    def mc_se(self) -> float:
        return self.sd / math.sqrt(self.reps_used) if self.reps_used > 0 else math.nan


@dataclass(frozen=True)
class MonteCarloSummary:
    spec_id: str
    model: str
    n: int
    tau: int
    reps: int
    policy: str
    seed: int
    parameters: tuple
    failures: tuple = ()
    diagnostics: tuple = ()
    runtime: float = field(default=0.0, compare=False)

    def row(self, name: str) -> ParameterSummary:
        for p in self.parameters:
            if p.parameter == name:
                return p
        raise KeyError(name)

    def diagnostic(self, key: str, default=None):
        return dict(self.diagnostics).get(key, default)


class MonteCarloFailure(AggShockError):
    """Too many replications failed for reasons other than theta incidents."""

    def __init__(self, summary: MonteCarloSummary):
        self.summary = summary
        first = ", ".join(f"rep {r}: {msg}" for r, msg in summary.failures[:3])
        super().__init__(f"spec {summary.spec_id}: {len(summary.failures)} of {summary.reps} "
                         f"replications failed ({first})")


def check_failures(summaries: Iterable[MonteCarloSummary]) -> None:
    for s in summaries:
        if len(s.failures) > FAILURE_LIMIT * s.reps:
            raise MonteCarloFailure(s)


def _summarize(name: str, true_value: float, estimates, incidents: int,
               covered=None) -> ParameterSummary:
    values = np.asarray([v for v in estimates if v is not None and math.isfinite(v)], dtype=float)
    used = int(values.size)
    if used == 0:
        nan = math.nan
        return ParameterSummary(name, true_value, nan, nan, None, incidents, 0, nan, nan, nan)
    mean = float(values.mean())
    err = values - true_value
    coverage = None
    if covered is not None:
        flags = [c for c in covered if c is not None]
        coverage = float(np.mean(flags)) if flags else None
    return ParameterSummary(
        parameter=name, true_value=float(true_value), mean_estimate=mean,
        bias=mean - true_value, coverage_90=coverage, theta_incidents=int(incidents),
        reps_used=used, sd=float(values.std(ddof=1)) if used > 1 else 0.0,
        mean_abs_error=float(np.mean(np.abs(err))), rmse=float(np.sqrt(np.mean(err**2))))


def _map_reps(func: Callable, tasks: Sequence, threads: int) -> list:
    """Ordered map over replications, optionally on worker processes."""
    progress = sys.stderr.isatty()
    total = len(tasks)
    results = []
    if threads <= 1 or total <= 1:
        iterator = map(func, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=threads)
        iterator = pool.map(func, tasks, chunksize=max(1, total // (4 * threads)))
    try:
        for k, res in enumerate(iterator, 1):
            results.append(res)
            if progress and (k == total or k % max(1, total // 20) == 0):
                print(f"\rreplication {k}/{total}", end="", file=sys.stderr, flush=True)
    finally:
        if pool is not None:
            pool.shutdown()
        if progress:
            print(file=sys.stderr)
    return results


def _spec_id(model: str, n: int, tau: int, extra: str = "") -> str:
    return f"{model}-n{n}-tau{tau}{extra}"


# ---------------------------------------------------------------- GE economy

@dataclass(frozen=True)
class GERecord:
    rep: int
    error: str | None = None
    theta: float = math.nan
    theta_mis: float = math.nan
    mu_feasible: float = math.nan  # nan when theta >= 1
    mu_censored: float = math.nan
    mu_infeasible: float = math.nan
    mu_mis: float = math.nan  # nan when theta_mis >= 1
    mu_mis_censored: float = math.nan
    estimates: tuple = ()  # (name, value) for the remaining parameters
    covered: tuple = ()  # (name, bool) from the sandwich, empty when unavailable
    sandwich_error: str | None = None
    v_psd: bool | None = None


GE_COMPONENTS = ("varrho", "omega_sq", "alpha1", "sigma", "sigma_F_sq", "sigma_R_sq")


def _psd(V: np.ndarray) -> bool:
    sym = np.allclose(V, V.T, rtol=1e-8, atol=1e-14 * max(1.0, float(np.abs(V).max())))
    min_eig = float(np.linalg.eigvalsh(0.5 * (V + V.T)).min())
    return bool(sym and min_eig >= -1e-10 * float(np.trace(V)))


def ge_replication(task) -> GERecord:
    params, n, tau, seed, rep = task
    try:
        economy = simulate_economy(params, tau, n, RngStream(seed, rep))
        est = estimate_components(economy)
        th = theta_plug_in(est, economy.path)
        th_mis = theta_misspecified(est, economy.path)
        wave2 = economy.waves[1]
        mu_cens = estimate_mu(wave2, th, "censored").mu
        mu_feas = mu_cens if th < 1.0 else math.nan
        mis_cens = estimate_mu(wave2, th_mis, "censored").mu
        mu_mis = mis_cens if th_mis < 1.0 else math.nan
        mu_inf = infeasible_mu(economy)
    except AggShockError as exc:
        return GERecord(rep=rep, error=f"{type(exc).__name__}: {exc}")
    estimates = tuple((name, float(getattr(est, name))) for name in GE_COMPONENTS)
    covered, s_err, v_psd = (), None, None
    if th < 1.0:
        try:
            phi_hat = phi_from_estimate(dataclasses.replace(est, mu=mu_feas))
            res = sandwich(phi_hat, CrossSectionData.from_economy(economy),
                           TimeSeriesData.from_economy(economy))
            truth = true_phi(params, economy)
            covered = tuple((name, coverage_indicator(res.ci_90[j], truth[j]))
                            for j, name in enumerate(PARAM_NAMES))
            v_psd = _psd(res.V)
        except AggShockError as exc:
            s_err = f"{type(exc).__name__}: {exc}"
    return GERecord(rep=rep, theta=th, theta_mis=th_mis, mu_feasible=mu_feas,
                    mu_censored=mu_cens, mu_infeasible=mu_inf, mu_mis=mu_mis,
                    mu_mis_censored=mis_cens, estimates=estimates, covered=covered,
                    sandwich_error=s_err, v_psd=v_psd)


def run_ge_records(params: GEParams, n: int, tau: int, reps: int, seed: int,
                   threads: int = 1) -> list:
    tasks = [(params, n, tau, seed, r) for r in range(reps)]
    return _map_reps(ge_replication, tasks, threads)


def summarize_ge(records: Sequence[GERecord], params: GEParams, n: int, tau: int, seed: int,
                 policy: str, spec_id: str | None = None, runtime: float = 0.0) -> MonteCarloSummary:
    """Aggregate GE replications under one theta policy."""
    if policy not in POLICIES:
        raise ConfigError(f"unknown theta policy {policy!r}")
    ok = [r for r in records if r.error is None]
    failures = tuple((r.rep, r.error) for r in records if r.error is not None)
    incidents = sum(r.theta >= 1.0 for r in ok)
    mis_incidents = sum(r.theta_mis >= 1.0 for r in ok)
    if policy == "truncated":
        kept = [r for r in ok if r.theta < 1.0]
        mu_values = [r.mu_feasible for r in kept]
        mis_values = [r.mu_mis for r in ok if r.theta_mis < 1.0]
    else:
        kept = ok
        mu_values = [r.mu_censored for r in kept]
        mis_values = [r.mu_mis_censored for r in ok]
    with_ci = [dict(r.covered) for r in ok if r.covered]
    truths = dataclasses.asdict(params)
    truths.update(alpha1=params.alpha1)

    def cov(name):
        return [c[name] for c in with_ci] if name in PARAM_NAMES else None

    rows = [_summarize("mu", params.mu, mu_values, incidents, cov("mu"))]
    for name in GE_COMPONENTS:
        values = [dict(r.estimates)[name] for r in kept]
        rows.append(_summarize(name, truths[name], values, incidents, cov(name)))
    rows.append(_summarize("mu_infeasible", params.mu, [r.mu_infeasible for r in ok], 0))
    rows.append(_summarize("mu_misspecified", params.mu, mis_values, mis_incidents))
    diagnostics = (
        ("failures", len(failures)),
        ("sandwich_failures", sum(r.sandwich_error is not None for r in ok)),
        ("sandwich_psd_violations", sum(r.v_psd is False for r in ok)),
        ("sandwich_evaluated", sum(r.v_psd is not None for r in ok)),
    )
    return MonteCarloSummary(
        spec_id=spec_id or _spec_id("ge", n, tau), model="ge", n=n, tau=tau, reps=len(records),
        policy=policy, seed=seed, parameters=tuple(rows), failures=failures,
        diagnostics=diagnostics, runtime=runtime)


def run_ge_mc(config: MCConfig, params: GEParams | None = None, spec_suffix: str = "") -> list:
    """One summary per (n, tau) pair and policy; ``both`` reports the two side by side."""
    params = params or config.model_params()
    policies = POLICIES if config.theta_policy == "both" else (config.theta_policy,)
    out = []
    for n, tau in itertools.product(config.n, config.tau):
        start = time.perf_counter()
        records = run_ge_records(params, n, tau, config.reps, config.seed, config.threads)
        elapsed = time.perf_counter() - start
        for policy in policies:
            out.append(summarize_ge(records, params, n, tau, config.seed, policy,
                                    spec_id=_spec_id("ge", n, tau, spec_suffix), runtime=elapsed))
    return out


def run_robustness(config: MCConfig, varrho_grid: Sequence[float]) -> list:
    if not varrho_grid:
        raise ConfigError("varrho grid is empty")
    out = []
    for varrho in varrho_grid:
        cfg = config.with_params(**{"ge.varrho": float(varrho)})
        out.extend(run_ge_mc(cfg, spec_suffix=f"-varrho{float(varrho):g}"))
    return out


# ---------------------------------------------------------------- portfolio

def portfolio_replication(task):
    params, n, tau, seed, rep = task
    try:
        rng = RngStream(seed, rep)
        data = simulate_cross_section(params, n, rng)
        series = simulate_shock_series(params, tau, rng)
        naive = naive_mm_estimate(data, params.r)
        two = two_step_estimate(data, series, params.r)
    except AggShockError as exc:
        return rep, f"{type(exc).__name__}: {exc}", None
    try:
        euler = euler_foc_estimate(data, params.r, params)
    except NoBracket:
        euler = None
    # plug-in standard error from the limiting variance at the estimates
    try:
        plug = dataclasses.replace(params, delta=two.delta, mu=two.mu,
                                   sigma_nu_sq=two.sigma_nu_sq, sigma_eps_sq=two.sigma_eps_sq,
                                   sigma_e_sq=float(np.var(data.alpha_obs)))
        se = math.sqrt(asymptotic_variance(plug, n / tau) / n)
        covered = coverage_indicator((two.delta - 1.645 * se, two.delta + 1.645 * se), params.delta)
    except AggShockError:
        covered = None
    return rep, None, (naive, euler, two.delta, covered)


def run_portfolio_mc(config: MCConfig, params: PortfolioParams | None = None) -> list:
    params = params or config.model_params()
    out = []
    for n, tau in itertools.product(config.n, config.tau):
        start = time.perf_counter()
        tasks = [(params, n, tau, config.seed, r) for r in range(config.reps)]
        results = _map_reps(portfolio_replication, tasks, config.threads)
        failures = tuple((rep, err) for rep, err, _ in results if err is not None)
        ok = [v for _, err, v in results if err is None]
        no_root = sum(v[1] is None for v in ok)
        rows = (
            _summarize("delta_naive", params.delta, [v[0] for v in ok], 0),
            _summarize("delta_euler", params.delta, [v[1] for v in ok], no_root),
            _summarize("delta_two_step", params.delta, [v[2] for v in ok], 0, [v[3] for v in ok]),
        )
        center = params.delta * params.sigma_nu_sq / params.sigma_eps_sq
        out.append(MonteCarloSummary(
            spec_id=_spec_id("portfolio", n, tau), model="portfolio", n=n, tau=tau,
            reps=config.reps, policy="none", seed=config.seed, parameters=rows, failures=failures,
            diagnostics=(("failures", len(failures)), ("naive_bias_center", center)),
            runtime=time.perf_counter() - start))
    return out


# ---------------------------------------------------------------- production

def production_replication(task):
    params, options, J, T, seed, rep = task
    bracket = (params.beta_k - 1.0, params.beta_k + 1.0)
    try:
        panel = simulate_firm_panel(params, J, T, RngStream(seed, rep))
        fs = first_stage(panel, options.poly_degree)
        pooled = pooled_first_stage(panel, options.poly_degree)
        bk_tv = second_stage(panel, fs.beta_l, fs.phi_hat, options.g_degree, True, bracket)
        bk_fixed = second_stage(panel, fs.beta_l, fs.phi_hat, options.g_degree, False, bracket)
    except AggShockError as exc:
        return rep, f"{type(exc).__name__}: {exc}", None
    return rep, None, (fs.beta_l, pooled.beta_l, bk_tv, bk_fixed)


PRODUCTION_ROWS = ("beta_l", "beta_l_additive_dummies", "beta_k", "beta_k_time_invariant_g")


def run_production_mc(config: MCConfig, params: ProductionParams | None = None) -> list:
    params = params or config.model_params()
    options = config.production_options()
    truth = (params.beta_l, params.beta_l, params.beta_k, params.beta_k)
    out = []
    for J, T in itertools.product(config.n, config.tau):
        start = time.perf_counter()
        tasks = [(params, options, J, T, config.seed, r) for r in range(config.reps)]
        results = _map_reps(production_replication, tasks, config.threads)
        failures = tuple((rep, err) for rep, err, _ in results if err is not None)
        ok = [v for _, err, v in results if err is None]
        rows = tuple(_summarize(name, truth[j], [v[j] for v in ok], 0)
                     for j, name in enumerate(PRODUCTION_ROWS))
        out.append(MonteCarloSummary(
            spec_id=_spec_id("production", J, T), model="production", n=J, tau=T,
            reps=config.reps, policy="none", seed=config.seed, parameters=rows, failures=failures,
            diagnostics=(("failures", len(failures)),), runtime=time.perf_counter() - start))
    return out


# ---------------------------------------------------------------- long panel

def long_panel_replication(task):
    params, n, T, seed, rep = task
    try:
        est = long_panel_two_step(params.gamma, params.omega, n, T, RngStream(seed, rep),
                                  sigma_eps=params.sigma_eps, sigma_u=params.sigma_u)
    except AggShockError as exc:
        return rep, f"{type(exc).__name__}: {exc}", None
    return rep, None, (est.gamma, est.delta, est.omega)


def run_long_panel_mc(config: MCConfig, params: LongPanelParams | None = None) -> list:
    params = params or config.model_params()
    truth = (params.gamma, params.gamma / params.omega, params.omega)
    out = []
    for n, T in itertools.product(config.n, config.tau):
        start = time.perf_counter()
        tasks = [(params, n, T, config.seed, r) for r in range(config.reps)]
        results = _map_reps(long_panel_replication, tasks, config.threads)
        failures = tuple((rep, err) for rep, err, _ in results if err is not None)
        ok = [v for _, err, v in results if err is None]
        rows = tuple(_summarize(name, truth[j], [v[j] for v in ok], 0)
                     for j, name in enumerate(("gamma", "delta", "omega")))
        out.append(MonteCarloSummary(
            spec_id=_spec_id("long_panel", n, T), model="long_panel", n=n, tau=T,
            reps=config.reps, policy="none", seed=config.seed, parameters=rows, failures=failures,
            diagnostics=(("failures", len(failures)),), runtime=time.perf_counter() - start))
    return out


def run_mc(config: MCConfig) -> list:
    runner = {"ge": run_ge_mc, "portfolio": run_portfolio_mc, "production": run_production_mc,
              "long_panel": run_long_panel_mc}[config.model]
    return runner(config)


# ---------------------------------------------------------------- output

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return format(value, ".6g")


def _csv_rows(summaries):
    for s in summaries:
        for p in s.parameters:
            yield (s.spec_id, s.model, s.n, s.tau, s.reps, s.policy, p.parameter, p.true_value,
                   p.mean_estimate, p.bias, p.coverage_90, p.theta_incidents, p.reps_used, s.seed)


def _meta(summaries, config: MCConfig | None) -> dict:
    meta = {"artifact": "aggshock", "version": __version__}
    if config is not None:
        meta["config"] = config.effective()
    meta["failures"] = {s.spec_id: len(s.failures) for s in summaries}
    return meta


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _summary_to_dict(s: MonteCarloSummary) -> dict:
    return {
        "spec_id": s.spec_id, "model": s.model, "n": s.n, "tau": s.tau, "reps": s.reps,
        "policy": s.policy, "seed": s.seed,
        "parameters": [{k: _json_value(v) for k, v in dataclasses.asdict(p).items()}
                       for p in s.parameters],
        "failures": [[rep, msg] for rep, msg in s.failures],
        "diagnostics": [[k, _json_value(v)] for k, v in s.diagnostics],
    }


def _float_or_nan(value):
    return math.nan if value is None else value


def summaries_from_json(text: str) -> list:
    data = json.loads(text)
    out = []
    for s in data["summaries"]:
        params = []
        for p in s["parameters"]:
            values = dict(p)
            for key in ("true_value", "mean_estimate", "bias", "sd", "mean_abs_error", "rmse"):
                values[key] = _float_or_nan(values[key])
            params.append(ParameterSummary(**values))
        out.append(MonteCarloSummary(
            spec_id=s["spec_id"], model=s["model"], n=s["n"], tau=s["tau"], reps=s["reps"],
            policy=s["policy"], seed=s["seed"], parameters=tuple(params),
            failures=tuple((rep, msg) for rep, msg in s["failures"]),
            diagnostics=tuple((k, _float_or_nan(v) if v is None else v)
                              for k, v in s["diagnostics"])))
    return out


def _markdown(summaries) -> str:
    lines = []
    for s in summaries:
        lines.append(f"### {s.spec_id} ({s.policy}, {s.reps} replications)")
        lines.append("")
        lines.append("| Parameter | True | Mean estimate | Bias | Coverage 90% | Incidents | Reps used |")
        lines.append("|---|---|---|---|---|---|---|")
        for p in s.parameters:
            name = f"**{p.parameter}**" if p.parameter == "mu" else p.parameter
            lines.append("| " + " | ".join([
                name, _fmt(p.true_value), _fmt(p.mean_estimate), _fmt(p.bias),
                _fmt(p.coverage_90), str(p.theta_incidents), str(p.reps_used)]) + " |")
        lines.append("")
    return "\n".join(lines)


def emit_table(summaries: Sequence[MonteCarloSummary], format: str = "csv",
               config: MCConfig | None = None) -> str:
    """Serialize summaries. CSV and markdown start with metadata comments."""
    if isinstance(summaries, MonteCarloSummary):
        summaries = [summaries]
    meta = _meta(summaries, config)
    if format == "json":
        doc = {"meta": meta, "summaries": [_summary_to_dict(s) for s in summaries]}
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if format == "csv":
        buf = io.StringIO()
        buf.write(f"# aggshock {__version__}\n")
        buf.write("# meta: " + json.dumps(meta, sort_keys=True) + "\n")
        writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(CSV_COLUMNS)
        for row in _csv_rows(summaries):
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
        return buf.getvalue()
    if format == "markdown":
        header = f"<!-- aggshock {__version__} meta: {json.dumps(meta, sort_keys=True)} -->\n\n"
        return header + _markdown(summaries)
    raise ConfigError(f"unknown format {format!r}")


def write_table(text: str, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- configuration

def parse_config_text(text: str) -> dict:
    """``key = value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS and key not in PARAM_OVERRIDE_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def load_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def _int_list(value) -> tuple:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).replace(",", " ").split())


def _coerce_override(key: str, value):
    kind = PARAM_OVERRIDE_KEYS[key]
    try:
        if kind in (int, "int"):
            return int(value)
        return float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} expects a number, got {value!r}") from exc


def build_config(model: str, *layers: dict) -> MCConfig:
    """Merge raw settings; later layers win. Values may be strings or typed."""
    merged = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    try:
        kwargs = {"model": merged.get("model", model)}
        if "reps" in merged:
            kwargs["reps"] = int(merged["reps"])
        if "n" in merged:
            kwargs["n"] = _int_list(merged["n"])
        if "tau" in merged:
            kwargs["tau"] = _int_list(merged["tau"])
        if "seed" in merged:
            kwargs["seed"] = int(merged["seed"])
        if "threads" in merged:
            kwargs["threads"] = int(merged["threads"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid numeric setting: {exc}") from exc
    for key in ("theta_policy", "format", "out"):
        if key in merged:
            kwargs[key] = str(merged[key])
    kwargs["params"] = tuple((k, _coerce_override(k, v)) for k, v in merged.items()
                             if k in PARAM_OVERRIDE_KEYS)
    return MCConfig(**kwargs)


def default_threads() -> int:
    return max(1, os.cpu_count() or 1)
