"""Command-line entry point: ``aggshock <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import __version__
from .errors import AggShockError, ConfigError, NoBracket
from .experiments import (
    FORMATS,
    PARAM_OVERRIDE_KEYS,
    THETA_POLICY_CHOICES,
    MCConfig,
    build_config,
    check_failures,
    default_threads,
    emit_table,
    ge_replication,
    load_config_file,
    long_panel_replication,
    production_replication,
    run_mc,
    run_robustness,
    write_table,
)
from .numerics import RngStream

SUBCOMMANDS = {
    "ge-mc": ("ge", "Monte Carlo for the education economy"),
    "portfolio": ("portfolio", "Monte Carlo for the portfolio-choice estimators"),
    "production": ("production", "Monte Carlo for the production-function estimators"),
    "panel": ("long_panel", "Monte Carlo for the long-panel toy model"),
    "robustness": ("ge", "education-economy Monte Carlo over a grid of shock persistence values"),
    "single-run": (None, "simulate and estimate one replication, print JSON"),
}
MC_FLAGS = ("reps", "n", "tau", "seed", "theta_policy", "format", "out", "threads")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_common(sub: argparse.ArgumentParser, model: str | None) -> None:
    sub.add_argument("--config", help="file of 'key = value' lines; flags take precedence")
    sub.add_argument("--reps", help="number of replications")
    sub.add_argument("--n", help="cross-section size(s), comma separated")
    sub.add_argument("--tau", help="time-series length(s), comma separated")
    sub.add_argument("--seed", help="base seed (64-bit unsigned)")
    sub.add_argument("--theta_policy", help=f"one of {', '.join(THETA_POLICY_CHOICES)}")
    sub.add_argument("--format", help=f"one of {', '.join(FORMATS)}")
    sub.add_argument("--out", help="output path (default: standard output)")
    sub.add_argument("--threads", help="worker processes; never changes the output")
    prefixes = (f"{model}.",) if model else tuple(f"{m}." for m in ("ge", "portfolio", "production",
                                                                   "long_panel"))
    group = sub.add_argument_group("parameter overrides")
    for key in sorted(PARAM_OVERRIDE_KEYS):
        if key.startswith(prefixes):
            group.add_argument(f"--{key}", dest=key, metavar="VALUE")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aggshock", description="Estimation with aggregate shocks: "
                     "simulation experiments and single runs.")
    parser.add_argument("--version", action="version", version=f"aggshock {__version__}")
    subs = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    for name, (model, help_text) in SUBCOMMANDS.items():
        sub = subs.add_parser(name, help=help_text, description=help_text)
        _add_common(sub, model)
        if name == "robustness":
            sub.add_argument("--varrho_grid", help="comma-separated persistence values")
        if name == "single-run":
            sub.add_argument("--model", help="ge, portfolio, production or long_panel")
            sub.add_argument("--rep", help="replication index to run (default 0)")
    return parser


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise ConfigError(f"invalid number list {text!r}") from exc


def _resolve(args: argparse.Namespace, model: str) -> tuple:
    file_values = load_config_file(args.config) if args.config else {}
    flags = {k: getattr(args, k) for k in MC_FLAGS}
    flags.update({k: v for k, v in vars(args).items() if k in PARAM_OVERRIDE_KEYS})
    if "threads" not in file_values and flags["threads"] is None:
        flags["threads"] = default_threads()
    if file_values.get("model", model) != model:
        raise ConfigError(f"config file model {file_values['model']!r} does not match subcommand")
    config = build_config(model, file_values, flags)
    return config, file_values


def _emit(text: str, out: str | None) -> None:
    if out:
        write_table(text, out)
    else:
        sys.stdout.write(text)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _single_run(config: MCConfig, rep: int) -> dict:
    params = config.model_params()
    n, tau = config.n[0], config.tau[0]
    result = {"model": config.model, "n": n, "tau": tau, "seed": config.seed, "rep": rep}
    if config.model == "ge":
        rec = ge_replication((params, n, tau, config.seed, rep))
        if rec.error:
            raise AggShockError(f"replication {rep}: {rec.error}")
        policy = "truncated" if config.theta_policy == "both" else config.theta_policy
        mu = rec.mu_feasible if policy == "truncated" else rec.mu_censored
        mu_mis = rec.mu_mis if policy == "truncated" else rec.mu_mis_censored
        result.update(policy=policy, theta=rec.theta, theta_incident=bool(rec.theta >= 1.0), mu=mu,
                      mu_infeasible=rec.mu_infeasible, theta_misspecified=rec.theta_mis,
                      mu_misspecified=mu_mis, **dict(rec.estimates),
                      covered_90=dict(rec.covered) or None)
    elif config.model == "portfolio":
        from .portfolio import (euler_foc_estimate, naive_mm_estimate, simulate_cross_section,
                                simulate_shock_series, two_step_estimate)
        rng = RngStream(config.seed, rep)
        data = simulate_cross_section(params, n, rng)
        series = simulate_shock_series(params, tau, rng)
        try:
            euler = euler_foc_estimate(data, params.r, params)
        except NoBracket:
            euler = None
        two = two_step_estimate(data, series, params.r)
        result.update(nu_1=data.nu_1, delta_naive=naive_mm_estimate(data, params.r),
                      delta_euler=euler, delta_two_step=two.delta)
    elif config.model == "production":
        _, err, values = production_replication((params, config.production_options(), n, tau,
                                                 config.seed, rep))
        if err:
            raise AggShockError(f"replication {rep}: {err}")
        result.update(zip(("beta_l", "beta_l_additive_dummies", "beta_k",
                           "beta_k_time_invariant_g"), values))
    else:
        _, err, values = long_panel_replication((params, n, tau, config.seed, rep))
        if err:
            raise AggShockError(f"replication {rep}: {err}")
        result.update(zip(("gamma", "delta", "omega"), values))
    result["config"] = config.effective()
    return {k: _clean(v) for k, v in result.items()}


def _dispatch(args: argparse.Namespace) -> int:
    command = args.command
    if command == "single-run":
        model = args.model or "ge"
        config, _ = _resolve(args, model)
        try:
            rep = int(args.rep) if args.rep is not None else 0
        except ValueError as exc:
            raise ConfigError("--rep must be an integer") from exc
        if rep < 0:
            raise ConfigError("--rep must be nonnegative")
        _emit(json.dumps(_single_run(config, rep), indent=2) + "\n", config.out)
        return 0
    model = SUBCOMMANDS[command][0]
    config, file_values = _resolve(args, model)
    if command == "robustness":
        grid_text = args.varrho_grid or file_values.get("varrho_grid") or "0.5,0.9"
        summaries = run_robustness(config, _float_list(grid_text))
    else:
        summaries = run_mc(config)
    check_failures(summaries)
    _emit(emit_table(summaries, config.format, config), config.out)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        return _dispatch(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"aggshock: configuration error: {exc}", file=sys.stderr)
        return 1
    except AggShockError as exc:
        print(f"aggshock: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
