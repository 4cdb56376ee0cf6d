"""Time the compiled and pure-Python kernels on the same inputs.

Usage: python3 benchmarks/bench_kernels.py [--tau 10000] [--repeat 5]
"""

import argparse
import math
import timeit

import numpy as np

from aggshock import kernels
from aggshock.ge_model import SHARE_BOUNDS, GEParams


def workloads(tau: int):
    params = GEParams()
    rng = np.random.default_rng(0)
    log_nu = rng.normal(0.0, math.sqrt(params.stationary_variance), size=tau)
    innovations = rng.normal(0.0, math.sqrt(params.omega_sq), size=tau)
    share_args = (log_nu, params.mu, params.varrho, params.half_variance_gap,
                  params.theta_denominator, *SHARE_BOUNDS)
    return {
        "education_shares": lambda b: b.education_shares(*share_args),
        "ar1_path": lambda b: b.ar1_path(params.varrho, 0.0, innovations),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--tau", type=int, default=10_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    backends = {"python": kernels.python_backend}
    if kernels.compiled_backend is not None:
        backends["cython"] = kernels.compiled_backend
    else:
        print("compiled kernel unavailable; timing the Python fallback only")
    print(f"{'kernel':<18}{'backend':<9}{'best seconds':>14}{'speedup':>10}")
    for name, call in workloads(args.tau).items():
        times = {}
        for label, backend in backends.items():
            call(backend)
            times[label] = min(timeit.repeat(lambda: call(backend), number=1, repeat=args.repeat))
        for label, seconds in times.items():
            speedup = times["python"] / seconds
            print(f"{name:<18}{label:<9}{seconds:>14.5f}{speedup:>9.1f}x")
    if "cython" in backends:
        for name, call in workloads(min(args.tau, 2000)).items():
            same = np.array_equal(call(backends["python"]), call(backends["cython"]))
            print(f"{name}: backends agree bitwise: {same}")


if __name__ == "__main__":
    main()
