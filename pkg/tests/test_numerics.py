import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from aggshock.errors import DomainError, EvaluationError, NoBracket, SingularDesign, SingularMatrix
from aggshock.numerics import (
    RngStream,
    bisect_root,
    golden_section_min,
    invert,
    numeric_jacobian,
    ols,
    std_normal_cdf,
    std_normal_quantile,
)

# Frozen from tests/oracles.py (mpmath erf at 40 digits, bisection on that CDF,
# integer digit extraction for the square root).
CDF_AT_1_959964 = 0.9750000009035577
QUANTILE_0_975 = 1.9599639845400538
SQRT_2 = 1.414213562373095


def test_frozen_values_match_oracles():
    assert oracles.normal_cdf_hp(1.959964) == pytest.approx(CDF_AT_1_959964, abs=1e-15)
    assert oracles.normal_quantile_by_bisection(0.975) == pytest.approx(QUANTILE_0_975, abs=1e-14)
    assert oracles.sqrt_by_digits(2) == SQRT_2


# ------------------------------------------------------------------ RNG

def test_stream_is_reproducible():
    a = RngStream(11, 3).normal(size=1000)
    b = RngStream(11, 3).normal(size=1000)
    assert np.array_equal(a, b)


def test_streams_differ_by_id_and_seed():
    base = RngStream(11, 3).uniform(size=100)
    assert not np.array_equal(base, RngStream(11, 4).uniform(size=100))
    assert not np.array_equal(base, RngStream(12, 3).uniform(size=100))


def test_distinct_streams_are_uncorrelated():
    a = RngStream(5, 0).normal(size=200_000)
    b = RngStream(5, 1).normal(size=200_000)
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(a.size)


def test_draws_split_across_calls_equal_one_call():
    one = RngStream(9, 9).uniform(size=10)
    rng = RngStream(9, 9)
    split = np.concatenate([rng.uniform(size=4), rng.uniform(size=6)])
    assert np.array_equal(one, split)


def test_uniform_open_interval():
    u = RngStream(1, 1).uniform(size=100_000)
    assert u.min() > 0.0 and u.max() < 1.0


def test_gaussian_sampler_moments():
    z = RngStream(2024, 0).normal(size=1_000_000)
    assert abs(z.mean()) < 4 / math.sqrt(z.size)
    assert abs(z.var() - 1.0) < 0.01


def test_rng_rejects_out_of_range_seed():
    with pytest.raises(DomainError):
        RngStream(-1)
    with pytest.raises(DomainError):
        RngStream(0, 2**64)


def test_largest_seed_accepted():
    assert RngStream(2**64 - 1, 2**64 - 1).uniform() > 0


# ------------------------------------------------------------------ normal functions

def test_cdf_center_and_known_point():
    assert std_normal_cdf(0.0) == 0.5
    assert std_normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)
    assert std_normal_cdf(1.959964) == pytest.approx(CDF_AT_1_959964, abs=1e-12)


@pytest.mark.parametrize("x", [0.3, 1.7, 4.0])
def test_cdf_symmetry(x):
    assert std_normal_cdf(-x) + std_normal_cdf(x) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("x", np.linspace(-8, 8, 33))
def test_cdf_matches_high_precision(x):
    assert abs(std_normal_cdf(float(x)) - oracles.normal_cdf_hp(float(x))) <= 1e-12


def test_cdf_saturates_and_vectorizes():
    assert std_normal_cdf(-50.0) == 0.0
    assert std_normal_cdf(50.0) == 1.0
    xs = np.array([-1.0, 0.0, 1.0])
    assert np.allclose(std_normal_cdf(xs), [std_normal_cdf(v) for v in xs], rtol=0, atol=1e-16)


def test_quantile_known_points():
    assert std_normal_quantile(0.5) == 0.0
    assert std_normal_quantile(0.975) == pytest.approx(1.959964, abs=1e-5)
    assert std_normal_quantile(0.975) == pytest.approx(QUANTILE_0_975, abs=1e-12)


@pytest.mark.parametrize("x", [-2.0, 0.1, 3.0])
def test_quantile_inverts_cdf(x):
    assert std_normal_quantile(std_normal_cdf(x)) == pytest.approx(x, abs=1e-8)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, float("nan")])
def test_quantile_domain(p):
    with pytest.raises(DomainError):
        std_normal_quantile(p)


@given(st.floats(min_value=-5, max_value=5))
def test_quantile_cdf_roundtrip(x):
    assert std_normal_quantile(std_normal_cdf(x)) == pytest.approx(x, abs=1e-8)


@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_cdf_of_quantile(p):
    assert abs(std_normal_cdf(std_normal_quantile(p)) - p) <= 1e-10


@given(st.floats(-30, 30), st.floats(-30, 30))
def test_cdf_monotone(a, b):
    lo, hi = min(a, b), max(a, b)
    assert std_normal_cdf(lo) <= std_normal_cdf(hi)


# ------------------------------------------------------------------ OLS

def test_ols_mean():
    y = np.full(20, 3.25)
    assert ols(np.ones((20, 1)), y)[0] == pytest.approx(3.25, abs=1e-14)


def test_ols_exact_line():
    x = np.linspace(-1, 4, 17)
    assert ols(x[:, None], 2 * x)[0] == pytest.approx(2.0, abs=1e-10)


def test_ols_matches_full_pivot_oracle_random_100x3():
    rng = RngStream(77, 0)
    X = rng.normal(size=(100, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + rng.normal(size=100)
    assert np.allclose(ols(X, y), oracles.normal_equations_ols(X, y), rtol=1e-8, atol=1e-12)


def test_ols_matches_oracle_on_100_systems():
    for r in range(100):
        rng = RngStream(78, r)
        X = np.column_stack([np.ones(60), rng.normal(size=(60, 3))])
        y = rng.normal(size=60)
        b = ols(X, y)
        ref = oracles.normal_equations_ols(X, y)
        assert np.max(np.abs(b - ref) / np.maximum(1.0, np.abs(ref))) < 1e-8


def test_ols_residual_orthogonality():
    rng = RngStream(79, 0)
    X = rng.normal(size=(200, 4))
    y = rng.normal(size=200)
    resid = y - X @ ols(X, y)
    scale = np.linalg.norm(X, axis=0) * np.linalg.norm(y)
    assert np.all(np.abs(X.T @ resid) <= 1e-8 * scale)


def test_ols_singular_design():
    x = np.arange(10.0)
    with pytest.raises(SingularDesign):
        ols(np.column_stack([x, 2 * x]), x)
    with pytest.raises(SingularDesign):
        ols(np.ones((2, 3)), np.ones(2))


# ------------------------------------------------------------------ roots, minima

def test_bisect_linear():
    assert bisect_root(lambda x: x - 1, 0, 2) == pytest.approx(1.0, abs=1e-12)


def test_bisect_sqrt2_against_digit_oracle():
    assert bisect_root(lambda x: x * x - 2, 0, 2) == pytest.approx(SQRT_2, abs=1e-6)


def test_bisect_matches_quantile():
    root = bisect_root(lambda x: std_normal_cdf(x) - 0.8, -6, 6)
    assert root == pytest.approx(std_normal_quantile(0.8), abs=1e-8)


def test_bisect_no_sign_change():
    with pytest.raises(NoBracket):
        bisect_root(lambda x: x * x + 1, -1, 1)


def test_bisect_nonfinite():
    with pytest.raises(EvaluationError):
        bisect_root(lambda x: float("nan"), 0, 1)


@given(st.floats(-50, 50), st.floats(0.01, 20))
def test_bisect_postcondition(root, width):
    f = lambda x: math.tanh(x - root)  # noqa: E731
    tol = 1e-10
    x = bisect_root(f, root - width, root + 0.5 * width, tol=tol)
    assert abs(f(x)) <= tol or abs(x - root) <= tol


def test_golden_section():
    x, fx = golden_section_min(lambda v: (v - 0.3) ** 2, -2, 3, tol=1e-10)
    assert x == pytest.approx(0.3, abs=1e-8)
    assert fx == pytest.approx(0.0, abs=1e-15)


# ------------------------------------------------------------------ Jacobian and inversion

def test_jacobian_identity():
    assert np.allclose(numeric_jacobian(lambda x: x, np.array([0.5, -2.0, 3.0])), np.eye(3))


def test_jacobian_hand_example():
    J = numeric_jacobian(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), np.array([1.0, 2.0]))
    assert np.allclose(J, [[2, 0], [2, 1]], atol=1e-6)


def test_jacobian_second_order_error():
    F = lambda x: np.array([x[0] ** 3])  # noqa: E731
    x0 = np.array([1.3])
    exact = 3 * 1.3**2
    e1 = abs(numeric_jacobian(F, x0, h_rel=1e-2)[0, 0] - exact)
    e2 = abs(numeric_jacobian(F, x0, h_rel=5e-3)[0, 0] - exact)
    assert 3.5 < e1 / e2 < 4.5


def test_jacobian_nonfinite():
    with pytest.raises(EvaluationError):
        numeric_jacobian(lambda x: np.where(x > 0, np.inf, 0.0), np.array([0.0]))


def test_invert_and_errors():
    M = np.array([[4.0, 1.0], [2.0, 3.0]])
    assert np.allclose(invert(M) @ M, np.eye(2))
    with pytest.raises(DomainError):
        invert(np.ones((2, 3)))
    with pytest.raises(SingularMatrix):
        invert(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_invert_warns_when_ill_conditioned():
    M = np.diag([1.0, 1e-13])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        invert(M)
    assert any("ill-conditioned" in str(w.message) for w in caught)


@settings(max_examples=50)
@given(st.integers(0, 2**32))
def test_invert_random_well_conditioned(seed):
    A = RngStream(seed, 0).normal(size=(5, 5)) + 5 * np.eye(5)
    assert np.allclose(invert(A) @ A, np.eye(5), atol=1e-10)
