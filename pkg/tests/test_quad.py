import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pinncert.expr import parse
from pinncert.problem import Problem, registry_get
from pinncert.quad import (QuadratureError, QuadratureRule, default_rule, grid_minimum, integrate,
                           l1_norm, l2_norm, rho_profile, sup_norm, weighted_l2_norm)


def _convection(b, eps=1.0, params=None):
    names = set(params or {}) | {"eps"}
    return Problem(0.0, 1.0, eps, parse(b, names), parse("1"), parse("0"), 0, 0, dict(params or {}))


def test_linear():
    assert integrate(lambda x: x, default_rule(0, 1)) == pytest.approx(0.5, rel=1e-15)


def test_abs_b_integral():
    rule = default_rule(0, 1)
    val = l1_norm(lambda x: np.full_like(x, 2.0), rule)
    assert val == pytest.approx(2.0, rel=1e-14)
    assert math.exp(val / 2) == pytest.approx(math.e)


def test_solution_integral():
    # antiderivative (-x^2 + 3x - 3) e^x
    got = integrate(lambda x: x * (1 - x) * np.exp(x), default_rule(0, 1))
    assert got == pytest.approx(3 - math.e, rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=16), st.integers(1, 8))
def test_exact_for_degree_2p_minus_1(coeffs, points):
    coeffs = coeffs[: 2 * points]
    rule = QuadratureRule(0.0, 1.0, panels=1, points=points)
    poly = np.polynomial.Polynomial(coeffs)
    exact = poly.integ()(1.0) - poly.integ()(0.0)
    got = rule.apply(poly)
    scale = max(1.0, float(np.sum(np.abs(coeffs))))
    assert abs(got - exact) <= 1e-12 * scale


def test_nonfinite_integrand_raises():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.where(x > 0.5, np.inf, 1.0), default_rule(0, 1))


def test_norms():
    rule = default_rule(0, 1)
    assert l2_norm(lambda x: np.ones_like(x), rule) == pytest.approx(1.0, rel=1e-14)
    assert l2_norm(lambda x: np.sin(np.pi * x), rule) ** 2 == pytest.approx(0.5, rel=1e-13)
    assert sup_norm(lambda x: x, np.linspace(0, 1, 11)) == 1.0
    w = weighted_l2_norm(lambda x: np.ones_like(x), lambda x: np.exp(-2 * x), rule)
    assert w**2 == pytest.approx((1 - math.exp(-2)) / 2, rel=1e-13)


def test_grid_minimum_refines():
    val, arg = grid_minimum(lambda x: (x - 0.123456789) ** 2, 0.0, 1.0)
    # grid step 1e-3, three halving rounds
    assert abs(arg - 0.123456789) <= 1e-3 / 8
    assert val <= (1e-3 / 8) ** 2


def test_rho_constant_convection():
    rho = rho_profile(_convection("2"))
    assert rho(0.0) == 1.0
    assert rho(0.37) == pytest.approx(math.exp(-0.74), rel=1e-13)
    assert rho.rho_max == pytest.approx(1.0)
    assert rho.rho_min == pytest.approx(math.exp(-2), rel=1e-12)
    assert rho.abs_b_integral == pytest.approx(2.0, rel=1e-13)


def test_rho_zero_convection():
    rho = rho_profile(_convection("0"))
    assert rho.rho_min == rho.rho_max == 1.0
    assert rho.ratio == 1.0


def test_rho_converging_flow():
    rho = rho_profile(_convection("-k*x", params={"k": 7.0}))
    assert rho.rho_max == pytest.approx(math.exp(3.5), rel=1e-12)
    assert rho.rho_min == pytest.approx(1.0)
    x = np.linspace(0, 1, 7)
    assert np.allclose(rho(x), np.exp(3.5 * x * x), rtol=1e-12)


@pytest.mark.parametrize("name", ["example36", "example41", "example51", "example52"])
@pytest.mark.parametrize("eps", [1.0, 0.5, 0.1, 0.01])
def test_rho_invariants(name, eps):
    prob = registry_get(name) if name == "example36" else registry_get(name, {"eps": eps})
    rho = rho_profile(prob)
    assert rho(prob.x1) == 1.0
    assert rho.log_min <= 0.0 <= rho.log_max
    x = np.linspace(prob.x1, prob.x2, 257)
    assert np.all(rho.log_rho_at(x) >= rho.log_min - 1e-9)
    assert np.all(rho.log_rho_at(x) <= rho.log_max + 1e-9)
    # ratio bounded by exp of the total variation of the exponent
    assert rho.log_max - rho.log_min <= rho.abs_b_integral / prob.eps * (1 + 1e-12)
    if np.isfinite(rho.ratio):
        assert np.all(rho(x) > 0)
