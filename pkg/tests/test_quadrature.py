"""Circle averages, winding numbers and contour differentiation."""

import math

import numpy as np
import pytest

from nevlab.functions import make_exp_poly, make_rational
from nevlab.quadrature import (
    QuadratureConfig,
    WindingFailure,
    cauchy_derivative,
    circle_mean,
    circle_winding,
    polyline_winding,
)


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(base_nodes=100)
    with pytest.raises(ValueError):
        QuadratureConfig(target_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_refinements=0)


def test_constant_integrand_is_exact(quad):
    out = circle_mean(lambda z: np.full(z.shape, 2.5), 3.0, quad)
    assert out.value == pytest.approx(2.5, abs=1e-15)
    assert out.certified


def test_smooth_integrand_spectral(quad):
    # mean of cos(theta)^2 = 1/2
    out = circle_mean(lambda z: (z.real / np.abs(z)) ** 2, 2.0, quad)
    assert out.value == pytest.approx(0.5, abs=1e-13)


def test_logplus_kink_handling(quad):
    # mean of log+ |e^z| on |z| = r equals r/pi, with kinks at +-pi/2
    ez = make_exp_poly([(1, 1)])

    def integrand(z):
        return np.log(np.maximum(np.abs(ez.eval(z)), 1.0))

    for r in (5.0, 10.0):
        out = circle_mean(integrand, r, quad, detect_kinks=True)
        assert out.value == pytest.approx(r / math.pi, abs=1e-9)
        assert out.certified


def test_halving_tolerance_is_consistent():
    """Halving target_tol changes the value by less than the coarser tol."""
    ez = make_exp_poly([(1, 1)])

    def integrand(z):
        return np.log(np.maximum(np.abs(ez.eval(z)), 1.0))

    coarse_cfg = QuadratureConfig(target_tol=2e-9)
    fine_cfg = QuadratureConfig(target_tol=1e-9)
    coarse = circle_mean(integrand, 7.0, coarse_cfg, detect_kinks=True)
    fine = circle_mean(integrand, 7.0, fine_cfg, detect_kinks=True)
    assert abs(fine.value - coarse.value) < 2e-9


def test_near_circle_spike_with_hint(quad):
    # log|z - z0| with z0 just inside the circle: exact mean is log r
    z0 = 2.0 * (1 - 5e-4) * np.exp(0.7j)

    def integrand(z):
        return np.log(np.abs(z - z0))

    out = circle_mean(integrand, 2.0, quad, singular_angles=[0.7])
    assert out.value == pytest.approx(math.log(2.0), abs=1e-9)


def test_circle_winding_polynomial():
    f = make_rational([0, 0, 0, 1], [1])  # z^3
    w, _ = circle_winding(f._eval_fn, 0j, 1.5)
    assert w == 3


def test_circle_winding_with_poles():
    f = make_rational([-1, 1], [0, 0, 1])  # (z-1)/z^2
    w, _ = circle_winding(f._eval_fn, 0j, 2.0)
    assert w == 1 - 2


def test_winding_fails_on_root_through_path():
    f = make_rational([-1, 1], [1])  # zero at 1
    with pytest.raises(WindingFailure):
        circle_winding(f._eval_fn, 0j, 1.0)


def test_polyline_winding_square():
    f = make_rational([0, 1], [1])
    corners = [(-1 - 1j), (1 - 1j), (1 + 1j), (-1 + 1j)]
    w, _ = polyline_winding(f._eval_fn, corners)
    assert w == 1


def test_cauchy_derivative_matches_closed_forms(rng):
    ez = make_exp_poly([(1, 1)])
    zs = rng.uniform(-1, 1, 10) + 1j * rng.uniform(-1, 1, 10)
    got = cauchy_derivative(ez._eval_fn, zs, 1, 0.1)
    assert np.max(np.abs(got - ez.eval(zs))) < 1e-12
    poly = make_rational([0, 0, 0, 1], [1])  # z^3, f''' = 6
    got3 = cauchy_derivative(poly._eval_fn, zs, 3, 0.2)
    assert np.max(np.abs(got3 - 6.0)) < 1e-10


def test_cauchy_derivative_per_point_radii(rng):
    f = make_rational([1], [1, 1])  # 1/(z+1), f' = -1/(z+1)^2
    zs = np.array([0.0 + 0j, 0.5 + 0.2j, -0.5 + 0.4j])
    rho = np.array([0.2, 0.3, 0.1])
    got = cauchy_derivative(f._eval_fn, zs, 1, rho)
    expect = -1.0 / (zs + 1) ** 2
    assert np.max(np.abs(got - expect)) < 1e-11
