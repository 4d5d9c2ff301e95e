"""Operator trees: application, kernels, linearity, diagnostics."""

import numpy as np
import pytest

from nevlab.errors import (
    InsufficientSamplesError,
    InvalidCombinationError,
    UnsupportedDerivativeError,
)
from nevlab.functions import (
    FunctionHandle,
    combine,
    make_constant,
    make_exp_poly,
    make_jacobi_sn,
    make_rational,
)
from nevlab.operators import (
    SampleSpec,
    apply_operator,
    compose,
    derivative,
    derivative_order,
    forward_difference,
    has_shift_or_scale,
    identity,
    kernel_check,
    linearity_probe,
    logderiv_proximity,
    mcmillan_gammas,
    mcmillan_residual,
    q_scale,
    shift,
    weighted_sum,
)

Z = make_rational([0, 1], [1])
Z2 = make_rational([0, 0, 1], [1])
EXP = make_exp_poly([(1, 1)])


def sample_grid(n=40, lo=-2.0, hi=2.0, seed=3):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, n) + 1j * rng.uniform(lo, hi, n)


class TestApply:
    def test_derivative_of_square(self):
        got = apply_operator(derivative(), Z2)
        zs = sample_grid()
        assert np.max(np.abs(got.eval(zs) - 2 * zs)) < 1e-12

    def test_forward_difference_on_square(self):
        got = apply_operator(forward_difference(), Z2)
        zs = sample_grid()
        assert np.max(np.abs(got.eval(zs) - (2 * zs + 1))) < 1e-12

    def test_exp_in_kernel_of_d_minus_identity(self):
        op = weighted_sum([(1.0, derivative()), (-1.0, identity())])
        got = apply_operator(op, EXP)
        zs = sample_grid()
        assert np.max(np.abs(got.eval(zs))) < 1e-9

    def test_mixed_shift_derivative_qscale(self):
        # f''(z+1) + f(z) - 2 f'(2z) on f = z^2: 2 + z^2 - 8z
        op = weighted_sum(
            [
                (1.0, shift(1.0, derivative(2))),
                (1.0, identity()),
                (-2.0, q_scale(2.0, derivative())),
            ]
        )
        got = apply_operator(op, Z2)
        zs = sample_grid()
        expect = 2.0 + zs**2 - 8 * zs
        assert np.max(np.abs(got.eval(zs) - expect)) < 1e-11

    def test_compose_substitutes_identity_leaves(self):
        delta2 = compose(forward_difference(), forward_difference())
        got = apply_operator(delta2, Z2)
        zs = sample_grid()
        # second difference of z^2 is constant 2
        assert np.max(np.abs(got.eval(zs) - 2.0)) < 1e-11

    def test_numeric_fallback_matches_rule(self):
        sn = make_jacobi_sn(0.5)
        bare = FunctionHandle(
            sn.family, sn.params, sn._eval_fn, poles_fn=sn.pole_candidates
        )
        num = apply_operator(derivative(), bare)
        closed = sn.derivative()
        zs = sample_grid(12, -1.2, 1.2)
        assert np.max(np.abs(num.eval(zs) - closed.eval(zs))) < 1e-9

    def test_fallback_disabled_raises(self):
        bare = FunctionHandle("rational", {}, Z._eval_fn)
        with pytest.raises(UnsupportedDerivativeError):
            apply_operator(derivative(), bare, allow_fallback=False)


class TestKernel:
    def test_constants_in_difference_kernel(self):
        rep = kernel_check(forward_difference(), make_constant(5.0))
        assert rep.max_residual < 1e-12 and rep.passed

    def test_linear_in_second_derivative_kernel(self):
        rep = kernel_check(derivative(2), Z)
        assert rep.max_residual < 1e-12

    def test_nonmember_reported(self):
        op = weighted_sum([(1.0, derivative()), (-1.0, identity())])
        rep = kernel_check(op, make_constant(1.0))
        assert rep.max_residual >= 0.9
        assert not rep.passed

    def test_pole_dense_sample_rejected(self):
        # 1/sin-like pole wall: samples on both circles hit poles of 1/(z...)
        h = make_rational([1], [0, 1])
        spec = SampleSpec(radii=(1e-9,), per_circle=4, pole_guard=1.0)
        with pytest.raises(InsufficientSamplesError):
            kernel_check(derivative(), h, spec)

    def test_small_coefficients_enforced(self):
        sn = make_jacobi_sn(0.5)
        with pytest.raises(InvalidCombinationError):
            weighted_sum([(sn, identity())])


def test_kernel_invariance_under_apply():
    """L(f - a) agrees with L(f) pointwise for kernel elements a."""
    cases = [
        (forward_difference(), make_constant(2.0 + 1j)),
        (derivative(2), Z),
        (derivative(), make_constant(-3.0)),
    ]
    f = make_rational([1, 0.5, 0, 1], [2, 1])
    zs = sample_grid(30)
    for op, a in cases:
        lhs = apply_operator(op, combine("sub", f, a))
        rhs = apply_operator(op, f)
        vals_l, vals_r = lhs.eval(zs), rhs.eval(zs)
        ok = np.isfinite(vals_l) & np.isfinite(vals_r)
        assert np.max(np.abs(vals_l[ok] - vals_r[ok])) < 1e-8


def test_shift_derivative_commutation():
    for f in (Z2, EXP, make_jacobi_sn(0.5)):
        a = apply_operator(shift(0.7, derivative()), f)
        b = apply_operator(derivative(1, shift(0.7)), f)
        zs = sample_grid(25, -1.5, 1.5)
        va, vb = a.eval(zs), b.eval(zs)
        ok = np.isfinite(va) & np.isfinite(vb)
        assert np.max(np.abs(va[ok] - vb[ok])) < 1e-9


def test_linearity_residual_on_random_draws(rng):
    """50 random (L, f, g, alpha, beta) draws stay below 1e-8."""
    operators = [
        derivative(),
        derivative(2),
        forward_difference(),
        shift(0.5j),
        q_scale(1.3),
        weighted_sum([(1.0, shift(1.0, derivative(2))), (1.0, identity())]),
    ]
    pool = [
        Z,
        Z2,
        make_rational([1, -1, 2], [3, 1]),
        EXP,
        make_exp_poly([(0.5, -1), (1, 0.5)]),
        make_jacobi_sn(0.5),
    ]
    for _ in range(50):
        op = operators[rng.integers(len(operators))]
        f = pool[rng.integers(len(pool))]
        g = pool[rng.integers(len(pool))]
        alpha = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        beta = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        rep = linearity_probe(op, f, g, alpha, beta)
        assert rep.max_residual < 1e-8


class TestKernelBasis:
    def test_build_accepts_members(self):
        from nevlab.operators import KernelBasis

        basis = KernelBasis.build(
            derivative(2), [make_constant(1.0), Z]
        )
        assert len(basis.elements) == 2
        assert all(rep.passed for rep in basis.reports)

    def test_build_rejects_outsiders(self):
        from nevlab.operators import KernelBasis

        with pytest.raises(InvalidCombinationError):
            KernelBasis.build(derivative(), [Z])


class TestStructure:
    def test_derivative_order(self):
        assert derivative_order(identity()) == 0
        assert derivative_order(derivative(2)) == 2
        assert derivative_order(shift(1.0, derivative(1, shift(2.0, derivative(2))))) == 3
        assert derivative_order(forward_difference()) == 0

    def test_shift_detection(self):
        assert has_shift_or_scale(forward_difference())
        assert has_shift_or_scale(q_scale(2.0))
        assert not has_shift_or_scale(derivative(3))


class TestLogderivProximity:
    def test_exp_logderiv_vanishes(self, quad):
        for r in (2.0, 5.0, 9.0):
            out = logderiv_proximity(derivative(), EXP, r, quad)
            assert out.value < 1e-10

    def test_square_at_radius_four(self, quad):
        # |f'/f| = 2/4 on the circle, so log+ vanishes
        out = logderiv_proximity(derivative(), Z2, 4.0, quad)
        assert out.value == pytest.approx(0.0, abs=1e-12)

    def test_sn_difference_ratio_trends_down(self, quad):
        """m(r, delta^2 sn / sn) / T(r, sn) decreases along the schedule."""
        from nevlab.nevanlinna import DivisorContext, proximity
        from nevlab.divisors import counting_from_divisor

        sn = make_jacobi_sn(0.5)
        op = forward_difference(power=2)
        ctx = DivisorContext()
        div = ctx.divisor(sn, 13.0)
        ratios = []
        for r in (5.0, 12.0):
            num = logderiv_proximity(op, sn, r, quad).value
            t = (
                proximity(sn, r, quad, div.points).value
                + counting_from_divisor(div.points, r, "pole")
            )
            ratios.append(num / t)
        assert ratios[-1] < ratios[0]


class TestMcMillan:
    def test_gammas_solve_the_cubic(self):
        alpha, beta = 0.75, 0.2
        for g in mcmillan_gammas(alpha, beta):
            assert abs(2 * g**3 + (alpha - 2) * g + beta) < 1e-9

    def test_non_solution_has_residual(self):
        pts = sample_grid(20, -1.5, 1.5, seed=9)
        res = mcmillan_residual(Z2, 0.75, 0.2, pts)
        assert res > 0.1

    def test_second_difference_form(self):
        # (delta^2 f)(z) = f(z+2) - 2 f(z+1) + f(z); at z-1 this is the
        # centered form appearing in the map's factorized rewrite
        op = forward_difference(power=2)
        f = make_rational([0.3, 1, 0.2, 1], [1])
        got = apply_operator(op, f)
        zs = sample_grid(20)
        expect = f.eval(zs + 2) - 2 * f.eval(zs + 1) + f.eval(zs)
        assert np.max(np.abs(got.eval(zs) - expect)) < 1e-10
