"""Second-main-theorem machinery: remainder, inequalities, deficiencies."""

import math

import pytest
from numpy.polynomial import polynomial as P

from nevlab.divisors import count_in_disc, counting_from_divisor
from nevlab.errors import (
    DegenerateTargetsError,
    InvalidModelError,
    InvalidTargetError,
    InvalidWindowError,
)
from nevlab.functions import (
    make_constant,
    make_exp_poly,
    make_jacobi_sn,
    make_rational,
)
from nevlab.nevanlinna import DivisorContext, RadiusSchedule
from nevlab.operators import (
    apply_operator,
    derivative,
    forward_difference,
    identity,
    weighted_sum,
)
from nevlab.smt import (
    SyntheticDivisorModel,
    deficiencies,
    deficiency_sum,
    picard_check,
    pointwise_proof_inequality,
    remainder,
    synthetic_valiron,
    verify_linear_smt,
    verify_thm21,
)

Z = make_rational([0, 1], [1])
EXP = make_exp_poly([(1, 1)])
ONE = make_constant(1.0)
ZERO = make_constant(0.0)


class TestRemainder:
    def test_equality_case_total_is_minus_log_r(self, quad):
        for r in (2.0, 5.0, 20.0):
            rem = remainder(Z, ONE, [ZERO], r, quad)
            assert rem.total == pytest.approx(-math.log(r), abs=1e-10)
            assert rem.sum_T_targets == 0.0
            assert rem.l_term == 0.0 and rem.const_term == 0.0

    def test_single_target_drops_pairwise_terms(self, quad):
        rem = remainder(EXP, EXP, [ZERO], 3.0, quad)
        assert rem.l_term == 0.0
        assert rem.const_term == 0.0

    def test_constant_target_characteristics(self, quad):
        rem = remainder(Z, ONE, [ZERO, make_constant(3.0)], 5.0, quad)
        # T(r, 0) = 0 and T(r, 3) = log 3
        assert rem.sum_T_targets == pytest.approx(math.log(3.0), abs=1e-12)
        assert rem.const_term == pytest.approx(math.log(2.0))

    def test_degenerate_targets_rejected(self, quad):
        with pytest.raises(DegenerateTargetsError):
            remainder(Z, ONE, [ONE, make_constant(1.0 + 1e-15)], 4.0, quad)

    def test_breakdown_total_is_sum_of_fields(self, quad):
        rem = remainder(EXP, EXP, [ZERO, ONE], 4.0, quad)
        explicit = (
            rem.sum_T_targets
            + rem.log_sum_ratio
            + rem.l_term
            + rem.const_term
            + rem.ilc_terms
        )
        assert rem.total == pytest.approx(explicit, abs=1e-12)


class TestTheorem21:
    def test_equality_case_slack_vanishes(self, quad):
        reports = verify_thm21(Z, ONE, [ZERO], RadiusSchedule(1.5, 1.6, 8), quad)
        for rep in reports:
            assert abs(rep.slack) < 1e-8
            assert rep.certified

    def test_exponential_two_targets(self, quad):
        reports = verify_thm21(
            EXP, EXP, [ZERO, ONE], RadiusSchedule(2.0, 1.5, 6), quad
        )
        for rep in reports:
            if rep.certified:
                assert rep.slack >= -rep.margin

    def test_rational_with_difference_image(self, quad):
        f = make_rational([-1, 0, 0, 1], [2, 1])
        g = apply_operator(forward_difference(), f)
        targets = [ZERO, ONE, make_constant(-1.0)]
        reports = verify_thm21(f, g, targets, RadiusSchedule(2.0, 1.7, 6), quad)
        assert any(rep.certified for rep in reports)
        for rep in reports:
            if rep.certified:
                assert rep.slack >= -rep.margin

    def test_f_equal_to_target_rejected(self, quad):
        with pytest.raises(InvalidTargetError):
            verify_thm21(Z, ONE, [Z], RadiusSchedule(2.0, 1.5, 3), quad)

    def test_ramification_term_matches_direct_divisors(self, quad):
        """N_g with g = f' equals the classical ramification combination."""
        f = make_rational(P.polymul([-1, 1], [-1, 1]), [1j, 1])  # (z-1)^2/(z+i... )
        fp = f.derivative()
        sched = RadiusSchedule(2.0, 1.8, 4)
        ctx = DivisorContext()
        reports = verify_thm21(f, fp, [ZERO], sched, quad, ctx)
        for rep in reports:
            div_f = count_in_disc(f, rep.r * 1.01)
            div_fp = count_in_disc(fp, rep.r * 1.01)
            direct = (
                2 * counting_from_divisor(div_f.points, rep.r, "pole")
                - counting_from_divisor(div_fp.points, rep.r, "pole")
                + counting_from_divisor(div_fp.points, rep.r, "zero")
            )
            assert rep.N_g == pytest.approx(direct, abs=1e-10)


def test_pointwise_proof_inequality_no_violations(quad):
    suites = [
        (Z, ONE, [ZERO]),
        (EXP, EXP, [ZERO, ONE]),
        (
            make_rational([-1, 0, 0, 1], [2, 1]),
            apply_operator(forward_difference(), make_rational([-1, 0, 0, 1], [2, 1])),
            [ZERO, ONE, make_constant(-1.0)],
        ),
    ]
    for f, g, targets in suites:
        violations, worst = pointwise_proof_inequality(f, g, targets, 4.3, 100)
        assert violations == 0
        assert worst > -1e-9


class TestLinearSMT:
    def test_difference_operator_on_rational(self, quad):
        f = make_rational([-1, 0, 0, 1], [2, 1])
        result = verify_linear_smt(
            f, forward_difference(), [ZERO, ONE], RadiusSchedule(2.0, 1.7, 5), quad
        )
        assert "shift" in result.applicability
        for rep in result.reports:
            assert rep.m_logderiv is not None
            if rep.certified:
                assert rep.slack >= -rep.margin

    def test_function_in_kernel_rejected(self, quad):
        op = weighted_sum([(1.0, derivative()), (-1.0, identity())])
        with pytest.raises(InvalidTargetError):
            verify_linear_smt(EXP, op, [ZERO], RadiusSchedule(2.0, 1.5, 3), quad)

    def test_second_derivative_on_elliptic(self, quad):
        """Short-schedule run of the full linear pipeline on sn."""
        k = 0.5
        v = math.sqrt(1 + k * k) / (math.sqrt(2) * k)
        sn = make_jacobi_sn(k)
        targets = [ZERO, make_constant(v), make_constant(-v)]
        result = verify_linear_smt(
            sn, derivative(2), targets, RadiusSchedule(2.5, 1.45, 3), quad
        )
        assert "differential operator" in result.applicability
        for rep in result.reports:
            if rep.certified:
                assert rep.slack >= -rep.margin
        # the smallness diagnostic is reported per radius
        curve = result.smallness_curve()
        assert len(curve) == 3
        assert all(len(row) == 3 for row in curve)

    def test_target_outside_kernel_rejected(self, quad):
        with pytest.raises(InvalidTargetError) as err:
            verify_linear_smt(
                make_rational([0, 0, 1], [1]),
                derivative(),
                [Z],
                RadiusSchedule(2.0, 1.5, 3),
                quad,
            )
        assert "target 0" in str(err.value)


class TestDeficiencies:
    def test_exponential_classical_values(self, quad):
        ests = deficiencies(
            EXP, derivative(), [ZERO], RadiusSchedule(2.0, 1.4, 8), quad
        )
        by_label = {e.target_label: e for e in ests}
        zero_est = by_label["const(0)"]
        inf_est = by_label["infinity"]
        assert zero_est.delta == pytest.approx(1.0, abs=1e-9)
        assert zero_est.theta_L == pytest.approx(0.0, abs=1e-9)
        assert inf_est.delta == pytest.approx(1.0, abs=1e-9)
        assert inf_est.theta_L == pytest.approx(0.0, abs=1e-9)
        total = deficiency_sum(ests)
        assert total.total == pytest.approx(2.0, abs=1e-8)
        assert total.satisfied

    def test_window_validation(self, quad):
        with pytest.raises(InvalidWindowError):
            deficiencies(
                EXP, derivative(), [ZERO], RadiusSchedule(2.0, 1.4, 4), quad, window=9
            )

    def test_single_target_subset_bound(self, quad):
        ests = deficiencies(
            EXP, derivative(), [ZERO], RadiusSchedule(2.0, 1.4, 6), quad
        )
        finite = [e for e in ests if not e.is_infinity]
        assert len(finite) == 1
        assert finite[0].delta + finite[0].theta_L <= 2.0 + 0.25


class TestPicard:
    def test_identity_derivative_not_exceptional(self, quad):
        rep = picard_check(Z, derivative(), [ZERO], RadiusSchedule(1.0, 2.0, 4), quad)
        assert rep.candidates[0].exceptional is False
        assert "not exceptional" in rep.candidates[0].detail
        assert "no contradiction" in rep.verdict

    def test_exponential_kernel_member(self, quad):
        op = weighted_sum([(1.0, derivative()), (-1.0, identity())])
        rep = picard_check(EXP, op, [ZERO], RadiusSchedule(1.0, 2.0, 4), quad)
        assert rep.f_kernel_residual < 1e-9
        assert rep.verdict == "L(f) = 0 (numerically)"

    def test_sn_three_exceptional_values(self, quad):
        k = 0.5
        v = math.sqrt(1 + k * k) / (math.sqrt(2) * k)
        sn = make_jacobi_sn(k)
        targets = [ZERO, make_constant(v), make_constant(-v)]
        rep = picard_check(sn, derivative(2), targets, RadiusSchedule(2.0, 1.5, 4), quad)
        assert rep.exceptional_count == 3
        assert rep.threshold == 4
        assert "threshold 4 not met, no contradiction" in rep.verdict


class TestSyntheticValiron:
    def test_bounds_for_small_p(self):
        radii = [float(x) for x in range(4, 40, 4)]
        for p, bound in ((2, 0.0), (3, 1.0 / 3.0), (4, 0.5)):
            model = SyntheticDivisorModel(
                lambda r: r**2, lambda r, p=p: (2.0 / p) * r**2, p
            )
            chk = synthetic_valiron(model, radii)
            assert chk.bound == pytest.approx(bound, abs=1e-15)
            assert chk.consistent and chk.satisfied

    def test_inconsistent_model_flagged(self):
        radii = [float(x) for x in range(4, 40, 4)]
        model = SyntheticDivisorModel(lambda r: r**2, lambda r: 0.7 * r**2, 4)
        chk = synthetic_valiron(model, radii)
        assert not chk.consistent
        assert not chk.satisfied
        assert chk.theta_lower > 2.0

    def test_model_invariants_enforced(self):
        radii = [1.0, 2.0, 3.0]
        with pytest.raises(InvalidModelError):
            synthetic_valiron(
                SyntheticDivisorModel(lambda r: r, lambda r: 2 * r, 3), radii
            )
        with pytest.raises(InvalidModelError):
            synthetic_valiron(
                SyntheticDivisorModel(lambda r: -r, lambda r: 0.5 * r, 3), radii
            )
        with pytest.raises(InvalidModelError):
            synthetic_valiron(
                SyntheticDivisorModel(lambda r: r, lambda r: 0.5 * r, 1), radii
            )


def test_theta_infinity_lower_bound_for_differential_operator(quad):
    """theta(inf) >= -k + 1 with k the highest derivative order."""
    sn = make_jacobi_sn(0.5)
    v = math.sqrt(1.25) / (math.sqrt(2) * 0.5)
    ests = deficiencies(
        sn,
        derivative(2),
        [ZERO],
        RadiusSchedule(3.0, 1.35, 5),
        quad,
    )
    inf_est = next(e for e in ests if e.is_infinity)
    assert inf_est.theta_L >= -2 + 1 - 1e-9
    assert inf_est.within_typed_bounds
