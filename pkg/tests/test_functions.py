"""Function handles: evaluation, oracles, derivatives, combinations."""

import math

import numpy as np
import pytest

from nevlab.elliptic import quarter_periods
from nevlab.errors import (
    InvalidCombinationError,
    InvalidCompositionError,
    InvalidFamilyError,
)
from nevlab.functions import (
    as_small,
    combine,
    compose_affine,
    ilc,
    make_constant,
    make_exp_poly,
    make_jacobi_sn,
    make_rational,
    poly_roots_with_mult,
)
from nevlab.regions import Region


def disc(r, c=0j):
    return Region.disc(c, r)


class TestRational:
    def test_identity_map(self):
        f = make_rational([0, 1], [1])
        assert f(2 + 1j) == 2 + 1j

    def test_single_zero_divisor(self):
        f = make_rational([-1, 1], [1])
        pts = f.divisor(disc(2)).points
        assert len(pts) == 1
        assert pts[0].location == pytest.approx(1.0)
        assert (pts[0].multiplicity, pts[0].kind) == (1, "zero")

    def test_simple_pole_divisor(self):
        f = make_rational([1], [0, 1])
        pts = f.divisor(disc(1)).points
        assert len(pts) == 1
        assert pts[0].location == pytest.approx(0.0)
        assert (pts[0].multiplicity, pts[0].kind) == (1, "pole")

    def test_zero_denominator_rejected(self):
        with pytest.raises(InvalidFamilyError):
            make_rational([1, 2], [0])

    def test_common_roots_cancelled(self):
        # (z-1)(z-2) / (z-1) keeps only the zero at 2
        num = np.polynomial.polynomial.polymul([-1, 1], [-2, 1])
        f = make_rational(num, [-1, 1])
        pts = f.divisor(disc(5)).points
        assert len(pts) == 1
        assert pts[0].location == pytest.approx(2.0)

    def test_multiplicity_recovery(self):
        roots, certified = poly_roots_with_mult([0, 0, 0, 1])  # z^3
        assert certified
        assert len(roots) == 1 and roots[0][1] == 3

    def test_growth_metadata(self):
        f = make_rational([0, 1], [1])
        assert f.growth.order == 0.0 and f.growth.hyper_order == 0.0


class TestExpPoly:
    def test_eval_at_zero(self):
        assert make_exp_poly([(1, 1)])(0.0) == pytest.approx(1.0)

    def test_two_term_zero_line(self):
        f = make_exp_poly([(1, 1), (-1, 0)])  # e^z - 1
        locs = sorted(
            (p.location for p in f.divisor(disc(7)).points), key=lambda z: z.imag
        )
        expect = [-2j * math.pi, 0j, 2j * math.pi]
        assert len(locs) == 3
        for got, ref in zip(locs, expect):
            assert got == pytest.approx(ref, abs=1e-12)

    def test_exp_derivative_is_itself(self):
        f = make_exp_poly([(1, 1)])
        assert f.derivative().params["terms"] == f.params["terms"]

    def test_entire(self):
        assert make_exp_poly([(2, 1j), (3, 2)]).pole_candidates(disc(10)) == []

    def test_growth_metadata(self):
        f = make_exp_poly([(1, 1)])
        assert f.growth.order == 1.0 and f.growth.hyper_order == 0.0


class TestJacobi:
    def test_modulus_validation(self):
        with pytest.raises(InvalidFamilyError):
            make_jacobi_sn(1.2)

    def test_pole_set_near_origin(self):
        k = 0.5
        sn = make_jacobi_sn(k)
        big_k, big_kp = quarter_periods(k)
        assert 2 * big_k > big_kp + 0.1  # the example's radius condition
        poles = sn.divisor(disc(big_kp + 0.1)).poles()
        locs = sorted((p.location for p in poles), key=lambda z: z.imag)
        assert len(locs) == 2
        assert locs[0] == pytest.approx(-1j * big_kp)
        assert locs[1] == pytest.approx(1j * big_kp)

    def test_declared_order_two(self):
        assert make_jacobi_sn(0.5).growth.order == 2.0


class TestCombine:
    def test_sub_constant(self):
        f = make_jacobi_sn(0.5)
        g = combine("sub", f, make_constant(0.25))
        z = 0.7 + 0.1j
        assert g(z) == pytest.approx(f(z) - 0.25)

    def test_mul_double_zero(self):
        z_handle = make_rational([0, 1], [1])
        sq = combine("mul", z_handle, z_handle)
        pts = sq.divisor(disc(1)).points
        assert len(pts) == 1
        assert (pts[0].multiplicity, pts[0].kind) == (2, "zero")

    def test_reciprocal_swaps_kinds(self):
        sn = make_jacobi_sn(0.5)
        inv = combine("div", make_constant(1), sn)
        big_k, big_kp = quarter_periods(0.5)
        d_sn = sn.divisor(disc(big_kp + 0.1))
        d_inv = inv.divisor(disc(big_kp + 0.1))
        flipped = {(p.location, p.kind) for p in d_sn.swap_kinds().points}
        assert {(p.location, p.kind) for p in d_inv.points} == flipped

    def test_rational_closure(self):
        f = make_rational([0, 1], [1])
        g = make_rational([1], [2, 1])
        assert combine("add", f, g).family == "rational"
        assert combine("div", f, g).family == "rational"

    def test_exp_closure(self):
        e1 = make_exp_poly([(1, 1)])
        e2 = make_exp_poly([(1, 2)])
        prod = combine("mul", e1, e2)
        assert prod.family == "exp-poly"
        assert prod.params["terms"] == ((1 + 0j, 3 + 0j),)

    def test_division_by_zero_function(self):
        with pytest.raises(InvalidCombinationError):
            combine("div", make_constant(1), make_constant(0))

    def test_small_flag(self):
        sn = make_jacobi_sn(0.5)
        assert not sn.is_declared_small
        assert as_small(sn).is_declared_small
        assert make_constant(3).is_declared_small
        assert make_rational([1, 1], [1]).is_declared_small


class TestAffine:
    def test_translation(self):
        f = compose_affine(make_rational([0, 1], [1]), 1, 1)
        assert f(2.0) == pytest.approx(3.0)

    def test_scaling_of_square(self):
        f = compose_affine(make_rational([0, 0, 1], [1]), 2, 0)
        assert f(3.0) == pytest.approx(36.0)

    def test_degenerate_a_rejected(self):
        with pytest.raises(InvalidCompositionError):
            compose_affine(make_rational([0, 1], [1]), 0, 1)

    def test_divisor_pullback_law(self):
        # zero of f at z0 appears in the composition at (z0 - b)/a, exactly
        a, b = 0.5 + 0.25j, 1 - 2j
        sn = make_jacobi_sn(0.5)
        comp = compose_affine(sn, a, b)
        region = disc(3.0)
        got = comp.divisor(region)
        image_center, image_radius = b, abs(a) * 3.0
        base = sn.divisor(Region.disc(image_center, image_radius))
        expect = sorted(
            (
                ((p.location - b) / a, p.multiplicity, p.kind)
                for p in base.points
                if region.contains((p.location - b) / a)
            ),
            key=lambda t: (t[0].real, t[0].imag),
        )
        got_t = [(p.location, p.multiplicity, p.kind) for p in got.points]
        assert len(got_t) == len(expect)
        for g, e in zip(got_t, expect):
            assert abs(g[0] - e[0]) < 1e-10
            assert g[1:] == e[1:]

    def test_nested_affine_folds(self):
        base = make_jacobi_sn(0.5)
        f = compose_affine(compose_affine(base, 2, 1), 3, 4)
        assert f.family == "affine-composition"
        assert f.params["base"] is base
        assert f.params["a"] == pytest.approx(6.0)
        assert f.params["b"] == pytest.approx(9.0)


FAMILIES = {
    "rational": make_rational([1, -2, 0.5], [2, 1]),
    "exp-poly": make_exp_poly([(1.5, 0.8), (-0.5, -0.3 + 0.2j)]),
    "jacobi-sn": make_jacobi_sn(0.5),
    "affine": compose_affine(make_jacobi_sn(0.5), 0.8, 0.3j),
    "combination": combine(
        "mul", make_jacobi_sn(0.5), make_rational([1, 1], [1])
    ),
}


@pytest.mark.parametrize("name", sorted(FAMILIES))
def test_derivative_rule_matches_central_differences(name, rng):
    """|closed-form - 4th order FD| / (1 + |closed-form|) < 1e-6 at 200 points."""
    f = FAMILIES[name]
    df = f.derivative()
    cands = f.pole_candidates(disc(4.0)) or []
    pts = []
    while len(pts) < 200:
        z = complex(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5))
        if all(abs(z - p) >= 0.05 for p in cands):
            pts.append(z)
    zs = np.array(pts)
    h = 1e-4
    fd = (f.eval(zs - 2 * h) - 8 * f.eval(zs - h) + 8 * f.eval(zs + h) - f.eval(zs + 2 * h)) / (12 * h)
    closed = df.eval(zs)
    rel = np.abs(closed - fd) / (1.0 + np.abs(closed))
    assert np.max(rel) < 1e-6


class TestIlc:
    def test_double_zero(self):
        c, m = ilc(make_rational([0, 0, 1], [1]), 0)
        assert m == 2 and c == pytest.approx(1.0)

    def test_regular_point(self):
        c, m = ilc(make_rational([-1, 1], [1]), 0)
        assert m == 0 and c == pytest.approx(-1.0)

    def test_sn_simple_zero(self):
        # sn(z) = z + O(z^3) by the ODE initial data, so ilc = 1 at order 1
        c, m = ilc(make_jacobi_sn(0.5), 0)
        assert m == 1 and c == pytest.approx(1.0, abs=1e-10)

    def test_pole_order(self):
        c, m = ilc(make_rational([1], [0, 0, 1]), 0)
        assert m == -2 and c == pytest.approx(1.0)

    def test_winding_route_without_oracle(self):
        # generic combination has no oracle at hand
        sn = make_jacobi_sn(0.5)
        h = combine("sub", sn, make_constant(0.0))
        h2 = combine("mul", h, h)
        c, m = ilc(h2, 0)
        assert m == 2 and c == pytest.approx(1.0, abs=1e-8)


def test_divisor_multiplicities_agree_with_ilc():
    """Certified divisor points carry the multiplicity ilc sees."""
    f = make_rational(
        np.polynomial.polynomial.polyfromroots([1.0, 1.0, -0.5 + 0.5j]), [3, 1]
    )
    for p in f.divisor(disc(3)).points:
        c, m = ilc(f, p.location)
        assert abs(m) == p.multiplicity
        assert (m > 0) == (p.kind == "zero")


TOL_EVAL = 1e-8


@pytest.mark.parametrize(
    "handle,radius",
    [
        (make_rational(
            np.polynomial.polynomial.polyfromroots([0.8, -0.3 + 1.1j]), [2, 1]
        ), 3.0),
        (make_exp_poly([(1, 1), (-1, 0)]), 7.0),
        (make_jacobi_sn(0.5), 5.0),
    ],
)
def test_oracle_points_are_consistent_with_evaluation(handle, radius):
    """Reported zeros evaluate below tol_eval; reported poles blow up on
    a small circle shrinking toward them."""
    div = handle.divisor(disc(radius))
    assert div is not None and div.certified
    for p in div.zeros():
        assert abs(complex(handle.eval(p.location))) < TOL_EVAL
    for p in div.poles():
        blew_up = False
        for rho in (1e-5, 1e-7, 1e-9, 1e-11):
            ring = p.location + rho * np.exp(1j * np.linspace(0, 2 * math.pi, 8))
            vals = np.abs(handle.eval(ring))
            vals = vals[np.isfinite(vals)]
            if len(vals) and np.min(vals) > 1.0 / TOL_EVAL:
                blew_up = True
                break
        assert blew_up, p


def test_region_shapes():
    from nevlab.regions import Region

    ann = Region.annulus(0j, 1.0, 2.0)
    assert ann.contains(1.5) and not ann.contains(0.5) and not ann.contains(2.5)
    rect = Region.rectangle(-1 - 1j, 1 + 1j)
    assert rect.contains(0.5 + 0.5j) and not rect.contains(1.5)
    with pytest.raises(ValueError):
        Region.annulus(0j, 2.0, 1.0)
    with pytest.raises(ValueError):
        Region.disc(0j, -1.0)
    # divisor oracles honor annulus membership
    sn = make_jacobi_sn(0.5)
    inner = {p.location for p in sn.divisor(ann).points}
    assert all(1.0 < abs(z) < 2.0 for z in inner)
