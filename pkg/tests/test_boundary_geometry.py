import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from caustic.boundary_geometry import TWO_PI, DeformedBoundary, circle
from caustic.errors import GeometryError
from caustic.fourier_profile import FourierProfile

from conftest import cosines

SQ3 = math.sqrt(3.0)


@pytest.fixture
def bump():
    return DeformedBoundary(cosines((1, 1.0)), epsilon=0.05)


class TestRadius:
    def test_circle(self):
        assert circle().radius(2.7) == 1.0

    def test_cos(self):
        b = DeformedBoundary(cosines((1, 1.0)), epsilon=0.1)
        assert b.radius(0.0) == pytest.approx(1.1)

    def test_profile_vanishing_at_zero(self, p57):
        assert DeformedBoundary(p57, epsilon=0.01).radius(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_second_jet_included(self):
        b = DeformedBoundary(cosines((1, 1.0)), cosines((2, 1.0)), epsilon=0.1)
        assert b.radius(0.0) == pytest.approx(1.11)

    def test_nonpositive_radius(self):
        with pytest.raises(GeometryError):
            DeformedBoundary(cosines((3, 1.0)), epsilon=1.5)

    def test_negative_epsilon(self):
        with pytest.raises(GeometryError):
            DeformedBoundary(cosines((3, 1.0)), epsilon=-0.1)


class TestPoint:
    def test_circle_points(self):
        assert circle().point_xy(0.0) == pytest.approx((1.0, 0.0))
        assert circle().point_xy(TWO_PI / 3) == pytest.approx((-0.5, SQ3 / 2))

    def test_cos_at_pi(self):
        b = DeformedBoundary(cosines((1, 1.0)), epsilon=0.1)
        assert b.point_xy(math.pi) == pytest.approx((-0.9, 0.0), abs=1e-15)

    def test_jet_matches_finite_difference(self, p57):
        b = DeformedBoundary(p57, epsilon=0.01)
        t, h = 0.731, 1e-5
        z, dz, d2z = b.point_jet(t)
        assert dz == pytest.approx((b.point(t + h) - b.point(t - h)) / (2 * h), rel=1e-8)
        assert d2z == pytest.approx((b.point(t + h) - 2 * z + b.point(t - h)) / h ** 2, rel=1e-4)


class TestArcLength:
    def test_circle(self):
        assert circle().arc_length(math.pi) == pytest.approx(math.pi)
        assert circle().arc_length(TWO_PI) == pytest.approx(TWO_PI)

    def test_second_order_deviation(self, bump):
        assert abs(bump.arc_length(TWO_PI) - TWO_PI) <= 10 * 0.05 ** 2

    def test_matches_perimeter(self, bump):
        assert bump.arc_length(TWO_PI - 1e-15) == pytest.approx(bump.perimeter, abs=1e-11)
        assert bump._quad(0.0, TWO_PI) == pytest.approx(bump.perimeter, abs=1e-12)

    def test_lift(self, bump):
        assert bump.arc_length(1.0 + TWO_PI) == pytest.approx(bump.arc_length(1.0) + bump.perimeter,
                                                              abs=1e-12)

    def test_additive(self, bump):
        cuts = np.linspace(0, TWO_PI, 7)
        parts = sum(bump._quad(a, c) for a, c in zip(cuts[:-1], cuts[1:]))
        assert parts == pytest.approx(bump.perimeter, abs=1e-12)

    def test_strictly_increasing(self, bump):
        s = [bump.arc_length(t) for t in np.linspace(0.01, TWO_PI - 0.01, 50)]
        assert np.all(np.diff(s) > 0)

    def test_central_difference_second_order(self):
        n = cosines((2, 1.0), (3, 0.5))

        def s(e):
            # negative eps is the boundary built from -n
            prof = n if e >= 0 else -n
            return DeformedBoundary(prof, epsilon=abs(e)).arc_length(2.0)

        d = [(s(e) - s(-e)) / (2 * e) for e in (1e-2, 5e-3, 2.5e-3)]
        assert (d[0] - d[1]) / (d[1] - d[2]) == pytest.approx(4.0, rel=0.05)


class TestThetaFromArc:
    def test_circle(self):
        assert circle().theta_from_arc(math.pi / 2) == pytest.approx(math.pi / 2)

    @pytest.mark.parametrize("eps", [0.0, 0.05, 0.2])
    def test_round_trip(self, eps):
        b = DeformedBoundary(cosines((1, 1.0), (4, 0.01)), epsilon=eps)
        assert b.theta_from_arc(b.arc_length(1.234)) == pytest.approx(1.234, abs=1e-9)

    def test_half_perimeter(self, bump):
        s = bump.perimeter / 2
        th = bump.theta_from_arc(s)
        assert bump.arc_length(th) == pytest.approx(s, abs=1e-10)
        # bisection oracle on the same quadrature
        lo, hi = 0.0, TWO_PI
        for _ in range(60):
            mid = (lo + hi) / 2
            lo, hi = (mid, hi) if bump.arc_length(mid) < s else (lo, mid)
        assert th == pytest.approx(lo, abs=1e-10)

    def test_wraps(self, bump):
        s = bump.perimeter + 0.5
        assert bump.theta_from_arc(s) == pytest.approx(TWO_PI + bump.theta_from_arc(0.5), abs=1e-10)


class TestTangentNormal:
    def test_circle(self):
        t, nrm = circle().tangent_normal(0.0)
        assert (t.real, t.imag) == pytest.approx((0.0, 1.0))
        assert (nrm.real, nrm.imag) == pytest.approx((1.0, 0.0))
        t, nrm = circle().tangent_normal(math.pi / 2)
        assert (t.real, t.imag) == pytest.approx((-1.0, 0.0), abs=1e-15)
        assert (nrm.real, nrm.imag) == pytest.approx((0.0, 1.0), abs=1e-15)

    def test_cos_normal_radial_at_zero(self):
        _, nrm = DeformedBoundary(cosines((1, 1.0)), epsilon=0.1).tangent_normal(0.0)
        assert (nrm.real, nrm.imag) == pytest.approx((1.0, 0.0), abs=1e-15)

    def test_orthonormal_on_grid(self, p57):
        b = DeformedBoundary(p57, epsilon=0.01)
        th = TWO_PI * np.arange(4096) / 4096
        t, nrm = b.tangent_normal(th)
        assert np.max(np.abs(np.abs(t) - 1)) <= 1e-12
        assert np.max(np.abs(np.abs(nrm) - 1)) <= 1e-12
        assert np.max(np.abs((t * nrm.conjugate()).real)) <= 1e-12
        assert np.all((nrm * b.point(th).conjugate()).real > 0)


class TestConvexity:
    def test_circle(self):
        ok, kmin = circle().convexity_check()
        assert ok and kmin == 1.0

    def test_circle_curvature_identically_one(self):
        b = DeformedBoundary(cosines((3, 1.0)), epsilon=0.0)
        th = TWO_PI * np.arange(4096) / 4096
        assert np.max(np.abs(b.curvature(th) - 1)) <= 1e-12

    def test_small_deformation(self, p57):
        ok, kmin = DeformedBoundary(p57, epsilon=0.001).convexity_check()
        assert ok and kmin == pytest.approx(1.0, abs=0.2)

    def test_large_deformation_not_convex(self):
        b = DeformedBoundary(cosines((7, 1.0)), epsilon=0.5)
        assert not b.convexity_check()[0]
        with pytest.raises(GeometryError):
            b.require_convex()

    def test_ellipse_like_curvature(self):
        # r = 1 + e cos 2t: curvature at t = 0 from the polar formula
        e = 0.1
        b = DeformedBoundary(cosines((2, 1.0)), epsilon=e)
        r, r2 = 1 + e, -4 * e
        assert b.curvature(0.0) == pytest.approx((r * r - r * r2) / r ** 3)


class TestJson:
    def test_round_trip(self, p57):
        b = DeformedBoundary(p57, cosines((2, 0.5)), epsilon=0.02)
        c = DeformedBoundary.from_json(b.to_json())
        assert c.epsilon == 0.02 and c.n.coeffs == b.n.coeffs and c.m.coeffs == b.m.coeffs

    def test_defaults(self):
        b = DeformedBoundary.from_json({"epsilon": 0.1})
        assert b.is_circle and b.perimeter == TWO_PI


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, TWO_PI), st.floats(0.0, 0.1))
def test_round_trip_property(theta, eps):
    b = DeformedBoundary(cosines((2, 0.7), (5, -0.3)), epsilon=eps)
    assert b.theta_from_arc(b.arc_length(theta)) == pytest.approx(theta, abs=1e-9)
