import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from szegoutm.errors import DomainError, EvaluationError
from szegoutm.geometry import (BoundarySegment, PanelQuadrature, disc_boundary, ellipse_boundary, ellipse_radius,
                               gauss_legendre, integrate_segment, point_in_polygon, polygon_angles,
                               polygon_boundary)

from conftest import QUAD

ELLIPSE21_PERIMETER = 9.688448220547675  # frozen arbitrary-precision quadrature


def contour_integral(contour, f, q=None):
    q = q or PanelQuadrature()
    return sum(integrate_segment(s, q, lambda t, s=s: f(s(t)) * s.velocity(t)) for s in contour)


class TestEllipse:
    def test_axis_points(self):
        c = ellipse_boundary(2, 1)
        assert abs(c.segments[0](0.0) - 2) < 1e-15
        assert abs(c.segments[0](math.pi / 2) - 1j) < 1e-15

    def test_perimeter(self):
        c = ellipse_boundary(2, 1)
        ref, _ = quad(lambda t: math.hypot(2 * math.sin(t), math.cos(t)), 0, 2 * math.pi, epsabs=1e-13, limit=200)
        assert c.perimeter() == pytest.approx(ref, abs=1e-10)
        assert c.perimeter() == pytest.approx(ELLIPSE21_PERIMETER, abs=1e-10)

    def test_c1_arc_length(self):
        c = ellipse_boundary(2, 1)
        s = c.segments[0]
        got = integrate_segment(s, PanelQuadrature(), lambda t: np.abs(s.velocity(t))).real
        assert got == pytest.approx(ELLIPSE21_PERIMETER / 2, abs=1e-10)

    def test_closed_contour_exact_differential(self):
        c = ellipse_boundary(2, 1)
        assert abs(contour_integral(c, lambda z: np.ones_like(z))) < 1e-13

    def test_radius_matches_position(self):
        th = np.linspace(-1.5, 4.6, 37)
        c = ellipse_boundary(3, 1)
        z = np.concatenate([c.segments[0](th[th <= math.pi / 2]), c.segments[1](th[th > math.pi / 2])])
        assert np.allclose(np.abs(z), ellipse_radius(3, 1, th))
        assert np.allclose((z.real / 3) ** 2 + z.imag**2, 1)

    def test_velocity_matches_finite_differences(self):
        c = ellipse_boundary(2, 1)
        s = c.segments[1]
        t = np.linspace(1.7, 4.5, 11)
        h = 1e-6
        fd = (s(t + h) - s(t - h)) / (2 * h)
        assert np.abs(fd - s.velocity(t)).max() < 1e-8

    def test_invalid_axes(self):
        with pytest.raises(DomainError):
            ellipse_boundary(1, 2)


class TestPolygon:
    def test_side_midpoint(self):
        c = polygon_boundary(QUAD)
        assert abs(c.segments[0](0.0) - (2 + 1j)) < 1e-15

    def test_endpoints(self):
        c = polygon_boundary(QUAD)
        for j, s in enumerate(c):
            assert s(-1.0) == QUAD[j]
            assert s(1.0) == QUAD[(j + 1) % 4]

    def test_angle_sum(self):
        a = polygon_angles(QUAD)
        assert np.sum(a) * math.pi == pytest.approx(2 * math.pi)
        assert np.sum(1 - a) == pytest.approx(2.0, abs=1e-12)
        assert a[3] > 1  # reflex corner at the origin

    def test_clockwise_rejected(self):
        with pytest.raises(DomainError):
            polygon_boundary(QUAD[::-1])

    def test_self_intersection_rejected(self):
        with pytest.raises(DomainError):
            polygon_boundary([0, 1 + 1j, 1, 1j])

    @given(st.floats(0.5, 5), st.floats(0.5, 5), st.floats(0.1, 2), st.floats(-1, 1))
    def test_random_convex_quadrilateral_angles(self, a, b, c, d):
        v = [a - 1j * c, 1j * b, -a - 1j * c, d * 0.1 * min(a, c) - 2j * c]
        assert np.sum(1 - polygon_angles(v)) == pytest.approx(2.0, abs=1e-12)


class TestQuadrature:
    def test_gauss_exactness(self):
        seg = BoundarySegment(-1.0, 1.0, lambda t: t + 0j, lambda t: np.ones_like(t) + 0j, "L")
        got = integrate_segment(seg, PanelQuadrature(order=2, panels=1), lambda t: t**2)
        assert got == pytest.approx(2 / 3, abs=1e-15)

    def test_weights_positive_nodes_inside(self):
        q = PanelQuadrature()
        for s in polygon_boundary(QUAD):
            t, w = q.rule(s)
            assert np.all(w > 0)
            assert np.all((t > -1) & (t < 1))
            assert w.sum() == pytest.approx(2.0, abs=1e-13)

    def test_panel_doubling_plateau(self):
        c = ellipse_boundary(2, 1)
        f = lambda z: np.exp(z) / (z - 3)  # noqa: E731
        a = contour_integral(c, f, PanelQuadrature(panels=12))
        b = contour_integral(c, f, PanelQuadrature(panels=24))
        assert abs(a - b) < 1e-10

    def test_graded_corner_singularity(self):
        # |zeta - v|^(-1/4) at a corner, against the closed form
        seg = polygon_boundary(QUAD).segments[0]
        f = lambda t: (0.5 * (1 + t) * abs(QUAD[1] - QUAD[0])) ** -0.25  # noqa: E731
        length = abs(QUAD[1] - QUAD[0])
        exact = length * (4 / 3) / length**0.25
        got = integrate_segment(seg, PanelQuadrature(panels=12, grading=0.5), lambda t: f(t) * length / 2)
        assert abs(got - exact) / exact < 1e-8

    def test_nonfinite_integrand(self):
        seg = disc_boundary().segments[0]
        with pytest.raises(EvaluationError):
            integrate_segment(seg, PanelQuadrature(), lambda t: np.full(t.shape, np.nan))

    def test_gauss_legendre_weights(self):
        x, w = gauss_legendre(16)
        assert w.sum() == pytest.approx(2.0)
        assert np.dot(w, x**30) == pytest.approx(2 / 31)


class TestContour:
    @pytest.mark.parametrize("make", [lambda: ellipse_boundary(2, 1), lambda: polygon_boundary(QUAD),
                                      lambda: disc_boundary(4)])
    def test_orientation_and_winding(self, make):
        c = make()
        q = PanelQuadrature(panels=24)
        inside = c.segments[0](0.0) * 0.3 if c.kind != "polygon" else 2j
        assert abs(contour_integral(c, lambda z: 1 / (z - inside), q) - 2j * math.pi) < 1e-8
        assert abs(contour_integral(c, lambda z: 1 / (z - 10), q)) < 1e-8

    def test_chaining(self):
        for c in (ellipse_boundary(3, 1), polygon_boundary(QUAD), disc_boundary(3)):
            for j, s in enumerate(c):
                n = c.segments[(j + 1) % len(c)]
                assert abs(s(s.t1) - n(n.t0)) < 1e-12

    def test_tangent_winding(self):
        c = ellipse_boundary(2, 1)
        th = np.concatenate([np.unwrap(np.angle(s.tangent(np.linspace(s.t0, s.t1, 400)))) for s in c])
        total = np.sum(np.angle(np.exp(1j * np.diff(np.unwrap(th)))))
        total += np.angle(np.exp(1j * (th[0] - th[-1])))
        assert total == pytest.approx(2 * math.pi, abs=1e-9)

    def test_unit_tangent(self):
        for s in polygon_boundary(QUAD):
            assert np.allclose(np.abs(s.tangent(np.linspace(-0.9, 0.9, 5))), 1)

    def test_contains_and_locate(self):
        c = polygon_boundary(QUAD)
        assert list(c.contains(np.array([2j, 1, -1.5 + 0.5j, -0.5j, 5]))) == [True, True, True, False, False]
        j, t = c.locate(2 + 1j)
        assert j == 0 and t == pytest.approx(0.0, abs=1e-9)

    def test_point_in_polygon_square(self):
        sq = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
        assert list(point_in_polygon(np.array([0, 2, 0.99j]), sq)) == [True, False, True]
