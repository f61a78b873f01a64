import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegoutm.conformal import (DiscMap, MoebiusFactor, PuncturedMap, build_ellipse_map, disc_identity,
                                map_from_description, moebius, punctured_map, sc_forward, sc_inverse,
                                solve_sc_parameters)
from szegoutm.errors import DomainError
from szegoutm.geometry import PanelQuadrature, integrate_segment

from conftest import QUAD, random_disc_points


def boundary_nodes(map_, per_segment=16, trim=0.0):
    out = []
    for s in map_.contour:
        t = np.linspace(s.t0 + trim, s.t1 - trim, per_segment + 2)[1:-1]
        out.append(s(t))
    return np.concatenate(out)


def interior_points(map_, rng, n, rmax=0.9):
    return np.atleast_1d(map_.inverse(random_disc_points(rng, n, rmax)))


def argument_principle(map_, w0, q=None):
    q = q or PanelQuadrature(panels=24)
    total = 0
    for s in map_.contour:
        def f(t, s=s):
            mv = map_.evaluate(s(t))
            return mv.dphi / (mv.phi - w0) * s.velocity(t)
        total += integrate_segment(s, q, f)
    return total / (2j * math.pi)


def fd_derivative(map_, z, h=1e-6):
    return (map_.forward(z + h) - map_.forward(z - h)) / (2 * h)


class TestDisc:
    def test_identity(self):
        d = disc_identity()
        assert d.forward(0.3j) == 0.3j
        assert d.derivative(0.7 - 0.1j) == 1
        z = np.array([0.1, -0.5j])
        assert np.array_equal(d.inverse(d.forward(z)), z)


@pytest.mark.parametrize("ab", [(2.0, 1.0), (3.0, 1.0), (1.5, 1.2)])
class TestEllipseMap:
    def test_boundary_modulus(self, ab):
        m = build_ellipse_map(*ab)
        th = 2 * math.pi * np.arange(64) / 64
        z = ab[0] * np.cos(th) + 1j * ab[1] * np.sin(th)
        assert np.abs(np.abs(m.forward(z)) - 1).max() < 1e-10

    def test_centre_and_symmetry(self, ab):
        m = build_ellipse_map(*ab)
        assert abs(m.forward(0.0)) < 1e-15
        x = np.linspace(-0.95, 0.95, 21) * m.c
        assert np.abs(m.forward(x).imag).max() < 1e-14
        z = np.array([0.3 + 0.2j, -0.5 + 0.4j])
        assert np.allclose(m.forward(np.conj(z)), np.conj(m.forward(z)), atol=1e-14)

    def test_round_trip_and_derivative(self, ab, rng):
        m = build_ellipse_map(*ab)
        z = interior_points(m, rng, 50)
        assert np.abs(m.inverse(m.forward(z)) - z).max() < 1e-10
        fd = fd_derivative(m, z)
        assert np.max(np.abs(fd - m.derivative(z)) / np.abs(m.derivative(z))) < 1e-6
        assert np.all(np.abs(m.derivative(z)) > 0)

    def test_argument_principle(self, ab, rng):
        m = build_ellipse_map(*ab)
        for w0 in random_disc_points(rng, 10, 0.9):
            assert abs(argument_principle(m, w0) - 1) < 1e-6


def test_ellipse_nome():
    m = build_ellipse_map(2.0, 1.0)
    assert m.c == pytest.approx(math.sqrt(3))
    assert m.q == pytest.approx(((2 + 1) / math.sqrt(3)) ** -4, rel=1e-13)
    assert m.q == pytest.approx(1 / 9, rel=1e-13)


def test_tangent_transformation_law(ellipse21):
    m = ellipse21
    for s in m.contour:
        t = np.linspace(s.t0, s.t1, 12)[1:-1]
        mv = m.evaluate(s(t))
        lhs = 1j * mv.phi * np.conj(mv.sqrt_dphi)
        rhs = mv.sqrt_dphi * s.tangent(t)
        assert np.abs(lhs - rhs).max() < 1e-8


class TestSchwarzChristoffel:
    def test_vertex_images(self, quad_map):
        assert np.abs(sc_forward(quad_map, quad_map.prevertices) - np.array(QUAD)).max() < 1e-8
        assert np.allclose(np.abs(quad_map.prevertices), 1, atol=1e-14)
        assert np.sum(1 - quad_map.alphas) == pytest.approx(2.0, abs=1e-12)

    def test_centre(self, quad_map):
        assert abs(sc_forward(quad_map, 0.0) - quad_map.center) < 1e-12
        assert abs(quad_map.forward(quad_map.center)) < 1e-12

    def test_side_ratios(self, quad_map):
        img = sc_forward(quad_map, quad_map.prevertices)
        got = np.abs(np.roll(img, -1) - img)
        want = np.abs(np.roll(QUAD, -1) - np.array(QUAD))
        assert np.abs(got / got[0] - want / want[0]).max() < 1e-8

    def test_arc_midpoints_on_sides(self, quad_map):
        pv = quad_map.prevertices
        for j in range(4):
            a0, a1 = np.angle(pv[j]), np.angle(pv[(j + 1) % 4])
            a1 = a1 + 2 * math.pi if a1 < a0 else a1
            z = sc_forward(quad_map, np.exp(0.5j * (a0 + a1)))
            v0, v1 = QUAD[j], QUAD[(j + 1) % 4]
            d = abs(((z - v0) * np.conj(v1 - v0)).imag) / abs(v1 - v0)
            assert d < 1e-8

    def test_round_trip(self, quad_map, rng):
        w = random_disc_points(rng, 100, 0.95)
        assert np.abs(sc_inverse(quad_map, sc_forward(quad_map, w)) - w).max() < 1e-10

    def test_boundary_limit(self, quad_map):
        pts = []
        for v0, v1 in zip(QUAD, QUAD[1:] + QUAD[:1]):
            n = 1j * (v1 - v0) / abs(v1 - v0)
            for s in (0.2, 0.5, 0.8):
                pts.append(v0 + s * (v1 - v0) + 1e-6 * n)
        r = np.abs(quad_map.forward(np.array(pts)))
        assert np.all((r > 1 - 1e-4) & (r < 1))

    def test_boundary_modulus_on_nodes(self, quad_map):
        z = boundary_nodes(quad_map, 30, trim=1e-3)
        assert np.abs(np.abs(quad_map.forward(z)) - 1).max() < 1e-8

    def test_derivative_and_argument_principle(self, quad_map, rng):
        z = interior_points(quad_map, rng, 20, 0.85)
        fd = fd_derivative(quad_map, z)
        assert np.max(np.abs(fd - quad_map.derivative(z)) / np.abs(quad_map.derivative(z))) < 1e-6
        for w0 in random_disc_points(rng, 3, 0.9):
            assert abs(argument_principle(quad_map, w0) - 1) < 1e-6

    def test_square_symmetry(self):
        sq = solve_sc_parameters([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
        ang = np.sort(np.mod(np.angle(sq.prevertices) - np.angle(sq.prevertices[0]), 2 * math.pi))
        assert np.allclose(ang, [0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=1e-9)

    def test_description_round_trip(self, quad_map):
        d = json.loads(quad_map.to_json())
        m2 = map_from_description(d)
        z = np.array([2j, 1.0, -1.5 + 0.5j])
        assert np.abs(m2.forward(z) - quad_map.forward(z)).max() < 1e-12

    def test_requires_four_vertices(self):
        with pytest.raises(DomainError):
            solve_sc_parameters([0, 1, 1j])


class TestPunctured:
    def test_moebius(self):
        z0 = 0.3 - 0.4j
        assert moebius(z0, z0) == 0
        w = np.exp(1j * np.linspace(0, 6, 20))
        assert np.allclose(np.abs(moebius(z0, w)), 1)
        f = MoebiusFactor(z0)
        assert np.allclose(f.inverse(f(w)), w)

    def test_sends_puncture_to_zero(self, ellipse21):
        pm = punctured_map(ellipse21, 0.3 + 0.2j)
        assert abs(pm.forward(0.3 + 0.2j)) < 1e-14
        z = boundary_nodes(ellipse21, 20)
        assert np.abs(np.abs(pm.forward(z)) - 1).max() < 1e-8

    def test_disc_centre_is_identity(self):
        pm = PuncturedMap(DiscMap(), 0j)
        z = np.array([0.2, 0.5j, -0.3 - 0.3j])
        assert np.allclose(pm.forward(z), z) and np.allclose(pm.derivative(z), 1)

    def test_derivative(self, quad_map):
        pm = PuncturedMap(quad_map, 2j)
        z = np.array([1 + 0.5j, -2 + 0.2j, 0.5j + 0.1])
        fd = fd_derivative(pm, z)
        assert np.max(np.abs(fd - pm.derivative(z)) / np.abs(pm.derivative(z))) < 1e-6

    def test_exterior_puncture_rejected(self, ellipse21):
        with pytest.raises(DomainError):
            PuncturedMap(ellipse21, 3.0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0, 0.85), st.floats(-math.pi, math.pi))
    def test_boundary_modulus_property(self, r, th):
        pm = PuncturedMap(DiscMap(), r * np.exp(1j * th))
        w = np.exp(1j * np.linspace(0, 2 * math.pi, 17))
        assert np.abs(np.abs(pm.forward(w)) - 1).max() < 1e-12
