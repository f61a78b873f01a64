"""Oriented boundary parametrizations and composite Gauss-Legendre quadrature.

Boundaries are lists of segments, each a map t -> zeta(t) on its own parameter
interval (polar angle for ellipse arcs, affine s in [-1, 1] for polygon sides
and disc arcs).  Segments may flag their endpoints as corners; the quadrature
then refines geometrically toward those endpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, EvaluationError


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def point_in_polygon(z, poly) -> np.ndarray:
    """Even-odd crossing test of points ``z`` against the closed polyline ``poly``."""
    z = np.asarray(z, dtype=complex)
    flat = z.ravel()
    x, y = flat.real[:, None], flat.imag[:, None]
    a = np.asarray(poly, dtype=complex)
    b = np.roll(a, -1)
    ax, ay, bx, by = a.real[None, :], a.imag[None, :], b.real[None, :], b.imag[None, :]
    straddle = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = ax + (y - ay) * (bx - ax) / (by - ay)
    hits = straddle & (x < xcross)
    return (np.count_nonzero(hits, axis=1) % 2 == 1).reshape(z.shape)


@dataclass(frozen=True)
class BoundarySegment:
    t0: float
    t1: float
    position: Callable[[np.ndarray], np.ndarray]
    velocity: Callable[[np.ndarray], np.ndarray]
    label: str
    corner_start: bool = False
    corner_end: bool = False

    def __call__(self, t):
        return self.position(np.asarray(t, dtype=float))

    def tangent(self, t):
        v = self.velocity(np.asarray(t, dtype=float))
        return v / np.abs(v)

    def check(self, samples: int = 257) -> None:
        t = np.linspace(self.t0, self.t1, samples)[1:-1]
        if np.any(np.abs(self.velocity(t)) == 0):
            raise DomainError(f"segment {self.label} has a stationary point")


@dataclass(frozen=True)
class BoundaryContour:
    """Counterclockwise chain of segments."""

    segments: tuple[BoundarySegment, ...]
    kind: str = "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        segs = self.segments
        for j, seg in enumerate(segs):
            nxt = segs[(j + 1) % len(segs)]
            gap = abs(seg(seg.t1) - nxt(nxt.t0))
            if gap > 1e-12 * max(1.0, abs(seg(seg.t1))):
                raise DomainError("boundary segments do not chain", segment=seg.label, gap=gap)

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def sample(self, n_per_segment: int = 200, endpoint: bool = False) -> np.ndarray:
        pts = [seg(np.linspace(seg.t0, seg.t1, n_per_segment, endpoint=endpoint)) for seg in self.segments]
        return np.concatenate(pts)

    def contains(self, z) -> np.ndarray:
        """Winding-number interiority test against a fine polygonal approximation."""
        z = np.asarray(z, dtype=complex)
        poly = self.sample(400)
        return point_in_polygon(z, poly)

    def distance(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        poly = self.sample(2000)
        return np.min(np.abs(z.ravel()[:, None] - poly[None, :]), axis=1).reshape(z.shape)

    def locate(self, zeta: complex, tol: float = 1e-12) -> tuple[int, float]:
        """Segment index and parameter of the boundary point closest to ``zeta``."""
        from scipy.optimize import minimize_scalar

        best = (math.inf, 0, 0.0)
        for j, seg in enumerate(self.segments):
            t = np.linspace(seg.t0, seg.t1, 801)
            d = np.abs(seg(t) - zeta)
            i = int(np.argmin(d))
            lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
            if hi > lo:
                res = minimize_scalar(
                    lambda s: abs(complex(seg(s)) - zeta), bounds=(lo, hi), method="bounded",
                    options={"xatol": tol},
                )
                cand = (float(res.fun), j, float(res.x))
            else:
                cand = (float(d[i]), j, float(t[i]))
            if cand[0] < best[0]:
                best = cand
        return best[1], best[2]

    def perimeter(self, quadrature: "PanelQuadrature | None" = None) -> float:
        q = quadrature or PanelQuadrature()
        return float(sum(integrate_segment(s, q, lambda t, s=s: np.abs(s.velocity(t))).real for s in self))


@dataclass(frozen=True)
class PanelQuadrature:
    """Composite Gauss-Legendre rule.

    ``panels`` equal coarse panels per segment; a coarse panel touching a
    flagged corner is further split geometrically (ratio ``grading``) into
    ``levels`` panels accumulating at the corner.
    """

    order: int = 16
    panels: int = 12
    grading: float = 0.5
    levels: int = 30

    def breakpoints(self, seg: BoundarySegment, extra: Sequence[float] = ()) -> np.ndarray:
        t0, t1 = seg.t0, seg.t1
        pts = set(np.linspace(t0, t1, self.panels + 1).tolist())
        for e in extra:
            if t0 < e < t1:
                pts.add(float(e))
        bp = np.array(sorted(pts))
        # drop breakpoints that nearly coincide
        keep = np.concatenate([[True], np.diff(bp) > 1e-13 * (t1 - t0)])
        keep[-1] = True
        bp = bp[keep]
        if bp[-1] != t1:
            bp[-1] = t1
        pieces = [bp]
        floor = 1e-12 * (t1 - t0)
        if seg.corner_start:
            a, b = bp[0], bp[1]
            g = (b - a) * self.grading ** np.arange(1, self.levels + 1)
            pieces.append(a + g[g > floor])
        if seg.corner_end:
            a, b = bp[-2], bp[-1]
            g = (b - a) * self.grading ** np.arange(1, self.levels + 1)
            pieces.append(b - g[g > floor])
        return np.unique(np.concatenate(pieces))

    def rule(self, seg: BoundarySegment, extra: Sequence[float] = ()) -> tuple[np.ndarray, np.ndarray]:
        bp = self.breakpoints(seg, extra)
        x, w = gauss_legendre(self.order)
        lo, hi = bp[:-1, None], bp[1:, None]
        half = 0.5 * (hi - lo)
        t = (lo + half * (x[None, :] + 1.0)).ravel()
        wt = (half * w[None, :]).ravel()
        return t, wt


def integrate_segment(seg: BoundarySegment, q: PanelQuadrature, integrand, extra: Sequence[float] = ()) -> complex:
    """Composite Gauss-Legendre approximation of the integral of ``integrand(t)`` dt."""
    t, w = q.rule(seg, extra)
    vals = np.asarray(integrand(t), dtype=complex)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise EvaluationError(f"non-finite integrand on segment {seg.label}", node=float(t[i]))
    return complex(np.dot(w, vals))


def ellipse_boundary(a: float, b: float) -> BoundaryContour:
    """Arcs C1 (theta in [-pi/2, pi/2]) and C2 (theta in [pi/2, 3pi/2]) of zeta = l(theta) e^{i theta}."""
    if not (a > b > 0):
        raise DomainError("ellipse requires a > b > 0", a=a, b=b)

    def pos(t):
        d = (b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2
        return a * b / np.sqrt(d) * np.exp(1j * t)

    def vel(t):
        c, s = np.cos(t), np.sin(t)
        d = (b * c) ** 2 + (a * s) ** 2
        ell = a * b / np.sqrt(d)
        dl = -a * b * (a * a - b * b) * s * c / d**1.5
        return (dl + 1j * ell) * np.exp(1j * t)

    h = 0.5 * math.pi
    segs = (
        BoundarySegment(-h, h, pos, vel, "C1"),
        BoundarySegment(h, 3 * h, pos, vel, "C2"),
    )
    return BoundaryContour(segs, kind="ellipse", params={"a": a, "b": b})


def ellipse_radius(a: float, b: float, theta):
    theta = np.asarray(theta, dtype=float)
    return a * b / np.sqrt((b * np.cos(theta)) ** 2 + (a * np.sin(theta)) ** 2)


def _line(v0: complex, v1: complex):
    def pos(s):
        return 0.5 * (1.0 - s) * v0 + 0.5 * (1.0 + s) * v1

    def vel(s):
        return np.full(np.shape(s), 0.5 * (v1 - v0), dtype=complex)

    return pos, vel


def _segments_cross(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return np.sign(((b - a).conjugate() * (c - a)).imag)

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def polygon_angles(vertices: Sequence[complex]) -> np.ndarray:
    """Interior angles as multiples of pi (alpha_j with interior angle pi*alpha_j)."""
    v = np.asarray(vertices, dtype=complex)
    incoming = v - np.roll(v, 1)
    outgoing = np.roll(v, -1) - v
    turn = np.angle(outgoing / incoming)
    return 1.0 - turn / math.pi


def polygon_boundary(vertices: Sequence[complex]) -> BoundaryContour:
    """Sides zeta_j(s) = (1-s)/2 v_j + (1+s)/2 v_{j+1}, s in [-1, 1], corners flagged."""
    v = [complex(x) for x in vertices]
    n = len(v)
    if n < 3:
        raise DomainError("polygon needs at least three vertices")
    for i in range(n):
        for j in range(i + 1, n):
            if abs(v[i] - v[j]) < 1e-12:
                raise DomainError("repeated polygon vertex", index=j)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                raise DomainError("polygon is self-intersecting", sides=[i + 1, j + 1])
    area2 = sum((v[i].conjugate() * v[(i + 1) % n]).imag for i in range(n))
    if area2 <= 0:
        raise DomainError("polygon vertices must be counterclockwise", signed_area=area2 / 2)
    segs = []
    for j in range(n):
        pos, vel = _line(v[j], v[(j + 1) % n])
        segs.append(BoundarySegment(-1.0, 1.0, pos, vel, f"S{j + 1}", corner_start=True, corner_end=True))
    return BoundaryContour(tuple(segs), kind="polygon", params={"vertices": v})


def disc_boundary(n_arcs: int = 4, start: float = -0.25 * math.pi) -> BoundaryContour:
    """Unit circle split into ``n_arcs`` equal arcs, each parametrized by s in [-1, 1]."""
    span = 2.0 * math.pi / n_arcs
    segs = []
    for j in range(n_arcs):
        a0 = start + j * span

        def pos(s, a0=a0):
            return np.exp(1j * (a0 + 0.5 * span * (s + 1.0)))

        def vel(s, a0=a0):
            return 0.5j * span * np.exp(1j * (a0 + 0.5 * span * (s + 1.0)))

        segs.append(BoundarySegment(-1.0, 1.0, pos, vel, f"A{j + 1}"))
    return BoundaryContour(tuple(segs), kind="disc", params={"n_arcs": n_arcs, "start": start})
