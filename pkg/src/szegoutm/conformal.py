"""Conformal maps Phi: D -> unit disc with derivatives and inverses.

Every map exposes ``evaluate(z)`` returning Phi(z), an analytic branch of
log Phi'(z) (so sqrt(Phi') is one consistent analytic function on the closed
domain) and, on request, Phi''/Phi'.  The Schwarz-Christoffel map works in
local corner coordinates near prevertices to keep the singular factors free of
cancellation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import roots_jacobi

from .errors import DomainError, InversionError, ParameterProblemError
from .geometry import (
    BoundaryContour,
    disc_boundary,
    ellipse_boundary,
    gauss_legendre,
    point_in_polygon,
    polygon_angles,
    polygon_boundary,
)
from .specfun import EllipticParams, complex_asin, jacobi_sncndn, nome_to_parameter


class MapValues(NamedTuple):
    phi: np.ndarray
    log_dphi: np.ndarray
    ratio: np.ndarray | None = None  # Phi''/Phi'

    @property
    def dphi(self):
        return np.exp(self.log_dphi)

    @property
    def sqrt_dphi(self):
        return np.exp(0.5 * self.log_dphi)


def moebius(z0: complex, w):
    """M_{z0}(w) = (w - z0) / (1 - conj(z0) w)."""
    w = np.asarray(w, dtype=complex)
    return (w - z0) / (1.0 - np.conj(z0) * w)


@dataclass(frozen=True)
class MoebiusFactor:
    z0: complex

    def __post_init__(self):
        if abs(self.z0) >= 1:
            raise DomainError("Moebius parameter must lie in the unit disc", z0=str(self.z0))

    def __call__(self, w):
        return moebius(self.z0, w)

    def derivative(self, w):
        w = np.asarray(w, dtype=complex)
        return (1.0 - abs(self.z0) ** 2) / (1.0 - np.conj(self.z0) * w) ** 2

    def inverse(self, w):
        return moebius(-self.z0, w)


class ConformalMap:
    """Base class; subclasses implement ``evaluate`` and ``inverse``."""

    kind = "abstract"
    contour: BoundaryContour

    def evaluate(self, z, ratio: bool = False) -> MapValues:
        raise NotImplementedError

    def inverse(self, w):
        raise NotImplementedError

    def forward(self, z):
        return _scalar(self.evaluate(z).phi)

    __call__ = forward

    def derivative(self, z):
        return _scalar(self.evaluate(z).dphi)

    def sqrt_derivative(self, z):
        return _scalar(self.evaluate(z).sqrt_dphi)

    def derivative_ratio(self, z):
        return _scalar(self.evaluate(z, ratio=True).ratio)

    def boundary_preimage(self, w):
        """Boundary point(s) of D mapped to the unit-circle point(s) ``w``."""
        return self.inverse(w)

    def describe(self) -> dict:
        return {"kind": self.kind}

    def to_json(self) -> str:
        return json.dumps(self.describe(), sort_keys=True)


def _scalar(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def _cplx(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _pairs(arr) -> list:
    return [[float(c.real), float(c.imag)] for c in np.atleast_1d(arr)]


class DiscMap(ConformalMap):
    kind = "disc"

    def __init__(self, n_arcs: int = 4):
        self.contour = disc_boundary(n_arcs)

    def evaluate(self, z, ratio: bool = False) -> MapValues:
        z = _cplx(z)
        zero = np.zeros_like(z)
        return MapValues(z.copy(), zero, zero if ratio else None)

    def inverse(self, w):
        return _scalar(_cplx(w).copy())


def disc_identity(n_arcs: int = 4) -> DiscMap:
    return DiscMap(n_arcs)


# ---------------------------------------------------------------- Newton inverse


def _newton_inverse(fwd, target, seeds_z, seeds_w, clip=None, tol=1e-14, maxiter=50):
    """Solve fwd(z) = target by damped Newton, seeded at the nearest tabulated image.

    ``fwd(z)`` returns (value, derivative).  ``clip`` optionally projects
    iterates back into the admissible region.  Iteration stops per point on
    convergence or when the step stagnates at rounding level.
    """
    target = _cplx(target)
    flat = target.ravel()
    tree = cKDTree(np.column_stack([seeds_w.real, seeds_w.imag]))
    idx = tree.query(np.column_stack([flat.real, flat.imag]))[1]
    z = seeds_z[idx].copy()
    val, der = fwd(z)
    res = val - flat
    scale = np.maximum(1.0, np.abs(flat))
    active = np.abs(res) > tol * scale
    for _ in range(maxiter):
        if not np.any(active):
            break
        ia = np.nonzero(active)[0]
        step = res[ia] / der[ia]
        err = np.abs(res[ia])
        lam = np.ones(len(ia))
        pending = np.ones(len(ia), bool)
        for _ in range(12):
            sel = ia[pending]
            trial = z[sel] - lam[pending] * step[pending]
            if clip is not None:
                trial = clip(trial)
            tv, td = fwd(trial)
            tr = tv - flat[sel]
            ok = np.abs(tr) < err[pending]
            acc = np.nonzero(pending)[0][ok]
            z[ia[acc]], val[ia[acc]], der[ia[acc]], res[ia[acc]] = trial[ok], tv[ok], td[ok], tr[ok]
            pending[acc] = False
            if not np.any(pending):
                break
            lam[pending] *= 0.5
        tiny = np.abs(step) <= 4e-16 * np.maximum(1.0, np.abs(z[ia]))
        done = (np.abs(res[ia]) <= tol * scale[ia]) | pending | tiny
        active[ia[done]] = False
    err = np.abs(res)
    if np.any(err > 1e-10 * scale):
        raise InversionError("Newton inversion failed", residual=float(err.max()))
    return z.reshape(target.shape), res.reshape(target.shape)


# ---------------------------------------------------------------- ellipse


class EllipseMap(ConformalMap):
    """Phi(z) = k^(1/2) sn((2K/pi) asin(z/c), m) for the ellipse x^2/a^2 + y^2/b^2 < 1.

    The nome is q = ((a+b)/c)^-4: the strip image of the ellipse under asin(z/c)
    must match the half-height K'/2 of the sn rectangle.
    """

    kind = "ellipse"

    def __init__(self, a: float, b: float, check: bool = True):
        if not (a > b > 0) or a - b < 1e-12 * a:
            raise DomainError("ellipse map needs a > b > 0 (non-degenerate)", a=a, b=b)
        self.a, self.b = float(a), float(b)
        self.c = math.sqrt(a * a - b * b)
        self.elliptic: EllipticParams = nome_to_parameter(((a + b) / self.c) ** -4)
        self.scale = self.elliptic.m**0.25
        self._u_scale = 2.0 * self.elliptic.K / math.pi
        self.contour = ellipse_boundary(a, b)
        th = np.linspace(-0.5 * np.pi, 1.5 * np.pi, 257)
        zb = self.contour.segments[0].position(th)
        r = np.linspace(0.0, 0.98, 64)[:, None]
        grid = (r * zb[None, :]).ravel()
        self._seed_z = np.concatenate([grid, zb])
        self._seed_w = self.evaluate(self._seed_z).phi
        if check:
            err = float(np.max(np.abs(np.abs(self._seed_w[-len(zb):]) - 1.0)))
            if err > 1e-8:
                raise DomainError("ellipse map fails the boundary-modulus check", error=err)
            darg = float(np.max(np.abs(self.evaluate(zb).log_dphi.imag)))
            if darg > math.pi - 0.05:
                raise DomainError("log Phi' leaves the principal strip", max_arg=darg)

    @property
    def q(self) -> float:
        return self.elliptic.q

    def _raw(self, z):
        p = self.elliptic
        s = complex_asin(_cplx(z) / self.c)
        s = np.asarray(s, dtype=complex)
        u = self._u_scale * s
        sn, cn, dn = jacobi_sncndn(u, p.m, p.mc)
        cos_s = np.cos(s)
        return s, sn, cn, dn, cos_s

    def evaluate(self, z, ratio: bool = False) -> MapValues:
        z = _cplx(z)
        s, sn, cn, dn, cos_s = self._raw(z)
        near_focus = np.abs(cos_s) < 1e-7
        with np.errstate(divide="ignore", invalid="ignore"):
            dphi = self.scale * cn * dn * self._u_scale / (self.c * cos_s)
        if np.any(near_focus):
            # removable 0/0 at the foci: symmetric average
            h = 1e-5 * self.c
            zf = z[near_focus]
            dphi[near_focus] = 0.5 * (self._dphi(zf + 1j * h) + self._dphi(zf - 1j * h))
        phi = self.scale * sn
        rat = None
        if ratio:
            m = self.elliptic.m
            with np.errstate(divide="ignore", invalid="ignore"):
                du = self._u_scale / (self.c * cos_s)
                rat = -sn * (dn * dn + m * cn * cn) / (cn * dn) * du + np.tan(s) / (self.c * cos_s)
            if np.any(near_focus):
                h = 1e-5 * self.c
                zf = z[near_focus]
                rat[near_focus] = 0.5 * (
                    self.evaluate(zf + 1j * h, True).ratio + self.evaluate(zf - 1j * h, True).ratio
                )
        return MapValues(phi, np.log(dphi), rat)

    def _dphi(self, z):
        s, sn, cn, dn, cos_s = self._raw(z)
        return self.scale * cn * dn * self._u_scale / (self.c * cos_s)

    def inverse(self, w):
        w = _cplx(w)
        if np.any(np.abs(w) > 1 + 1e-12):
            raise DomainError("inverse map needs |w| <= 1")

        def fwd(z):
            v = self.evaluate(z)
            return v.phi, v.dphi

        z, _ = _newton_inverse(fwd, w, self._seed_z, self._seed_w)
        return _scalar(z)

    def describe(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b, "q": self.q}


def build_ellipse_map(a: float, b: float) -> EllipseMap:
    return EllipseMap(a, b)


# ---------------------------------------------------------------- Schwarz-Christoffel


@lru_cache(maxsize=None)
def _gauss_jacobi(n: int, beta: float):
    """Nodes/weights on [-1, 1] for the weight (1 + x)^beta."""
    x, w = roots_jacobi(n, 0.0, beta)
    return x, w


class SchwarzChristoffelMap(ConformalMap):
    """Disc-to-polygon map Psi(w) = center + C * int_0^w prod (1 - u/w_j)^(alpha_j - 1) du.

    ``forward`` is its inverse Phi (polygon -> disc), computed by Newton.
    """

    kind = "schwarz_christoffel"

    def __init__(self, vertices, alphas, prevertices, constant: complex, center: complex,
                 jacobi_nodes: int = 24, legendre_panels: int = 8):
        self.vertices = _cplx(vertices).copy()
        self.alphas = np.asarray(alphas, dtype=float).copy()
        self.betas = self.alphas - 1.0
        self.prevertices = _cplx(prevertices).copy()
        self.constant = complex(constant)
        self.center = complex(center)
        self.jacobi_nodes = jacobi_nodes
        self.legendre_panels = legendre_panels
        self.contour = polygon_boundary(self.vertices)
        self._setup_zones()
        self._seed_z = None

    # -- helpers on prevertex geometry

    def _setup_zones(self):
        wv = self.prevertices
        n = len(wv)
        sep = np.array([min(abs(wv[i] - wv[j]) for j in range(n) if j != i) for i in range(n)])
        self.zone = np.minimum(0.5, 0.45 * sep)
        self.legendre_panels = max(self.legendre_panels, int(math.ceil(2.0 / self.zone.min())))

    def _log_factors(self, u, skip: int = -1):
        """sum_i beta_i log(1 - u/w_i) over i != skip."""
        out = np.zeros(np.shape(u), dtype=complex)
        for i, (wi, bi) in enumerate(zip(self.prevertices, self.betas)):
            if i != skip:
                out += bi * np.log(1.0 - u / wi)
        return out

    def psi_prime(self, w):
        w = _cplx(w)
        return _scalar(self.constant * np.exp(self._log_factors(w)))

    def _global_integral(self, w):
        """int_0^w g(u) du along the straight path (composite Gauss-Legendre)."""
        w = _cplx(w).ravel()
        x, wt = gauss_legendre(16)
        P = self.legendre_panels
        edges = np.linspace(0.0, 1.0, P + 1)
        t = (edges[:-1, None] + 0.5 * (edges[1:] - edges[:-1])[:, None] * (x[None, :] + 1.0)).ravel()
        tw = (0.5 * (edges[1:] - edges[:-1])[:, None] * wt[None, :]).ravel()
        u = w[:, None] * t[None, :]
        return w * (np.exp(self._log_factors(u)) @ tw)

    def _local_integral(self, j: int, eps):
        """int_{w_j}^{w} g(u) du with w = w_j (1 - eps), singular factor handled by Gauss-Jacobi."""
        eps = _cplx(eps).ravel()
        wj, aj, bj = self.prevertices[j], self.alphas[j], self.betas[j]
        x, wt = _gauss_jacobi(self.jacobi_nodes, float(bj))
        u = wj * (1.0 - eps[:, None] * (0.5 * (1.0 + x[None, :])))
        rest = np.exp(self._log_factors(u, skip=j)) @ wt
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -wj * np.exp(aj * np.log(eps)) * 2.0**-aj * rest
        # the integral vanishes at the prevertex itself
        return np.where(eps == 0, 0.0, out)

    def _integral_to_prevertex(self, j: int) -> complex:
        r = self.zone[j]
        wb = self.prevertices[j] * (1.0 - r)
        return complex(self._global_integral(wb)[0] - self._local_integral(j, r)[0])

    def _nearest_zone(self, w):
        w = _cplx(w)
        d = np.abs(w[..., None] - self.prevertices)
        j = np.argmin(d, axis=-1)
        inside = np.take_along_axis(d, j[..., None], -1)[..., 0] < self.zone[j]
        return np.where(inside, j, -1)

    def sc_forward(self, w):
        """Psi(w) for |w| <= 1."""
        w = _cplx(w)
        flat = w.ravel()
        out = np.empty_like(flat)
        zone = self._nearest_zone(flat)
        g = zone < 0
        if np.any(g):
            out[g] = self.center + self.constant * self._global_integral(flat[g])
        for j in range(len(self.prevertices)):
            sel = zone == j
            if np.any(sel):
                eps = 1.0 - flat[sel] / self.prevertices[j]
                out[sel] = self.vertices[j] + self.constant * self._local_integral(j, eps)
        return _scalar(out.reshape(w.shape))

    def _psi_local_eta(self, j, eta):
        """Psi and dPsi/deta in the corner chart eta = eps^alpha_j."""
        aj = self.alphas[j]
        eps = np.exp(np.log(eta) / aj)
        wj = self.prevertices[j]
        w = wj * (1.0 - eps)
        val = self.vertices[j] + self.constant * self._local_integral(j, eps)
        der = -wj * self.constant * np.exp(self._log_factors(w, skip=j)) / aj
        return val, der, eps

    # -- inverse (the conformal map onto the disc)

    def _ensure_seeds(self):
        if self._seed_z is not None:
            return
        r = (np.arange(64) + 0.5) / 64.0
        th = 2 * np.pi * np.arange(64) / 64.0
        ww = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
        ww = np.concatenate([[0.0], ww])
        self._seed_w = ww
        self._seed_z = _cplx(self.sc_forward(ww)).ravel()
        # corner radius in z below which the corner chart is used
        delta = []
        for j, wj in enumerate(self.prevertices):
            ang = np.linspace(-0.5 * np.pi, 0.5 * np.pi, 41)[1:-1]
            eps = self.zone[j] * np.exp(1j * ang) * 0.999
            zz = self.vertices[j] + self.constant * self._local_integral(j, eps)
            delta.append(0.5 * float(np.min(np.abs(zz - self.vertices[j]))))
        self._corner_radius = np.array(delta)

    def _invert(self, z):
        """Returns w = Phi(z), the index of the corner chart used (-1 if none) and eps."""
        self._ensure_seeds()
        z = _cplx(z).ravel()
        w = np.empty_like(z)
        jloc = np.full(z.shape, -1)
        eps_out = np.full(z.shape, np.nan + 0j)
        dist = np.abs(z[:, None] - self.vertices[None, :])
        jn = np.argmin(dist, axis=1)
        near = dist[np.arange(len(z)), jn] < self._corner_radius[jn]
        far = ~near
        if np.any(far):
            def fwd(ww):
                return _cplx(self.sc_forward(ww)).ravel(), _cplx(self.psi_prime(ww)).ravel()

            def clip(ww):
                r = np.abs(ww)
                return np.where(r > 1.0, ww / np.maximum(r, 1e-300), ww)

            w[far], _ = _newton_inverse(fwd, z[far], self._seed_w, self._seed_z, clip=clip)
        for j in range(len(self.vertices)):
            sel = near & (jn == j)
            if not np.any(sel):
                continue
            w[sel], eps_out[sel] = self._invert_local(j, z[sel])
            jloc[sel] = j
        return w, jloc, eps_out

    def _invert_local(self, j, z):
        wj = self.prevertices[j]
        aj = self.alphas[j]
        rj = np.exp(self._log_factors(np.array([wj]), skip=j))[0]
        eta = aj * (self.vertices[j] - z) / (wj * self.constant * rj)
        scale = np.maximum(np.abs(z - self.vertices[j]), 1e-300)
        active = np.ones(z.shape, bool)
        res = np.zeros_like(z)
        for _ in range(40):
            ia = np.nonzero(active)[0]
            if len(ia) == 0:
                break
            val, der, _ = self._psi_local_eta(j, eta[ia])
            res[ia] = val - z[ia]
            step = res[ia] / der
            eta[ia] = eta[ia] - step
            done = (np.abs(res[ia]) <= 1e-15 * scale[ia]) | (np.abs(step) <= 1e-15 * np.abs(eta[ia]))
            active[ia[done]] = False
        val, der, eps = self._psi_local_eta(j, eta)
        err = np.abs(val - z)
        if np.any(err > 1e-11 * scale + 1e-14):
            raise InversionError("corner-chart Newton failed", vertex=j, residual=float(err.max()))
        return wj * (1.0 - eps), eps

    def evaluate(self, z, ratio: bool = False) -> MapValues:
        z = _cplx(z)
        w, jloc, eps = self._invert(z)
        logs = np.zeros(w.shape, dtype=complex) + math.log(abs(self.constant)) + 1j * np.angle(self.constant)
        rat = np.zeros(w.shape, dtype=complex) if ratio else None
        for i, (wi, bi) in enumerate(zip(self.prevertices, self.betas)):
            loc = jloc == i
            one_minus = np.where(loc, eps, 1.0 - w / wi)
            logs += bi * np.log(one_minus)
            if ratio:
                rat += bi * (-1.0 / wi) / one_minus
        # log Phi' = -log Psi'(w)
        log_dphi = -logs
        if ratio:
            rat = -rat * np.exp(log_dphi)
            rat = rat.reshape(z.shape)
        return MapValues(w.reshape(z.shape), log_dphi.reshape(z.shape), rat)

    def sc_inverse(self, z):
        z = _cplx(z)
        inside = point_in_polygon(z, self.vertices)
        if not np.all(inside):
            raise DomainError("sc_inverse needs points strictly inside the polygon")
        return self.forward(z)

    def inverse(self, w):
        return self.sc_forward(w)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "vertices": _pairs(self.vertices),
            "angles": [float(a) for a in self.alphas],
            "prevertices": _pairs(self.prevertices),
            "constant": _pairs(self.constant)[0],
            "center": _pairs(self.center)[0],
        }

    @classmethod
    def from_description(cls, d: dict) -> "SchwarzChristoffelMap":
        c = lambda p: complex(p[0], p[1])  # noqa: E731
        return cls(
            [c(p) for p in d["vertices"]], d["angles"], [c(p) for p in d["prevertices"]],
            c(d["constant"]), c(d["center"]),
        )


def polygon_centroid(vertices) -> complex:
    v = _cplx(vertices)
    vn = np.roll(v, -1)
    cross = (v.conj() * vn).imag
    area = cross.sum() / 2
    return complex(((v + vn) * cross).sum() / (6 * area))


def _sc_side_ratio_residual(vertices, alphas, prevertices, **kw):
    tmp = SchwarzChristoffelMap(vertices, alphas, prevertices, 1.0, 0.0, **kw)
    J = np.array([tmp._integral_to_prevertex(j) for j in range(len(vertices))])
    return tmp, J


def solve_sc_parameters(vertices: Sequence[complex], center: complex | None = None, tol: float = 1e-13,
                        maxiter: int = 50) -> SchwarzChristoffelMap:
    """Solve the quadrilateral parameter problem.

    Prevertices 1..3 are pinned at 1, i, -1; a damped Newton iteration on the
    fourth prevertex angle matches |side 2| / |side 1|.  The map is then
    recentred by a disc automorphism so the polygon centroid (or ``center``)
    is the image of 0, and rotated so the first prevertex is 1.
    """
    v = _cplx(vertices)
    if len(v) != 4:
        raise DomainError("the parameter solver handles quadrilaterals only", n=len(v))
    polygon_boundary(v)  # validates simplicity and orientation
    alphas = polygon_angles(v)
    if abs(np.sum(1.0 - alphas) - 2.0) > 1e-12:
        raise DomainError("angle condition violated", total=float(np.sum(1 - alphas)))
    target = math.log(abs(v[2] - v[1]) / abs(v[1] - v[0]))

    def prevs(x):
        t = math.pi * (1.0 + 1.0 / (1.0 + math.exp(-x)))
        return np.array([1.0, 1j, -1.0, np.exp(1j * t)])

    def resid(x):
        _, J = _sc_side_ratio_residual(v, alphas, prevs(x))
        return math.log(abs(J[2] - J[1]) / abs(J[1] - J[0])) - target

    x = 0.0
    F = resid(x)
    for it in range(maxiter):
        if abs(F) < tol:
            break
        h = 1e-6
        dF = (resid(x + h) - resid(x - h)) / (2 * h)
        if dF == 0 or not np.isfinite(dF):
            raise ParameterProblemError("zero derivative in parameter problem", residual=abs(F))
        step = -F / dF
        lam = 1.0
        while True:
            xn = x + lam * step
            try:
                Fn = resid(xn)
            except (FloatingPointError, ValueError, OverflowError):
                Fn = math.inf
            if np.isfinite(Fn) and abs(Fn) < abs(F):
                break
            lam *= 0.5
            if lam < 1e-10:
                raise ParameterProblemError("line search failed", residual=abs(F), iteration=it)
        x, F = xn, Fn
    else:
        raise ParameterProblemError("parameter problem did not converge", residual=abs(F))

    w = prevs(x)
    zc = polygon_centroid(v) if center is None else complex(center)
    if not point_in_polygon(np.array([zc]), v)[0]:
        raise DomainError("conformal centre must lie inside the polygon", center=str(zc))
    sc = _finish_map(v, alphas, w)
    for _ in range(4):
        a = complex(sc.forward(zc))
        if abs(a) < 1e-13:
            break
        wn = moebius(a, sc.prevertices)
        wn = wn / (wn[0] / abs(wn[0]))
        sc = _finish_map(v, alphas, wn)
    err = np.abs(_cplx(sc.sc_forward(sc.prevertices)) - v)
    if err.max() > 1e-8 * max(1.0, np.abs(v).max()):
        raise ParameterProblemError("vertex images do not match", residual=float(err.max()))
    return sc


def _finish_map(v, alphas, w) -> SchwarzChristoffelMap:
    tmp, J = _sc_side_ratio_residual(v, alphas, w)
    C = (v[1] - v[0]) / (J[1] - J[0])
    A = v[0] - C * J[0]
    return SchwarzChristoffelMap(v, alphas, w, C, A)


def sc_forward(sc: SchwarzChristoffelMap, w):
    return sc.sc_forward(w)


def sc_inverse(sc: SchwarzChristoffelMap, z):
    return sc.sc_inverse(z)


# ---------------------------------------------------------------- punctured


class PuncturedMap(ConformalMap):
    """M_{Phi(z0)} o Phi: sends z0 to the origin."""

    kind = "punctured"

    def __init__(self, base: ConformalMap, z0: complex):
        self.base = base
        self.z0 = complex(z0)
        self.contour = base.contour
        if not bool(base.contour.contains(np.array([self.z0]))[0]):
            raise DomainError("puncture must lie strictly inside the domain", z0=str(z0))
        self.a = complex(base.forward(self.z0))
        if abs(self.a) >= 1 - 1e-12:
            raise DomainError("puncture too close to the boundary", z0=str(z0))
        self.factor = MoebiusFactor(self.a)

    def evaluate(self, z, ratio: bool = False) -> MapValues:
        v = self.base.evaluate(z, ratio)
        a = self.a
        den = 1.0 - np.conj(a) * v.phi
        phi = (v.phi - a) / den
        log_dphi = v.log_dphi + math.log(1.0 - abs(a) ** 2) - 2.0 * np.log(den)
        rat = None
        if ratio:
            rat = v.ratio + 2.0 * np.conj(a) * v.dphi / den
        return MapValues(phi, log_dphi, rat)

    def inverse(self, w):
        return self.base.inverse(self.factor.inverse(w))

    def describe(self) -> dict:
        d = {"kind": self.kind, "z0": [self.z0.real, self.z0.imag], "base": self.base.describe()}
        return d


def punctured_map(base: ConformalMap, z0: complex) -> PuncturedMap:
    return PuncturedMap(base, z0)


def map_from_description(d: dict) -> ConformalMap:
    kind = d["kind"]
    if kind == "disc":
        return DiscMap()
    if kind == "ellipse":
        return EllipseMap(d["a"], d["b"])
    if kind == "schwarz_christoffel":
        return SchwarzChristoffelMap.from_description(d)
    if kind == "punctured":
        return PuncturedMap(map_from_description(d["base"]), complex(*d["z0"]))
    raise DomainError(f"unknown map kind {kind!r}")
