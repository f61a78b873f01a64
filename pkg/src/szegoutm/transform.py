"""Forward transform rho(k), inverse transform over the contours L1, L2, L3, and global relations.

rho(k)  = int_{dD} sqrt(Phi'(zeta)) Phi(zeta)^(-k-s) f(zeta) dzeta,  s = 1 (standard) or 0 (punctured)
f(z)    = sqrt(Phi'(z)) / (2 pi i) Phi(z)^(s-1) [ int_L1 rho Phi^k /(1-e^{2 pi i k})
          + int_L2 rho Phi^k + int_L3 rho e^{2 pi i k} Phi^k / (1-e^{2 pi i k}) ] dk

Powers of Phi(zeta) and Phi(z) share one branch cut.  The cut is the
principal one unless arg Phi(z) is closer to it than pi/2, in which case the
cut along the positive axis is used; either way the ray integrands decay at
least like exp(-pi |k| / 2).

Boundary quadratures are built per resolution level: the integrand
Phi(zeta)^(-k) oscillates roughly |k| times around the boundary, so panels are
equidistributed in arg Phi(zeta) with a phase budget per panel.  Panel
breakpoints are also placed where Phi(zeta) crosses either cut ray.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .conformal import ConformalMap
from .errors import BranchError, DomainError, EvaluationError, NearBoundaryError, SingularityError
from .geometry import BoundarySegment, PanelQuadrature, gauss_legendre
from .specfun import POSITIVE, PRINCIPAL, BranchCut

TWO_PI = 2.0 * math.pi
CUT_SWITCH = 0.5 * math.pi
NEAR_BOUNDARY = 0.995
# phase of Phi(zeta)^k allowed per 16-point Gauss panel
PHASE_PER_PANEL = 6.0
# safety factor on tail bounds: |rho| and the branch factors are O(10..100)
TAIL_MARGIN = math.log(1e3)


def choose_cut(arg_phi_z: float) -> BranchCut:
    if abs(arg_phi_z) > math.pi + 1e-12:
        raise BranchError("argument must be reduced to (-pi, pi]", arg=arg_phi_z)
    return PRINCIPAL if abs(arg_phi_z) <= CUT_SWITCH else POSITIVE


def cut_distance(cut: BranchCut, arg_phi_z: float) -> float:
    a = cut.reduce(arg_phi_z)
    return float(min(cut.base_angle + TWO_PI - a, a - cut.base_angle))


# ------------------------------------------------------------------- contours


@dataclass(frozen=True)
class ContourDiscretization:
    """Quadrature on L1 (piece 1), L2 (piece 2) and L3 (piece 3).

    ``weight`` already contains dk; ``branch_factor`` is 1/(1-e^{2 pi i k}) on L1,
    1 on L2 and e^{2 pi i k}/(1-e^{2 pi i k}) on L3.
    """

    r: float
    K_max: float
    cut: BranchCut
    k: np.ndarray
    weight: np.ndarray
    branch_factor: np.ndarray
    piece: np.ndarray
    K_ray: float
    K_l2: float

    @property
    def nodes(self) -> dict[str, list[tuple[complex, complex, complex]]]:
        out = {}
        for p, name in ((1, "L1"), (2, "L2"), (3, "L3")):
            sel = self.piece == p
            out[name] = list(zip(self.k[sel], self.weight[sel], self.branch_factor[sel]))
        return out

    @property
    def combined_weight(self) -> np.ndarray:
        return self.weight * self.branch_factor

    @property
    def kabs_max(self) -> float:
        return float(np.max(np.abs(self.k)))


def _branch_l1(k):
    # 1/(1 - e^{2 pi i k}); for Im k < 0 rewrite to avoid overflow
    k = np.asarray(k, dtype=complex)
    out = np.empty_like(k)
    lo = k.imag < 0
    F = np.exp(-2j * math.pi * k[lo])
    out[lo] = -F / (1.0 - F)
    out[~lo] = 1.0 / (1.0 - np.exp(2j * math.pi * k[~lo]))
    return out


def _branch_l3(k):
    # e^{2 pi i k}/(1 - e^{2 pi i k}); for Im k < 0 rewrite to avoid overflow
    k = np.asarray(k, dtype=complex)
    out = np.empty_like(k)
    lo = k.imag < 0
    F = np.exp(-2j * math.pi * k[lo])
    out[lo] = 1.0 / (F - 1.0)
    E = np.exp(2j * math.pi * k[~lo])
    out[~lo] = E / (1.0 - E)
    return out


def _panels(a: float, b: float, width: Callable[[float], float]) -> np.ndarray:
    edges = [a]
    while edges[-1] < b - 1e-12:
        edges.append(min(edges[-1] + width(edges[-1]), b))
    return np.array(edges)


def _gauss_on(edges: np.ndarray, order: int = 16):
    x, w = gauss_legendre(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    half = 0.5 * (hi - lo)
    return (lo + half * (x + 1.0)).ravel(), (half * w).ravel()


def build_contour(r: float = 0.5, argPhiZ: float = 0.0, tol: float = 1e-12, modPhiZ: float = 0.5,
                  *, delta: float | None = None, cut: BranchCut | None = None) -> ContourDiscretization:
    """Contour quadrature for targets with |Phi(z)| <= modPhiZ and arg Phi(z) = argPhiZ.

    ``delta`` overrides the angular distance to the cut (used when one contour
    serves a batch of targets); ``cut`` overrides the automatic choice.
    """
    if not 0.0 < r < 1.0:
        raise DomainError("contour radius must satisfy 0 < r < 1", r=r)
    if not 0.0 <= modPhiZ < 1.0:
        raise DomainError("need |Phi(z)| < 1", modPhiZ=modPhiZ)
    if not 0.0 < tol < 1.0:
        raise DomainError("tolerance must lie in (0, 1)", tol=tol)
    if cut is None:
        cut = choose_cut(argPhiZ)
    if delta is None:
        delta = cut_distance(cut, argPhiZ)
    if delta <= 0.05:
        raise BranchError("arg Phi(z) too close to the branch cut", arg=argPhiZ, distance=delta)
    log_tol = math.log(1.0 / tol) + TAIL_MARGIN
    K_ray = max(log_tol / delta, 2.0 * r + 1.0)
    lnm = -math.log(modPhiZ) if modPhiZ > 0 else math.inf
    K_l2 = max(log_tol / lnm, 2.0) if lnm > 0 else math.inf
    # oscillation of Phi(z)^k along the rays has frequency |log |Phi(z)||
    ray_cap = min(4.0, 6.0 / lnm) if lnm < math.inf else 4.0
    ray_edges = _panels(r, K_ray, lambda e: min(e, ray_cap))
    t_ray, w_ray = _gauss_on(ray_edges)
    l2_edges = _panels(-r, K_l2, lambda e: min(1.0, 6.0 / lnm) if lnm < math.inf else 1.0)
    k2, w2 = _gauss_on(l2_edges)
    phi_edges = np.linspace(0.0, 0.5 * math.pi, 3)
    ph, wph = _gauss_on(phi_edges)

    # L1: ray -i inf -> -i r, then arc -i r -> -r (phi from -pi/2 to -pi)
    k1r, w1r = -1j * t_ray, 1j * w_ray
    phi1 = -0.5 * math.pi - ph
    k1a = r * np.exp(1j * phi1)
    w1a = wph * 1j * k1a * -1.0
    # L3: arc -r -> i r (phi from pi to pi/2), then ray i r -> i inf
    phi3 = math.pi - ph
    k3a = r * np.exp(1j * phi3)
    w3a = wph * 1j * k3a * -1.0
    k3r, w3r = 1j * t_ray, 1j * w_ray

    k1 = np.concatenate([k1r, k1a])
    k3 = np.concatenate([k3a, k3r])
    k = np.concatenate([k1, k2.astype(complex), k3])
    weight = np.concatenate([w1r, w1a, w2.astype(complex), w3a, w3r])
    bf = np.concatenate([_branch_l1(k1), np.ones(len(k2), dtype=complex), _branch_l3(k3)])
    piece = np.concatenate([np.full(len(k1), 1), np.full(len(k2), 2), np.full(len(k3), 3)])
    for arr in (k, weight, bf, piece):
        arr.setflags(write=False)
    return ContourDiscretization(r, float(max(K_ray, K_l2)), cut, k, weight, bf, piece, float(K_ray), float(K_l2))


# ------------------------------------------------------------------- boundary tables


@dataclass(frozen=True)
class BoundaryTable:
    """Boundary quadrature nodes with the map data needed by the forward transform.

    ``dzeta`` is the quadrature weight times zeta'(t).
    """

    map: ConformalMap
    seg_index: np.ndarray
    t: np.ndarray
    zeta: np.ndarray
    dzeta: np.ndarray
    sqrt_dphi: np.ndarray
    phi: np.ndarray
    log_abs_phi: np.ndarray
    arg_phi: np.ndarray
    kmax: float
    breakpoints: tuple = ()

    def __len__(self):
        return len(self.zeta)

    def log_phi(self, cut: BranchCut) -> np.ndarray:
        return self.log_abs_phi + 1j * cut.reduce(self.arg_phi)

    def segment_slice(self, j: int) -> slice:
        idx = np.nonzero(self.seg_index == j)[0]
        return slice(int(idx[0]), int(idx[-1]) + 1)

    def values(self, f_boundary) -> np.ndarray:
        """Boundary data at the nodes.

        Accepts a callable of zeta, one callable per segment, an object with
        ``on_table(table)`` or an array already tabulated on the nodes.
        """
        if hasattr(f_boundary, "on_table"):
            vals = f_boundary.on_table(self)
        elif callable(f_boundary):
            vals = f_boundary(self.zeta)
        elif isinstance(f_boundary, np.ndarray):
            vals = f_boundary
        else:
            parts = list(f_boundary)
            if len(parts) != self.map.contour.__len__():
                raise DomainError("need one boundary function per segment", got=len(parts))
            vals = np.concatenate([np.asarray(parts[j](self.zeta[self.segment_slice(j)]), dtype=complex)
                                   for j in range(len(parts))])
        vals = np.asarray(vals, dtype=complex)
        if vals.shape[0] != len(self):
            raise DomainError("boundary data does not match the node table", size=vals.shape[0])
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals.reshape(len(self), -1)).any(axis=1)))
            raise EvaluationError("non-finite boundary data", node=complex(self.zeta[bad]).__repr__())
        return vals


def _fine_parameters(seg: BoundarySegment, n: int = 600, levels: int = 30) -> np.ndarray:
    t = np.linspace(seg.t0, seg.t1, n)
    span = seg.t1 - seg.t0
    extra = []
    g = 0.5 ** np.arange(1, levels + 1)
    if seg.corner_start:
        extra.append(seg.t0 + span / (n - 1) * g)
    if seg.corner_end:
        extra.append(seg.t1 - span / (n - 1) * g)
    return np.unique(np.concatenate([t, *extra]))


_BRENT_RTOL = 4.0 * np.finfo(float).eps


def _cut_crossings(map_: ConformalMap, seg: BoundarySegment, t: np.ndarray, arg: np.ndarray) -> list[float]:
    """Parameters where Phi(zeta(t)) equals +1 or -1."""
    out = []
    for theta in (0.0, math.pi):
        rot = np.angle(np.exp(1j * (arg - theta)))
        s = np.where(rot >= 0, 1.0, -1.0)
        # genuine crossings only: ignore sign flips of rounding-level noise
        big = np.maximum(np.abs(rot[:-1]), np.abs(rot[1:])) > 1e-9
        for i in np.nonzero((s[:-1] != s[1:]) & (np.abs(rot[:-1] - rot[1:]) < math.pi) & big)[0]:
            def h(tt, theta=theta):
                w = complex(map_.evaluate(np.array([complex(seg(tt))])).phi[0])
                return float(np.angle(w * np.exp(-1j * theta)))

            out.append(brentq(h, t[i], t[i + 1], xtol=1e-15 * max(1.0, abs(t[i])), rtol=_BRENT_RTOL))
    # a crossing at a segment end is already a panel boundary
    margin = 1e-6 * (seg.t1 - seg.t0)
    return sorted({x for x in out if seg.t0 + margin < x < seg.t1 - margin})


_TABLE_CACHE: dict = {}
_PROFILE_CACHE: dict = {}
_TABLE_LOCK = threading.Lock()


def _boundary_profile(map_: ConformalMap) -> list:
    """Per segment: fine parameters, arg Phi on them and the cut crossings (shared by all levels)."""
    with _TABLE_LOCK:
        hit = _PROFILE_CACHE.get(id(map_))
    if hit is not None and hit[0] is map_:
        return hit[1]
    prof = []
    for seg in map_.contour:
        tf = _fine_parameters(seg)
        with np.errstate(divide="ignore", invalid="ignore"):  # end parameters sit on corners
            arg = np.angle(map_.evaluate(seg(tf)).phi)
        prof.append((tf, arg, tuple(_cut_crossings(map_, seg, tf, arg))))
    with _TABLE_LOCK:
        _PROFILE_CACHE[id(map_)] = (map_, prof)
    return prof


def build_boundary_table(map_: ConformalMap, q: PanelQuadrature | None = None, kmax: float = 0.0) -> BoundaryTable:
    """Node table resolving Phi(zeta)^(-k) for |k| <= kmax."""
    q = q or PanelQuadrature()
    key = (id(map_), q, float(kmax))
    with _TABLE_LOCK:
        hit = _TABLE_CACHE.get(key)
    if hit is not None and hit.map is map_:
        return hit
    dphase = PHASE_PER_PANEL / (abs(kmax) + 2.0)
    cols = {k: [] for k in ("seg", "t", "w")}
    breaks = []
    for j, (seg, (tf, arg, crossings)) in enumerate(zip(map_.contour, _boundary_profile(map_))):
        extra = list(crossings)
        breaks.extend((j, e) for e in extra)
        uw = np.unwrap(arg)
        total = abs(uw[-1] - uw[0])
        nb = int(math.ceil(total / dphase))
        if nb > 1:
            levels = uw[0] + (uw[-1] - uw[0]) * np.arange(1, nb) / nb
            order = np.argsort(uw) if uw[-1] > uw[0] else np.argsort(-uw)
            extra.extend(np.interp(levels if uw[-1] > uw[0] else -levels,
                                   (uw if uw[-1] > uw[0] else -uw)[order], tf[order]).tolist())
        t, w = q.rule(seg, extra)
        cols["seg"].append(np.full(len(t), j))
        cols["t"].append(t)
        cols["w"].append(w)
    seg_index = np.concatenate(cols["seg"])
    t = np.concatenate(cols["t"])
    w = np.concatenate(cols["w"])
    segs = list(map_.contour)
    zeta = np.concatenate([segs[j](t[seg_index == j]) for j in range(len(segs))])
    vel = np.concatenate([segs[j].velocity(t[seg_index == j]) for j in range(len(segs))])
    mv = map_.evaluate(zeta)
    if not np.all(np.isfinite(mv.log_dphi)):
        raise SingularityError("Phi' is singular at a boundary quadrature node")
    table = BoundaryTable(
        map=map_, seg_index=seg_index, t=t, zeta=zeta, dzeta=w * vel, sqrt_dphi=mv.sqrt_dphi, phi=mv.phi,
        log_abs_phi=np.log(np.abs(mv.phi)), arg_phi=np.angle(mv.phi), kmax=float(kmax), breakpoints=tuple(breaks),
    )
    with _TABLE_LOCK:
        _TABLE_CACHE[key] = table
    return table


def _level(kabs: float) -> float:
    """Resolution classes: tables are shared between all |k| below a half-integer power of two."""
    return float(2.0 ** (max(8, math.ceil(2.0 * math.log2(max(kabs, 1.0)))) / 2.0))


# ------------------------------------------------------------------- spectral functions


def power_matrix(table: BoundaryTable, k, cut: BranchCut, shift: int) -> np.ndarray:
    """Phi(zeta)^(-k-shift) for every (k, node) pair."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    L = table.log_phi(cut)
    return np.exp(-(k[:, None] + shift) * L[None, :])


class SpectralFunction:
    """rho(k) computed by boundary quadrature of given boundary data.

    ``shift`` is 1 for the standard transform and 0 for the punctured one.
    Boundary data may be a single function or a stack of basis functions,
    in which case rho has a trailing basis axis.
    """

    provenance = "boundary-quadrature"

    def __init__(self, map_: ConformalMap, f_boundary, q: PanelQuadrature | None = None, shift: int = 1,
                 memo: bool = True):
        self.map = map_
        self.f_boundary = f_boundary
        self.q = q or PanelQuadrature()
        self.shift = shift
        self._memo: dict | None = {} if memo else None
        self._lock = threading.Lock()
        self._weights: dict = {}

    def table(self, kabs: float) -> BoundaryTable:
        return build_boundary_table(self.map, self.q, _level(kabs))

    def _g(self, table: BoundaryTable) -> np.ndarray:
        key = table.kmax
        g = self._weights.get(key)
        if g is None:
            vals = table.values(self.f_boundary)
            fac = table.dzeta * table.sqrt_dphi
            g = vals * (fac if vals.ndim == 1 else fac[:, None])
            self._weights[key] = g
        return g

    def __call__(self, k, cut: BranchCut = PRINCIPAL) -> np.ndarray:
        k = np.asarray(k, dtype=complex)
        flat = np.atleast_1d(k).ravel()
        key = None
        if self._memo is not None:
            key = (cut.base_angle, flat.tobytes())
            with self._lock:
                hit = self._memo.get(key)
            if hit is not None:
                return hit if k.ndim else hit[0]
        levels = np.array([_level(a) for a in np.abs(flat)])
        res = None
        for lev in np.unique(levels):
            table = build_boundary_table(self.map, self.q, lev)
            g = self._g(table)
            if res is None:
                res = np.zeros((len(flat),) + g.shape[1:], dtype=complex)
            idx = np.nonzero(levels == lev)[0]
            for start in range(0, len(idx), 256):
                sl = idx[start:start + 256]
                res[sl] = power_matrix(table, flat[sl], cut, self.shift) @ g
        if res is None:
            res = np.zeros((0,), dtype=complex)
        if key is not None:
            with self._lock:
                self._memo[key] = res
        return res if k.ndim else res[0]


def forward_rho(map_: ConformalMap, contour, q: PanelQuadrature | None, f_boundary, k,
                cut: BranchCut = PRINCIPAL):
    """int sqrt(Phi') Phi^(-k-1) f dzeta.  ``contour`` must be ``map_.contour`` (kept for signature clarity)."""
    _check_contour(map_, contour)
    out = SpectralFunction(map_, f_boundary, q, shift=1, memo=False)(k, cut)
    return complex(out) if np.ndim(out) == 0 else out


def forward_rho_punctured(map_: ConformalMap, contour, q: PanelQuadrature | None, f_boundary, k,
                          cut: BranchCut = PRINCIPAL):
    """int sqrt(Phi') Phi^(-k) f dzeta for the punctured transform."""
    _check_contour(map_, contour)
    out = SpectralFunction(map_, f_boundary, q, shift=0, memo=False)(k, cut)
    return complex(out) if np.ndim(out) == 0 else out


def _check_contour(map_, contour):
    if contour is not None and contour is not map_.contour and len(contour) != len(map_.contour):
        raise DomainError("boundary contour does not belong to this map")


def global_relation_residual(map_: ConformalMap, contour, q: PanelQuadrature | None, f_boundary, n: int):
    """tau(n) = rho(-n-1) = int sqrt(Phi') f Phi^n dzeta."""
    if n < 0:
        raise DomainError("n must be non-negative", n=n)
    return forward_rho(map_, contour, q, f_boundary, -n - 1)


# ------------------------------------------------------------------- inverse transform


def _phi_data(map_: ConformalMap, z, ratio=False):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    mv = map_.evaluate(z, ratio=ratio)
    return z, mv


def _contour_groups(phi: np.ndarray, tol: float, r: float):
    """Split targets by branch cut; one dominating contour per group."""
    mod = np.abs(phi)
    arg = np.angle(phi)
    groups = []
    for cut in (PRINCIPAL, POSITIVE):
        sel = np.array([choose_cut(a) is cut for a in arg]) & (mod >= 1e-12)
        if not np.any(sel):
            continue
        delta = min(cut_distance(cut, a) for a in arg[sel])
        contour = build_contour(r, 0.0, tol, float(max(mod[sel].max(), 1e-3)), delta=delta, cut=cut)
        groups.append((sel, contour))
    return groups


def _inverse(rho: SpectralFunction, map_: ConformalMap, z, contour: ContourDiscretization | None,
             tol: float, r: float, derivative: bool):
    z, mv = _phi_data(map_, z, ratio=derivative)
    phi = mv.phi
    mod = np.abs(phi)
    if np.any(mod > NEAR_BOUNDARY):
        raise NearBoundaryError(
            "target too close to the boundary; use the boundary expansion evaluator",
            max_modulus=float(mod.max()),
        )
    s = rho.shift
    if s == 0 and np.any(mod < 1e-14):
        raise SingularityError("inverse transform evaluated at the puncture")
    out = np.zeros(z.shape + rho_shape(rho), dtype=complex)
    dout = np.zeros_like(out) if derivative else None
    groups = [(np.ones(z.shape, bool) & (mod >= 1e-12), contour)] if contour is not None else _contour_groups(phi, tol, r)
    for sel, C in groups:
        if not np.any(sel):
            continue
        rk = rho(C.k, C.cut)
        cw = C.combined_weight
        coeff = rk * (cw if rk.ndim == 1 else cw[:, None])
        L = np.log(mod[sel]) + 1j * C.cut.reduce(np.angle(phi[sel]))
        P = np.exp(L[:, None] * C.k[None, :])  # Phi(z)^k
        I = P @ coeff
        if derivative:
            Ik = (P * C.k[None, :]) @ coeff
        pre = mv.sqrt_dphi[sel] / (2j * math.pi)
        pre_b = pre if I.ndim == 1 else pre[:, None]
        if s == 1:
            val = pre_b * I
        else:
            inv = np.exp(-L)
            val = pre_b * I * (inv if I.ndim == 1 else inv[:, None])
        out[sel] = val
        if derivative:
            dphi = mv.dphi[sel]
            rat = mv.ratio[sel]
            b = lambda x: x if I.ndim == 1 else x[:, None]  # noqa: E731
            # d/dz [sqrt(Phi') Phi^(s-1) sum c_k Phi^k]
            dI = b(dphi * np.exp(-L)) * (Ik + (s - 1) * I)
            lead = b(0.5 * rat) * I + dI
            dv = pre_b * lead * (b(np.exp(-L)) if s == 0 else 1.0)
            dout[sel] = dv
    # Phi(z) = 0: L2 and ray integrals degenerate; use the residue limit
    zero = mod < 1e-12
    if np.any(zero):
        if s == 0:
            raise SingularityError("inverse transform evaluated at the puncture")
        r0 = rho(np.zeros(1), PRINCIPAL)[0]
        out[zero] = (mv.sqrt_dphi[zero] / (2j * math.pi))[(...,) + (None,) * (out.ndim - 1)] * r0
        if derivative:
            r1 = rho(np.array([1.0 + 0j]), PRINCIPAL)[0]
            sq = mv.sqrt_dphi[zero]
            b = (...,) + (None,) * (out.ndim - 1)
            dout[zero] = (sq / (2j * math.pi))[b] * (0.5 * mv.ratio[zero][b] * r0 + mv.dphi[zero][b] * r1)
    return z, out, dout


def rho_shape(rho: SpectralFunction) -> tuple:
    f = rho.f_boundary
    m = getattr(f, "n_basis", None)
    return (m,) if m else ()


def inverse_transform(rho: SpectralFunction, map_: ConformalMap, z, contour: ContourDiscretization | None = None,
                      *, tol: float = 1e-12, r: float = 0.5, derivative: bool = False):
    """f(z) (and f'(z) if ``derivative``) from rho.  Scalar in, scalar out."""
    scalar = np.ndim(z) == 0
    _, val, dval = _inverse(rho, map_, z, contour, tol, r, derivative)
    if scalar:
        val = val[0] if val.ndim else val
        dval = dval[0] if derivative else None
        val = complex(val) if np.ndim(val) == 0 else val
        if derivative:
            return val, (complex(dval) if np.ndim(dval) == 0 else dval)
        return val
    return (val, dval) if derivative else val


def inverse_transform_punctured(rho: SpectralFunction, map_: ConformalMap, z,
                                contour: ContourDiscretization | None = None, **kw):
    if rho.shift != 0:
        raise DomainError("punctured inverse needs a punctured spectral function (shift 0)")
    return inverse_transform(rho, map_, z, contour, **kw)


# node-table panels must be narrower than this fraction of the gap 1 - |Phi(z)|
_GAP_FRACTION = 0.75


def representation_integral(rho: SpectralFunction, map_: ConformalMap, z, *, derivative: bool = False):
    """f(z) from the boundary integral behind the transform pair, without the spectral split.

    f(z) = sqrt(Phi'(z)) Phi(z)^(s-1) / (2 pi i) * int f sqrt(Phi') Phi(zeta)^(1-s) / (Phi(zeta) - Phi(z)) dzeta.

    The node table is refined until its panels, measured in arg Phi(zeta), are
    shorter than the gap 1 - |Phi(z)|, so the rule stays accurate up to the
    boundary (at growing cost).  Used for targets where the spectral
    contours become long.
    """
    z, mv = _phi_data(map_, z, ratio=derivative)
    phi = mv.phi
    mod = np.abs(phi)
    if np.any(mod >= 1.0 - 1e-10):
        raise NearBoundaryError("target on or outside the boundary", max_modulus=float(mod.max()))
    s = rho.shift
    if s == 0 and np.any(mod < 1e-14):
        raise SingularityError("representation evaluated at the puncture")
    need = PHASE_PER_PANEL / (_GAP_FRACTION * (1.0 - mod))
    levels = np.array([_level(x) for x in need])
    out = np.zeros(z.shape + rho_shape(rho), dtype=complex)
    dout = np.zeros_like(out) if derivative else None
    for lev in np.unique(levels):
        sel = np.nonzero(levels == lev)[0]
        table = build_boundary_table(map_, rho.q, lev)
        g = rho._g(table)
        if s == 0:
            g = g * (table.phi if g.ndim == 1 else table.phi[:, None])
        for start in range(0, len(sel), 64):
            idx = sel[start:start + 64]
            D = 1.0 / (table.phi[None, :] - phi[idx, None])
            I = D @ g
            pw = mv.sqrt_dphi[idx] * (1.0 if s == 1 else 1.0 / phi[idx])
            b = (lambda x: x) if I.ndim == 1 else (lambda x: x[:, None])  # noqa: E731
            out[idx] = b(pw / (2j * math.pi)) * I
            if derivative:
                J = (D * D) @ g
                lead = 0.5 * mv.ratio[idx] + (s - 1) * mv.dphi[idx] / phi[idx]
                dout[idx] = b(pw / (2j * math.pi)) * (b(lead) * I + b(mv.dphi[idx]) * J)
    return (out, dout) if derivative else out


def spectral_identity_check(zeta: complex, z: complex, contour: ContourDiscretization | None = None,
                            tol: float = 1e-13) -> complex:
    """Sum of the L1, L2, L3 integrals of z^k / zeta^(k+1) with their branch factors; equals 1/(zeta - z)."""
    if abs(abs(zeta) - 1.0) > 1e-12 or abs(z) >= 1:
        raise DomainError("need |zeta| = 1 and |z| < 1")
    if abs(z) < 1e-12:
        return 1.0 / zeta
    if contour is None:
        contour = build_contour(0.5, float(np.angle(z)), tol, abs(z))
    cut = contour.cut
    lz = math.log(abs(z)) + 1j * cut.reduce(float(np.angle(z)))
    lzeta = 1j * cut.reduce(float(np.angle(zeta)))
    k = contour.k
    terms = np.exp(k * lz - (k + 1) * lzeta) * contour.combined_weight
    return complex(terms.sum())
