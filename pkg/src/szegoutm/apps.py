"""End-to-end solvers: the ellipse mixed problem and a point vortex in a polygon.

Interior values go through the inverse transform when |Phi(z)| <= FIELD_SWITCH
and through direct quadrature of the boundary representation beyond that;
grids are masked where |Phi(z)| > NEAR_BOUNDARY.

Boundary-condition residuals are measured on the analytic projection of the
solved trace (its boundary limit from inside), not on the trace itself: the
trace satisfies the imposed half of the data by construction, so only the
projection can show whether the pair (imposed, solved) really is the boundary
value of one analytic function.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from skimage import measure

from . import grsolver as gr
from .conformal import (ConformalMap, DiscMap, EllipseMap, PuncturedMap, SchwarzChristoffelMap, build_ellipse_map,
                        polygon_centroid, solve_sc_parameters)
from .errors import DomainError, SingularityError
from .geometry import BoundaryContour, PanelQuadrature
from .specfun import BranchCut
from .transform import (NEAR_BOUNDARY, SpectralFunction, build_boundary_table, inverse_transform,
                        representation_integral)

FIELD_SWITCH = 0.9
# node-table level used for boundary projections
_PROJECTION_LEVEL = 512.0


# --------------------------------------------------------------------------- shared evaluation


def evaluate_interior(rho: SpectralFunction, map_: ConformalMap, z, derivative: bool = False):
    """f(z) (and f'(z)) routed by |Phi(z)|; vector in, vector out."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    mod = np.abs(map_.evaluate(z).phi)
    if np.any(mod > NEAR_BOUNDARY):
        from .errors import NearBoundaryError
        raise NearBoundaryError("target too close to the boundary", max_modulus=float(mod.max()))
    val = np.zeros(z.shape, dtype=complex)
    dval = np.zeros(z.shape, dtype=complex)
    inner = mod <= FIELD_SWITCH
    if np.any(inner):
        r = inverse_transform(rho, map_, z[inner], derivative=derivative)
        if derivative:
            val[inner], dval[inner] = r
        else:
            val[inner] = r
    if np.any(~inner):
        r = representation_integral(rho, map_, z[~inner], derivative=derivative)
        if derivative:
            val[~inner], dval[~inner] = r
        else:
            val[~inner] = r
    return (val, dval) if derivative else val


def boundary_projection(rho: SpectralFunction, map_: ConformalMap, zeta0, f0):
    """Boundary limit from inside of the analytic function represented by rho's boundary data.

    With H = F Phi^(1-s) / sqrt(Phi') viewed on the unit circle W = Phi(zeta),
    the limit is sqrt(Phi'(zeta0)) Phi0^(s-1) [H0 + (1/2 pi i) int (H - H0)/(W - W0) dW].
    ``f0`` are the boundary data at the sample points ``zeta0``.
    """
    zeta0 = np.atleast_1d(np.asarray(zeta0, dtype=complex))
    f0 = np.atleast_1d(np.asarray(f0, dtype=complex))
    s = rho.shift
    table = build_boundary_table(map_, rho.q, _PROJECTION_LEVEL)
    g = rho._g(table)  # F sqrt(Phi') dzeta
    if g.ndim != 1:
        raise DomainError("projection needs a single boundary function")
    hdw = g * table.phi ** (1 - s)
    dw = table.sqrt_dphi ** 2 * table.dzeta
    mv = map_.evaluate(zeta0)
    w0 = mv.phi
    h0 = f0 * w0 ** (1 - s) / mv.sqrt_dphi
    out = np.empty(len(zeta0), dtype=complex)
    for i in range(len(zeta0)):
        d = table.phi - w0[i]
        near = np.abs(d) < 1e-14
        if np.any(near):
            raise SingularityError("projection sample coincides with a quadrature node")
        out[i] = h0[i] + np.sum((hdw - h0[i] * dw) / d) / (2j * math.pi)
    return mv.sqrt_dphi * w0 ** (s - 1) * out


def _samples(contour: BoundaryContour, per_segment: int, exclude: float = 0.0):
    """Midpoint-rule parameters on each segment, optionally trimmed near the ends."""
    out = []
    for j, seg in enumerate(contour):
        a, b = seg.t0 + exclude, seg.t1 - exclude
        t = a + (b - a) * (np.arange(per_segment) + 0.5) / per_segment
        out.append((j, t))
    return out


# --------------------------------------------------------------------------- ellipse problem


@dataclass
class EllipseSolution:
    a: float
    b: float
    m: int
    N: int
    N_k: int
    map: EllipseMap
    system: gr.GlobalRelationSystem
    expansions: list
    residual_norm: float
    x: np.ndarray
    rho: SpectralFunction
    manufactured: bool = False
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def data(self, z):
        return z ** self.m if self.manufactured else np.conj(z) ** self.m

    def trace(self, j: int, t):
        return self.system.model.trace(self.x, j, t)

    def evaluate(self, z, derivative: bool = False):
        return evaluate_interior(self.rho, self.map, z, derivative)

    def boundary_condition_residual(self, per_arc: int = 200, exclude: float = 0.05) -> float:
        """max |imposed part of the projected solution - data| away from the junctions."""
        worst = 0.0
        for j, t in _samples(self.map.contour, per_arc, exclude):
            z = self.map.contour.segments[j](t)
            proj = boundary_projection(self.rho, self.map, z, self.trace(j, t))
            data = self.data(z)
            err = np.abs(proj.real - data.real) if j == 0 else np.abs(proj.imag - data.imag)
            worst = max(worst, float(err.max()))
        return worst

    def coefficient_tail(self) -> float:
        return float(max(e.magnitudes()[-1] for e in self.expansions))

    def junction_jump(self) -> float:
        """|Re f| jump at theta = pi/2 between the imposed (C1) and solved (C2) sides."""
        c1, c2 = self.map.contour.segments
        left = self.trace(0, np.array([c1.t1]))[0]
        right = self.trace(1, np.array([c2.t0]))[0]
        return float(abs(left.real - right.real))

    def max_global_relation_residual(self) -> float:
        A, b = self.system.matrix, self.system.rhs
        return float(np.abs(A @ self.x - b).max())


def solve_ellipse_bvp(a: float, b: float, m: int = 2, N: int = 16, N_k: int | None = None,
                      q: PanelQuadrature | None = None, manufactured: bool = False) -> EllipseSolution:
    """Re f = Re conj(zeta)^m on C1, Im f = Im conj(zeta)^m on C2 (``manufactured``: zeta^m instead)."""
    if not (a > b > 0):
        raise DomainError("need a > b > 0", a=a, b=b)
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer", m=m)
    t0 = time.perf_counter()
    emap = build_ellipse_map(a, b)
    q = q or PanelQuadrature(panels=24)
    system = gr.assemble_ellipse_system(int(m), emap, None, q, N, N_k, manufactured=manufactured)
    expansions, res, x = gr.solve_least_squares(system)
    rho = SpectralFunction(emap, gr.SolvedTrace(system.model, x), q, shift=1)
    sol = EllipseSolution(a, b, int(m), N, system.N_k, emap, system, expansions, res, x, rho, manufactured)
    sol.runtime = time.perf_counter() - t0
    return sol


# --------------------------------------------------------------------------- point vortex


@dataclass(frozen=True)
class VortexConfig:
    z0: complex
    gamma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(complex(self.z0)) or not np.isfinite(self.gamma):
            raise DomainError("vortex position and circulation must be finite")


def exact_disc_vortex(w, w0: complex, gamma: float = 1.0):
    """(Gamma / 2 pi i) log((w - w0) / (w - 1/conj(w0))), principal log."""
    w = np.asarray(w, dtype=complex)
    if abs(w0) >= 1:
        raise DomainError("vortex must lie inside the unit disc", w0=str(w0))
    if np.any(w == w0):
        raise SingularityError("evaluation at the vortex")
    if w0 == 0:
        val = np.log(w)
    else:
        # + 0j clears a negative zero imaginary part so the negative real axis maps to +pi
        val = np.log((w - w0) / (w - 1.0 / np.conj(w0)) + 0j)
    out = gamma / (2j * math.pi) * val
    return complex(out) if out.ndim == 0 else out


def _cut_direction(map_: ConformalMap, z0: complex) -> float:
    """Angle of the ray from z0 pointing away from the domain's centroid."""
    if isinstance(map_, SchwarzChristoffelMap):
        c = polygon_centroid(map_.vertices)
    else:
        c = 0j
    d = z0 - c
    return float(np.angle(d)) if abs(d) > 1e-12 else -0.5 * math.pi


class FlowSolution:
    """Complex potential h = f_s + f, velocity w = h', stream function psi = Im h."""

    def __init__(self, provenance: str, map_: ConformalMap, cfg: VortexConfig, system, expansions, residual_norm,
                 x, rho, regular_rho, diagnostics=None):
        self.provenance = provenance
        self.map = map_
        self.config = cfg
        self.system = system
        self.expansions = expansions
        self.residual_norm = residual_norm
        self.x = x
        self.rho = rho  # standard: f; punctured: g = w - w_s (shift 0)
        self.regular_rho = regular_rho  # f for the potential (shift 1 on the base map)
        self.diagnostics = diagnostics or {}
        self.cut = BranchCut(_cut_direction(self.base_map, cfg.z0))

    @property
    def base_map(self) -> ConformalMap:
        return self.map.base if isinstance(self.map, PuncturedMap) else self.map

    # singular parts
    def singular_potential(self, z):
        z = np.asarray(z, dtype=complex)
        u = z - self.config.z0
        lg = np.log(np.abs(u)) + 1j * self.cut.reduce(np.angle(u))
        return self.config.gamma / (2j * math.pi) * lg

    def singular_stream(self, z):
        return gr.vortex_stream(z, self.config.z0, self.config.gamma)

    def singular_velocity(self, z):
        return gr.vortex_velocity_singular(z, self.config.z0, self.config.gamma)

    # regular parts
    def regular(self, z, derivative: bool = False):
        return evaluate_interior(self.regular_rho, self.base_map, z, derivative)

    def potential(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.singular_potential(z) + self.regular(z)

    def stream(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return self.singular_stream(z) + self.regular(z).imag

    def velocity(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.provenance == "standard":
            _, df = self.regular(z, derivative=True)
            return self.singular_velocity(z) + df
        return self.singular_velocity(z) + evaluate_interior(self.rho, self.map, z)

    potential_evaluator = property(lambda self: self.potential)
    velocity_evaluator = property(lambda self: self.velocity)
    stream_evaluator = property(lambda self: self.stream)

    # diagnostics
    def impermeability_residual(self, per_side: int = 50) -> float:
        """Standard: max |psi|; punctured: max |Im[w zeta'(s)]| on the projected trace."""
        worst = 0.0
        contour = self.map.contour
        for j, t in _samples(contour, per_side):
            seg = contour.segments[j]
            z = seg(t)
            proj = boundary_projection(self.rho, self.map, z, self.system.model.trace(self.x, j, t))
            if self.provenance == "standard":
                r = proj.imag + self.singular_stream(z)
            else:
                r = ((self.singular_velocity(z) + proj) * seg.velocity(t)).imag
            worst = max(worst, float(np.abs(r).max()))
        return worst

    def max_global_relation_residual(self) -> float:
        return float(np.abs(self.system.matrix @ self.x - self.system.rhs).max())


def _vortex_map(vertices) -> ConformalMap:
    if vertices is None or (isinstance(vertices, str) and vertices == "disc"):
        return DiscMap()
    return solve_sc_parameters([complex(v) for v in vertices])


def solve_vortex(vertices, cfg: VortexConfig, N: int = 16, N_k: int | None = None,
                 map_: ConformalMap | None = None, q: PanelQuadrature | None = None) -> FlowSolution:
    """Im f = -Im f_s on the boundary; ``vertices=None`` solves in the unit disc."""
    map_ = map_ or _vortex_map(vertices)
    q = q or PanelQuadrature()
    system = gr.assemble_vortex_system(vertices, complex(cfg.z0), cfg.gamma, map_, q, N, N_k)
    expansions, res, x = gr.solve_least_squares(system)
    rho = SpectralFunction(map_, gr.SolvedTrace(system.model, x), q, shift=1)
    return FlowSolution("standard", map_, cfg, system, expansions, res, x, rho, rho)


class _PotentialTrace:
    """Regular potential f on the boundary rebuilt from the punctured solution.

    On each side d f = g dzeta with Re(g zeta') = sum b_n T_n and
    Im f = -Im f_s; the real part is the running Chebyshev antiderivative.
    """

    def __init__(self, model: gr.TraceModel, x: np.ndarray, contour: BoundaryContour, z0: complex, gamma: float):
        self.z0, self.gamma, self.contour = z0, gamma, contour
        self.antider = []
        self.offsets = []
        run = 0.0
        for j, seg in enumerate(model.segments):
            c = x[model.offsets[j]:model.offsets[j + 1]]
            half = 0.5 * (seg.t1 - seg.t0)
            ci = np.polynomial.chebyshev.chebint(c, lbnd=-1.0) * half
            self.antider.append(ci)
            self.offsets.append(run)
            run += float(np.polynomial.chebyshev.chebval(1.0, ci))
        self.closure = run

    def segment_values(self, j, t):
        seg = self.contour.segments[j]
        s = (2.0 * np.asarray(t) - seg.t0 - seg.t1) / (seg.t1 - seg.t0)
        re = self.offsets[j] + np.polynomial.chebyshev.chebval(s, self.antider[j])
        return re - 1j * gr.vortex_stream(seg(t), self.z0, self.gamma)

    def on_table(self, table):
        out = np.empty(len(table), dtype=complex)
        for j in range(len(self.contour)):
            sl = table.segment_slice(j)
            out[sl] = self.segment_values(j, table.t[sl])
        return out


def solve_vortex_punctured(vertices, cfg: VortexConfig, N: int = 16, N_k: int | None = None,
                           map_: ConformalMap | None = None, q: PanelQuadrature | None = None) -> FlowSolution:
    """Velocity correction g = w - w_s from the punctured transform; puncture at z0."""
    base = map_ or _vortex_map(vertices)
    q = q or PanelQuadrature()
    z0 = complex(cfg.z0)
    if not bool(base.contour.contains(np.array([z0]))[0]):
        raise DomainError("vortex position must lie strictly inside the domain", z0=str(z0))
    pmap = PuncturedMap(base, z0)
    system = gr.assemble_vortex_punctured_system(vertices, z0, cfg.gamma, pmap, q, N, N_k)
    expansions, res, x = gr.solve_least_squares(system)
    rho = SpectralFunction(pmap, gr.SolvedTrace(system.model, x), q, shift=0)
    ptrace = _PotentialTrace(system.model, x, base.contour, z0, cfg.gamma)
    regular = SpectralFunction(base, ptrace, q, shift=1)
    return FlowSolution("punctured", pmap, cfg, system, expansions, res, x, rho, regular,
                        {"potential_closure": ptrace.closure})


# --------------------------------------------------------------------------- fields and streamlines


@dataclass
class FieldGrid:
    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray  # True where values are defined
    re_f: np.ndarray
    im_f: np.ndarray
    psi: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @property
    def shape(self):
        return self.mask.shape


def _grid(contour: BoundaryContour, nx: int, ny: int, bbox=None):
    if nx < 2 or ny < 2:
        raise DomainError("grid needs nx, ny >= 2", nx=nx, ny=ny)
    if bbox is None:
        pts = contour.sample(200)
        bbox = (pts.real.min(), pts.real.max(), pts.imag.min(), pts.imag.max())
    x = np.linspace(bbox[0], bbox[1], nx)
    y = np.linspace(bbox[2], bbox[3], ny)
    return x, y, x[None, :] + 1j * y[:, None]


def sample_field(solution, contour: BoundaryContour | None = None, nx: int = 41, ny: int = 41, bbox=None,
                 map_: ConformalMap | None = None) -> FieldGrid:
    """Field values on a bounding-box grid; exterior and |Phi| > NEAR_BOUNDARY points are masked.

    ``solution`` is a FlowSolution, an EllipseSolution, or a callable z -> f(z)
    (then ``map_`` is needed for the near-boundary mask and psi/u/v stay NaN).
    """
    if isinstance(solution, (FlowSolution, EllipseSolution)):
        map_ = solution.base_map if isinstance(solution, FlowSolution) else solution.map
    if contour is None:
        contour = map_.contour
    x, y, Z = _grid(contour, nx, ny, bbox)
    flat = Z.ravel()
    mask = contour.contains(flat)
    if np.any(mask):
        # grid nodes can land exactly on the boundary (vertices included)
        idx = np.nonzero(mask)[0]
        mask[idx] = contour.distance(flat[idx]) > 1e-12 * max(np.ptp(x), np.ptp(y))
    if map_ is not None and np.any(mask):
        idx = np.nonzero(mask)[0]
        mask[idx] = np.abs(map_.evaluate(flat[idx]).phi) <= NEAR_BOUNDARY
    if isinstance(solution, FlowSolution):
        scale = max(np.ptp(x), np.ptp(y))
        mask &= np.abs(flat - solution.config.z0) > 1e-9 * scale
    nan = np.full(flat.shape, np.nan)
    re_f, im_f, psi, u, v = (nan.copy() for _ in range(5))
    idx = np.nonzero(mask)[0]
    if len(idx):
        zz = flat[idx]
        if isinstance(solution, FlowSolution):
            f = solution.regular(zz)
            re_f[idx], im_f[idx] = f.real, f.imag
            psi[idx] = solution.singular_stream(zz) + f.imag
            w = solution.velocity(zz)
            u[idx], v[idx] = w.real, -w.imag
        elif isinstance(solution, EllipseSolution):
            f, df = solution.evaluate(zz, derivative=True)
            re_f[idx], im_f[idx] = f.real, f.imag
            psi[idx] = f.imag
            u[idx], v[idx] = df.real, -df.imag
        else:
            f = np.asarray(solution(zz), dtype=complex)
            re_f[idx], im_f[idx] = f.real, f.imag
    sh = Z.shape
    return FieldGrid(x, y, mask.reshape(sh), re_f.reshape(sh), im_f.reshape(sh), psi.reshape(sh),
                     u.reshape(sh), v.reshape(sh))


def extract_streamlines(grid: FieldGrid, levels: Sequence[float], field_name: str = "psi") -> list[np.ndarray]:
    """Iso-lines of psi (or another grid field) as (n, 2) arrays of x, y points; masked cells are skipped."""
    F = np.where(grid.mask, getattr(grid, field_name), 0.0)
    ii, jj = np.arange(len(grid.y)), np.arange(len(grid.x))
    out = []
    for level in levels:
        for c in measure.find_contours(F, level, mask=grid.mask):
            out.append(np.column_stack([np.interp(c[:, 1], jj, grid.x), np.interp(c[:, 0], ii, grid.y)]))
    return out
