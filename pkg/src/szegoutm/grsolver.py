"""Global-relation collocation systems and their least-squares solution.

A boundary trace is modelled per segment as

    F(zeta(t)) = known(t) + factor(t) * u(t),   u(t) = sum_c x_c phi_c(t)  (real)

with real unknowns x_c.  Substituting F into rho(k) = 0 for k = -1, ..., -N_k
(split into real and imaginary rows) gives a real overdetermined system.  All
integrals go through the transform module's boundary tables, so the system
matrix and the later interior evaluations use one and the same quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .conformal import ConformalMap, EllipseMap, PuncturedMap
from .errors import DomainError, IllConditionedError
from .geometry import PanelQuadrature, ellipse_radius
from .specfun import PRINCIPAL
from .transform import BoundaryTable, SpectralFunction

FOURIER = "fourier_half_arc"
CHEBYSHEV = "chebyshev_side"


def chebyshev_t(n_max: int, s) -> np.ndarray:
    """T_0..T_{n_max}(s) by the three-term recurrence; shape (len(s), n_max+1)."""
    s = np.asarray(s, dtype=float)
    out = np.empty(s.shape + (n_max + 1,))
    out[..., 0] = 1.0
    if n_max >= 1:
        out[..., 1] = s
    for n in range(2, n_max + 1):
        out[..., n] = 2.0 * s * out[..., n - 1] - out[..., n - 2]
    return out


def _fourier_columns(N: int, theta) -> np.ndarray:
    """Real column functions of a0 + sum (a_n e^{2in theta} + conj(a_n) e^{-2in theta}).

    Column order: a0, Re a1, Im a1, ..., Re aN, Im aN.
    """
    theta = np.asarray(theta, dtype=float)
    cols = [np.ones_like(theta)]
    for n in range(1, N + 1):
        cols.append(2.0 * np.cos(2 * n * theta))
        cols.append(-2.0 * np.sin(2 * n * theta))
    return np.stack(cols, axis=-1)


@dataclass
class BasisExpansion:
    """Real-valued unknown on one boundary segment."""

    kind: str
    segment_label: str
    coefficients: np.ndarray
    N: int
    t0: float = -1.0
    t1: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if self.kind == FOURIER:
            c = c.astype(complex)
            if len(c) != self.N + 1:
                raise DomainError("fourier expansion needs N+1 coefficients")
            if abs(c[0].imag) > 1e-12 * max(1.0, abs(c[0])):
                raise DomainError("a0 must be real")
            c[0] = c[0].real
        elif self.kind == CHEBYSHEV:
            if np.iscomplexobj(c) and np.any(np.abs(c.imag) > 0):
                raise DomainError("chebyshev coefficients must be real")
            c = c.real.astype(float)
            if len(c) != self.N + 1:
                raise DomainError("chebyshev expansion needs N+1 coefficients")
        else:
            raise DomainError(f"unknown expansion kind {self.kind!r}")
        self.coefficients = c

    @property
    def n_real(self) -> int:
        return 2 * self.N + 1 if self.kind == FOURIER else self.N + 1

    def columns(self, t) -> np.ndarray:
        if self.kind == FOURIER:
            return _fourier_columns(self.N, t)
        s = (2.0 * np.asarray(t, dtype=float) - self.t0 - self.t1) / (self.t1 - self.t0)
        return chebyshev_t(self.N, s)

    def real_vector(self) -> np.ndarray:
        c = self.coefficients
        if self.kind == FOURIER:
            out = [c[0].real]
            for a in c[1:]:
                out += [a.real, a.imag]
            return np.array(out)
        return np.asarray(c, dtype=float)

    @classmethod
    def from_real(cls, kind, label, x, N, t0=-1.0, t1=1.0) -> "BasisExpansion":
        x = np.asarray(x, dtype=float)
        if kind == FOURIER:
            coef = np.concatenate([[x[0]], x[1::2] + 1j * x[2::2]])
        else:
            coef = x
        return cls(kind, label, coef, N, t0, t1)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t0 - 1e-12) or np.any(t > self.t1 + 1e-12):
            raise DomainError("parameter outside the segment interval", segment=self.segment_label)
        return self.columns(t) @ self.real_vector()

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.coefficients)

    def to_dict(self) -> dict:
        c = self.coefficients
        if self.kind == FOURIER:
            coef = [[float(z.real), float(z.imag)] for z in c]
        else:
            coef = [float(v) for v in c]
        return {"kind": self.kind, "segment": self.segment_label, "N": self.N, "coefficients": coef}


@dataclass
class SegmentModel:
    """F = known(t, zeta) + factor(t, zeta) * (real expansion) on one segment."""

    label: str
    kind: str
    N: int
    known: Callable[[np.ndarray, np.ndarray], np.ndarray]
    factor: Callable[[np.ndarray, np.ndarray], np.ndarray]
    t0: float = -1.0
    t1: float = 1.0

    def n_real(self) -> int:
        return 2 * self.N + 1 if self.kind == FOURIER else self.N + 1

    def template(self) -> BasisExpansion:
        return BasisExpansion(self.kind, self.label, np.zeros(self.N + 1), self.N, self.t0, self.t1)


class TraceModel:
    """Per-segment linear model of the boundary trace, tabulated on transform node tables."""

    def __init__(self, segments: Sequence[SegmentModel]):
        self.segments = list(segments)
        self.offsets = np.cumsum([0] + [s.n_real() for s in self.segments])

    @property
    def n_unknowns(self) -> int:
        return int(self.offsets[-1])

    def layout(self) -> list[tuple[str, int, str]]:
        out = []
        for seg in self.segments:
            if seg.kind == FOURIER:
                out.append((seg.label, 0, "re"))
                for n in range(1, seg.N + 1):
                    out += [(seg.label, n, "re"), (seg.label, n, "im")]
            else:
                out += [(seg.label, n, "re") for n in range(seg.N + 1)]
        return out

    def tabulate(self, table: BoundaryTable) -> tuple[np.ndarray, np.ndarray]:
        """(known values, column matrix) at the table nodes."""
        n = len(table)
        known = np.zeros(n, dtype=complex)
        cols = np.zeros((n, self.n_unknowns), dtype=complex)
        for j, seg in enumerate(self.segments):
            sl = table.segment_slice(j)
            t, z = table.t[sl], table.zeta[sl]
            known[sl] = seg.known(t, z)
            basis = seg.template().columns(t)
            cols[sl, self.offsets[j]:self.offsets[j + 1]] = np.asarray(seg.factor(t, z))[..., None] * basis
        return known, cols

    def expansions(self, x: np.ndarray) -> list[BasisExpansion]:
        return [BasisExpansion.from_real(s.kind, s.label, x[self.offsets[j]:self.offsets[j + 1]], s.N, s.t0, s.t1)
                for j, s in enumerate(self.segments)]

    def trace(self, x: np.ndarray, j: int, t) -> np.ndarray:
        seg = self.segments[j]
        t = np.asarray(t, dtype=float)
        z = self._zeta(j, t)
        u = seg.template().columns(t) @ x[self.offsets[j]:self.offsets[j + 1]]
        return seg.known(t, z) + seg.factor(t, z) * u

    _contour = None

    def bind(self, contour) -> "TraceModel":
        self._contour = contour
        return self

    def _zeta(self, j, t):
        return self._contour.segments[j](t)


class _Stacked:
    """Boundary data [known | columns] for one SpectralFunction evaluation of all unknowns."""

    def __init__(self, model: TraceModel):
        self.model = model
        self.n_basis = model.n_unknowns + 1

    def on_table(self, table):
        known, cols = self.model.tabulate(table)
        return np.concatenate([known[:, None], cols], axis=1)


class SolvedTrace:
    """Boundary data known + columns @ x, usable as transform input."""

    def __init__(self, model: TraceModel, x: np.ndarray):
        self.model = model
        self.x = np.asarray(x, dtype=float)

    def on_table(self, table):
        known, cols = self.model.tabulate(table)
        return known + cols @ self.x


@dataclass
class GlobalRelationSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    unknown_layout: list
    N: int
    N_k: int
    model: TraceModel
    map: ConformalMap
    shift: int
    q: PanelQuadrature
    k_values: np.ndarray
    extra_rows: list = field(default_factory=list)

    @property
    def shape(self):
        return self.matrix.shape

    def to_dict(self) -> dict:
        return {
            "N": self.N, "N_k": self.N_k, "rows": int(self.matrix.shape[0]), "columns": int(self.matrix.shape[1]),
            "layout": [list(map(str, e)) for e in self.unknown_layout], "extra_rows": list(self.extra_rows),
            "k_values": [float(k) for k in self.k_values],
        }


def default_Nk(n_real: int) -> int:
    return 2 * n_real


def assemble_system(model: TraceModel, map_: ConformalMap, q: PanelQuadrature | None, N: int, N_k: int,
                    shift: int = 1, k_values: Sequence[int] | None = None,
                    gauge: np.ndarray | None = None) -> GlobalRelationSystem:
    """Rows Re/Im of sum_c x_c rho_c(k) = -rho_known(k) at each collocation k."""
    q = q or PanelQuadrature()
    model.bind(map_.contour)
    ks = np.arange(-1, -N_k - 1, -1, dtype=float) if k_values is None else np.asarray(k_values, dtype=float)
    spec = SpectralFunction(map_, _Stacked(model), q, shift=shift, memo=False)
    R = spec(ks.astype(complex), PRINCIPAL)  # (n_k, 1 + n_unknowns)
    A_c = R[:, 1:]
    b_c = -R[:, 0]
    A = np.vstack([A_c.real, A_c.imag])
    b = np.concatenate([b_c.real, b_c.imag])
    extra = []
    if gauge is not None:
        scale = np.linalg.norm(A) / math.sqrt(A.shape[0])
        A = np.vstack([A, scale * gauge[None, :]])
        b = np.concatenate([b, [0.0]])
        extra.append("gauge")
    return GlobalRelationSystem(A, b, model.layout(), N, len(ks), model, map_, shift, q, ks, extra)


def solve_least_squares(system, rcond: float = 1e-12):
    """QR (column pivoting) on the column-equilibrated matrix.

    Accepts a GlobalRelationSystem or a (matrix, rhs) pair and returns the
    coefficients with the relative residual (absolute when b is negligible).
    Coefficients are BasisExpansions when the system carries a trace model,
    otherwise the raw vector.
    """
    if isinstance(system, tuple):
        A, b = (np.asarray(v, dtype=float) for v in system)
        model = None
    else:
        A, b, model = system.matrix, system.rhs, system.model
    if A.shape[0] < A.shape[1]:
        raise DomainError("system is underdetermined", rows=A.shape[0], columns=A.shape[1])
    norms = np.linalg.norm(A, axis=0)
    norms[norms == 0] = 1.0
    As = A / norms
    Q, R, piv = scipy.linalg.qr(As, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    rank = int(np.sum(d > rcond * d[0])) if d.size else 0
    if rank < A.shape[1]:
        raise IllConditionedError("least-squares matrix is numerically rank deficient", rank=rank,
                                  columns=A.shape[1])
    y = scipy.linalg.solve_triangular(R, Q.T @ b)
    xs = np.empty_like(y)
    xs[piv] = y
    x = xs / norms
    bn = np.linalg.norm(b)
    rn = float(np.linalg.norm(A @ x - b))
    # a (near) zero right-hand side makes the relative residual meaningless; report it absolutely
    res = rn / bn if bn > 1e-14 * np.linalg.norm(A) else rn
    if model is None:
        return x, res
    return model.expansions(x), res, x


# ------------------------------------------------------------------ problem builders


def ellipse_trace_model(a: float, b: float, m: int, N: int, manufactured: bool = False) -> TraceModel:
    """Mixed data from conj(zeta)^m (or from zeta^m when ``manufactured``).

    C1: F = Re g + i u(theta); C2: F = u(theta) + i Im g, with g the data function.
    """
    if m < 1 or N < 1:
        raise DomainError("need m >= 1 and N >= 1", m=m, N=N)

    def g(z):
        return z**m if manufactured else np.conj(z) ** m

    h = 0.5 * math.pi
    c1 = SegmentModel("C1", FOURIER, N, lambda t, z: g(z).real + 0j, lambda t, z: np.full(np.shape(t), 1j), -h, h)
    c2 = SegmentModel("C2", FOURIER, N, lambda t, z: 1j * g(z).imag, lambda t, z: np.ones(np.shape(t), complex),
                      h, 3 * h)
    return TraceModel([c1, c2])


def assemble_ellipse_system(m: int, map_: EllipseMap, contour=None, q: PanelQuadrature | None = None, N: int = 16,
                            N_k: int | None = None, manufactured: bool = False) -> GlobalRelationSystem:
    model = ellipse_trace_model(map_.a, map_.b, m, N, manufactured)
    n_real = model.n_unknowns
    N_k = default_Nk(n_real) if N_k is None else N_k
    if N_k <= 2 * N + 1:
        raise DomainError("need N_k > 2N + 1", N=N, N_k=N_k)
    return assemble_system(model, map_, q or PanelQuadrature(panels=24), N, N_k, shift=1)


def vortex_stream(z, z0: complex, gamma: float):
    """Im f_s = -Gamma/(2 pi) log|z - z0| (single valued)."""
    return -gamma / (2 * math.pi) * np.log(np.abs(np.asarray(z) - z0))


def vortex_trace_model(map_: ConformalMap, z0: complex, gamma: float, N: int) -> TraceModel:
    """Standard formulation: f = sum a_n T_n(s) - i Im f_s on every side/arc."""
    segs = []
    for seg in map_.contour:
        segs.append(SegmentModel(
            seg.label, CHEBYSHEV, N,
            lambda t, z: -1j * vortex_stream(z, z0, gamma),
            lambda t, z: np.ones(np.shape(t), complex), seg.t0, seg.t1))
    return TraceModel(segs)


def _check_interior(map_: ConformalMap, z0: complex):
    if not bool(map_.contour.contains(np.array([z0]))[0]):
        raise DomainError("vortex position must lie strictly inside the domain", z0=str(z0))


def _gauge_row(model: TraceModel) -> np.ndarray:
    g = np.zeros(model.n_unknowns)
    g[model.offsets[:-1]] = 1.0
    return g


def assemble_vortex_system(vertices, z0: complex, gamma: float, map_: ConformalMap, q: PanelQuadrature | None = None,
                           N: int = 16, N_k: int | None = None) -> GlobalRelationSystem:
    """Real constant in Re f is invisible to the global relation; a gauge row sum_j a_j0 = 0 removes it."""
    _check_interior(map_, z0)
    model = vortex_trace_model(map_, z0, gamma, N)
    N_k = default_Nk(model.n_unknowns) if N_k is None else N_k
    if N_k <= len(model.segments) * (N + 1):
        raise DomainError("need N_k > (number of sides)(N + 1)", N=N, N_k=N_k)
    return assemble_system(model, map_, q, N, N_k, shift=1, gauge=_gauge_row(model))


def vortex_velocity_singular(z, z0: complex, gamma: float):
    return gamma / (2j * math.pi) / (np.asarray(z) - z0)


def punctured_trace_model(pmap: PuncturedMap, z0: complex, gamma: float, N: int) -> TraceModel:
    """Trace of the analytic velocity correction g = w - w_s on each side.

    No normal flux means Im[w zeta'] = 0, so g zeta' = sum b_n T_n(s) - i Im[w_s zeta'].
    """
    segs = []
    for seg in pmap.contour:
        def known(t, z, seg=seg):
            dz = seg.velocity(t)
            return -1j * (vortex_velocity_singular(z, z0, gamma) * dz).imag / dz

        def factor(t, z, seg=seg):
            return 1.0 / seg.velocity(t)

        segs.append(SegmentModel(seg.label, CHEBYSHEV, N, known, factor, seg.t0, seg.t1))
    return TraceModel(segs)


def assemble_vortex_punctured_system(vertices, z0: complex, gamma: float, pmap: PuncturedMap,
                                     q: PanelQuadrature | None = None, N: int = 16,
                                     N_k: int | None = None) -> GlobalRelationSystem:
    """Rows k = -1..-N_k plus k = 0.

    The k <= -1 relations admit an extra point vortex at z0 (a simple pole in f);
    the k = 0 row sets its residue to zero.
    """
    _check_interior(pmap, z0)
    if abs(pmap.z0 - z0) > 1e-12 * max(1.0, abs(z0)):
        raise DomainError("puncture must coincide with the vortex position")
    model = punctured_trace_model(pmap, z0, gamma, N)
    N_k = default_Nk(model.n_unknowns) if N_k is None else N_k
    if N_k <= len(model.segments) * (N + 1):
        raise DomainError("need N_k > (number of sides)(N + 1)", N=N, N_k=N_k)
    ks = np.concatenate([[0.0], -np.arange(1, N_k + 1, dtype=float)])
    sysm = assemble_system(model, pmap, q, N, N_k, shift=0, k_values=ks)
    sysm.extra_rows.append("k=0")
    return sysm


def evaluate_boundary_trace(expansion: BasisExpansion, known_part: Callable, t, factor: complex | Callable = 1.0):
    """Imposed data plus factor times the solved expansion at segment parameter(s) t."""
    u = expansion.evaluate(t)
    k = known_part(np.asarray(t, dtype=float))
    fac = factor(np.asarray(t, dtype=float)) if callable(factor) else factor
    return k + fac * u


def system_json(system: GlobalRelationSystem, expansions, residual: float) -> str:
    d = system.to_dict()
    d["coefficients"] = [e.to_dict() for e in expansions]
    d["residual_norm"] = residual
    return json.dumps(d, sort_keys=True)
