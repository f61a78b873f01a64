"""Cauchy and Szego kernels, including punctured and pulled-back forms.

Kernels are vectorized over the boundary point ``zeta``; the target ``z`` is a
scalar.  The reproduction helpers integrate f * conj(kernel) against arc
length and serve as transform-independent oracles.
"""

from __future__ import annotations

import math
from typing import Callable, NamedTuple

import numpy as np

from .conformal import ConformalMap, MapValues, PuncturedMap
from .errors import DomainError, SingularityError
from .geometry import BoundaryContour, PanelQuadrature

KINDS = ("cauchy", "szego_disc", "szego_punctured_disc", "szego_pullback", "szego_punctured_domain")


class KernelEvaluation(NamedTuple):
    value: complex | np.ndarray
    kind: str


def _out(x):
    x = np.asarray(x)
    return complex(x) if x.ndim == 0 else x


def cauchy_kernel(zeta, z: complex, tangent):
    """-conj(T) / (2 pi i (conj(zeta) - conj(z)))."""
    zeta = np.asarray(zeta, dtype=complex)
    d = np.conj(zeta) - np.conj(z)
    if np.any(d == 0):
        raise SingularityError("Cauchy kernel evaluated at zeta = z")
    return _out(-np.conj(tangent) / (2j * math.pi * d))


def szego_disc(zeta, z: complex):
    zeta = np.asarray(zeta, dtype=complex)
    return _out(1.0 / (2 * math.pi * (1.0 - zeta * np.conj(z))))


def szego_punctured_disc(zeta, z: complex, n: int = 1):
    if z == 0:
        raise DomainError("punctured kernel is undefined at the puncture")
    if n < 0:
        raise DomainError("pole order must be non-negative", n=n)
    zeta = np.asarray(zeta, dtype=complex)
    p = zeta * np.conj(z)
    return _out(1.0 / (2 * math.pi * p**n * (1.0 - p)))


def _map_values(map_: ConformalMap, zeta) -> MapValues:
    zeta = np.asarray(zeta, dtype=complex)
    return map_.evaluate(zeta)


def szego_pullback(map_: ConformalMap, zeta, z: complex, *, boundary: MapValues | None = None):
    """conj(sqrt Phi'(z)) S_disc(Phi(zeta), Phi(z)) sqrt Phi'(zeta)."""
    bz = boundary if boundary is not None else _map_values(map_, zeta)
    if not np.all(np.isfinite(bz.log_dphi)):
        raise SingularityError("kernel evaluated at a corner where Phi' is singular")
    vz = map_.evaluate(np.array([z]))
    s = szego_disc(bz.phi, complex(vz.phi[0]))
    return _out(np.conj(vz.sqrt_dphi[0]) * s * bz.sqrt_dphi)


def szego_punctured_domain(map_: ConformalMap, z0: complex, n: int, zeta, z: complex,
                           *, composed: PuncturedMap | None = None):
    """conj((M o Phi)(z))^-n S_D(zeta, z) (M o Phi)(zeta)^-n with M sending Phi(z0) to 0.

    Conjugation sits on the z factor so that the disc case is exactly
    ``szego_punctured_disc`` and the kernel reproduces functions with a pole
    of order n at z0.
    """
    if z == z0:
        raise SingularityError("kernel evaluated at the puncture")
    pm = composed if composed is not None else PuncturedMap(map_, z0)
    zeta = np.asarray(zeta, dtype=complex)
    mz = complex(pm.forward(z))
    mzeta = pm.evaluate(zeta).phi
    return _out(np.conj(mz) ** (-n) * szego_pullback(map_, zeta, z) * mzeta ** (-n))


def _nodes(contour: BoundaryContour, q: PanelQuadrature):
    zs, ds = [], []
    for seg in contour:
        t, w = q.rule(seg)
        zs.append(seg(t))
        ds.append(w * seg.velocity(t))
    return np.concatenate(zs), np.concatenate(ds)


def reproduce(kernel: Callable[[np.ndarray, np.ndarray], np.ndarray], f: Callable, contour: BoundaryContour,
              q: PanelQuadrature | None = None) -> complex:
    """int f(zeta) conj(kernel(zeta, tangent)) d sigma over the contour."""
    zeta, dz = _nodes(contour, q or PanelQuadrature())
    dsig = np.abs(dz)
    tangent = dz / dsig
    return complex(np.sum(f(zeta) * np.conj(kernel(zeta, tangent)) * dsig))


def cauchy_reproduction(f, z, contour, q=None) -> complex:
    return reproduce(lambda s, t: cauchy_kernel(s, z, t), f, contour, q)


def szego_reproduction(map_: ConformalMap, f, z, q=None) -> complex:
    return reproduce(lambda s, t: szego_pullback(map_, s, z), f, map_.contour, q)


def punctured_reproduction(map_: ConformalMap, z0, n, f, z, q=None) -> complex:
    pm = PuncturedMap(map_, z0)
    return reproduce(lambda s, t: szego_punctured_domain(map_, z0, n, s, z, composed=pm), f, map_.contour, q)
