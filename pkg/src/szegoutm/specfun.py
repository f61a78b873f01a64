"""Elliptic special functions and branch-controlled complex powers.

Only what the ellipse-to-disc map and the spectral powers need: the complete
integral K by the arithmetic-geometric mean, the nome relation, Jacobi sn (with
cn and dn as by-products) for complex arguments, and ``complex_pow`` with an
explicit branch cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularityError

TWO_PI = 2.0 * math.pi

# descending Landen stops once the modulus drops below this
_LANDEN_EPS = 1e-16
# arguments this close to the cut ray are snapped to one side
_CUT_SNAP = 1e-13


@dataclass(frozen=True)
class EllipticParams:
    """Parameter ``m``, the quarter periods ``K``/``Kprime`` and the nome ``q``.

    ``mc = 1 - m`` is kept separately so moduli close to 1 lose no precision.
    """

    m: float
    K: float
    Kprime: float
    q: float
    mc: float


@dataclass(frozen=True)
class BranchCut:
    """Arguments are reduced to the half-open interval (base, base + 2*pi]."""

    base_angle: float = -math.pi

    def reduce(self, angle):
        a = np.asarray(angle, dtype=float)
        top = self.base_angle + TWO_PI
        r = top - np.mod(top - a, TWO_PI)
        # snap values sitting on the cut ray to the top side
        r = np.where(np.abs(r - self.base_angle) < _CUT_SNAP, top, r)
        r = np.where(np.abs(r - top) < _CUT_SNAP, top, r)
        return r if r.ndim else float(r)

    def distance(self, angle: float) -> float:
        """Angular distance from ``angle`` to the cut ray."""
        r = self.reduce(angle)
        return float(min(r - self.base_angle, self.base_angle + TWO_PI - r))


PRINCIPAL = BranchCut(-math.pi)
POSITIVE = BranchCut(0.0)


def _agm(a: float, b: float) -> float:
    for _ in range(64):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def elliptic_K(m: float, mc: float | None = None) -> float:
    """Complete elliptic integral of the first kind, K(m) = pi / (2 agm(1, sqrt(1-m)))."""
    if mc is None:
        mc = 1.0 - m
    if not (0.0 <= m < 1.0) or mc <= 0.0:
        raise DomainError("elliptic parameter must satisfy 0 <= m < 1", m=m)
    return math.pi / (2.0 * _agm(1.0, math.sqrt(mc)))


def elliptic_params(m: float, mc: float | None = None) -> EllipticParams:
    if mc is None:
        mc = 1.0 - m
    K = elliptic_K(m, mc)
    if m == 0.0:
        return EllipticParams(0.0, K, math.inf, 0.0, 1.0)
    Kp = elliptic_K(mc, m)
    return EllipticParams(m, K, Kp, math.exp(-math.pi * Kp / K), mc)


def _theta_constants(q: float) -> tuple[float, float, float]:
    """theta_2, theta_3, theta_4 at zero argument, summed to machine precision."""
    t2 = 0.0
    t3 = 1.0
    t4 = 1.0
    n = 0
    while True:
        a = q ** ((n + 0.5) ** 2)
        t2 += 2.0 * a
        if n >= 1:
            b = q ** (n * n)
            t3 += 2.0 * b
            t4 += 2.0 * b * (-1) ** n
        else:
            b = 1.0
        n += 1
        if a < 1e-18 * t2 and b < 1e-18:
            break
    return t2, t3, t4


def nome_to_parameter(q: float) -> EllipticParams:
    """Invert q = exp(-pi K'/K) through the theta-constant identities.

    m = (theta_2/theta_3)^4 and 1 - m = (theta_4/theta_3)^4; both are summed
    directly so neither loses accuracy to cancellation.
    """
    if not (0.0 <= q < 1.0):
        raise DomainError("nome must satisfy 0 <= q < 1", q=q)
    if q == 0.0:
        return elliptic_params(0.0, 1.0)
    t2, t3, t4 = _theta_constants(q)
    m = (t2 / t3) ** 4
    mc = (t4 / t3) ** 4
    p = elliptic_params(m, mc)
    return EllipticParams(p.m, p.K, p.Kprime, q, p.mc)


def _sncndn_real(u, m: float, mc: float):
    """sn, cn, dn for real ``u`` by descending Landen (AGM) transformation."""
    u = np.asarray(u, dtype=float)
    if m < _LANDEN_EPS:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if mc < _LANDEN_EPS:
        sech = 1.0 / np.cosh(u)
        return np.tanh(u), sech, sech
    a_seq = [1.0]
    c_seq = [math.sqrt(m)]
    a, b = 1.0, math.sqrt(mc)
    while abs(c_seq[-1]) > _LANDEN_EPS:
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    n = len(a_seq) - 1
    phi = (2.0**n) * a_seq[n] * u
    for j in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(np.clip(c_seq[j] / a_seq[j] * np.sin(phi), -1.0, 1.0)))
    sn = np.sin(phi)
    cn = np.cos(phi)
    dn = np.sqrt(mc + m * cn * cn)
    return sn, cn, dn


def jacobi_sncndn(u, m: float, mc: float | None = None):
    """sn, cn, dn(u | m) for complex ``u``.

    Real and imaginary parts are handled separately (Jacobi's imaginary
    transformation maps the imaginary part to the complementary parameter) and
    recombined with the addition theorems.
    """
    if mc is None:
        mc = 1.0 - m
    if not (0.0 <= m < 1.0) or mc <= 0.0:
        raise DomainError("elliptic parameter must satisfy 0 <= m < 1", m=m)
    u = np.asarray(u, dtype=complex)
    s, c, d = _sncndn_real(u.real, m, mc)
    s1, c1, d1 = _sncndn_real(u.imag, mc, m)
    den = c1 * c1 + m * s * s * s1 * s1
    if np.any(np.abs(den) < 1e-300):
        raise SingularityError("sn evaluated at a pole", m=m)
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    return sn, cn, dn


def jacobi_sn(u, m: float, mc: float | None = None):
    sn = jacobi_sncndn(u, m, mc)[0]
    return sn if sn.ndim else complex(sn)


def complex_pow(w, k, cut: BranchCut = PRINCIPAL):
    """exp(k * (log|w| + i arg_cut(w))) with the argument reduced by ``cut``.

    Broadcasts over ``w`` and ``k``.
    """
    w = np.asarray(w, dtype=complex)
    k = np.asarray(k, dtype=complex)
    zero = w == 0
    if np.any(zero):
        kk = np.broadcast_to(k, np.broadcast(w, k).shape)
        zz = np.broadcast_to(zero, kk.shape)
        if np.any(kk[zz].real <= 0):
            raise SingularityError("0 raised to a power with non-positive real part")
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(np.abs(w)) + 1j * cut.reduce(np.angle(w))
        out = np.exp(k * logw)
    if np.any(zero):
        out = np.where(np.broadcast_to(zero, out.shape), 0.0, out)
    return out if out.ndim else complex(out)


def complex_asin(z):
    """Principal arcsine (real part in [-pi/2, pi/2])."""
    out = np.arcsin(np.asarray(z, dtype=complex))
    return out if out.ndim else complex(out)
