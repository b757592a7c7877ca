"""Exterior rational conformal map: parameter solve, inverse, measure.

The degree-2 exterior map f(zeta) = r*zeta + u + v/(zeta - A) sends
{|zeta| > 1} onto the droplet exterior.  Its parameters (r, v, A) with
u = v/A are in bijection with the moment data (beta, a, t0) on the
simply connected regime; this module provides both directions plus
boundary sampling and the conformal measure 1/|f'|.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from shapely.geometry import LineString, Point, Polygon

from .errors import (CuspSingular, DegenerateMap, InteriorPoint,
                     NoConvergence, RegimeViolation, SelfIntersection,
                     UnivalenceLoss)

_UNIVALENCE_MARGIN = 1e-10


@dataclass(frozen=True)
class RationalMap:
    """Exterior map f(zeta) = r*zeta + u + v/(zeta - A), |A| < 1, r > 0.

    ``univalent`` is None until a univalence check has been run.
    """

    r: float
    u: complex
    v: complex
    A: complex
    univalent: bool | None = None

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"r must be positive, got {self.r}")
        if abs(self.A) >= 1:
            raise ValueError(f"|A| must be < 1, got {abs(self.A)}")

    def critical_points(self):
        """Zeros of f', namely A +- sqrt(v/r)."""
        s = cmath.sqrt(self.v / self.r)
        return (self.A + s, self.A - s)


@dataclass(frozen=True)
class Regime:
    tag: str  # "SimplyConnected" | "DoublyConnected"
    R1: float
    R2: float


@dataclass(frozen=True)
class BoundarySamples:
    """Equispaced boundary discretization with the conformal measure."""

    theta: np.ndarray
    z: np.ndarray
    measure: np.ndarray


def classify_regime(beta: float, a: complex) -> Regime:
    """Regime from the two radii R1 = sqrt(beta), R2 = sqrt((1+2*beta)/2)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if a == 0:
        raise ValueError("a must be nonzero")
    r1 = math.sqrt(beta)
    r2 = math.sqrt((1.0 + 2.0 * beta) / 2.0)
    tag = "DoublyConnected" if abs(a) + r1 <= r2 else "SimplyConnected"
    return Regime(tag=tag, R1=r1, R2=r2)


def map_forward(m: RationalMap, zeta):
    """f(zeta) = r*zeta + u + v/(zeta - A)."""
    zeta = np.asarray(zeta, dtype=complex)
    out = m.r * zeta + m.u + m.v / (zeta - m.A)
    return complex(out) if out.ndim == 0 else out


def map_derivative(m: RationalMap, zeta):
    """f'(zeta) = r - v/(zeta - A)^2."""
    zeta = np.asarray(zeta, dtype=complex)
    out = m.r - m.v / (zeta - m.A) ** 2
    return complex(out) if out.ndim == 0 else out


def forward_params(m: RationalMap):
    """Moment data (beta, a, t0) represented by the map.

    For the pure disk (v = 0, A = 0) beta = 0 and ``a`` is returned as
    complex infinity (the geometric family degenerates; all t_k vanish).
    """
    if m.A == 0 and m.v != 0:
        raise DegenerateMap("A = 0 with v != 0: u = v/A undefined")
    t0 = m.r ** 2 - abs(m.v) ** 2 / (1.0 - abs(m.A) ** 2) ** 2
    if m.A == 0:
        return 0.0, complex(math.inf, 0.0), t0
    Abar = m.A.conjugate()
    beta_c = t0 - m.r ** 2 + m.r * m.v.conjugate() / Abar ** 2
    a = m.r / Abar + m.v / m.A + m.v * Abar / (1.0 - abs(m.A) ** 2)
    return beta_c.real, a, t0


def _scalar_g(r, beta, alpha, t0):
    """Scalar residual after eliminating (v, A) from the real system.

    The third (a-) equation gives alpha*A = r + v/D with D = 1 - A^2,
    the area equation gives v = sign(beta) D sqrt(r^2 - t0), and
    subtracting the beta equation from the area equation leaves
    g(r) = r^2 - r*v/A^2 - (t0 - beta).  Negative beta picks the branch
    whose droplet is pushed away from a (v < 0).
    """
    sgn = 1.0 if beta >= 0 else -1.0
    s = np.sqrt(np.maximum(r * r - t0, 0.0))
    A = (r + sgn * s) / alpha
    D = 1.0 - A * A
    v = sgn * D * s
    g = r * r - r * v / np.where(A == 0, 1.0, A * A) - (t0 - beta)
    return g, A, v


def _solve_real(beta, alpha, t0):
    """Smallest admissible root of the scalar residual (r, v, A all real).

    Two roots generally exist below the cusp time; the smaller one
    continues the disk limit and is the univalent solution.  At the
    cusp they merge (fold); past it no real solution remains.
    """
    from scipy.optimize import brentq, minimize_scalar

    r_lo = math.sqrt(t0)
    if beta >= 0:
        r_hi = (alpha * alpha + t0) / (2.0 * alpha)
        if r_hi <= r_lo:
            raise NoConvergence(
                f"|a| = {alpha:.6g} too small for a droplet of area "
                f"t0 = {t0:.6g}")
    else:
        r_hi = 3.0 * r_lo + alpha

    def g_of(rr):
        return _scalar_g(rr, beta, alpha, t0)[0]

    r = None
    lo_bound = r_lo * (1 + 1e-14)
    for stretch in range(4):
        grid = np.linspace(lo_bound, r_hi * (1 - 1e-12), 8192)
        g, A, _ = _scalar_g(grid, beta, alpha, t0)
        valid = (A > 0.0) & (A < 1.0)
        flips = np.where((np.sign(g[:-1]) != np.sign(g[1:]))
                         & valid[:-1] & valid[1:])[0]
        if len(flips) > 0:
            i = int(flips[0])
            r = brentq(g_of, grid[i], grid[i + 1], xtol=1e-16, rtol=8.9e-16)
            break
        if beta >= 0:
            break
        r_hi *= 2.0
    if r is None:
        # cusp-marginal double root: accept the minimum if it grazes zero
        grid = np.linspace(lo_bound, r_hi * (1 - 1e-12), 8192)
        g, A, _ = _scalar_g(grid, beta, alpha, t0)
        g = np.where((A > 0.0) & (A < 1.0), np.abs(g), np.inf)
        i = int(np.argmin(g))
        if not np.isfinite(g[i]):
            raise NoConvergence(
                f"no admissible solution branch for (beta={beta}, "
                f"|a|={alpha}, t0={t0})")
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda rr: abs(g_of(rr)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-15})
        scale = max(1.0, abs(t0 - beta), abs(beta))
        if res.fun > 1e-10 * scale:
            raise NoConvergence(
                f"no simply connected solution for (beta={beta}, "
                f"|a|={alpha}, t0={t0}); the droplet is past its cusp time")
        r = float(res.x)
    _, A, v = _scalar_g(r, beta, alpha, t0)
    return float(r), float(v), float(A)


def solve_params(beta: float, a: complex, t0: float,
                 check_univalence: bool = True) -> RationalMap:
    """Map parameters reproducing the correspondence data (beta, a, t0).

    Solves the real three-parameter system with ``a`` rotated onto the
    positive axis, then rotates back (A -> A e^{i phi}, v -> v e^{2 i phi},
    u = v/A).  Negative ``beta`` selects the v < 0 branch; see
    ``droplet_map`` for why the weight's droplet lives there.
    Univalence loss is reported via the ``univalent`` flag on the
    returned map, with a warning, never an exception.
    """
    if t0 <= 0:
        raise ValueError("t0 must be positive")
    if beta == 0.0:
        r = math.sqrt(t0)
        m = RationalMap(r=r, u=0j, v=0j, A=0j)
        return replace(m, univalent=True)
    regime = classify_regime(abs(beta), a)
    if regime.tag != "SimplyConnected":
        raise RegimeViolation(
            f"|a| + R1 = {abs(a) + regime.R1:.6g} <= R2 = {regime.R2:.6g}")

    alpha = abs(a)
    phi = cmath.phase(a)
    r, v, A = _solve_real(beta, alpha, t0)

    rot = cmath.exp(1j * phi)
    v_c = v * rot * rot
    A_c = A * rot
    m = RationalMap(r=float(r), u=v_c / A_c, v=v_c, A=A_c)

    # confirm the roundtrip before reporting success
    beta_b, a_b, t0_b = forward_params(m)
    resid = max(abs(beta_b - beta) / max(1.0, abs(beta)),
                abs(a_b - a) / max(1.0, abs(a)),
                abs(t0_b - t0) / max(1.0, abs(t0)))
    if resid > 1e-11:
        raise NoConvergence(f"roundtrip residual {resid:.3g} too large")

    if check_univalence:
        flag = is_univalent(m)
        if not flag:
            warnings.warn(
                f"solved map for (beta={beta}, a={a}, t0={t0}) is not "
                "univalent (critical point on/outside the unit circle)",
                UserWarning, stacklevel=2)
        m = replace(m, univalent=flag)
    return m


def droplet_map(beta: float, a: complex, t0: float,
                check_univalence: bool = True) -> RationalMap:
    """Exterior map of the droplet carrying the moments t_k = -(beta/k) a^-k.

    The parameter-correspondence equations solved by ``solve_params``
    produce, for positive beta, a domain whose contour moments come out
    as +(beta/k) a^-k, the opposite sign from the geometric weight
    family (direct check: integrate conj(z) z^-k dz/(2 pi i k) over the
    solved boundary).  The weight exp(-N W) is only confining for the
    repulsive sign, so the droplet matching the weight data is the
    v < 0 solution branch, i.e. solve_params with beta negated.  The
    droplet is pushed away from a and its branch points form a
    conjugate pair for real a.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    return solve_params(-beta, a, t0, check_univalence=check_univalence)


def is_univalent(m: RationalMap, samples: int = 4096) -> bool:
    """Critical points strictly inside the disk plus a simple boundary."""
    c1, c2 = m.critical_points()
    if max(abs(c1), abs(c2)) >= 1.0 - _UNIVALENCE_MARGIN:
        return False
    theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    z = map_forward(m, np.exp(1j * theta))
    ring = LineString(np.column_stack([z.real, z.imag]))
    return bool(ring.is_simple)


def map_inverse(m: RationalMap, z: complex) -> complex:
    """Exterior inverse: the root of r*zeta^2 + (u-z-rA)*zeta + (zA-uA+v).

    Picks the root with |zeta| >= 1 (unique for univalent maps); at a
    vanishing discriminant returns the double root.  Raises
    InteriorPoint when both roots are strictly inside the unit disk.
    """
    z = complex(z)
    qa = complex(m.r)
    qb = m.u - z - m.r * m.A
    qc = z * m.A - m.u * m.A + m.v
    if qc == 0 and qb == 0:
        return 0j
    disc = qb * qb - 4.0 * qa * qc
    scale = abs(qb) ** 2 + 4.0 * abs(qa) * abs(qc)
    s = cmath.sqrt(disc)
    if abs(disc) <= 1e-14 * scale:
        return -qb / (2.0 * qa)
    # stable quadratic: avoid cancellation in -b +- s
    if (qb.conjugate() * s).real > 0:
        s = -s
    q = -0.5 * (qb - s)
    roots = [q / qa]
    roots.append(qc / q if q != 0 else -qb / qa - roots[0])
    roots.sort(key=lambda w: (abs(w), w.real), reverse=True)
    best = roots[0]
    if abs(best) < 1.0 - 1e-9:
        raise InteriorPoint(f"z = {z} maps inside the droplet")
    return best


def conformal_measure(m: RationalMap, z: complex) -> float:
    """|d f^{-1}/dz| = 1/|f'(zeta)| for z on the boundary."""
    zeta = map_inverse(m, z)
    if abs(abs(zeta) - 1.0) > 1e-8:
        raise ValueError(f"z = {z} is not on the boundary (|zeta| = {abs(zeta)})")
    fp = map_derivative(m, zeta)
    if abs(fp) <= 1e-12 * m.r:
        raise CuspSingular(f"f' vanishes at zeta = {zeta}")
    return 1.0 / abs(fp)


def sample_boundary(m: RationalMap, M: int) -> BoundarySamples:
    """M equispaced boundary samples f(e^{i theta}) with their measure.

    Raises CuspSingular if a node hits a critical point and
    SelfIntersection if the sampled polyline is not simple.
    """
    if M < 16:
        raise ValueError("need at least 16 samples")
    theta = 2.0 * np.pi * np.arange(M) / M
    zeta = np.exp(1j * theta)
    z = map_forward(m, zeta)
    fp = map_derivative(m, zeta)
    fp_abs = np.abs(fp)
    bad = fp_abs <= 1e-12 * m.r
    if np.any(bad):
        idx = int(np.argmax(bad))
        raise CuspSingular(f"f' vanishes at theta = {theta[idx]:.6g}")
    ring = LineString(np.column_stack([z.real, z.imag]))
    if not ring.is_simple:
        raise SelfIntersection(f"boundary polyline self-intersects at M = {M}")
    return BoundarySamples(theta=theta, z=z, measure=1.0 / fp_abs)


def boundary_polygon(m: RationalMap, M: int = 1024) -> Polygon:
    """Shapely polygon of the sampled droplet boundary."""
    theta = 2.0 * np.pi * np.arange(M) / M
    z = map_forward(m, np.exp(1j * theta))
    return Polygon(np.column_stack([z.real, z.imag]))


def polyline_area(z) -> float:
    """Shoelace area of a closed polyline given as complex vertices."""
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    return 0.5 * abs(float(np.sum(x * yn - xn * y)))


def contains_point(polygon: Polygon, z: complex) -> bool:
    return polygon.contains(Point(z.real, z.imag))
