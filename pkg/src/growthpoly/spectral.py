"""Algebraic curve of the Cauchy transform, critical trajectory, diagnostics.

For the degree-2 exterior map the Schwarz function S (S(z) = conj(z) on
the boundary) satisfies a quadratic with rational coefficients obtained
by eliminating the map variable between z = f(zeta) and
S = fbar(1/zeta).  Shifting by V' gives the quadratic for the Cauchy
transform y = S - V'.  The critical trajectory is the inner zero-level
component of Phi(z) = Re integral from z1 of (y_+ - y_-), extracted by
marching squares on a field built from a globally single-valued square
root branch (cut along the two external rays of the branch-point line),
then polished with the analytic gradient (Phi_x, Phi_y) = (Re g, -Im g).
"""

from __future__ import annotations

import cmath
import math
import warnings
from collections import deque
from dataclasses import dataclass

import gmpy2
import numpy as np
from contourpy import contour_generator
from gmpy2 import mpc
from shapely.geometry import Point, Polygon

from . import hp
from .conformal import BoundarySamples, RationalMap, map_derivative, map_forward
from .errors import (BranchPointHit, CuspSingular, DegenerateElimination,
                     NoInteriorComponent, PathCrossesCut)
from .moments import Potential
from .orthopoly import OrthoBasis, eval_P_log

_P = np.polynomial.polynomial


@dataclass(frozen=True)
class RationalCoeff:
    """Polynomial fraction; coefficients ascending, denominator usually [1]."""

    num: np.ndarray
    den: np.ndarray

    def __call__(self, z):
        return _P.polyval(z, self.num) / _P.polyval(z, self.den)


@dataclass(frozen=True)
class AlgebraicCurve:
    """A(z) y^2 + B(z) y + C(z) = 0 for the Cauchy transform branches."""

    coeff_a: RationalCoeff
    coeff_b: RationalCoeff
    coeff_c: RationalCoeff
    source_map: RationalMap
    beta: float
    a: complex
    t0: float
    z1: complex
    z2: complex
    sqrt_free: np.ndarray   # h with disc = (z-z1)(z-z2) h(z)^2
    sigma: float            # overall square-root sign convention
    poles: np.ndarray       # zeros of A(z) where the jump blows up

    def residual(self, z, y):
        """|A y^2 + B y + C| / scale at (z, y)."""
        av, bv, cv = (self.coeff_a(z), self.coeff_b(z), self.coeff_c(z))
        num = abs(av * y * y + bv * y + cv)
        scale = abs(av * y * y) + abs(bv * y) + abs(cv) + 1e-300
        return num / scale


@dataclass(frozen=True)
class BranchState:
    """Continuation token for the square-root branch along a path."""

    z: complex
    value: complex


@dataclass(frozen=True)
class Trajectory:
    """Critical trajectory polyline with the jump density along it."""

    points: np.ndarray
    rho_s: np.ndarray
    z1: complex
    z2: complex
    arc_length: float
    mass: float


# --- bivariate polynomial helpers (lists of lists of mpc) -------------------

def _bp_mul(p, q):
    out = [[mpc(0)] * (len(p[0]) + len(q[0]) - 1)
           for _ in range(len(p) + len(q) - 1)]
    for i, row in enumerate(p):
        for j, pij in enumerate(row):
            if pij == 0:
                continue
            for k, qrow in enumerate(q):
                for l, qkl in enumerate(qrow):
                    if qkl == 0:
                        continue
                    out[i + k][j + l] += pij * qkl
    return out


def _bp_add(p, q, sign=1):
    rows = max(len(p), len(q))
    cols = max(len(p[0]), len(q[0]))
    out = [[mpc(0)] * cols for _ in range(rows)]
    for i, row in enumerate(p):
        for j, v in enumerate(row):
            out[i][j] += v
    for i, row in enumerate(q):
        for j, v in enumerate(row):
            out[i][j] += sign * v
    return out


def _det(mat):
    n = len(mat)
    if n == 1:
        return mat[0][0]
    out = None
    for col in range(n):
        entry = mat[0][col]
        if all(all(v == 0 for v in row) for row in entry):
            continue
        minor = [[mat[r][c] for c in range(n) if c != col]
                 for r in range(1, n)]
        term = _bp_mul(entry, _det(minor))
        if col % 2 == 1:
            term = [[-v for v in row] for row in term]
        out = term if out is None else _bp_add(out, term)
    if out is None:
        return [[mpc(0)]]
    return out


def _poly_trim(c, rel=1e-10):
    c = np.asarray(c, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        return np.zeros(1, dtype=complex)
    keep = c.size
    while keep > 1 and abs(c[keep - 1]) <= rel * scale:
        keep -= 1
    return c[:keep]


def build_curve(m: RationalMap, p: Potential) -> AlgebraicCurve:
    """Quadratic A y^2 + B y + C = 0 for y = S(z) - V'(z).

    Eliminates zeta by a Sylvester resultant (coefficient arithmetic in
    gmpy2), shifts the Schwarz branch by the rational V' = beta/(z - a),
    clears (z - a)^2, and normalizes A's numerator to be monic.
    """
    if not p.is_geometric:
        raise DegenerateElimination("curve construction needs geometric data")
    if abs(m.v) <= 1e-13 * max(1.0, m.r):
        raise DegenerateElimination(
            "disk map (v = 0): the Cauchy transform is t0/z, degree 1")
    if abs(m.u - m.v / m.A) > 1e-9 * (abs(m.u) + 1.0):
        raise ValueError("curve construction assumes u = v/A")
    beta = p.beta
    av = p.a

    with hp.precision(40):
        r = mpc(m.r)
        u = mpc(m.u)
        v = mpc(m.v)
        A = mpc(m.A)
        ub = mpc(m.u.conjugate())
        vb = mpc(m.v.conjugate())
        Ab = mpc(m.A.conjugate())
        one = [[mpc(1)]]

        # P(zeta; z): r zeta^2 + (u - z - rA) zeta + (zA - uA + v)
        p2 = [[r]]
        p1 = [[u - r * A], [mpc(-1)]]          # rows: z powers
        p0 = [[v - u * A], [A]]
        # Q(zeta; S): (Ab S + vb - Ab ub) zeta^2 + (ub - S - r Ab) zeta + r
        q2 = [[vb - Ab * ub, Ab]]              # cols: S powers
        q1 = [[ub - r * Ab, mpc(-1)]]
        q0 = [[r]]
        zero = [[mpc(0)]]

        syl = [
            [p2, p1, p0, zero],
            [zero, p2, p1, p0],
            [q2, q1, q0, zero],
            [zero, q2, q1, q0],
        ]
        res = _det(syl)

        # a_k(z) = coefficient polynomial of S^k (rows: z powers)
        acoef = []
        for k in range(3):
            col = [row[k] if k < len(row) else mpc(0) for row in res]
            acoef.append(np.array([hp.to_complex(c) for c in col]))
        a0, a1, a2 = (_poly_trim(acoef[0]), _poly_trim(acoef[1]),
                      _poly_trim(acoef[2]))

    if np.max(np.abs(a2)) <= 1e-12 * max(np.max(np.abs(a1)),
                                         np.max(np.abs(a0)), 1e-30):
        raise DegenerateElimination("resultant is not quadratic in S")

    # shift S = y + beta/(z - a) and clear (z - a)^2
    lin = np.array([-av, 1.0], dtype=complex)       # (z - a)
    lin2 = _P.polymul(lin, lin)
    A_poly = _P.polymul(a2, lin2)
    B_poly = _P.polyadd(_P.polymul(a1, lin2),
                        2.0 * beta * _P.polymul(a2, lin))
    C_poly = _P.polyadd(_P.polyadd(_P.polymul(a0, lin2),
                                   beta * _P.polymul(a1, lin)),
                        beta * beta * a2)
    A_poly, B_poly, C_poly = (_poly_trim(A_poly), _poly_trim(B_poly),
                              _poly_trim(C_poly))
    lead = A_poly[-1]
    A_poly, B_poly, C_poly = A_poly / lead, B_poly / lead, C_poly / lead

    z1, z2 = branch_points(m)
    _, _, t0 = _map_area(m)
    sqrt_free, sigma = _factor_discriminant(A_poly, B_poly, C_poly, z1, z2, av)
    poles = _P.polyroots(A_poly) if len(A_poly) > 1 else np.array([])

    curve = AlgebraicCurve(
        coeff_a=RationalCoeff(A_poly, np.array([1.0 + 0j])),
        coeff_b=RationalCoeff(B_poly, np.array([1.0 + 0j])),
        coeff_c=RationalCoeff(C_poly, np.array([1.0 + 0j])),
        source_map=m, beta=beta, a=av, t0=t0, z1=z1, z2=z2,
        sqrt_free=sqrt_free, sigma=1.0, poles=np.asarray(poles))
    sigma = _reference_sign(curve)
    return AlgebraicCurve(
        coeff_a=curve.coeff_a, coeff_b=curve.coeff_b, coeff_c=curve.coeff_c,
        source_map=m, beta=beta, a=av, t0=t0, z1=z1, z2=z2,
        sqrt_free=sqrt_free, sigma=sigma, poles=curve.poles)


def _map_area(m):
    t0 = m.r ** 2 - abs(m.v) ** 2 / (1.0 - abs(m.A) ** 2) ** 2
    return m.r, m.v, t0


def branch_points(m: RationalMap):
    """Closed-form branch points v/A + A r +- 2 sqrt(r v) of f^{-1}.

    Ordered by real part, then imaginary part.
    """
    if m.A == 0:
        raise ValueError("branch points need A != 0")
    base = m.v / m.A + m.A * m.r
    off = 2.0 * cmath.sqrt(m.r * complex(m.v))
    pair = sorted([base + off, base - off], key=lambda w: (w.real, w.imag))
    return pair[0], pair[1]


def _deflate(poly, root, scale):
    """Synthetic division by (z - root); None if the remainder is large."""
    quot, rem = _P.polydiv(poly, np.array([-root, 1.0], dtype=complex))
    if np.max(np.abs(rem)) > 1e-8 * scale:
        return None
    return quot


def _factor_discriminant(A_poly, B_poly, C_poly, z1, z2, a):
    """disc = (z - z1)(z - z2) h(z)^2; returns h (with the leading scale).

    Known factors ((z - a) powers and the branch points) are deflated
    by verified synthetic division before rooting the leftover, which
    keeps multiple roots from being split by rounding.
    """
    disc = _P.polysub(_P.polymul(B_poly, B_poly),
                      4.0 * _P.polymul(A_poly, C_poly))
    disc = _poly_trim(disc, rel=1e-9)
    scale = np.max(np.abs(disc))

    work = disc
    a_mult = 0
    while len(work) > 1:
        quot = _deflate(work, a, scale)
        if quot is None:
            break
        work = quot
        a_mult += 1
    if a_mult % 2 != 0:
        a_mult -= 1
        work = _P.polymul(work, np.array([-a, 1.0], dtype=complex))
    for target in (z1, z2):
        quot = _deflate(work, target, scale)
        if quot is None:
            raise DegenerateElimination(
                f"branch point {target} is not a discriminant root")
        work = quot
    work = _poly_trim(work, rel=1e-9)
    if (len(work) - 1) % 2 != 0:
        raise DegenerateElimination("discriminant has odd cofactor degree")

    reps = []
    if len(work) > 1:
        roots_left = list(_P.polyroots(work))
        while roots_left:
            w = roots_left.pop(0)
            idx = int(np.argmin([abs(w2 - w) for w2 in roots_left]))
            w2 = roots_left.pop(idx)
            reps.append(0.5 * (w + w2))
    h = np.array([cmath.sqrt(complex(work[-1]))], dtype=complex)
    for w in reps:
        h = _P.polymul(h, np.array([-w, 1.0], dtype=complex))
    for _ in range(a_mult // 2):
        h = _P.polymul(h, np.array([-a, 1.0], dtype=complex))
    # verify the factorization
    rebuilt = _P.polymul(_P.polymul(h, h),
                         _P.polymul(np.array([-z1, 1.0]),
                                    np.array([-z2, 1.0])))
    rebuilt = np.concatenate([rebuilt,
                              np.zeros(max(0, len(disc) - len(rebuilt)))])
    diff = np.max(np.abs(rebuilt[:len(disc)] - disc))
    if diff > 1e-6 * scale:
        raise DegenerateElimination(
            f"discriminant does not factor as expected (residual {diff:.2e})")
    return h, 1.0


def _sqrt_disc(curve, z):
    """Single-valued sqrt of the discriminant, cut on the external rays.

    sqrt((z-z1)(z-z2)) = i (z1-z2)/2 sqrt(1 - m^2) with
    m = (2z - z1 - z2)/(z1 - z2); the principal sqrt of 1 - m^2 has its
    cut exactly on |m| >= 1 real, i.e. the line through z1, z2 minus
    the open segment.
    """
    z = np.asarray(z, dtype=complex)
    mvar = (2.0 * z - curve.z1 - curve.z2) / (curve.z1 - curve.z2)
    core = 1j * (curve.z1 - curve.z2) / 2.0 * np.sqrt(1.0 - mvar * mvar)
    hval = _P.polyval(z, curve.sqrt_free)
    return curve.sigma * core * hval


def jump_function(curve: AlgebraicCurve, z):
    """y_+ - y_- = sqrt(disc)/A with the fixed global branch."""
    z = np.asarray(z, dtype=complex)
    return _sqrt_disc(curve, z) / _P.polyval(z, curve.coeff_a.num)


def _reference_sign(curve):
    """Sign making the jump at the segment midpoint satisfy Re > 0
    (ties: Im > 0)."""
    zm = 0.5 * (curve.z1 + curve.z2)
    val = complex(jump_function(curve, zm))
    if abs(val.real) > 1e-12 * abs(val):
        return 1.0 if val.real > 0 else -1.0
    return 1.0 if val.imag > 0 else -1.0


def branch_jump(curve: AlgebraicCurve, z: complex,
                state: BranchState | None = None):
    """Jump y_+ - y_- at z; returns (value, token).

    Without a token the fixed-cut reference branch is evaluated.  With a
    token the sign is continued from the previous point, so stepping
    around a single branch point flips the sign after a full loop
    (monodromy), while a loop around both returns to the start.
    """
    z = complex(z)
    sep = abs(curve.z1 - curve.z2)
    if min(abs(z - curve.z1), abs(z - curve.z2)) <= 1e-12 * sep:
        raise BranchPointHit(f"z = {z} is a branch point")
    val = complex(jump_function(curve, z))
    if state is not None:
        if (val.conjugate() * state.value).real < 0:
            val = -val
    return val, BranchState(z=z, value=val)


def _segment_crosses_cut(curve, w0, w1):
    """True if the open segment (w0, w1) crosses an external ray."""
    sep = abs(curve.z1 - curve.z2)
    if abs(w1 - w0) <= 1e-13 * max(sep, 1.0):
        return False
    d = (curve.z1 - curve.z2) / sep
    for tip, direction in ((curve.z1, d), (curve.z2, -d)):
        # parametrize ray tip + t*direction (t >= 0) and the segment
        seg = w1 - w0
        denom = (seg.real * (-direction.imag) + seg.imag * direction.real)
        if abs(denom) < 1e-14 * abs(seg):
            continue
        rel = tip - w0
        s = (rel.real * (-direction.imag) + rel.imag * direction.real) / denom
        t = (seg.real * rel.imag - seg.imag * rel.real) / denom
        if 1e-12 < s < 1.0 - 1e-12 and t > 1e-9 * sep:
            return True
    return False


def _gl_rule(order):
    return np.polynomial.legendre.leggauss(order)


def _integrate_segment(curve, w0, w1, tol=1e-10, depth=0):
    """Adaptive integral of the jump function along [w0, w1]."""
    x10, w10 = _gl_rule(10)
    x21, w21 = _gl_rule(21)
    mid = 0.5 * (w0 + w1)
    half = 0.5 * (w1 - w0)

    def quad(xs, ws):
        pts = mid + half * xs
        vals = jump_function(curve, pts)
        return half * np.sum(ws * vals)

    coarse = quad(x10, w10)
    fine = quad(x21, w21)
    if abs(fine - coarse) <= tol * (1.0 + abs(fine)) or depth >= 14:
        return fine
    return (_integrate_segment(curve, w0, mid, tol, depth + 1)
            + _integrate_segment(curve, mid, w1, tol, depth + 1))


def _integrate_from_branch_point(curve, tip, w1, tol=1e-10):
    """Integral from a branch point with the sqrt singularity removed.

    Substituting w = tip + d s^2 turns the integrable sqrt endpoint into
    a smooth integrand 2 s g(tip + d s^2) d.
    """
    d = w1 - tip
    x21, w21 = _gl_rule(21)
    x42, w42 = _gl_rule(42)

    def quad(xs, ws):
        s = 0.5 * (xs + 1.0)
        pts = tip + d * s * s
        vals = jump_function(curve, pts) * 2.0 * s * d
        return 0.5 * np.sum(ws * vals)

    coarse = quad(x21, w21)
    fine = quad(x42, w42)
    if abs(fine - coarse) <= tol * (1.0 + abs(fine)):
        return fine
    # fall back: split off the singular quarter and recurse on the rest
    wq = tip + 0.25 * d
    return (_integrate_from_branch_point(curve, tip, wq, tol)
            + _integrate_segment(curve, wq, w1, tol))


def phi(curve: AlgebraicCurve, z: complex, via=None) -> float:
    """Phi(z) = Re integral from z1 to z of (y_+ - y_-) dw.

    The integrand is the fixed-cut single-valued branch, so the real
    part is path independent (the cut periods are checked to have
    vanishing real part at build time).  Raises PathCrossesCut if a
    path segment crosses an external ray of the branch-point line.
    """
    z = complex(z)
    waypoints = [curve.z1] + [complex(w) for w in (via or [])] + [z]
    for w0, w1 in zip(waypoints[:-1], waypoints[1:]):
        if _segment_crosses_cut(curve, w0 + 1e-14, w1):
            raise PathCrossesCut(
                f"segment {w0} -> {w1} crosses a branch-cut ray")
    total = 0j
    sep = abs(curve.z1 - curve.z2)
    for idx, (w0, w1) in enumerate(zip(waypoints[:-1], waypoints[1:])):
        if abs(w1 - w0) <= 1e-14 * max(sep, 1.0):
            continue
        start_sing = idx == 0
        end_sing = min(abs(w1 - curve.z1), abs(w1 - curve.z2)) <= 1e-9 * sep
        if start_sing and end_sing:
            mid = 0.5 * (w0 + w1)
            total += _integrate_from_branch_point(curve, w0, mid)
            total -= _integrate_from_branch_point(curve, w1, mid)
        elif start_sing:
            total += _integrate_from_branch_point(curve, w0, w1)
        elif end_sing:
            total -= _integrate_from_branch_point(curve, w1, w0)
        else:
            total += _integrate_segment(curve, w0, w1)
    return float(total.real)


def check_real_period(curve: AlgebraicCurve, samples: int = 512) -> float:
    """|Re| of the loop integral around the branch segment (should be 0)."""
    zm = 0.5 * (curve.z1 + curve.z2)
    sep = abs(curve.z1 - curve.z2)
    pole_dist = (min(abs(w - zm) for w in curve.poles)
                 if curve.poles.size else math.inf)
    rad = min(0.9 * sep, 0.8 * pole_dist)
    theta = 2.0 * np.pi * np.arange(samples) / samples
    pts = zm + rad * np.exp(1j * theta)
    vals = jump_function(curve, pts)
    dz = 1j * rad * np.exp(1j * theta)
    period = np.sum(vals * dz) * (2.0 * np.pi / samples) / (2.0 * np.pi)
    return abs(period.real)


def _phi_grid(curve, x, y):
    """Phi on a rectangular grid by edge-wise accumulation (BFS tree).

    Edges crossing the cut rays or too close to poles of the jump are
    removed; every reachable node gets Re of the accumulated integral.
    """
    nx, ny = x.size, y.size
    zz = x[None, :] + 1j * y[:, None]
    cell = max(x[1] - x[0], y[1] - y[0])

    xs5, ws5 = _gl_rule(5)

    def edge_integrals(w0, w1):
        mid = 0.5 * (w0 + w1)
        half = 0.5 * (w1 - w0)
        acc = np.zeros(w0.shape, dtype=complex)
        for q in range(5):
            acc += ws5[q] * jump_function(curve, mid + half * xs5[q])
        return acc * half

    eh = edge_integrals(zz[:, :-1], zz[:, 1:])     # (ny, nx-1)
    ev = edge_integrals(zz[:-1, :], zz[1:, :])     # (ny-1, nx)

    # mask edges near the cut rays and near poles
    def bad_points(w):
        bad = np.zeros(w.shape, dtype=bool)
        d = curve.z1 - curve.z2
        dhat = d / abs(d)
        for tip, direction in ((curve.z1, dhat), (curve.z2, -dhat)):
            rel = (w - tip) / direction
            bad |= (rel.real >= -cell) & (np.abs(rel.imag) <= 1.5 * cell)
        for pole in curve.poles:
            bad |= np.abs(w - pole) <= 2.5 * cell
        return bad

    node_bad = bad_points(zz)
    eh_bad = node_bad[:, :-1] | node_bad[:, 1:]
    ev_bad = node_bad[:-1, :] | node_bad[1:, :]

    hval = np.full((ny, nx), np.nan + 0j, dtype=complex)
    # seed: closest good node to the segment midpoint
    zm = 0.5 * (curve.z1 + curve.z2)
    dist = np.abs(zz - zm) + np.where(node_bad, 1e9, 0.0)
    si, sj = np.unravel_index(int(np.argmin(dist)), dist.shape)
    seed_val = phi(curve, complex(zz[si, sj]))
    # keep the imaginary part only for local consistency; start at Re value
    hval[si, sj] = seed_val

    queue = deque([(si, sj)])
    visited = np.zeros((ny, nx), dtype=bool)
    visited[si, sj] = True
    while queue:
        i, j = queue.popleft()
        base = hval[i, j]
        if j + 1 < nx and not visited[i, j + 1] and not eh_bad[i, j]:
            hval[i, j + 1] = base + eh[i, j]
            visited[i, j + 1] = True
            queue.append((i, j + 1))
        if j - 1 >= 0 and not visited[i, j - 1] and not eh_bad[i, j - 1]:
            hval[i, j - 1] = base - eh[i, j - 1]
            visited[i, j - 1] = True
            queue.append((i, j - 1))
        if i + 1 < ny and not visited[i + 1, j] and not ev_bad[i, j]:
            hval[i + 1, j] = base + ev[i, j]
            visited[i + 1, j] = True
            queue.append((i + 1, j))
        if i - 1 >= 0 and not visited[i - 1, j] and not ev_bad[i - 1, j]:
            hval[i - 1, j] = base - ev[i - 1, j]
            visited[i - 1, j] = True
            queue.append((i - 1, j))
    return hval.real, visited & ~node_bad


def trace_trajectory(curve: AlgebraicCurve, droplet: BoundarySamples,
                     grid_size: int = 257, vertex_tol: float = 1e-4
                     ) -> Trajectory:
    """Inner critical trajectory connecting the branch points.

    Marching squares on the Phi field over the droplet bounding box;
    candidate components must end near both branch points and lie
    inside the droplet polygon; among candidates the one whose jump
    mass is closest to t0 is selected.  Vertices are Newton-polished to
    |Phi| <= vertex_tol * diameter and the ends are snapped to the
    branch points (which lie on the level set exactly).
    """
    if abs(curve.z1 - curve.z2) < 1e-10:
        raise DegenerateElimination("branch points coincide")
    zb = droplet.z
    x_lo, x_hi = zb.real.min(), zb.real.max()
    y_lo, y_hi = zb.imag.min(), zb.imag.max()
    mx, my = 0.04 * (x_hi - x_lo), 0.04 * (y_hi - y_lo)
    x = np.linspace(x_lo - mx, x_hi + mx, grid_size)
    y = np.linspace(y_lo - my, y_hi + my, grid_size)

    period = check_real_period(curve)
    scale = abs(curve.z1 - curve.z2)
    if period > 1e-6 * max(scale, 1.0):
        warnings.warn(f"nonzero real period {period:.3e}; trajectory "
                      "extraction may be unreliable", UserWarning,
                      stacklevel=2)

    phi_field, good = _phi_grid(curve, x, y)
    masked = np.ma.array(phi_field, mask=~good)
    cg = contour_generator(x=x, y=y, z=masked)
    lines = cg.lines(0.0)

    polygon = Polygon(np.column_stack([zb.real, zb.imag]))
    cell = max(x[1] - x[0], y[1] - y[0])
    diam = math.hypot(x_hi - x_lo, y_hi - y_lo)

    candidates = []
    rejected = []
    for line in lines:
        pts = line[:, 0] + 1j * line[:, 1]
        for arc in _split_at_branch_points(pts, curve, 3.0 * cell):
            tag = _classify_arc(arc, curve, polygon, 4.0 * cell)
            if tag == "candidate":
                candidates.append(arc)
            else:
                rejected.append((tag, arc))
    if not candidates:
        raise NoInteriorComponent(
            "no zero-level component connects the branch points inside "
            "the droplet", components=[(t, len(a)) for t, a in rejected])

    polished = []
    for arc in candidates:
        arc = _polish_arc(curve, arc, vertex_tol * diam)
        rho = np.abs(jump_function(curve, arc)) / (2.0 * np.pi)
        seg = np.abs(np.diff(arc))
        mass = float(np.sum(0.5 * (rho[:-1] + rho[1:]) * seg))
        polished.append((arc, rho, mass))
    arc, rho, mass = min(polished, key=lambda t: abs(t[2] - curve.t0))

    _warn_on_sign_flip(curve, arc)
    return Trajectory(points=arc, rho_s=rho, z1=curve.z1, z2=curve.z2,
                      arc_length=float(np.sum(np.abs(np.diff(arc)))),
                      mass=mass)


def _split_at_branch_points(pts, curve, radius):
    """Split a polyline into arcs separated by branch-point passages."""
    near = (np.abs(pts - curve.z1) <= radius) | \
           (np.abs(pts - curve.z2) <= radius)
    arcs = []
    i = 0
    n = len(pts)
    while i < n:
        if near[i]:
            i += 1
            continue
        j = i
        while j < n and not near[j]:
            j += 1
        lo = max(i - 1, 0)          # keep one near-node on each side
        hi = min(j + 1, n)
        if hi - lo >= 4:
            arcs.append(pts[lo:hi])
        i = j
    return arcs


def _classify_arc(arc, curve, polygon, end_tol):
    d_start = min(abs(arc[0] - curve.z1), abs(arc[0] - curve.z2))
    d_end = min(abs(arc[-1] - curve.z1), abs(arc[-1] - curve.z2))
    hits_z1 = (abs(arc[0] - curve.z1) <= end_tol
               or abs(arc[-1] - curve.z1) <= end_tol)
    hits_z2 = (abs(arc[0] - curve.z2) <= end_tol
               or abs(arc[-1] - curve.z2) <= end_tol)
    if not (hits_z1 and hits_z2 and d_start <= end_tol and d_end <= end_tol):
        return "ends-elsewhere"
    interior = sum(polygon.contains(Point(w.real, w.imag)) for w in arc[1:-1])
    if interior < 0.9 * (len(arc) - 2):
        return "outside-droplet"
    return "candidate"


def _newton_to_level(curve, z, target):
    """Move z onto the Phi = 0 level set along the analytic gradient.

    The first residual comes from a full path integral; subsequent ones
    reuse it through short local segments.
    """
    val = phi(curve, z)
    for _ in range(6):
        if abs(val) <= target:
            break
        g = complex(jump_function(curve, z))
        grad = complex(g.real, -g.imag)        # (Phi_x, Phi_y) as complex
        if abs(grad) == 0:
            break
        z_new = z - val * grad / abs(grad) ** 2
        val = val + _integrate_segment(curve, z, z_new).real
        z = z_new
    return z, val


def _polish_arc(curve, arc, tol):
    sep = abs(curve.z1 - curve.z2)
    guard = 0.03 * sep
    target = min(0.2 * tol, 3e-7)
    start_bp = (curve.z1 if abs(arc[0] - curve.z1) < abs(arc[0] - curve.z2)
                else curve.z2)
    end_bp = curve.z2 if start_bp == curve.z1 else curve.z1

    body = []
    for w in arc[1:-1]:
        if min(abs(w - curve.z1), abs(w - curve.z2)) < guard:
            continue
        z, _ = _newton_to_level(curve, complex(w), target)
        body.append(z)
    if not body:
        return np.array([start_bp, end_bp], dtype=complex)

    # densify toward the branch points: the jump density behaves like a
    # square root there, so plain trapezoid mass needs fine end spacing
    fractions = (3e-4, 1e-3, 3e-3, 8e-3, 0.018)
    head = []
    for frac in fractions:
        seed = start_bp + (body[0] - start_bp) * (frac * sep
                                                  / abs(body[0] - start_bp))
        z, _ = _newton_to_level(curve, seed, target)
        head.append(z)
    tail = []
    for frac in fractions:
        seed = end_bp + (body[-1] - end_bp) * (frac * sep
                                               / abs(body[-1] - end_bp))
        z, _ = _newton_to_level(curve, seed, target)
        tail.append(z)
    pts = [start_bp] + head + body + tail[::-1] + [end_bp]
    return np.array(pts, dtype=complex)


def _warn_on_sign_flip(curve, arc):
    """The jump density should keep one sign along the trajectory."""
    mids = 0.5 * (arc[1:] + arc[:-1])
    tangents = np.diff(arc)
    tangents = tangents / np.abs(tangents)
    signed = (jump_function(curve, mids) * tangents).imag
    inner = signed[np.abs(signed) > 1e-10 * np.max(np.abs(signed))]
    if inner.size and not (np.all(inner > 0) or np.all(inner < 0)):
        warnings.warn("jump density changes sign along the trajectory; "
                      "branch labeling may be inconsistent", UserWarning,
                      stacklevel=2)


def exterior_branch(curve: AlgebraicCurve, z):
    """Root of the quadratic decaying like t0/z at large |z|.

    Uses the cancellation-free quadratic form (roots q/A and C/q) so
    the small root stays accurate far from the droplet.
    """
    z = np.asarray(z, dtype=complex)
    av = _P.polyval(z, curve.coeff_a.num)
    bv = _P.polyval(z, curve.coeff_b.num)
    cv = _P.polyval(z, curve.coeff_c.num)
    s = np.sqrt(bv * bv - 4.0 * av * cv)
    s = np.where((np.conj(bv) * s).real > 0, -s, s)
    q = -0.5 * (bv - s)
    y1 = q / av
    with np.errstate(divide="ignore", invalid="ignore"):
        y2 = np.where(q != 0, cv / np.where(q == 0, 1.0, q), -bv / av - y1)
    ref = curve.t0 / z
    return np.where(np.abs(y1 - ref) <= np.abs(y2 - ref), y1, y2)


def kl_divergence(b: OrthoBasis, k: int, m: RationalMap, M: int = 512):
    """Relative entropy of rho_k against the conformal measure on the circle.

    raw: the plain average of log(1/|f'|) - log rho over theta.
    mean_adjusted: the divergence of the boundary-pullback measure
    h = rho * |f'| after normalization, log(mean h) - mean(log h),
    which removes any degree-dependent normalization constant and
    vanishes exactly when the profile is flat.
    """
    if M < 128:
        raise ValueError("need at least 128 boundary samples")
    theta = 2.0 * np.pi * np.arange(M) / M
    zeta = np.exp(1j * theta)
    fp = np.abs(map_derivative(m, zeta))
    if np.any(fp <= 1e-12 * m.r):
        raise CuspSingular("f' vanishes on the sampling circle")
    zb = map_forward(m, zeta)
    log_abs, _ = eval_P_log(b, k, zb)
    from .moments import w_values
    log_rho = 2.0 * log_abs - b.N * w_values(b.potential, zb)
    raw = float(np.mean(-np.log(fp) - log_rho))
    h_log = log_rho + np.log(fp)
    c = h_log.max()
    mean_adjusted = float(math.log(np.mean(np.exp(h_log - c))) + c
                          - np.mean(h_log))
    return raw, mean_adjusted


def zero_trajectory_distance(zs, traj: Trajectory):
    """(max, mean) distance from points to the trajectory polyline,
    normalized by |z2 - z1|."""
    zs = np.asarray(zs, dtype=complex)
    if zs.size == 0 or traj.points.size < 2:
        raise ValueError("need nonempty zeros and a trajectory polyline")
    a = traj.points[:-1]
    b = traj.points[1:]
    ab = b - a
    denom = np.abs(ab) ** 2
    safe = np.where(denom > 0, denom, 1.0)
    t = ((zs[:, None] - a[None, :]) * np.conj(ab[None, :])).real / safe
    t = np.clip(np.where(denom > 0, t, 0.0), 0.0, 1.0)
    proj = a[None, :] + t * ab[None, :]
    dist = np.min(np.abs(zs[:, None] - proj), axis=1)
    scale = max(abs(traj.z2 - traj.z1), 1e-300)
    return float(dist.max() / scale), float(dist.mean() / scale)


def curve_to_json_dict(curve: AlgebraicCurve) -> dict:
    def pack(rc):
        return {"num": [[c.real, c.imag] for c in rc.num],
                "den": [[c.real, c.imag] for c in rc.den]}
    return {
        "schema_version": 1,
        "coeff_a": pack(curve.coeff_a),
        "coeff_b": pack(curve.coeff_b),
        "coeff_c": pack(curve.coeff_c),
        "branch_points": [[curve.z1.real, curve.z1.imag],
                          [curve.z2.real, curve.z2.imag]],
        "t0": curve.t0,
        "beta": curve.beta,
        "a": [curve.a.real, curve.a.imag],
    }
