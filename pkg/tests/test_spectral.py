import cmath
import math
import warnings

import numpy as np
import pytest

from growthpoly.conformal import RationalMap, sample_boundary
from growthpoly.errors import (BranchPointHit, DegenerateElimination,
                               NoInteriorComponent, PathCrossesCut)
from growthpoly.moments import Potential
from growthpoly.spectral import (Trajectory, branch_jump, branch_points,
                                 build_curve, check_real_period,
                                 exterior_branch, jump_function, kl_divergence,
                                 phi, trace_trajectory,
                                 zero_trajectory_distance)

MARGINAL = RationalMap(r=1.0, u=0.5, v=0.25, A=0.5)
MARGINAL_P = Potential.geometric(8 / 9, 8 / 9, 8 / 3)


def schwarz_value(m, zeta):
    """fbar(1/zeta): the boundary value conj(z) continued off the circle."""
    return (m.r / zeta + np.conj(m.u)
            + np.conj(m.v) * zeta / (1 - np.conj(m.A) * zeta))


def test_schwarz_identity_residual(ref_map, ref_potential, ref_curve):
    rng = np.random.default_rng(3)
    for _ in range(100):
        zeta = cmath.exp(1j * rng.uniform(0, 2 * math.pi))
        z = complex(np.asarray(
            ref_map.r * zeta + ref_map.u + ref_map.v / (zeta - ref_map.A)))
        y = schwarz_value(ref_map, zeta) \
            - ref_potential.beta / (z - ref_potential.a)
        assert ref_curve.residual(z, y) <= 1e-9


def test_schwarz_identity_marginal_example():
    curve = build_curve(MARGINAL, MARGINAL_P)
    zeta = cmath.exp(1j * math.pi / 3)
    z = MARGINAL.r * zeta + MARGINAL.u + MARGINAL.v / (zeta - MARGINAL.A)
    y = complex(schwarz_value(MARGINAL, zeta)) - (8 / 9) / (z - 8 / 3)
    assert curve.residual(z, y) <= 1e-9


def test_curve_against_symbolic_resultant():
    """Independent oracle: exact rational elimination via sympy."""
    sp = pytest.importorskip("sympy")
    zeta, z, S = sp.symbols("zeta z S")
    r, u, v, A = sp.Rational(1), sp.Rational(1, 2), sp.Rational(1, 4), \
        sp.Rational(1, 2)
    P = sp.Poly(r * zeta ** 2 + (u - z - r * A) * zeta
                + (z * A - u * A + v), zeta)
    Q = sp.Poly((A * S + (v - A * u)) * zeta ** 2
                + (u - S - r * A) * zeta + r, zeta)
    res = sp.expand(sp.resultant(P, Q, zeta))
    beta, a = sp.Rational(8, 9), sp.Rational(8, 3)
    y = sp.Symbol("y")
    shifted = sp.expand(res.subs(S, y + beta / (z - a)) * (z - a) ** 2)
    poly = sp.Poly(shifted, y)
    a2, a1, a0 = poly.all_coeffs()
    lead = sp.Poly(a2, z).all_coeffs()[0]
    want = [[sp.Poly(c / lead, z).all_coeffs()[::-1]] for c in (a2, a1, a0)]

    curve = build_curve(MARGINAL, MARGINAL_P)
    for got, expect in zip(
            (curve.coeff_a.num, curve.coeff_b.num, curve.coeff_c.num), want):
        expect = [float(x) for x in expect[0]]
        assert len(got) == len(expect)
        assert np.allclose(got, expect, atol=1e-12)


def test_disk_degenerate_elimination():
    disk = RationalMap(r=1.0, u=0.0, v=0.0, A=0.0)
    with pytest.raises(DegenerateElimination):
        build_curve(disk, Potential.geometric(1.0, 0.0, 1.0))


def test_branch_points_examples():
    z1, z2 = branch_points(MARGINAL)
    assert z1 == pytest.approx(0.0, abs=1e-14)
    assert z2 == pytest.approx(2.0, abs=1e-14)
    tiny = RationalMap(r=1.0, u=1e-12 / 0.5, v=1e-12, A=0.5)
    z1, z2 = branch_points(tiny)
    assert z1 == pytest.approx(0.5, abs=1e-5)
    assert z2 == pytest.approx(0.5, abs=1e-5)


def test_branch_points_are_discriminant_roots(ref_curve):
    P = np.polynomial.polynomial
    disc = P.polysub(P.polymul(ref_curve.coeff_b.num, ref_curve.coeff_b.num),
                     4.0 * P.polymul(ref_curve.coeff_a.num,
                                     ref_curve.coeff_c.num))
    scale = np.abs(disc).max()
    for zb in (ref_curve.z1, ref_curve.z2):
        assert abs(P.polyval(zb, disc)) <= 1e-9 * scale


def test_exterior_branch_moment(ref_map, ref_curve):
    zs = 1e3 * np.exp(1j * np.array([0.3, 1.7, 3.9, 5.1]))
    vals = zs * exterior_branch(ref_curve, zs)
    # raw limit reaches t0 up to the droplet's first interior moment
    assert np.max(np.abs(vals - ref_curve.t0)) <= 1e-3
    # contour oracle for the first interior moment v1
    M = 8192
    theta = 2 * np.pi * np.arange(M) / M
    zeta = np.exp(1j * theta)
    zb = np.asarray(ref_map.r * zeta + ref_map.u
                    + ref_map.v / (zeta - ref_map.A))
    from growthpoly.conformal import map_derivative
    dz = map_derivative(ref_map, zeta) * 1j * zeta
    v1 = complex(np.mean(np.conj(zb) * zb * dz) / (2j)) * 2
    # subtracting the 1/z moment term leaves the stated tolerance
    assert np.max(np.abs(vals - ref_curve.t0 - v1 / zs)) <= 1e-6


def test_branch_jump_reference_sign(ref_curve):
    zm = 0.5 * (ref_curve.z1 + ref_curve.z2)
    val, state = branch_jump(ref_curve, zm)
    assert val.real > 0 or (abs(val.real) <= 1e-12 * abs(val)
                            and val.imag > 0)
    assert state.value == val


def test_branch_jump_vanishes_at_branch_point(ref_curve):
    sep = abs(ref_curve.z2 - ref_curve.z1)
    for eps in (1e-3, 1e-5):
        val, _ = branch_jump(ref_curve, ref_curve.z1 + eps * sep)
        assert abs(val) <= 10 * math.sqrt(eps) * sep
    with pytest.raises(BranchPointHit):
        branch_jump(ref_curve, ref_curve.z1)


def test_branch_jump_monodromy(ref_curve):
    sep = abs(ref_curve.z2 - ref_curve.z1)
    state = None
    first = None
    for k in range(33):
        z = ref_curve.z1 + 0.1 * sep * cmath.exp(2j * math.pi * k / 32)
        val, state = branch_jump(ref_curve, z, state)
        if k == 0:
            first = val
    assert abs(state.value + first) <= 1e-10 * abs(first)
    # a loop around both branch points returns to the start
    zm = 0.5 * (ref_curve.z1 + ref_curve.z2)
    state = None
    first = None
    for k in range(129):
        z = zm + 0.8 * sep * cmath.exp(2j * math.pi * k / 128)
        val, state = branch_jump(ref_curve, z, state)
        if k == 0:
            first = val
    assert abs(state.value - first) <= 1e-10 * abs(first)


def test_phi_vanishes_at_branch_points(ref_curve):
    assert phi(ref_curve, ref_curve.z1) == 0.0
    assert abs(phi(ref_curve, ref_curve.z2)) <= 1e-8


def test_phi_path_independence(ref_curve):
    z = 0.5 - 0.3j
    v1 = phi(ref_curve, z)
    v2 = phi(ref_curve, z, via=[-0.6 - 0.2j])
    assert abs(v1 - v2) <= 1e-8


def test_phi_path_crosses_cut(ref_curve):
    # the external rays run vertically through the branch points
    ray_pt = ref_curve.z2 + 2.0 * (ref_curve.z2 - ref_curve.z1)
    beyond = ray_pt + 0.5
    with pytest.raises(PathCrossesCut):
        phi(ref_curve, beyond, via=[ray_pt - 0.5])


def test_phi_harmonic_away_from_cut(ref_curve):
    center = 0.8 + 0.55j
    h = 0.05
    vals = [phi(ref_curve, center + dz)
            for dz in (0, h, -h, 1j * h, -1j * h)]
    lap = vals[1] + vals[2] + vals[3] + vals[4] - 4 * vals[0]
    scale = max(abs(v) for v in vals)
    assert abs(lap) <= 1e-4 * max(scale, 1e-6)


def test_real_period_vanishes(ref_curve):
    assert check_real_period(ref_curve) <= 1e-10


def test_three_arc_structure(ref_curve):
    """Six sign changes of Phi on the double cover around a branch point."""
    sep = abs(ref_curve.z2 - ref_curve.z1)
    rad = 0.02 * sep
    xg, wg = np.polynomial.legendre.leggauss(8)
    state = None
    val = phi(ref_curve, ref_curve.z1 + rad)
    zprev = ref_curve.z1 + rad
    signs = [np.sign(val)]
    for k in range(1, 257):
        zz = ref_curve.z1 + rad * cmath.exp(4j * math.pi * k / 256)
        mid, half = 0.5 * (zprev + zz), 0.5 * (zz - zprev)
        seg = 0j
        for q in range(8):
            vq, state = branch_jump(ref_curve, mid + half * xg[q], state)
            seg += wg[q] * vq
        val += (seg * half).real
        signs.append(np.sign(val))
        zprev = zz
    changes = sum(1 for s1, s2 in zip(signs[:-1], signs[1:]) if s1 != s2)
    assert changes == 6


def test_trajectory_invariants(ref_curve, ref_boundary, ref_trajectory):
    traj = ref_trajectory
    assert abs(traj.points[0] - traj.z1) <= 1e-6 or \
        abs(traj.points[0] - traj.z2) <= 1e-6
    assert abs(traj.points[-1] - traj.z1) <= 1e-6 or \
        abs(traj.points[-1] - traj.z2) <= 1e-6
    for z in traj.points[1:-1:9]:
        assert abs(phi(ref_curve, z)) <= 1e-6
    from shapely.geometry import Point, Polygon
    poly = Polygon(np.column_stack([ref_boundary.z.real,
                                    ref_boundary.z.imag]))
    inside = sum(poly.contains(Point(z.real, z.imag))
                 for z in traj.points[1:-1])
    assert inside == len(traj.points) - 2
    assert abs(traj.mass - ref_curve.t0) <= 1e-3
    assert np.all(traj.rho_s >= 0)


def test_trajectory_no_interior_component(ref_curve, ref_boundary):
    shifted = type(ref_boundary)(theta=ref_boundary.theta,
                                 z=ref_boundary.z + 6.0,
                                 measure=ref_boundary.measure)
    with pytest.raises(NoInteriorComponent):
        trace_trajectory(ref_curve, shifted)


def test_kl_divergence_disk_control():
    p0 = Potential.geometric(1.0, 0.0, 1.0)
    from growthpoly.orthopoly import build_basis
    b = build_basis(p0, 8)
    disk = RationalMap(r=1.0, u=0.0, v=0.0, A=0.0, univalent=True)
    raw, adj = kl_divergence(b, 8, disk, M=256)
    assert abs(adj) <= 1e-10


def test_kl_refinement(basis_cache, ref_map):
    b = basis_cache(10)
    _, adj1 = kl_divergence(b, 10, ref_map, M=512)
    _, adj2 = kl_divergence(b, 10, ref_map, M=1024)
    assert abs(adj1 - adj2) <= 1e-8
    assert adj1 >= 0


def test_zero_trajectory_distance_degenerate():
    traj = Trajectory(points=np.array([0j, 0j]), rho_s=np.zeros(2),
                      z1=0j, z2=0j, arc_length=0.0, mass=0.0)
    dmax, dmean = zero_trajectory_distance(np.zeros(3, dtype=complex), traj)
    assert dmax == 0.0 and dmean == 0.0


def test_zero_trajectory_distance_on_vertices(ref_trajectory):
    pts = ref_trajectory.points[2:-2:5]
    dmax, dmean = zero_trajectory_distance(pts, ref_trajectory)
    assert dmax == 0.0 and dmean == 0.0


def test_jump_density_positive_along_trajectory(ref_curve, ref_trajectory):
    mids = 0.5 * (ref_trajectory.points[1:] + ref_trajectory.points[:-1])
    tangents = np.diff(ref_trajectory.points)
    tangents /= np.abs(tangents)
    signed = (jump_function(ref_curve, mids) * tangents).imag
    body = signed[3:-3]
    assert np.all(body > 0) or np.all(body < 0)
