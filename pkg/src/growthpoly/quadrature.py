"""Planar quadrature for weights exp(-N*W(z)) plus the Gram oracle.

The grid is a polar tensor product: composite Gauss-Legendre panels in
theta (aligned so a panel boundary passes through arg a, where the
weight loses angular smoothness) and in rho on [0, R_cut] with extra
breaks at |a|.  R_cut is solved from an explicit tail bound on the
radial upper envelope, so truncation stays below the grid's target
digits.

All reductions use a fixed-shape pairwise tree, so results are
bit-stable across runs and independent of any worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr
from scipy.special import gammaln

from . import hp
from .errors import NonIntegerBeta, NotConfining
from .moments import Potential, check_confinement, w_values


def pairwise_sum(arr, axis=-1):
    """Deterministic binary-tree reduction along one axis."""
    a = np.moveaxis(np.asarray(arr), axis, -1)
    n = a.shape[-1]
    size = 1
    while size < n:
        size *= 2
    if size != n:
        pad = np.zeros(a.shape[:-1] + (size - n,), dtype=a.dtype)
        a = np.concatenate([a, pad], axis=-1)
    while a.shape[-1] > 1:
        a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0]


@dataclass(frozen=True)
class GridSpec:
    """Scheme descriptor; enough to regenerate nodes at any precision."""

    N: float
    max_degree: int
    digits: int
    r_cut: float
    radial_breaks: tuple
    radial_order: int
    theta_origin: float
    theta_panels: int
    theta_order: int
    band: int


@dataclass(frozen=True)
class PlanarGrid:
    """Polar tensor grid with cached weight values for its (p, N)."""

    spec: GridSpec
    rho: np.ndarray
    w_rho: np.ndarray
    theta: np.ndarray
    w_theta: np.ndarray
    z: np.ndarray        # flattened ring-major nodes
    weights: np.ndarray  # flattened area weights (d rho d theta, rho jacobian)
    wexp: np.ndarray     # weights * exp(-N W(z)) for the build-time (p, N)

    @property
    def node_count(self):
        return self.z.size


def _radial_envelope(p, N, s_max):
    """Upper bound of s_max*ln(rho) - N*W(rho e^{i theta}) over theta."""
    if p.is_geometric and p.beta > 0:
        amag = abs(p.a)

        def env(rho):
            return s_max * math.log(rho) - N * (
                rho * rho - 2.0 * p.beta * math.log1p(rho / amag))
    elif p.is_geometric:
        def env(rho):
            return s_max * math.log(rho) - N * rho * rho
    else:
        coeffs = p.data.coefficients

        def env(rho):
            bound = sum(abs(c) * rho ** (k + 1) for k, c in enumerate(coeffs))
            return s_max * math.log(rho) - N * (rho * rho - 2.0 * bound)
    return env


def _tail_radius(p, N, s_max, digits):
    """Radius beyond which the integrand tail is below 10^-(digits+4)."""
    env = _radial_envelope(p, N, max(s_max, 1))
    margin = math.log(10.0) * (digits + 4) + 4.0
    grid = np.geomspace(1e-3, 8.0 * math.sqrt((s_max / 2.0 + 1) / N) + 8.0, 400)
    vals = [env(r) for r in grid]
    peak = max(vals)
    hi = grid[int(np.argmax(vals))]
    while env(hi) > peak - margin:
        hi *= 1.25
        if hi > 1e6:
            raise NotConfining("radial envelope does not decay")
    lo = grid[int(np.argmax(vals))]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if env(mid) > peak - margin:
            lo = mid
        else:
            hi = mid
    return hi


def _angular_band(p, N, r_cut):
    """Bound on the angular Fourier content of the weight factor."""
    if p.is_geometric:
        return int(math.ceil(N * p.beta)) + 2
    band = 2.0 * N * sum((k + 1) * abs(c) * r_cut ** (k + 1)
                         for k, c in enumerate(p.data.coefficients))
    return min(int(math.ceil(band)) + 4, 4096)


def build_grid(p: Potential, N: float, max_degree: int,
               digits: int = 16, theta_factor: float = 1.0,
               radial_factor: float = 1.0) -> PlanarGrid:
    """Polar tensor grid able to integrate z^i conj(z)^j exp(-N W) for
    i, j <= max_degree at roughly ``digits`` correct digits.

    ``theta_factor`` / ``radial_factor`` scale the node counts (used by
    the grid-refinement stability check).
    """
    if N <= 0:
        raise ValueError("N must be positive")
    if not check_confinement(p, N, 2 * max_degree):
        raise NotConfining("weight has no finite moments of the needed order")

    s_max = 2 * max_degree
    r_cut = _tail_radius(p, N, s_max, digits)
    band = _angular_band(p, N, r_cut)

    # radial panels: bulk width ~ 1/sqrt(N), shrunk for higher digits
    h = 0.8 * math.sqrt(16.0 / max(digits, 16)) / math.sqrt(N) / radial_factor
    h = min(h, r_cut / 6.0)
    h = max(h, r_cut / 240.0)
    breaks = list(np.arange(0.0, r_cut, h)) + [r_cut]
    amag = abs(p.a) if (p.is_geometric and p.beta > 0) else math.inf
    if amag < r_cut:
        for extra in (amag - 2 * h, amag - 0.5 * h, amag,
                      amag + 0.5 * h, amag + 2 * h):
            if 0.0 < extra < r_cut:
                breaks.append(extra)
    breaks = sorted(set(breaks))
    merged = [breaks[0]]
    for b in breaks[1:]:
        if b - merged[-1] > 0.05 * h:
            merged.append(b)
    merged[-1] = r_cut
    radial_order = 14 if digits <= 17 else 20

    # angular panels aligned with arg a
    panels = 8
    spec_min = 4 * (max_degree + 1) + 2 * int(math.ceil(max(
        N * p.beta if p.is_geometric else 0.0, 0.0)))
    k_half = (max_degree + band) * math.pi / panels
    order = max(int(math.ceil(spec_min / panels)),
                int(math.ceil(0.4 * k_half + 0.55 * max(digits, 16) + 2)))
    order = int(math.ceil(order * theta_factor))
    origin = math.atan2(p.a.imag, p.a.real) if p.is_geometric else 0.0

    spec = GridSpec(N=float(N), max_degree=int(max_degree), digits=int(digits),
                    r_cut=float(r_cut), radial_breaks=tuple(merged),
                    radial_order=radial_order, theta_origin=float(origin),
                    theta_panels=panels, theta_order=order, band=int(band))
    return _materialize(spec, p)


def _gl_nodes(order):
    return np.polynomial.legendre.leggauss(order)


def _materialize(spec, p):
    x, w = _gl_nodes(spec.radial_order)
    rho, w_rho = [], []
    for lo, hi in zip(spec.radial_breaks[:-1], spec.radial_breaks[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        rho.extend(mid + half * x)
        w_rho.extend(half * w)
    rho = np.asarray(rho)
    w_rho = np.asarray(w_rho)

    xt, wt = _gl_nodes(spec.theta_order)
    theta, w_theta = [], []
    width = 2.0 * math.pi / spec.theta_panels
    for k in range(spec.theta_panels):
        lo = spec.theta_origin + k * width
        half, mid = 0.5 * width, lo + 0.5 * width
        theta.extend(mid + half * xt)
        w_theta.extend(half * wt)
    theta = np.asarray(theta)
    w_theta = np.asarray(w_theta)

    z = (rho[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = (w_rho[:, None] * (w_theta * 1.0)[None, :]
               * rho[:, None]).ravel()
    wvals = w_values(p, z)
    with np.errstate(over="ignore"):
        wexp = weights * np.exp(-spec.N * wvals)
    wexp[~np.isfinite(wexp)] = 0.0
    return PlanarGrid(spec=spec, rho=rho, w_rho=w_rho, theta=theta,
                      w_theta=w_theta, z=z, weights=weights, wexp=wexp)


def integrate(grid: PlanarGrid, f, p: Potential, N: float) -> complex:
    """sum_j w_j f(z_j) exp(-N W(z_j)) with deterministic reduction."""
    if N == grid.spec.N:
        wexp = grid.wexp
    else:
        with np.errstate(over="ignore"):
            wexp = grid.weights * np.exp(-N * w_values(p, grid.z))
        wexp[~np.isfinite(wexp)] = 0.0
    try:
        vals = np.asarray(f(grid.z), dtype=complex)
        if vals.shape != grid.z.shape:
            raise ValueError
    except Exception:
        vals = np.array([f(z) for z in grid.z], dtype=complex)
    return complex(pairwise_sum(vals * wexp))


def prewhitener_log(N, k):
    """log of the scale factor sqrt(N^(k+1)/(pi k!)) of the basis e_k."""
    k = np.asarray(k)
    return 0.5 * ((k + 1) * math.log(N) - math.log(math.pi) - gammaln(k + 1.0))


def gram_matrix(grid: PlanarGrid, p: Potential, n: int) -> np.ndarray:
    """Prewhitened Gram in double precision via per-ring Fourier sums.

    Entry (i, j) is the integral of e_i(z) conj(e_j(z)) exp(-N W) with
    e_k(z) = z^k sqrt(N^(k+1)/(pi k!)).  Hermitian by construction.
    """
    N = grid.spec.N
    R, T = grid.rho.size, grid.theta.size
    # angular factor of the weight, Gaussian part kept radial
    if p.is_geometric and p.beta > 0:
        zs = grid.rho[:, None] * np.exp(1j * grid.theta)[None, :]
        mag = np.abs(1.0 - zs / p.a)
        with np.errstate(divide="ignore", over="ignore"):
            F = np.exp(2.0 * N * p.beta * np.log(mag))
        F[~np.isfinite(F)] = 0.0
    elif p.is_geometric:
        F = np.ones((R, T))
    else:
        zs = grid.rho[:, None] * np.exp(1j * grid.theta)[None, :]
        coeffs = np.concatenate(([0.0], np.asarray(p.data.coefficients)))
        v = np.polynomial.polynomial.polyval(zs, coeffs)
        F = np.exp(2.0 * N * v.real)

    ring_four = np.empty((R, n + 1), dtype=complex)
    for d in range(n + 1):
        phase = grid.w_theta * np.exp(1j * d * grid.theta)
        ring_four[:, d] = pairwise_sum(F * phase[None, :], axis=1)

    lnrho = np.log(grid.rho)
    gauss = -N * grid.rho ** 2
    lpw = prewhitener_log(N, np.arange(n + 1))
    G = np.empty((n + 1, n + 1), dtype=complex)
    for i in range(n + 1):
        for j in range(i + 1):
            logfac = (i + j + 1) * lnrho + gauss + lpw[i] + lpw[j]
            rad = grid.w_rho * np.exp(logfac)
            val = complex(pairwise_sum(rad * ring_four[:, i - j]))
            G[i, j] = val
            G[j, i] = val.conjugate()
    return G


def gram_matrix_hp(spec: GridSpec, p: Potential, n: int, dps: int):
    """Extended-precision Gram at ~dps digits from the grid descriptor.

    Returns (list-of-lists mpc at dps, float64 downcast).  Node
    positions are regenerated from the panel structure at full
    precision, so rule accuracy is not limited by double rounding.
    """
    N = spec.N
    with hp.precision(dps + 8):
        pi_hp = gmpy2.const_pi()
        N_hp = mpfr(N)
        beta_hp = mpfr(p.beta) if p.is_geometric else mpfr(0)
        geometric = p.is_geometric and p.beta > 0
        if geometric:
            a_re, a_im = mpfr(p.a.real), mpfr(p.a.imag)
            amag2 = a_re * a_re + a_im * a_im
        if not p.is_geometric:
            coeffs_hp = [mpc(c) for c in p.data.coefficients]

        # angular nodes
        thetas, wts = [], []
        width = 2 * gmpy2.const_pi() / spec.theta_panels
        for k in range(spec.theta_panels):
            lo = mpfr(spec.theta_origin) + k * width
            tn, tw = hp.panel_rule(lo, lo + width, spec.theta_order)
            thetas.extend(tn)
            wts.extend(tw)
        T = len(thetas)
        cos_t = [gmpy2.cos(t) for t in thetas]
        sin_t = [gmpy2.sin(t) for t in thetas]

        # radial nodes
        rhos, wrs = [], []
        for lo, hi in zip(spec.radial_breaks[:-1], spec.radial_breaks[1:]):
            rn, rw = hp.panel_rule(lo, hi, spec.radial_order)
            rhos.extend(rn)
            wrs.extend(rw)
        R = len(rhos)

        lpw = []
        for k in range(n + 1):
            lpw.append(gmpy2.sqrt(N_hp ** (k + 1) / (pi_hp * gmpy2.fac(k))))

        zero = mpfr(0)
        four_re = [[zero] * (n + 1) for _ in range(R)]
        four_im = [[zero] * (n + 1) for _ in range(R)]
        rng_d = list(range(n + 1))
        for ri in range(R):
            rho = rhos[ri]
            gauss = gmpy2.exp(-N_hp * rho * rho)
            row_re = four_re[ri]
            row_im = four_im[ri]
            for ti in range(T):
                ct, st = cos_t[ti], sin_t[ti]
                if geometric:
                    # |1 - z/a|^2 with z = rho e^{i theta}
                    re = 1 - rho * (ct * a_re + st * a_im) / amag2
                    im = -rho * (st * a_re - ct * a_im) / amag2
                    q = re * re + im * im
                    if q == 0:
                        continue
                    wf = wts[ti] * gauss * gmpy2.exp(beta_hp * N_hp * gmpy2.log(q))
                elif p.is_geometric:
                    wf = wts[ti] * gauss
                else:
                    zz = mpc(rho * ct, rho * st)
                    v = mpc(0)
                    for c in reversed(coeffs_hp):
                        v = (v + c) * zz
                    wf = wts[ti] * gauss * gmpy2.exp(2 * N_hp * v.real)
                cd, sd = mpfr(1), zero
                for d in rng_d:
                    row_re[d] += wf * cd
                    row_im[d] += wf * sd
                    cd, sd = cd * ct - sd * st, sd * ct + cd * st

        G = [[mpc(0) for _ in range(n + 1)] for _ in range(n + 1)]
        for ri in range(R):
            rho, wr = rhos[ri], wrs[ri]
            powers = [rho]
            for _ in range(2 * n + 1):
                powers.append(powers[-1] * rho)
            row_re = four_re[ri]
            row_im = four_im[ri]
            for i in range(n + 1):
                Gi = G[i]
                for j in range(i + 1):
                    fac = wr * powers[i + j]
                    d = i - j
                    Gi[j] += mpc(fac * row_re[d], fac * row_im[d])
        for i in range(n + 1):
            for j in range(i + 1):
                val = G[i][j] * lpw[i] * lpw[j]
                G[i][j] = val
                G[j][i] = mpc(val.real, -val.imag)

        down = np.array([[hp.to_complex(G[i][j]) for j in range(n + 1)]
                         for i in range(n + 1)], dtype=complex)
    return G, down


def gram_oracle_integer_beta(i: int, j: int, m: int, a: complex, N: float,
                             exact: bool = False):
    """Closed-form Gram entry for integer m = N*beta.

    Expands |1 - z/a|^(2m) binomially against exact Gaussian monomial
    moments: sum_{p,q} C(m,p) C(m,q) (-1/a)^p (-1/abar)^q G(i+p, j+q)
    with G(s, t) = delta_st pi s!/N^(s+1).

    With ``exact=True`` (real a only) every term is accumulated in
    rational arithmetic and multiplied by pi at the current gmpy2
    precision, giving an independent reference at arbitrary accuracy.
    """
    if m != int(m) or m < 0:
        raise NonIntegerBeta(f"m = {m} is not a nonnegative integer")
    m = int(m)
    if i < 0 or j < 0:
        raise ValueError("monomial degrees must be nonnegative")
    if exact:
        if abs(complex(a).imag) != 0.0:
            raise ValueError("exact oracle supports real a only")
        af = Fraction(float(complex(a).real))
        Nf = Fraction(float(N))
        total = Fraction(0)
        for p_ in range(m + 1):
            q_ = i + p_ - j
            if q_ < 0 or q_ > m:
                continue
            s = i + p_
            term = (Fraction(math.comb(m, p_) * math.comb(m, q_))
                    * (Fraction(-1) / af) ** p_ * (Fraction(-1) / af) ** q_
                    * Fraction(math.factorial(s)) / Nf ** (s + 1))
            total += term
        return (mpfr(total.numerator) / mpfr(total.denominator)
                * gmpy2.const_pi())
    a = complex(a)
    total = 0j
    for p_ in range(m + 1):
        q_ = i + p_ - j
        if q_ < 0 or q_ > m:
            continue
        s = i + p_
        term = (math.comb(m, p_) * math.comb(m, q_)
                * (-1.0 / a) ** p_ * (-1.0 / a.conjugate()) ** q_
                * math.pi * math.exp(gammaln(s + 1.0) - (s + 1) * math.log(N)))
        total += term
    return total
