"""Extended-precision kernels backed by gmpy2.

Gram assembly conditioning degrades exponentially with the polynomial
degree, so degrees beyond the double-precision budget run on mpfr/mpc
arithmetic.  Everything here is deterministic and single-threaded.
"""

from __future__ import annotations

import math
from contextlib import contextmanager

import gmpy2
import numpy as np
from gmpy2 import mpc, mpfr

from .errors import NotPositiveDefinite, RootFindingFailure

_LOG2_10 = 3.321928094887362


def bits_for_digits(digits):
    return int(math.ceil(digits * _LOG2_10)) + 8


@contextmanager
def precision(digits):
    """Temporarily switch the thread context to ~digits decimal digits."""
    ctx = gmpy2.get_context()
    old = ctx.precision
    ctx.precision = bits_for_digits(digits)
    try:
        yield ctx
    finally:
        ctx.precision = old


def to_complex(x):
    return complex(x.real, x.imag) if isinstance(x, mpc) else complex(x)


_leg_cache = {}


def legendre_rule(order):
    """Gauss-Legendre nodes/weights on [-1, 1] at the current precision.

    Newton refinement of the double-precision nodes; cached per
    (order, precision-bits).
    """
    bits = gmpy2.get_context().precision
    key = (order, bits)
    if key in _leg_cache:
        return _leg_cache[key]
    seeds, _ = np.polynomial.legendre.leggauss(order)
    nodes, weights = [], []
    for seed in seeds:
        x = mpfr(seed)
        for _ in range(60):
            p_prev, p = mpfr(1), x
            for k in range(2, order + 1):
                p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
            dp = order * (x * p - p_prev) / (x * x - 1)
            dx = p / dp
            x = x - dx
            if abs(dx) < mpfr(2) ** (-bits):
                break
        p_prev, p = mpfr(1), x
        for k in range(2, order + 1):
            p_prev, p = p, ((2 * k - 1) * x * p - (k - 1) * p_prev) / k
        dp = order * (x * p - p_prev) / (x * x - 1)
        nodes.append(x)
        weights.append(2 / ((1 - x * x) * dp * dp))
    _leg_cache[key] = (nodes, weights)
    return nodes, weights


def panel_rule(lo, hi, order):
    """Affine image of the reference rule on [lo, hi]."""
    nodes, weights = legendre_rule(order)
    a, b = mpfr(lo), mpfr(hi)
    half = (b - a) / 2
    mid = (a + b) / 2
    return [mid + half * x for x in nodes], [half * w for w in weights]


def cholesky(g, n):
    """Lower Cholesky factor of the Hermitian matrix g (list of lists).

    Raises NotPositiveDefinite with the failing pivot index.
    """
    L = [[mpc(0) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            acc = mpc(g[i][j])
            for k in range(j):
                acc -= L[i][k] * gmpy2.mpc(L[j][k].real, -L[j][k].imag)
            if i == j:
                piv = acc.real
                if piv <= 0:
                    raise NotPositiveDefinite(
                        f"pivot {i} is {piv:.3e}", pivot_index=i)
                L[i][i] = mpc(gmpy2.sqrt(piv))
            else:
                L[i][j] = acc / L[j][j]
    return L


def invert_lower(L, n):
    """Inverse of a lower-triangular matrix (list of lists of mpc)."""
    C = [[mpc(0) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        C[i][i] = 1 / L[i][i]
        for j in range(i - 1, -1, -1):
            acc = mpc(0)
            for k in range(j, i):
                acc += L[i][k] * C[k][j]
            C[i][j] = -acc / L[i][i]
    return C


def horner(coeffs, z):
    """Evaluate sum coeffs[k] z^k (ascending) and its derivative."""
    p = mpc(0)
    dp = mpc(0)
    for c in reversed(coeffs):
        dp = dp * z + p
        p = p * z + c
    return p, dp


def aberth_roots(coeffs, seed=0, max_iter=400):
    """All roots of the polynomial with ascending mpc coefficients.

    Ehrlich-Aberth simultaneous iteration with seeded perturbation
    restarts, stopping on small corrections or a uniformly tiny
    backward error, followed by a short Newton polish.
    """
    deg = len(coeffs) - 1
    while deg > 0 and abs(coeffs[deg]) == 0:
        deg -= 1
    if deg < 1:
        return []
    coeffs = list(coeffs[:deg + 1])
    bits = gmpy2.get_context().precision
    tol = mpfr(2) ** (-(bits - 8))
    rng = np.random.default_rng(seed)

    # root modulus scale from the Cauchy bound
    lead = abs(coeffs[-1])
    radius = mpfr(1) + max(abs(c) for c in coeffs[:-1]) / lead
    radius = min(radius, mpfr(4) * _cauchy_lower(coeffs, deg))

    for attempt in range(4):
        roots = []
        for k in range(deg):
            ang = 2 * math.pi * (k + 0.5) / deg + 0.4 + attempt * 0.77
            jit = 1.0 + 0.05 * rng.standard_normal()
            roots.append(radius * jit * mpc(math.cos(ang), math.sin(ang)))
        if _aberth_iterate(coeffs, roots, tol, max_iter):
            for i in range(deg):
                roots[i] = _newton_polish(coeffs, roots[i])
            return roots
    raise RootFindingFailure(
        f"Aberth iteration failed for degree {deg} after restarts")


def _cauchy_lower(coeffs, deg):
    lead = abs(coeffs[-1])
    best = mpfr(0)
    for k in range(deg):
        ck = abs(coeffs[k])
        if ck > 0:
            best = max(best, (ck / lead) ** (mpfr(1) / (deg - k)))
    return best if best > 0 else mpfr(1)


def backward_error(coeffs, z):
    """|p(z)| relative to sum |c_k| |z|^k (0 when the bound vanishes)."""
    p, _ = horner(coeffs, z)
    bound = mpfr(0)
    zp = mpfr(1)
    az = abs(z)
    for c in coeffs:
        bound += abs(c) * zp
        zp *= az
    return abs(p) / bound if bound > 0 else mpfr(0)


def _newton_polish(coeffs, z, steps=3):
    for _ in range(steps):
        p, dp = horner(coeffs, z)
        if p == 0 or dp == 0:
            return z
        step = p / dp
        if abs(step) > 0.1 * (abs(z) + 1):
            return z
        z = z - step
    return z


def _aberth_iterate(coeffs, roots, tol, max_iter):
    deg = len(roots)
    eta_stop = mpfr(2) ** (-int(0.6 * gmpy2.get_context().precision))
    for sweep in range(max_iter):
        moved = mpfr(0)
        scale = max(max(abs(r) for r in roots), mpfr(1e-30))
        for i in range(deg):
            z = roots[i]
            p, dp = horner(coeffs, z)
            if p == 0:
                continue
            if dp == 0:
                roots[i] = z * mpc(1.000001, 1e-7)
                moved = mpfr(1)
                continue
            newton = p / dp
            rep = mpc(0)
            for j in range(deg):
                if j != i:
                    diff = z - roots[j]
                    if diff == 0:
                        diff = mpc(tol * scale)
                    rep += 1 / diff
            denom = 1 - newton * rep
            step = newton if denom == 0 else newton / denom
            roots[i] = z - step
            moved = max(moved, abs(step))
        if moved <= tol * scale:
            return True
        if sweep % 10 == 9 and moved <= mpfr(1e-6) * scale:
            if max(backward_error(coeffs, r) for r in roots) <= eta_stop:
                return True
    return moved <= tol * scale * 1e6
