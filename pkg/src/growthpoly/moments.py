"""Exterior harmonic moment data and the confining weight exponent.

A moment sequence {t_k} defines the potential V(z) = sum_{k>=1} t_k z^k
and the weight exponent W(z) = |z|^2 - 2 Re V(z).  Two families are
supported:

* ``geometric``: t_k = -(beta/k) a^{-k}, whose potential sums in closed
  form to beta*log(1 - z/a).  The weight factorizes exactly as
  exp(-N*W) = exp(-N|z|^2) * |1 - z/a|^(2*N*beta).
* ``explicit``: a finite list (t_1, ..., t_K), treated as a truncation
  of an unknown decaying sequence.  Public evaluation is refused where
  the fitted geometric tail bound exceeds ``TAIL_TOL``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvalOutsideDomain, SingularPoint

TAIL_TOL = 1e-12


@dataclass(frozen=True)
class MomentData:
    """Normalized area t0 (units of pi) plus the moment sequence."""

    t0: float
    kind: str  # "geometric" | "explicit"
    beta: float = 0.0
    a: complex = 0j
    coefficients: tuple = ()

    def __post_init__(self):
        if self.t0 <= 0:
            raise ValueError(f"t0 must be positive, got {self.t0}")
        if self.kind == "geometric":
            if self.beta < 0:
                raise ValueError(f"beta must be nonnegative, got {self.beta}")
            if self.beta > 0 and self.a == 0:
                raise ValueError("geometric family needs a != 0")
        elif self.kind == "explicit":
            object.__setattr__(self, "coefficients",
                               tuple(complex(c) for c in self.coefficients))
        else:
            raise ValueError(f"unknown moment kind {self.kind!r}")

    @classmethod
    def geometric(cls, t0, beta, a):
        return cls(t0=float(t0), kind="geometric", beta=float(beta), a=complex(a))

    @classmethod
    def explicit(cls, t0, coefficients):
        return cls(t0=float(t0), kind="explicit", coefficients=tuple(coefficients))

    def moment(self, k):
        """t_k of the represented sequence (0 beyond an explicit list)."""
        if k < 1:
            raise ValueError("moments are indexed from k = 1")
        if self.kind == "geometric":
            if self.beta == 0.0:
                return 0j
            return -self.beta / (k * self.a ** k)
        if k <= len(self.coefficients):
            return self.coefficients[k - 1]
        return 0j


def _fit_decay_ratio(coeffs):
    """Largest per-step decay ratio fitted on trailing nonzero entries."""
    mags = [(k + 1, abs(c)) for k, c in enumerate(coeffs) if abs(c) > 0]
    if len(mags) < 2:
        return 0.0
    tail = mags[-5:]
    ratio = 0.0
    for (k1, m1), (k2, m2) in zip(tail[:-1], tail[1:]):
        ratio = max(ratio, (m2 / m1) ** (1.0 / (k2 - k1)))
    return ratio


@dataclass(frozen=True)
class Potential:
    """Evaluator for V, W and the tail-safe domain radius."""

    data: MomentData
    eval_radius: float = field(default=math.inf)

    def __post_init__(self):
        if self.data.kind == "explicit":
            object.__setattr__(self, "eval_radius", _tail_safe_radius(self.data))

    @classmethod
    def geometric(cls, t0, beta, a):
        return cls(MomentData.geometric(t0, beta, a))

    @classmethod
    def explicit(cls, t0, coefficients):
        return cls(MomentData.explicit(t0, coefficients))

    # convenience passthroughs
    @property
    def t0(self):
        return self.data.t0

    @property
    def is_geometric(self):
        return self.data.kind == "geometric"

    @property
    def beta(self):
        return self.data.beta

    @property
    def a(self):
        return self.data.a


def _tail_safe_radius(data):
    """Radius inside which the truncation tail bound stays below TAIL_TOL."""
    coeffs = data.coefficients
    if not coeffs or all(abs(c) == 0 for c in coeffs):
        return math.inf
    ratio = _fit_decay_ratio(coeffs)
    if ratio == 0.0:
        return math.inf
    k_last = max(k + 1 for k, c in enumerate(coeffs) if abs(c) > 0)
    m_last = abs(coeffs[k_last - 1])

    def tail(radius):
        q = ratio * radius
        if q >= 1.0:
            return math.inf
        return m_last * radius ** k_last * q / (1.0 - q)

    lo, hi = 0.0, 1.0 / ratio
    if tail(hi * (1 - 1e-12)) <= TAIL_TOL:
        return hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if tail(mid) <= TAIL_TOL:
            lo = mid
        else:
            hi = mid
    return lo


def eval_V(p: Potential, z: complex) -> complex:
    """Potential V(z) = sum_k t_k z^k.

    Geometric family: beta*log(1 - z/a) on the principal branch.
    Explicit list: the truncated polynomial, refused beyond the
    tail-safe radius.
    """
    z = complex(z)
    if p.is_geometric:
        if p.beta == 0.0:
            return 0j
        if z == p.a:
            raise SingularPoint(f"V is singular at z = a = {p.a}")
        return p.beta * cmath.log(1.0 - z / p.a)
    if abs(z) > p.eval_radius:
        raise EvalOutsideDomain(
            f"|z| = {abs(z):.6g} exceeds tail-safe radius {p.eval_radius:.6g}")
    coeffs = np.concatenate(([0.0], np.asarray(p.data.coefficients)))
    return complex(np.polynomial.polynomial.polyval(z, coeffs))


def eval_W(p: Potential, z: complex) -> float:
    """Weight exponent W(z) = |z|^2 - 2 Re V(z).

    At z = a (geometric, beta > 0) returns +inf so the weight exp(-N*W)
    is 0, matching the integrand limit.
    """
    z = complex(z)
    if p.is_geometric:
        if p.beta == 0.0:
            return abs(z) ** 2
        if z == p.a:
            return math.inf
        return abs(z) ** 2 - 2.0 * p.beta * math.log(abs(1.0 - z / p.a))
    return abs(z) ** 2 - 2.0 * eval_V(p, z).real


def w_values(p: Potential, z):
    """Vectorized W over an array of points (+inf at z = a).

    For explicit data this evaluates the truncated polynomial model
    everywhere; the tail-safe radius only guards the scalar public
    evaluators, while quadrature integrates the truncated weight as is.
    """
    z = np.asarray(z, dtype=complex)
    if p.is_geometric:
        if p.beta == 0.0:
            return np.abs(z) ** 2
        w = 1.0 - z / p.a
        mag = np.abs(w)
        out = np.abs(z) ** 2
        with np.errstate(divide="ignore"):
            out = out - 2.0 * p.beta * np.log(mag)
        return out
    coeffs = np.concatenate(([0.0], np.asarray(p.data.coefficients)))
    v = np.polynomial.polynomial.polyval(z, coeffs)
    return np.abs(z) ** 2 - 2.0 * v.real


def check_confinement(p: Potential, N: float, n_max: int) -> bool:
    """True iff W(z) - (n_max/N) log|z|^2 grows along a radial test grid.

    Sufficient pragmatic test: minimum over 256 directions must be
    strictly increasing at large radii.  Geometric weights are always
    confining (the Gaussian dominates the logarithm).
    """
    if N <= 0:
        raise ValueError("N must be positive")
    if p.is_geometric:
        return True
    coeffs = p.data.coefficients
    scale = 1.0 + sum(abs(c) for c in coeffs)
    thetas = np.linspace(0.0, 2.0 * np.pi, 256, endpoint=False)
    radii = scale * np.geomspace(2.0, 64.0, 10)
    phases = np.exp(1j * thetas)
    profile = []
    for radius in radii:
        w = w_values(p, radius * phases)
        profile.append(w.min() - (n_max / N) * math.log(radius ** 2))
    tail = profile[-4:]
    increasing = all(b > a for a, b in zip(tail[:-1], tail[1:]))
    return increasing and profile[-1] > profile[0]
