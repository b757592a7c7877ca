import math

import numpy as np
import pytest

from growthpoly.errors import NotPositiveDefinite, RootFindingFailure
from growthpoly.moments import Potential
from growthpoly.orthopoly import (GramMatrix, OrthoBasis, basis_from_json_dict,
                                  basis_to_json_dict, build_basis,
                                  compute_gram, eval_P_log, eval_density,
                                  log_density_potential, orthogonalize,
                                  orthonormality_residual, zero_log_sum, zeros)
from growthpoly.quadrature import gram_oracle_integer_beta, prewhitener_log

GAUSS = Potential.geometric(1.0, 0.0, 1.0)
DEFORMED = Potential.geometric(1.0, 0.5, 2.0)


def test_gaussian_gram_is_identity():
    g = compute_gram(GAUSS, 8)
    assert np.max(np.abs(g.entries - np.eye(9))) <= 1e-12


def test_gaussian_coefficients_identity():
    b = orthogonalize(compute_gram(GAUSS, 8))
    assert np.max(np.abs(b.coeffs - np.eye(9))) <= 1e-12


def test_degree_zero_gram_positive():
    g = compute_gram(DEFORMED, 0, N=4.0)
    assert g.entries.shape == (1, 1)
    assert g.entries[0, 0].real > 0


def test_gram_matches_prewhitened_oracle():
    g = compute_gram(DEFORMED, 8)   # N = 8, m = 4
    lpw = prewhitener_log(8.0, np.arange(9))
    oracle = np.empty((9, 9), dtype=complex)
    for i in range(9):
        for j in range(9):
            oracle[i, j] = gram_oracle_integer_beta(i, j, 4, 2.0, 8.0) \
                * math.exp(lpw[i] + lpw[j])
    scale = np.abs(oracle).max()
    err = np.abs(g.entries - oracle) / (np.abs(oracle) + 1e-4 * scale)
    assert err.max() <= 1e-9


def test_hand_cholesky_two_by_two():
    c = 0.4 - 0.2j
    entries = np.array([[1.0, c], [np.conj(c), 1.0]], dtype=complex)
    g = GramMatrix(n=1, N=1.0, entries=entries, potential=GAUSS, t0=1.0,
                   spec=None)
    b = orthogonalize(g)
    norm = math.sqrt(1 - abs(c) ** 2)
    assert b.coeffs[1, 0] == pytest.approx(-np.conj(c) / norm, abs=1e-14)
    assert b.coeffs[1, 1] == pytest.approx(1 / norm, abs=1e-14)
    assert b.coeffs[0, 0] == pytest.approx(1.0)


def test_orthonormality_residual_small_case():
    b = orthogonalize(compute_gram(DEFORMED, 8))
    assert orthonormality_residual(b) <= 1e-8


def test_not_positive_definite_raises():
    entries = np.diag([1.0, -1e-3]).astype(complex)
    g = GramMatrix(n=1, N=1.0, entries=entries, potential=GAUSS, t0=1.0,
                   spec=None)
    with pytest.raises(NotPositiveDefinite):
        orthogonalize(g)


def test_gaussian_density_closed_form():
    b = orthogonalize(compute_gram(GAUSS, 8))
    rng = np.random.default_rng(2)
    N = b.N
    for k in (1, 3, 8):
        z = rng.uniform(0.2, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        want = (N ** (k + 1) / (math.pi * math.factorial(k))
                * abs(z) ** (2 * k) * math.exp(-N * abs(z) ** 2))
        assert eval_density(b, k, z) == pytest.approx(want, rel=1e-11)


def test_density_no_overflow_far_away():
    b = orthogonalize(compute_gram(DEFORMED, 8))
    assert eval_density(b, 8, 50.0 + 50.0j) == 0.0
    assert np.isfinite(eval_density(b, 8, np.array([100.0 + 0j]))).all()


def test_density_normalization_against_refined_gram():
    b = orthogonalize(compute_gram(DEFORMED, 10))
    g_ref = compute_gram(DEFORMED, 10, theta_factor=1.6, radial_factor=1.6)
    norms = np.real(np.diag(b.coeffs @ g_ref.entries @ b.coeffs.conj().T))
    assert np.max(np.abs(norms - 1.0)) <= 1e-8


def test_zeros_gaussian_multiple_root():
    b = orthogonalize(compute_gram(GAUSS, 4, N=4.0))
    roots = zeros(b, 3, seed=0)
    assert len(roots) == 3
    assert np.max(np.abs(roots)) <= 1e-4


def test_zeros_degree_one_closed_form():
    b = orthogonalize(compute_gram(DEFORMED, 4))
    roots = zeros(b, 1, seed=0)
    s0 = math.exp(prewhitener_log(b.N, 0))
    s1 = math.exp(prewhitener_log(b.N, 1))
    want = -(b.coeffs[1, 0] * s0) / (b.coeffs[1, 1] * s1)
    assert roots[0] == pytest.approx(want, abs=1e-12)


def test_zeros_count_and_determinism(basis_cache):
    b = basis_cache(12)
    r1 = zeros(b, 12, seed=3)
    r2 = zeros(b, 12, seed=3)
    assert len(r1) == 12
    assert np.array_equal(r1, r2)


def test_zeros_residuals(basis_cache):
    b = basis_cache(12)
    roots = zeros(b, 12, seed=0)
    # backward error in the scaled monomial basis
    s = np.exp(prewhitener_log(b.N, np.arange(13)))
    mono = b.coeffs[12, :13] * s
    vals = np.polynomial.polynomial.polyval(roots, mono)
    bound = np.polynomial.polynomial.polyval(np.abs(roots), np.abs(mono))
    assert np.max(np.abs(vals) / bound) <= 1e-8


def test_log_density_potential_gaussian_closed_form():
    n = 10
    b = orthogonalize(compute_gram(GAUSS, n))
    N = b.N
    z = 2.0 * math.sqrt(1.0)   # |z| = 2 sqrt(t0)
    want = (math.log(N ** (n + 1) / (math.pi * math.factorial(n)))
            + 2 * n * math.log(z) - N * z * z) / N
    assert log_density_potential(b, n, z) == pytest.approx(want, rel=1e-12)


def test_log_density_clamp():
    b = orthogonalize(compute_gram(GAUSS, 4, N=4.0))
    assert log_density_potential(b, 4, 1e8) == -1e6


def test_zero_log_sum_slope_at_infinity(basis_cache, zeros_cache):
    k = 12
    b = basis_cache(k)
    roots = zeros_cache(k, seed=1)
    z1, z2 = 1e3, 2e3
    slope = (zero_log_sum(roots, z2, b.N) - zero_log_sum(roots, z1, b.N)) \
        / (math.log(z2) - math.log(z1))
    assert slope == pytest.approx(2 * k / b.N, rel=1e-3)


def test_basis_json_roundtrip(basis_cache):
    b = basis_cache(12)
    doc = basis_to_json_dict(b)
    assert doc["schema_version"] == 1
    b2 = basis_from_json_dict(doc)
    assert b2.n == b.n and b2.N == b.N
    assert np.allclose(b2.coeffs, b.coeffs)
    z = 0.7 + 0.2j
    assert eval_density(b2, 10, z) == pytest.approx(
        eval_density(b, 10, z), rel=1e-10)


def test_eval_p_log_matches_direct_small_degree():
    b = orthogonalize(compute_gram(DEFORMED, 6))
    s = np.exp(prewhitener_log(b.N, np.arange(7)))
    z = 0.9 - 0.4j
    direct = np.polynomial.polynomial.polyval(z, b.coeffs[6, :7] * s)
    log_abs, phase = eval_P_log(b, 6, z)
    assert log_abs == pytest.approx(math.log(abs(direct)), abs=1e-10)
    assert (math.cos(phase) + 1j * math.sin(phase)) == pytest.approx(
        direct / abs(direct), abs=1e-10)


def test_build_basis_escalates_beyond_double(ref_potential, basis_cache):
    b = basis_cache(24)
    assert b.extended
    assert b.dps >= 40
    assert orthonormality_residual(b) <= 1e-8
