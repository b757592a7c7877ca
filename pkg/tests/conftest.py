"""Shared fixtures: the reference geometric family and cached bases.

The reference family (beta=0.5, a=2.5, t0=1) is comfortably univalent
(critical radius ~0.45 at t0=1, transition at t0 ~ 9.79), has real
conjugate branch points inside the droplet, and keeps N*beta integer at
even degrees under area scaling.
"""

import numpy as np
import pytest

from growthpoly.conformal import droplet_map, sample_boundary
from growthpoly.moments import Potential
from growthpoly.orthopoly import build_basis, zeros
from growthpoly.spectral import build_curve, trace_trajectory

REF_BETA = 0.5
REF_A = 2.5
REF_T0 = 1.0


@pytest.fixture(scope="session")
def ref_potential():
    return Potential.geometric(REF_T0, REF_BETA, REF_A)


@pytest.fixture(scope="session")
def ref_map():
    return droplet_map(REF_BETA, REF_A, REF_T0)


@pytest.fixture(scope="session")
def ref_boundary(ref_map):
    return sample_boundary(ref_map, 1024)


@pytest.fixture(scope="session")
def ref_curve(ref_map, ref_potential):
    return build_curve(ref_map, ref_potential)


@pytest.fixture(scope="session")
def ref_trajectory(ref_curve, ref_boundary):
    return trace_trajectory(ref_curve, ref_boundary)


@pytest.fixture(scope="session")
def basis_cache(ref_potential):
    cache = {}

    def get(n):
        if n not in cache:
            cache[n] = build_basis(ref_potential, n)
        return cache[n]

    return get


@pytest.fixture(scope="session")
def zeros_cache(basis_cache):
    cache = {}

    def get(k, seed=1):
        key = (k, seed)
        if key not in cache:
            cache[key] = zeros(basis_cache(k), k, seed=seed)
        return cache[key]

    return get
