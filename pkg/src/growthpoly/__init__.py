"""Droplet growth approximation via planar orthogonal polynomials.

The library reconstructs interface evolution data from exterior
harmonic moments: orthonormal polynomials of the confining weight
exp(-N W(z)) localize on the droplet boundary and approximate its
conformal measure, while their zeros condense onto the critical
trajectory of the associated quadratic algebraic curve.
"""

__version__ = "0.1.0"

from .conformal import (BoundarySamples, RationalMap, Regime, classify_regime,
                        conformal_measure, droplet_map, forward_params,
                        is_univalent, map_forward, map_inverse, sample_boundary,
                        solve_params)
from .errors import GrowthError
from .moments import MomentData, Potential, check_confinement, eval_V, eval_W
from .orthopoly import (DensityField, GramMatrix, OrthoBasis,
                        basis_from_json_dict, basis_to_json_dict, build_basis,
                        compute_gram, eval_density, log_density_potential,
                        orthogonalize, orthonormality_residual, zero_log_sum,
                        zeros)
from .quadrature import (PlanarGrid, build_grid, gram_oracle_integer_beta,
                         integrate)
from .spectral import (AlgebraicCurve, BranchState, Trajectory, branch_jump,
                       branch_points, build_curve, exterior_branch,
                       jump_function, kl_divergence, phi, trace_trajectory,
                       zero_trajectory_distance)

__all__ = [
    "__version__",
    "MomentData", "Potential", "eval_V", "eval_W", "check_confinement",
    "RationalMap", "Regime", "BoundarySamples", "classify_regime",
    "forward_params", "solve_params", "droplet_map", "map_forward",
    "map_inverse", "conformal_measure", "sample_boundary", "is_univalent",
    "PlanarGrid", "build_grid", "integrate", "gram_oracle_integer_beta",
    "GramMatrix", "OrthoBasis", "DensityField", "compute_gram",
    "orthogonalize", "build_basis", "eval_density", "log_density_potential",
    "zeros", "zero_log_sum", "orthonormality_residual", "basis_to_json_dict",
    "basis_from_json_dict",
    "AlgebraicCurve", "Trajectory", "BranchState", "build_curve",
    "branch_points", "branch_jump", "phi", "trace_trajectory",
    "jump_function", "exterior_branch", "kl_divergence",
    "zero_trajectory_distance",
    "GrowthError",
]
