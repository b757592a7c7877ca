"""Exception types raised by the library.

Each failure mode gets its own class so callers (and the CLI exit-code
mapping) can react without string matching.
"""


class GrowthError(Exception):
    """Base class for all library errors."""


# --- moment / potential errors ---------------------------------------------

class EvalOutsideDomain(GrowthError):
    """Truncated moment list cannot guarantee the requested tail bound here."""


class SingularPoint(GrowthError):
    """Evaluation requested exactly at the logarithmic singularity."""


class NotConfining(GrowthError):
    """The weight exp(-N*W) has no finite moments of the required order."""


# --- conformal map errors ---------------------------------------------------

class DegenerateMap(GrowthError):
    """Map parameters degenerate (pole coefficient at the origin)."""


class RegimeViolation(GrowthError):
    """Requested operation needs the simply connected regime."""


class NoConvergence(GrowthError):
    """Parameter solve failed to converge after retries."""


class UnivalenceLoss(GrowthError):
    """Solved map has critical points on or outside the unit circle."""


class InteriorPoint(GrowthError):
    """Both inverse-map roots lie inside the unit disk (z inside droplet)."""


class CuspSingular(GrowthError):
    """Map derivative vanishes at the evaluation point; measure diverges."""


class SelfIntersection(GrowthError):
    """Sampled boundary polyline self-intersects."""


# --- quadrature / orthogonalization errors ----------------------------------

class NonIntegerBeta(GrowthError):
    """Closed-form Gram oracle needs N*beta to be a nonnegative integer."""


class QuadratureUnstable(GrowthError):
    """Grid refinement changed results beyond the stability tolerance."""


class NotPositiveDefinite(GrowthError):
    """Gram matrix lost positive definiteness (insufficient precision)."""

    def __init__(self, message, pivot_index=None):
        super().__init__(message)
        self.pivot_index = pivot_index


class RootFindingFailure(GrowthError):
    """Polynomial root residual target unmet after restarts."""


# --- spectral-curve errors ---------------------------------------------------

class DegenerateElimination(GrowthError):
    """Resultant vanishes identically (for example the disk case v = 0)."""


class BranchPointHit(GrowthError):
    """Branch-dependent quantity requested at a branch point."""


class PathCrossesCut(GrowthError):
    """Integration path crosses the branch cut rays."""


class NoInteriorComponent(GrowthError):
    """No zero-level component connects the branch points inside the droplet."""

    def __init__(self, message, components=None):
        super().__init__(message)
        self.components = components or []
