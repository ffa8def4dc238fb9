"""Exception types shared across the package."""


class XHDGError(Exception):
    """Base class for all package-specific errors."""


class AssumptionViolation(XHDGError):
    """Mesh too coarse for the interface: an edge is crossed more than once,
    or an element boundary does not have exactly two intersection points."""


class NoConvergence(XHDGError):
    """An iteration (root find, projection, or linear solve) did not reach
    its tolerance within the bounded iteration count."""


class DegenerateGradient(XHDGError):
    """Level-set gradient magnitude below threshold at a queried point."""


class UnsupportedDegree(XHDGError):
    """Requested quadrature degree outside the supported range."""


class DegenerateCut(XHDGError):
    """A cut produced a sub-region too small to integrate reliably."""


class ProjectionDivergence(XHDGError):
    """Closest-point projection onto the interface failed to converge."""


class SingularMass(XHDGError):
    """A piece mass matrix is numerically singular."""


class RankDeficiency(XHDGError, Warning):
    """Interface trace basis rank fell below the straight-segment minimum.

    Issued as a warning: the reduced basis is still usable, the flag marks
    segments whose trace space lost resolution."""


class SingularInterior(XHDGError):
    """Element-local interior block could not be factored."""

    def __init__(self, element, pivot):
        self.element = element
        self.pivot = pivot
        super().__init__(f"singular interior block on element {element} (pivot {pivot:.3e})")


class NotPositiveDefinite(XHDGError):
    """Cholesky factorization of the condensed system failed."""


class InfeasibleConstraint(XHDGError):
    """Jump constraint cannot be satisfied in the reduced trace space
    (modified scheme with jump data above the trace degree)."""


class DegenerateSequence(XHDGError):
    """Convergence-order computation received a zero error entry."""
