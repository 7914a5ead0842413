"""Exception hierarchy shared by all skgeom modules."""


class SkGeomError(Exception):
    """Base class for library errors."""


class DomainError(SkGeomError, ValueError):
    """Input outside the admissible domain or non-finite evaluation."""


class SingularParametrizationError(SkGeomError, ValueError):
    """Vanishing speed where a regular parametrization is required."""


class DegenerateFrameError(SkGeomError):
    """Curvature too small for the principal normal to be defined.

    The curvature value is kept on ``kappa`` so callers can still use it.
    """

    def __init__(self, message, kappa=0.0):
        super().__init__(message)
        self.kappa = kappa


class SingularPointError(SkGeomError, ValueError):
    """Jacobian of a surface loses rank at the requested point."""


class UnsupportedCodimensionError(SkGeomError, ValueError):
    """Operation needs a surface in R^3."""


class InternalInconsistencyError(SkGeomError, ArithmeticError):
    """Numerical result violates a theorem by more than roundoff."""


class AllowableTransformError(SkGeomError, ValueError):
    """Coordinate change with a singular Jacobian."""


class UnsupportedConfigurationError(SkGeomError, ValueError):
    """Mapping parameter outside the supported discrete set."""


class RangeError(SkGeomError, ValueError):
    """Model evaluated outside its fitted validity range."""


class InfeasibleError(SkGeomError):
    """No start point of an optimization reached feasibility."""


class NormalizationError(SkGeomError, ValueError):
    """A density does not integrate to one."""
