"""Exception types shared across the package."""


class SphereLabError(Exception):
    """Base class for all package errors."""


class ResolutionError(SphereLabError):
    """A cube or radius falls below the lattice resolution."""


class DomainError(SphereLabError):
    """A radius or translation exceeds what the truncated domain supports."""


class RegionError(SphereLabError):
    """Exponent pair lies outside the admissible region."""


class WeightError(SphereLabError):
    """A weight fails positivity or integrability requirements."""


class ValidationError(SphereLabError):
    """An experiment configuration violates a module precondition."""
