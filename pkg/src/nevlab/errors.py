"""Exception types shared across the package."""


class NevlabError(Exception):
    """Base class for all package errors."""


class InvalidFamilyError(NevlabError):
    """Constructor parameters do not define a member of the family."""


class InvalidCombinationError(NevlabError):
    """Field combination is undefined (e.g. division by the zero function)."""


class InvalidCompositionError(NevlabError):
    """Affine composition with a degenerate (a = 0) map."""


class UnsupportedDerivativeError(NevlabError):
    """Derivative requested with no closed-form rule and fallback disabled."""


class UncertifiedDivisorError(NevlabError):
    """Subdivision could not certify a divisor; partial results attached."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class BoundaryDegeneracyError(NevlabError):
    """No admissible radius found within the perturbation policy."""


class UncertifiedResultError(NevlabError):
    """A certified quantity could not be pinned down (e.g. ilc order)."""


class InsufficientSamplesError(NevlabError):
    """Every probe point was rejected (pole-dense sample region)."""


class DegenerateTargetsError(NevlabError):
    """Two targets coincide numerically on the test circle."""


class InvalidTargetError(NevlabError):
    """A target fails the kernel-membership requirement of the theorem."""


class InvalidWindowError(NevlabError):
    """Trailing estimation window exceeds the radius schedule."""


class InvalidModelError(NevlabError):
    """Synthetic divisor model violates its own invariants."""


class ScenarioError(NevlabError):
    """Scenario file failed validation; carries a field path."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
