"""Exception types shared across the package."""


class MinksurfError(Exception):
    """Base class for all library errors."""


class GridTooSmall(MinksurfError):
    """Grid has too few samples along an axis for the requested stencil."""


class DegenerateFrame(MinksurfError):
    """Frame is too far from pseudo-orthonormal to repair or invert."""


class NotIsotropic(MinksurfError):
    """Sampled chart is not in isotropic parameters.

    Carries the worst offending grid index and which metric coefficient
    (E, F or G) failed there.
    """

    def __init__(self, message, component=None, index=None, value=None):
        super().__init__(message)
        self.component = component
        self.index = index
        self.value = value


class MinimalPoint(MinksurfError):
    """Mean curvature vanishes somewhere; the geometric frame is undefined."""

    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


class AmbiguousType(MinksurfError):
    """A zero-test holds on part of the grid only; crop to a single-type sub-domain."""


class DivisionGuard(MinksurfError):
    """A denominator field dips below tolerance."""

    def __init__(self, message, index=None, value=None):
        super().__init__(message)
        self.index = index
        self.value = value


class TypeMismatch(MinksurfError):
    """Invariant data does not satisfy the structural zeros of the requested type."""


class DomainMismatch(MinksurfError):
    """Two fields or patches do not share one grid domain."""


class MissingFrames(MinksurfError):
    """Operation needs an attached frame field that is absent."""


class IncompatibleData(MinksurfError):
    """Invariant data fails the compatibility (flatness) threshold."""


class StepUnstable(MinksurfError):
    """Propagated frame exceeded the configured magnitude bound."""


class ProbeInfeasible(MinksurfError):
    """Generated probe data exceeds the requested residual threshold."""
