"""Shared exception types for the numerical laboratory."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation (e.g. a Gamma pole)."""


class RangeError(OverflowError):
    """Result magnitude exceeds the configured floating-point cap."""

    def __init__(self, message: str, cap: float):
        super().__init__(message)
        self.cap = cap


class CapabilityError(ValueError):
    """Requested depth/feature beyond what the implementation supports."""


class NumericError(RuntimeError):
    """A numerical procedure failed to reach its target tolerance."""

    def __init__(self, message: str, achieved: float | None = None):
        super().__init__(message)
        self.achieved = achieved


class ObstructionError(RuntimeError):
    """Source term not orthogonal to the kernel of the operator being inverted.

    Carries the offending pairing value so callers can inspect how far from
    solvable the right-hand side was.
    """

    def __init__(self, message: str, pairing: float):
        super().__init__(message)
        self.pairing = pairing


class AmbiguityError(RuntimeError):
    """Classification could not be decided within the detection thresholds."""


class ProximityError(ValueError):
    """Evaluation point too close to the kernel diagonal for the mode sum."""


class SpectralError(RuntimeError):
    """Requested energy collides with a bound state or threshold resonance."""
