"""Exception hierarchy shared by every solver module."""


class FrontTrackError(Exception):
    """Base class for all errors raised by this package."""


class NonHyperbolic(FrontTrackError):
    """Complex or coinciding eigenvalues at a state."""


class LeftOmega(FrontTrackError):
    """A state left the admissible box."""


class NoConvergence(FrontTrackError):
    """A nonlinear solve did not converge."""


class DegenerateBoundary(FrontTrackError):
    """The boundary map does not determine the entering waves."""


class NotNonCharacteristic(FrontTrackError):
    """A curve slope is not separated from the characteristic speeds."""


class TVTooLarge(FrontTrackError):
    """Data variation exceeds the admissible smallness bound."""


class InvariantViolation(FrontTrackError):
    """Internal consistency of a configuration was broken."""


class EventBudgetExceeded(FrontTrackError):
    """Too many events were processed in a single run."""


class DomainExceeded(FrontTrackError):
    """A split step left the admissible domain (functional or L1 budget)."""


class ValidationError(FrontTrackError):
    """Scenario input failed validation; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class ParseError(FrontTrackError):
    """A scenario file is not well-formed structured text."""
