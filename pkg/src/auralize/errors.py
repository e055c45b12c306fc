"""Exception hierarchy shared across the toolkit."""


class AuralizeError(Exception):
    """Base class for all toolkit errors."""


class RoomFormatError(AuralizeError):
    """Room-model file could not be parsed."""


class ValidationError(AuralizeError):
    """A domain object violates one of its invariants."""


class NotWatertightError(ValidationError):
    """The room shell has open edges."""

    def __init__(self, open_edges):
        self.open_edges = list(open_edges)
        super().__init__(
            f"room shell is not watertight; {len(self.open_edges)} open edge(s): "
            + ", ".join(str(e) for e in self.open_edges[:8])
        )


class SimulationError(AuralizeError):
    """Ray-tracing or synthesis failure."""


class CalibrationError(AuralizeError):
    """Absorption calibration failed to converge or target is unreachable."""

    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class AnalysisError(AuralizeError):
    """A metric is undefined for the given signal."""
