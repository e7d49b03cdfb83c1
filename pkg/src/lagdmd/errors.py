"""Exception types raised across the package."""


class LagDmdError(Exception):
    """Base class for all package errors."""


class InsufficientData(LagDmdError):
    pass


class FormatError(LagDmdError):
    pass


class DegenerateInput(LagDmdError):
    pass


class DefectiveOperator(LagDmdError):
    pass


class InvalidWindow(LagDmdError):
    pass


class WindowFitError(LagDmdError):
    """A per-window fit failed; ``window`` holds the zero-based window index."""

    def __init__(self, window, cause):
        super().__init__(f"window {window}: {cause}")
        self.window = window
        self.cause = cause


class DegenerateDensity(LagDmdError):
    pass


class MeshTangled(LagDmdError):
    pass


class StabilityError(LagDmdError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class SolverError(LagDmdError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RankCollapse(LagDmdError):
    pass


class InvalidCoefficient(LagDmdError):
    pass


class DegenerateReference(LagDmdError):
    pass


class ConfigError(LagDmdError):
    pass


class ExtrapolationWarning(UserWarning):
    """Moving grid left the Eulerian domain; boundary values were used."""
