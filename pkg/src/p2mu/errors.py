"""Exception hierarchy.  The CLI maps these onto exit codes 2, 3 and 4."""


class P2muError(Exception):
    pass


class DomainError(P2muError, ValueError):
    """Argument outside the domain of an operation (exit code 2)."""


class RealityError(DomainError):
    """A real-valued evaluation was requested where none exists."""


class NotReducibleError(DomainError):
    """Electro-diffusion parameters do not map onto a pure-power coefficient."""


class NoSolutionError(P2muError):
    """The requested solution provably does not exist (exit code 3)."""


class NumericalFailure(P2muError):
    """A numerical procedure failed to deliver its contract (exit code 4)."""


class AnchorTooSmallError(NumericalFailure):
    def __init__(self, message, suggested_x_start):
        super().__init__(message)
        self.suggested_x_start = suggested_x_start


class SeedError(NumericalFailure):
    def __init__(self, message, min_radius):
        super().__init__(message)
        self.min_radius = min_radius


class BracketError(NumericalFailure):
    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


class SectorViolation(NumericalFailure):
    def __init__(self, message, pole_events):
        super().__init__(message)
        self.pole_events = pole_events


class MeasurementImpossible(NumericalFailure):
    pass


class FitRejected(NumericalFailure):
    pass
