"""Exception types shared across the package."""


class TwoflowError(Exception):
    """Base class for all package errors."""


class ConfigError(TwoflowError):
    """A configuration object violates its invariants."""


class DomainError(TwoflowError):
    """A density state lies outside the physically admissible set."""


class CflError(TwoflowError):
    """The requested time step violates the stability bound."""

    def __init__(self, message: str, dt_h: float, bound_h: float):
        super().__init__(message)
        self.dt_h = dt_h
        self.bound_h = bound_h


class SchemeError(TwoflowError):
    """An update produced an inadmissible state (indicates a solver bug)."""


class CollisionError(TwoflowError):
    """Truck ordering was violated while strict collision checking is on."""

    def __init__(self, message: str, events):
        super().__init__(message)
        self.events = list(events)


class ScenarioError(TwoflowError):
    """Scenario text failed validation; carries every error found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
