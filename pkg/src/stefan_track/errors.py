"""Exception types shared across the toolkit."""


class ParameterError(ValueError):
    """A configuration or physical parameter violates its admissibility condition."""


class InitialDataError(ValueError):
    """Initial temperature profile or interface data is inadmissible."""


class DomainViolation(RuntimeError):
    """The simulated interface left the admissible band (0, L)."""

    def __init__(self, message: str, t: float, s: float):
        super().__init__(message)
        self.t = t
        self.s = s


class SeriesDivergenceError(RuntimeError):
    """A series evaluation was requested outside its radius of convergence."""
