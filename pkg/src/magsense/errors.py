"""Exception types shared across the package.

All of them derive from ``ValueError`` so callers that only care about
"bad input" can catch a single type.
"""


class MagsenseError(ValueError):
    """Base class for every error raised by magsense."""


class InputDomainError(MagsenseError):
    """An argument is outside the domain an operation accepts."""


class OutOfModelError(MagsenseError):
    """The request lies outside the validity window of a constitutive model."""


class InsufficientDataError(MagsenseError):
    pass


class NonMonotoneFitError(MagsenseError):
    pass


class ConvergenceError(MagsenseError):
    def __init__(self, message: str, final_cost: float | None = None):
        super().__init__(message)
        self.final_cost = final_cost


class OutOfRangeError(MagsenseError):
    """An inductance reading lies outside a calibration's valid range."""


class DegenerateBaselineError(MagsenseError):
    pass


class InconsistencyError(MagsenseError):
    pass


class SchemaError(MagsenseError):
    """A dataset or model file does not follow the expected layout."""


class ConfigError(MagsenseError):
    pass
