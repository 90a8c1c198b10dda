"""Exception hierarchy shared by all modules.

Each class carries a short machine-readable ``code`` used by the command line
front end to pick an exit status.
"""


class LagvacError(Exception):
    code = "error"


class ConfigurationError(LagvacError, ValueError):
    code = "configuration"


class DomainError(LagvacError, ValueError):
    code = "domain"


class ShapeError(LagvacError, ValueError):
    code = "shape"


class DegeneracyError(LagvacError, ArithmeticError):
    """The flow map folded or left its admissible range."""

    code = "degeneracy"


class NumericalError(LagvacError, ArithmeticError):
    code = "numerical"


class NonConvergenceError(NumericalError):
    code = "nonconvergence"

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ContinuationError(NumericalError):
    code = "continuation"

    def __init__(self, message, last_good_time=None, record=None):
        super().__init__(message)
        self.last_good_time = last_good_time
        self.record = record


class ArtifactIOError(LagvacError, OSError):
    code = "io"
