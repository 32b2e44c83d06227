"""Exception hierarchy shared by all modules."""


class TCLError(Exception):
    """Base class for all library errors."""


class DimensionError(TCLError, ValueError):
    pass


class IncompleteSetError(TCLError, ValueError):
    pass


class HermiticityError(TCLError, ValueError):
    pass


class TraceError(TCLError, ValueError):
    pass


class DomainError(TCLError, ValueError):
    pass


class IntegrationError(TCLError, RuntimeError):
    """Quadrature did not reach the requested tolerance.

    Carries the error estimate and, when raised while tabulating, the
    offending grid index.
    """

    def __init__(self, message, estimate=None, index=None):
        super().__init__(message)
        self.estimate = estimate
        self.index = index


class CoverageError(TCLError, ValueError):
    """A kernel lookup fell outside the tabulated time range."""


class DivergenceError(TCLError, ArithmeticError):
    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class GridMismatchError(TCLError, ValueError):
    pass


class ConfigError(TCLError, ValueError):
    """Invalid run configuration; names the line and key when known."""

    def __init__(self, message, line=None, key=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
        self.line = line
        self.key = key
