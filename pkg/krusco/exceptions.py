"""Exception hierarchy shared by the library and the command line."""


class KruscoError(Exception):
    """Base class for every error raised by krusco"""

    exit_code: int = 1


class StructuralError(KruscoError, ValueError):
    """Shapes, orders or ranks that do not fit together"""

    exit_code = 2


class ConfigError(KruscoError, ValueError):
    """Invalid configuration values or infeasible problem sizes"""

    exit_code = 2


class CapacityError(KruscoError, MemoryError):
    """A dense materialization would exceed the configured budget"""

    exit_code = 2


class TensorFormatError(KruscoError, ValueError):
    """A tensor file does not follow the NPY v1.0 float64 contract"""

    exit_code = 3


class NumericalError(KruscoError, ArithmeticError):
    """Non-finite values appeared during an optimization"""

    exit_code = 4

    def __init__(self, message: str, **context: object):
        self.context = context
        if context:
            details = ", ".join(f"{key}={value}" for key, value in context.items())
            message = f"{message} ({details})"
        super().__init__(message)

    def with_context(self, **context: object) -> "NumericalError":
        """Return a copy enriched with outer-loop context"""
        merged = {**context, **self.context}
        base = str(self).split(" (")[0]
        return NumericalError(base, **merged)
