"""
==============================================================================
Exception Hierarchy
==============================================================================
All errors raised by the toolkit derive from PropellerError. The CLI maps
InvalidInputError to exit code 1 and NumericalError to exit code 2.
==============================================================================
"""

from typing import Any, Optional, Sequence


class PropellerError(Exception):
    """Base class for toolkit errors."""


# =============================================================================
# Input Errors
# =============================================================================

class InvalidInputError(PropellerError, ValueError):
    """Inputs violate a documented precondition."""


class MeshFormatError(InvalidInputError):
    """A mesh file could not be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class MeshValidationError(InvalidInputError):
    """A mesh parsed but is geometrically or topologically invalid."""


class ConfigurationError(InvalidInputError):
    """A run configuration is inconsistent or incomplete."""


class InfeasibleChromosomeError(InvalidInputError):
    """A chromosome has a gene outside its angle domain."""


# =============================================================================
# Numerical Errors
# =============================================================================

class NumericalError(PropellerError, RuntimeError):
    """A numerical procedure failed."""


class SingularSystemError(NumericalError):
    """The constrained stiffness matrix is rank deficient."""

    def __init__(self, message: str, free_modes: Sequence[str] = ()):
        self.free_modes = list(free_modes)
        if self.free_modes:
            message = f"{message} (unrestrained rigid modes: {', '.join(self.free_modes)})"
        super().__init__(message)


class DivergenceError(NumericalError):
    """An iteration failed to converge; the partial trace is attached."""

    def __init__(self, message: str, trace: Any = None):
        self.trace = trace
        super().__init__(message)
