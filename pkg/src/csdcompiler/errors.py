"""Exception hierarchy for the compiler and its file formats."""

from typing import Optional


class CompilerError(Exception):
    """Base class for every error raised by csdcompiler."""

    exit_code: int = 1


class NotUnitaryError(CompilerError, ValueError):
    """Raised when a matrix fails a unitarity check."""

    exit_code = 2

    def __init__(self, residual: float, tol: float, what: str = "matrix"):
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"{what} is not unitary: ||M M^dagger - I||_F = {residual:.3e} > {tol:.1e}"
        )


class FormatError(CompilerError, ValueError):
    """Malformed input file. Carries the 1-based line (and column when known)."""

    exit_code = 2

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}"
            if column is not None:
                location += f", column {column}"
            location += ": "
        super().__init__(f"{location}{message}")


class MatrixFormatError(FormatError):
    """Malformed matrix file."""


class CircuitFormatError(FormatError):
    """Malformed circuit file."""


class UsageError(CompilerError, ValueError):
    """A missing or inconsistent command-line argument."""

    exit_code = 2


class VerificationError(CompilerError):
    """A circuit does not reproduce its matrix within tolerance."""

    exit_code = 3

    def __init__(self, error: float, threshold: float):
        self.error = error
        self.threshold = threshold
        super().__init__(
            f"verification failed: reconstruction error {error:.3e} "
            f"exceeds {threshold:.3e}"
        )


class ParameterizationError(CompilerError, RuntimeError):
    """A U(2) member could not be parameterized even after the fallbacks."""

    def __init__(self, message: str, index: Optional[int] = None):
        self.index = index
        prefix = f"multiplexor {index}: " if index is not None else ""
        super().__init__(f"{prefix}{message}")
