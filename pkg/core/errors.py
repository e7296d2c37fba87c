"""
Exception hierarchy for lumpchain.
Input problems map to exit code 2, domain outcomes to exit code 1.
"""


class LumpChainError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 2

    def payload(self) -> dict:
        """Extra fields echoed into the JSON report next to type and message."""
        return {}


class InputError(LumpChainError):
    """Malformed input, bad flags or unreadable files."""

    exit_code = 2


class DomainError(LumpChainError):
    """The input is well formed but the requested operation cannot succeed."""

    exit_code = 1


# --- input errors ---------------------------------------------------------

class ParseError(InputError):
    """Text could not be parsed; carries a 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column

    def payload(self) -> dict:
        return {"line": self.line, "column": self.column}


class InputFileError(InputError):
    """A matrix, partition or output file could not be read or written."""


class NotSquare(InputError):
    def __init__(self, shape):
        super().__init__(f"matrix is not square: shape {tuple(shape)}")
        self.shape = tuple(shape)


class NonFiniteEntry(InputError):
    def __init__(self, row: int, col: int):
        super().__init__(f"entry ({row + 1}, {col + 1}) is not finite")
        self.row = row
        self.col = col


class NegativeEntry(InputError):
    def __init__(self, row: int, col: int, value: float):
        super().__init__(f"entry ({row + 1}, {col + 1}) is negative: {value!r}")
        self.row = row
        self.col = col
        self.value = value

    def payload(self) -> dict:
        return {"row": self.row + 1, "col": self.col + 1, "value": float(self.value)}


class RowSumViolation(InputError):
    def __init__(self, row: int, total: float):
        super().__init__(f"row {row + 1} sums to {total!r}, not 1")
        self.row = row
        self.total = total

    def payload(self) -> dict:
        return {"row": self.row + 1, "total": float(self.total)}


class DimensionMismatch(InputError):
    def __init__(self, expected: int, actual: int, what: str = "partition"):
        super().__init__(f"{what} covers {actual} states, matrix has {expected}")
        self.expected = expected
        self.actual = actual


class ZetaOutOfRange(InputError):
    def __init__(self, zeta: float):
        super().__init__(f"zeta must satisfy 0 <= zeta < 1, got {zeta!r}")
        self.zeta = zeta


class ConfigError(InputError):
    """Invalid tolerance, cap or environment value."""


# --- domain errors --------------------------------------------------------

class NotLumpable(DomainError):
    def __init__(self, max_deviation: float, tol: float):
        super().__init__(
            f"partition is not a strong lumping: max deviation {max_deviation!r} > tol {tol!r}"
        )
        self.max_deviation = max_deviation
        self.tol = tol

    def payload(self) -> dict:
        return {"max_deviation": float(self.max_deviation), "tol": float(self.tol)}


class GuardExceeded(DomainError):
    def __init__(self, bell: int, guard: int):
        super().__init__(f"Bell number {bell} exceeds the oracle guard {guard}")
        self.bell = bell
        self.guard = guard

    def payload(self) -> dict:
        return {"bell_number": self.bell, "guard": self.guard}


class NotDiagonalizable(DomainError):
    def __init__(self, condition_estimate: float):
        super().__init__(
            f"transition matrix is not diagonalizable "
            f"(eigenvector condition estimate {condition_estimate:.3e})"
        )
        self.condition_estimate = condition_estimate

    def payload(self) -> dict:
        return {"condition_estimate": float(self.condition_estimate)}


class EigenFailure(DomainError):
    """The eigensolver did not converge."""


class CandidateOverflow(DomainError):
    def __init__(self, limit: int, partial: list):
        super().__init__(f"candidate lattice exceeded max_candidates={limit}")
        self.limit = limit
        self.partial = partial

    def payload(self) -> dict:
        return {"max_candidates": self.limit, "partial_count": len(self.partial)}


class InsufficientData(DomainError):
    def __init__(self, required: int, available: int):
        super().__init__(f"trajectory has {available} steps, test needs at least {required}")
        self.required = required
        self.available = available

    def payload(self) -> dict:
        return {"required": self.required, "available": self.available}
