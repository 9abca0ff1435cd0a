from typing import Iterable, Optional


class PolarityLabError(Exception):
    """Base class for every error raised by polarity_lab.

    Each subclass carries a short machine readable ``code`` and the process
    ``exit_code`` the command line interface maps it to.
    """

    code: str = "error"
    exit_code: int = 1

    def one_line(self) -> str:
        """Renders the error as a single machine parsable line.

        Returns:
            str: The error code followed by the (newline free) message.
        """
        message = " ".join(str(self).split())
        return f"error[{self.code}]: {message}"


class ConfigError(PolarityLabError):
    """A configuration document could not be turned into a valid run."""

    code = "config"
    exit_code = 2


class ParseError(ConfigError):
    """A configuration document is not well formed.

    Args:
        message: A description of the problem.
        line: The 1-based line of the problem, if known.
        column: The 1-based column of the problem, if known.
    """

    code = "parse"

    def __init__(
        self, message: str, line: Optional[int] = None, column: Optional[int] = None
    ) -> None:
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class ConfigValidationError(ConfigError):
    """One or more configuration invariants are violated.

    Args:
        violations: Every violated invariant as ``(field, message)`` pairs.
    """

    code = "validation"

    def __init__(self, violations: Iterable[tuple]) -> None:
        self.violations = [(str(field), str(msg)) for field, msg in violations]
        super().__init__(
            "; ".join(f"{field}: {msg}" for field, msg in self.violations)
        )

    @property
    def fields(self) -> list:
        """The names of the fields with violations."""
        return [field for field, _ in self.violations]


class UnitViolation(ConfigError):
    """A dimensional quantity is non-positive or anchors are inconsistent."""

    code = "units"


class NumericalError(PolarityLabError):
    """A numerical procedure failed."""

    code = "numerical"
    exit_code = 3


class OverflowRisk(NumericalError):
    """Direct evaluation would overflow double precision."""

    code = "overflow"


class InvalidOrder(NumericalError, ValueError):
    """A function order (degree) is outside the supported range."""

    code = "order"


class DomainError(NumericalError, ValueError):
    """An argument is outside the domain of a function."""

    code = "domain"


class NoConvergence(NumericalError):
    """An iterative scheme hit its iteration cap."""

    code = "convergence"


class SignConditionViolation(NumericalError):
    """The strict sign conditions on the kinetic Jacobian do not hold."""

    code = "sign-conditions"


class BracketFailure(NumericalError):
    """A root bracket could not be found inside the overflow-safe range."""

    code = "bracket"


class SolverFailure(NumericalError):
    """A direct linear solve failed."""

    code = "solver"


class LinearSolveFailure(NumericalError):
    """An iterative linear solve did not reach its tolerance."""

    code = "linear-solve"


class WindowError(NumericalError):
    """A fitting window is empty or contains non-positive amplitudes."""

    code = "window"


class NonFiniteState(NumericalError):
    """A simulated field became non-finite."""

    code = "nan"


class OutputError(PolarityLabError):
    """An output artifact could not be written.

    Args:
        path: The path that could not be written.
        reason: What went wrong.
    """

    code = "io"
    exit_code = 4

    def __init__(self, path: object, reason: str) -> None:
        self.path = path
        super().__init__(f"{path}: {reason}")
