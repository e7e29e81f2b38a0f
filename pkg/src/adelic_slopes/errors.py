"""Errors."""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import TYPE_CHECKING

from adelic_slopes import logger

if TYPE_CHECKING:
    from adelic_slopes.ellipsoids import EllipsoidResult


class AdelicSlopesError(Exception):
    """Adelic Slopes Error.

    Base class for all errors.
    """


class UnexpectedErrorProtocol(BaseException, ABC):
    """Unexpected Error Protocol.

    Protocol for unexpected errors needed by `safe_error` decorator.
    """

    @abstractmethod
    def __init__(self, exception: BaseException) -> None:
        """Initialize the error."""


class DomainError(AdelicSlopesError, ValueError):
    """Domain Error.

    Raised when an input lies outside the domain of an operation (zero rational, zero vector, bad parameter).
    """

    def __init__(self, operation: str, detail: str) -> None:
        """Initialize the error."""
        super().__init__(f"{operation}: {detail}")


class SingularMatrixError(DomainError):
    """Singular Matrix Error.

    Raised when a lattice matrix, a Gram matrix or a map is not invertible.
    """

    def __init__(self, operation: str, what: str = "matrix") -> None:
        """Initialize the error."""
        super().__init__(operation, f"singular {what}")


class DimensionMismatchError(AdelicSlopesError, ValueError):
    """Dimension Mismatch Error.

    Raised when the shapes of the inputs are incompatible.
    """

    def __init__(self, operation: str, expected: object, actual: object) -> None:
        """Initialize the error."""
        super().__init__(f"{operation}: expected dimension {expected}, got {actual}")


class InvalidBodyError(AdelicSlopesError, ValueError):
    """Invalid Body Error.

    Raised when a convex body is not origin-symmetric, unbounded or has an empty interior.
    """

    def __init__(self, detail: str) -> None:
        """Initialize the error."""
        super().__init__(f"Invalid convex body: {detail}")


class UnsupportedMetricError(AdelicSlopesError, ValueError):
    """Unsupported Metric Error.

    Raised when an operation needs a hermitian metric (or a materializable body) and gets something else.
    """

    def __init__(self, operation: str, detail: str = "requires a hermitian archimedean metric") -> None:
        """Initialize the error."""
        super().__init__(f"{operation} {detail}; use john_bundle/lowner_bundle to bracket body metrics.")


class SolverError(AdelicSlopesError):
    """Solver Error.

    Raised when the John or Löwner solver does not converge or returns an infeasible ellipsoid. The best iterate is
    kept in `best`.
    """

    def __init__(
        self,
        solver: str,
        iterations: int,
        gap: float,
        best: EllipsoidResult | None = None,
        reason: str | None = None,
    ) -> None:
        """Initialize the error."""
        if reason is None:
            message = f"{solver} did not converge after {iterations} iterations (gap {gap:.3e})."
        else:
            message = f"{solver} failed after {iterations} iterations: {reason}."
        super().__init__(message)
        self.best = best


class GuardError(AdelicSlopesError):
    """Guard Error.

    Base class for size guards on exponential computations.
    """


class RankGuardError(GuardError):
    """Rank Guard Error.

    Raised when an enumeration is requested on a rank above the guard.
    """

    def __init__(self, rank: int, guard: int) -> None:
        """Initialize the error."""
        super().__init__(f"Rank {rank} exceeds the enumeration guard {guard}.")


class SizeGuardError(GuardError):
    """Size Guard Error.

    Raised when a combinatorial object is larger than the guard.
    """

    def __init__(self, what: str, size: int, guard: int) -> None:
        """Initialize the error."""
        super().__init__(f"{what} has size {size}, above the guard {guard}.")


class UncertifiedPolygonError(AdelicSlopesError):
    """Uncertified Polygon Error.

    Raised when an operation needs a certified canonical polygon.
    """

    def __init__(self, operation: str) -> None:
        """Initialize the error."""
        super().__init__(
            f"{operation} needs a certified polygon; raise the radius factor or the node budget of the enumeration."
        )


class InconsistentFiltrationError(AdelicSlopesError):
    """Inconsistent Filtration Error.

    Raised when the Harder-Narasimhan achievers are not unique or not nested.
    """

    def __init__(self, rank: int, detail: str) -> None:
        """Initialize the error."""
        super().__init__(f"Harder-Narasimhan filtration broken at rank {rank}: {detail}")


class ConfigError(AdelicSlopesError):
    """Configuration Error.

    Raised when the configuration is invalid.
    """

    def __init__(self, source: str, detail: str) -> None:
        """Initialize the error."""
        super().__init__(f"Invalid configuration in {source}: {detail}")


class ParseError(AdelicSlopesError, ValueError):
    """Parse Error.

    Raised when a bundle document or a literal cannot be parsed.
    """

    def __init__(self, source: str, detail: str) -> None:
        """Initialize the error."""
        super().__init__(f"Cannot parse {source}: {detail}")


class UnexpectedCommandError(AdelicSlopesError, UnexpectedErrorProtocol):
    """Unexpected Command Error.

    Default error for all unexpected errors from the command line.
    """

    def __init__(self, exception: BaseException) -> None:
        """Initialize the error."""
        super().__init__(f"Unexpected error: {exception} ({type(exception).__name__})")
        logger.exception(exception)
