"""Utilities."""

from __future__ import annotations

import math
from contextlib import contextmanager
from fractions import Fraction
from typing import TYPE_CHECKING, Annotated, TypeVar, overload

from pydantic import BeforeValidator, PlainSerializer

from adelic_slopes.constants import SIGNIFICANT_DIGITS
from adelic_slopes.errors import DomainError, ParseError

if TYPE_CHECKING:
    from collections.abc import Generator, Iterable

    from adelic_slopes.errors import UnexpectedErrorProtocol

T = TypeVar("T")

RationalLike = int | str | Fraction


@contextmanager
def safe_error(
    default: type[UnexpectedErrorProtocol], *, allow: Iterable[type[Exception]] | type[Exception] | None = None
) -> Generator[None, None, None]:
    """Decorator or contextmanager to catch all unexpected errors and raise a default error.

    Args:
        default: Error to raise if a non expected error occurs.
        allow: Allowed error(s) to pass through.
    """
    allow = [allow] if isinstance(allow, type) else allow or []

    try:
        yield
    except BaseException as error:
        if not any(isinstance(error, allowed) for allowed in allow):
            raise default(error) from error
        raise


@overload
def transform_coma_separated_string_to_list(value: str) -> list[str]: ...
@overload
def transform_coma_separated_string_to_list(value: T) -> list[str] | T: ...
def transform_coma_separated_string_to_list(value: str | T) -> list[str] | T:
    """Transform coma separated string to list."""
    if isinstance(value, str):
        return [v.strip() for v in value.split(",") if v.strip()]
    return value


def parse_rational(value: RationalLike | float) -> Fraction:
    """Parse a rational from an integer, a Fraction or a "num/den" string.

    Floats are refused: lattice data must never carry floating-point contamination.

    Raises:
        ParseError: If the value is not an exact rational literal.
    """
    if isinstance(value, bool):
        raise ParseError("rational", f"boolean {value!r}")
    if isinstance(value, Fraction | int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        num, _, den = text.partition("/")
        try:
            return Fraction(int(num), int(den)) if den else Fraction(int(num))
        except (ValueError, ZeroDivisionError) as error:
            raise ParseError("rational", f"{value!r} is not of the form 'num/den'") from error
    raise ParseError("rational", f"{value!r} ({type(value).__name__}) is not exact")


def format_rational(value: Fraction | int) -> str:
    """Format a rational as "num/den" (or "num" for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_extended_real(value: str | float) -> float:
    """Parse a real in [1, inf] such as the exponent of an l^p ball ("inf", "2", 1.5 or "3/2")."""
    if isinstance(value, str):
        text = value.strip().lower()
        if text in {"inf", "infinity", "oo"}:
            return math.inf
        if "/" in text:
            return float(parse_rational(text))
        try:
            return float(text)
        except ValueError as error:
            raise ParseError("extended real", repr(value)) from error
    return float(value)


def format_extended_real(value: float) -> str | float:
    """Format an extended real, writing infinity as "inf"."""
    if math.isinf(value):
        return "inf"
    return value


def round_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> float:
    """Round a real to a number of significant digits."""
    if not math.isfinite(value) or value == 0:
        return value
    return float(f"{value:.{digits}g}")


def format_significant(value: float, digits: int = SIGNIFICANT_DIGITS) -> str:
    """Format a real with a number of significant digits."""
    return f"{value:.{digits}g}"


def log_rational(value: Fraction | int) -> float:
    """Logarithm of a positive rational, accurate for numerators and denominators of any size."""
    value = Fraction(value)
    if value <= 0:
        raise DomainError("log_rational", f"{value} is not positive")
    return math.log(value.numerator) - math.log(value.denominator)


def conjugate_exponent(p: float) -> float:
    """Hölder conjugate p' with 1/p + 1/p' = 1."""
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1)


ExactRational = Annotated[Fraction, BeforeValidator(parse_rational), PlainSerializer(format_rational, return_type=str)]
"""Exact rational field, parsed from "num/den" strings and serialized back to them."""

ExtendedReal = Annotated[
    float, BeforeValidator(parse_extended_real), PlainSerializer(format_extended_real, return_type=str | float)
]
"""Extended real field (an l^p exponent), serialized with "inf" for infinity."""
