"""Places of Q and normalized absolute values.

Finite places use |p|_p = 1/p; values there are exact rationals. The real place carries the usual absolute value
and the complex place of Q(i) the usual modulus with local degree 2.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Annotated

from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
from sympy import factorint, isprime, multiplicity
from typing_extensions import Self

from adelic_slopes.dtos import CheckReport
from adelic_slopes.errors import DomainError
from adelic_slopes.utils import ExactRational, RationalLike, log_rational, parse_rational


class PlaceKind(str, Enum):
    """Place kind."""

    FINITE = "finite"
    REAL = "real"
    COMPLEX = "complex"


class Place(BaseModel):
    """Place of Q, or the complex place of Q(i)."""

    model_config = ConfigDict(frozen=True)

    kind: PlaceKind
    prime: Annotated[int, Field(gt=1)] | None = None

    @computed_field()  # type: ignore[misc]
    @cached_property
    def local_degree(self) -> int:
        """Local degree n_v."""
        return 2 if self.kind is PlaceKind.COMPLEX else 1

    @model_validator(mode="after")
    def _check_prime(self) -> Self:
        if self.kind is PlaceKind.FINITE:
            if self.prime is None or not isprime(self.prime):
                msg = f"Finite place needs a prime, got {self.prime}"
                raise ValueError(msg)
        elif self.prime is not None:
            msg = f"{self.kind.value} place takes no prime"
            raise ValueError(msg)
        return self

    @classmethod
    def finite(cls, prime: int) -> Self:
        """Finite place of a prime."""
        return cls(kind=PlaceKind.FINITE, prime=prime)

    @classmethod
    def real(cls) -> Self:
        """Real place."""
        return cls(kind=PlaceKind.REAL)

    @classmethod
    def complex(cls) -> Self:  # noqa: A003
        """Complex place."""
        return cls(kind=PlaceKind.COMPLEX)

    def __str__(self) -> str:
        """Short label of the place."""
        return f"p={self.prime}" if self.kind is PlaceKind.FINITE else self.kind.value


def _nonzero(x: RationalLike, operation: str) -> Fraction:
    value = parse_rational(x)
    if value == 0:
        raise DomainError(operation, "zero has no absolute value")
    return value


def valuation(x: RationalLike, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    value = _nonzero(x, "valuation")
    return int(multiplicity(p, value.numerator)) - int(multiplicity(p, value.denominator))


def support_primes(x: RationalLike) -> list[int]:
    """Primes dividing the numerator or the denominator of a nonzero rational."""
    value = _nonzero(x, "support_primes")
    primes = set(factorint(value.numerator)) | set(factorint(value.denominator))
    return sorted(p for p in primes if p > 1)


def abs_value(x: RationalLike, v: Place) -> Fraction:
    """Normalized absolute value |x|_v, exact at every place of Q.

    Raises:
        DomainError: If x is zero.
    """
    value = _nonzero(x, "abs_value")
    if v.kind is PlaceKind.FINITE:
        assert v.prime is not None  # noqa: S101
        return Fraction(v.prime) ** -valuation(value, v.prime)
    return abs(value)


def product_formula_check(x: RationalLike) -> CheckReport:
    """Product formula: the product over all places of |x|_v^n_v equals 1, in exact arithmetic."""
    value = _nonzero(x, "product_formula_check")
    product = abs_value(value, Place.real())
    for p in support_primes(value):
        product *= abs_value(value, Place.finite(p))
    return CheckReport(
        name="product_formula",
        instance={"x": f"{value.numerator}/{value.denominator}"},
        lhs=float(product),
        rhs=1.0,
        slack=0.0 if product == 1 else -abs(log_rational(product)),
        tolerance=0.0,
    )


class Idele(BaseModel):
    """Idele of Q stored by its absolute values.

    `finite_part` maps each prime of the support to |a_p|_p, an integral power of p; unstored components are 1.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    finite_part: dict[int, ExactRational] = Field(default_factory=dict)
    arch_part: Annotated[float, Field(gt=0)] = 1.0

    @model_validator(mode="after")
    def _check_powers(self) -> Self:
        for p, value in self.finite_part.items():
            if not isprime(p):
                msg = f"{p} is not prime"
                raise ValueError(msg)
            if value <= 0 or Fraction(p) ** valuation(value, p) != value:
                msg = f"|a_{p}|_{p} = {value} is not a power of {p}"
                raise ValueError(msg)
        return self

    @classmethod
    def from_rational(cls, q: RationalLike) -> Self:
        """Principal idele of a nonzero rational."""
        value = _nonzero(q, "Idele.from_rational")
        finite = {p: abs_value(value, Place.finite(p)) for p in support_primes(value)}
        return cls(finite_part=finite, arch_part=float(abs(value)))

    def finite_product(self) -> Fraction:
        """Product of the finite absolute values."""
        return math.prod(self.finite_part.values(), start=Fraction(1))

    def finite_scalar(self) -> Fraction:
        """Rational f with |f|_p = |a_p|_p at every prime."""
        return 1 / self.finite_product()


def adelic_abs(a: Idele) -> float:
    """Adelic absolute value, the product of the components over all places."""
    return float(a.finite_product()) * a.arch_part
