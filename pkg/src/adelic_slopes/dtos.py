"""Data Transfer Objects (DTOs)."""

from __future__ import annotations

import math
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, computed_field
from typing_extensions import Self

from adelic_slopes.utils import ExactRational, ExtendedReal

Bound = float | tuple[float, float]


class _BaseDTO(BaseModel):
    """Base class for results."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True, populate_by_name=True)


class CheckReport(_BaseDTO):
    """Outcome of one verified inequality or identity.

    `sound_direction_only` is false for informational directions (those that would need a lower bound on a
    Banach-Mazur distance, or a Monte Carlo estimate on the wrong side); they are reported and never asserted.
    """

    name: str
    instance: dict[str, Any] = Field(default_factory=dict)
    lhs: Bound
    rhs: Bound
    slack: float
    tolerance: float
    sound_direction_only: bool = True
    seed: int | None = None
    detail: str | None = None

    @computed_field(alias="pass")  # type: ignore[misc]
    @property
    def passed(self) -> bool:
        """Whether the slack is above the negated tolerance."""
        return not math.isnan(self.slack) and self.slack >= -self.tolerance

    @property
    def failed(self) -> bool:
        """Whether the report is an asserted failure."""
        return self.sound_direction_only and not self.passed

    @classmethod
    def equality(cls, name: str, lhs: float, rhs: float, *, tolerance: float, **kwargs: Any) -> Self:  # noqa: ANN401
        """Report for lhs = rhs."""
        return cls(name=name, lhs=lhs, rhs=rhs, slack=-abs(lhs - rhs), tolerance=tolerance, **kwargs)

    @classmethod
    def inequality(cls, name: str, lhs: float, rhs: float, *, tolerance: float, **kwargs: Any) -> Self:  # noqa: ANN401
        """Report for lhs <= rhs."""
        return cls(name=name, lhs=lhs, rhs=rhs, slack=rhs - lhs, tolerance=tolerance, **kwargs)

    @classmethod
    def bracket(
        cls,
        name: str,
        value: float,
        lower: float,
        upper: float,
        *,
        tolerance: float,
        **kwargs: Any,  # noqa: ANN401
    ) -> Self:
        """Report for lower <= value <= upper."""
        return cls(
            name=name,
            lhs=value,
            rhs=(lower, upper),
            slack=min(value - lower, upper - value),
            tolerance=tolerance,
            **kwargs,
        )

    @classmethod
    def combine(cls, name: str, reports: list[CheckReport], **kwargs: Any) -> Self:  # noqa: ANN401
        """Report that passes when all asserted sub-reports pass, with the worst normalized slack."""
        asserted = [report for report in reports if report.sound_direction_only] or reports
        worst = min(asserted, key=lambda report: report.slack + report.tolerance)
        details = {report.name: report.to_record() for report in reports}
        return cls(
            name=name,
            lhs=worst.lhs,
            rhs=worst.rhs,
            slack=worst.slack,
            tolerance=worst.tolerance,
            detail=worst.name,
            **{"instance": {"checks": details}, **kwargs},
        )

    def to_record(self) -> dict[str, Any]:
        """JSON-compatible record with the `pass` key."""
        return self.model_dump(mode="json", by_alias=True)


class HeightValue(_BaseDTO):
    """Height of a vector or of a map.

    `value = log(finite_part) + arch_part`; `exact` is false when the archimedean part is a certified upper bound.
    """

    value: float
    finite_part: ExactRational
    arch_part: float
    exact: bool = True


class GammaValue(_BaseDTO):
    """Logarithm of the geometric mean of the multinomial coefficients of degree ell in n variables."""

    n: int = Field(ge=1)
    ell: int = Field(ge=0)
    log_value: float = Field(ge=0)
    exact_log_numerator: float
    monomials: int


class LpDegreeValue(_BaseDTO):
    """Degree of (Q^n, l^p) from the printed closed form and from the definition."""

    n: int
    p: ExtendedReal
    r1: int
    r2: int
    printed: float
    definitional: float

    @computed_field()  # type: ignore[misc]
    @property
    def discrepancy(self) -> float:
        """Definitional minus printed value."""
        return self.definitional - self.printed


class LpAsymptotics(_BaseDTO):
    """Coefficients of deg(Q^n, l^p) = a·n·log n + b·n + log_n·log n + c + o(1)."""

    p: ExtendedReal
    a: float
    b: float
    c: float
    log_n: float = 0.0
    definitional: bool


class MinimaResult(_BaseDTO):
    """Successive minima with independent witnesses."""

    lambdas: tuple[float, ...]
    witnesses: tuple[tuple[int, ...], ...]
    semantics_flag: Literal["lattice-minima upper bound for the adelic definition"] = (
        "lattice-minima upper bound for the adelic definition"
    )


class Summary(_BaseDTO):
    """Aggregated outcome of a list of reports."""

    total: int
    passed: int
    failed: int
    informational: int
    min_slack: float | None
    mean_slack: float | None
