"""Configuration models."""

from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Annotated

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, computed_field
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing_extensions import Self

from adelic_slopes import constants
from adelic_slopes.errors import ConfigError
from adelic_slopes.utils import transform_coma_separated_string_to_list


class _BaseConfig(BaseModel):
    """Base class for config."""

    model_config = ConfigDict(extra="forbid", frozen=True)


class _BaseEnvConfig(BaseSettings):
    """Base class for environment variable config."""

    model_config = SettingsConfigDict(extra="ignore", frozen=True, env_ignore_empty=True)


class OutputFormat(str, Enum):
    """Output format."""

    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class SuiteName(str, Enum):
    """Verification suite."""

    HERMITIAN_EXACT = "hermitian-exact"
    BODY_BRACKETS = "body-brackets"
    GEOMETRY = "geometry"
    ALL = "all"


class SolverConfig(_BaseConfig):
    """John/Löwner solver config."""

    tol: Annotated[float, Field(gt=0, description="Relative optimality gap of the log-det programs.")] = (
        constants.SOLVER_TOLERANCE
    )
    max_iter: Annotated[int, Field(gt=0, description="Newton iteration cap.")] = constants.SOLVER_MAX_ITER
    lowner_max_iter: Annotated[int, Field(gt=0, description="Coordinate ascent iteration cap.")] = (
        constants.LOWNER_MAX_ITER
    )


class EnumerationConfig(_BaseConfig):
    """Lattice enumeration config."""

    radius_factor: Annotated[float, Field(gt=0, description="Enumeration radius relative to the incumbent.")] = 1.0
    max_nodes: Annotated[int, Field(gt=0, description="Node budget of one enumeration.")] = (
        constants.ENUMERATION_MAX_NODES
    )
    escalation_rounds: Annotated[int, Field(ge=0, description="Radius escalations on uncertified runs.")] = (
        constants.ESCALATION_ROUNDS
    )
    escalation_factor: Annotated[float, Field(gt=1, description="Radius growth per escalation.")] = (
        constants.ESCALATION_FACTOR
    )
    rank_guard: Annotated[int, Field(gt=0, description="Largest rank accepted by enumerations.")] = (
        constants.RANK_GUARD
    )

    def radius_schedule(self, radius_factor: float | None = None) -> list[float]:
        """Enumeration radius factors tried in order until the polygon is certified."""
        factor = self.radius_factor if radius_factor is None else radius_factor
        return [factor * self.escalation_factor**k for k in range(self.escalation_rounds + 1)]


class CheckConfig(_BaseConfig):
    """Theorem check config."""

    mc_samples: Annotated[int, Field(ge=1000, description="Monte Carlo samples of volume oracles.")] = (
        constants.MC_SAMPLES
    )
    seed: Annotated[int, Field(ge=0, description="Seed of instance generators and Monte Carlo.")] = 0
    workers: Annotated[int, Field(gt=0, description="Concurrent suite instances.")] = 1
    suites: Annotated[list[SuiteName] | None, BeforeValidator(transform_coma_separated_string_to_list)] = None


class OutputConfig(_BaseConfig):
    """Output config."""

    format: OutputFormat = OutputFormat.JSON
    out: Path | None = None
    digits: Annotated[int, Field(gt=0, le=17, description="Significant digits of printed reals.")] = (
        constants.SIGNIFICANT_DIGITS
    )


class SolverEnvConfig(SolverConfig, _BaseEnvConfig):
    """Solver Environment Config."""

    model_config = SettingsConfigDict(env_prefix="ADELIC_SOLVER_")


class EnumerationEnvConfig(EnumerationConfig, _BaseEnvConfig):
    """Enumeration Environment Config."""

    model_config = SettingsConfigDict(env_prefix="ADELIC_ENUM_")


class CheckEnvConfig(CheckConfig, _BaseEnvConfig):
    """Check Environment Config."""

    model_config = SettingsConfigDict(env_prefix="ADELIC_CHECK_")


class OutputEnvConfig(OutputConfig, _BaseEnvConfig):
    """Output Environment Config."""

    model_config = SettingsConfigDict(env_prefix="ADELIC_OUTPUT_")


class Settings(BaseModel):
    """Settings.

    Aggregate the solver, enumeration, check and output configurations. Each one defaults to its environment
    variant, so `Settings()` reads `ADELIC_SOLVER_*`, `ADELIC_ENUM_*`, `ADELIC_CHECK_*` and `ADELIC_OUTPUT_*`.
    """

    model_config = ConfigDict(frozen=True, validate_default=True, extra="forbid")

    solver: SolverConfig = Field(default_factory=SolverEnvConfig)
    enumeration: EnumerationConfig = Field(default_factory=EnumerationEnvConfig)
    check: CheckConfig = Field(default_factory=CheckEnvConfig)
    output: OutputConfig = Field(default_factory=OutputEnvConfig)

    @classmethod
    def from_environment(cls) -> Self:
        """Settings read from the `ADELIC_*` environment variables.

        Raises:
            ConfigError: If a variable holds an invalid value.
        """
        try:
            return cls()
        except ValidationError as error:
            first = error.errors()[0]
            location = ".".join(str(part) for part in first["loc"]) or "settings"
            raise ConfigError("the environment", f"{location}: {first['msg']}") from error

    @computed_field()  # type: ignore[misc]
    @cached_property
    def computed_suites(self) -> list[SuiteName]:
        """Suites run by `verify all`."""
        suites = self.check.suites or [SuiteName.ALL]
        if SuiteName.ALL in suites:
            return [SuiteName.HERMITIAN_EXACT, SuiteName.BODY_BRACKETS, SuiteName.GEOMETRY]
        return suites

    def with_overrides(
        self,
        *,
        tol: float | None = None,
        radius_factor: float | None = None,
        seed: int | None = None,
        output_format: OutputFormat | None = None,
        out: Path | None = None,
    ) -> "Settings":
        """Return a copy with command line overrides applied (None keeps the current value)."""
        solver = self.solver if tol is None else SolverConfig(**{**self.solver.model_dump(), "tol": tol})
        enumeration = (
            self.enumeration
            if radius_factor is None
            else EnumerationConfig(**{**self.enumeration.model_dump(), "radius_factor": radius_factor})
        )
        check = self.check if seed is None else CheckConfig(**{**self.check.model_dump(), "seed": seed})
        output_update: dict[str, object] = {}
        if output_format is not None:
            output_update["format"] = output_format
        if out is not None:
            output_update["out"] = out
        output = OutputConfig(**{**self.output.model_dump(), **output_update}) if output_update else self.output
        return Settings(solver=solver, enumeration=enumeration, check=check, output=output)
