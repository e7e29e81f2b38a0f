"""Test errors."""

import logging

import pytest
from adelic_slopes.errors import (
    AdelicSlopesError,
    ConfigError,
    DimensionMismatchError,
    DomainError,
    ParseError,
    RankGuardError,
    SingularMatrixError,
    SizeGuardError,
    SolverError,
    UnexpectedCommandError,
    UnsupportedMetricError,
)


def test_error_messages() -> None:
    """Test errors build their messages from structured arguments."""
    # Act & Assert
    assert str(DomainError("valuation", "zero has no absolute value")) == "valuation: zero has no absolute value"
    assert str(SingularMatrixError("scale", "Gram form")) == "scale: singular Gram form"
    assert str(DimensionMismatchError("map", (2, 3), (3, 2))) == "map: expected dimension (2, 3), got (3, 2)"
    assert str(RankGuardError(9, 8)) == "Rank 9 exceeds the enumeration guard 8."
    assert str(SizeGuardError("symmetric power", 210, 200)) == "symmetric power has size 210, above the guard 200."
    assert str(ParseError("bundle.json", "rank: missing")) == "Cannot parse bundle.json: rank: missing"
    assert str(ConfigError("the environment", "seed: bad")) == "Invalid configuration in the environment: seed: bad"
    assert "use john_bundle/lowner_bundle" in str(UnsupportedMetricError("exterior"))


def test_error_hierarchy() -> None:
    """Test value-type errors are also ValueErrors."""
    # Act & Assert
    assert issubclass(SingularMatrixError, DomainError)
    assert issubclass(DomainError, ValueError)
    assert issubclass(ParseError, ValueError)
    assert issubclass(RankGuardError, AdelicSlopesError)
    assert not issubclass(SolverError, ValueError)


def test_solver_error_keeps_best_iterate() -> None:
    """Test the solver error carries the best iterate."""
    # Act
    error = SolverError("John", 500, 1e-3)
    failed = SolverError("Coordinate ascent", 7, float("nan"), reason="non-finite leverages")

    # Assert
    assert error.best is None
    assert "500 iterations" in str(error)
    assert str(failed) == "Coordinate ascent failed after 7 iterations: non-finite leverages."


def test_unexpected_command_error_logs(caplog: pytest.LogCaptureFixture) -> None:
    """Test the unexpected error wrapper logs the original exception."""
    # Arrange
    caplog.set_level(logging.ERROR, logger="adelic_slopes")

    # Act
    error = UnexpectedCommandError(KeyError("x"))

    # Assert
    assert str(error) == "Unexpected error: 'x' (KeyError)"
    assert caplog.records
    assert caplog.records[0].name == "adelic_slopes"
