"""Test John and Löwner ellipsoids."""

import logging
import math
from fractions import Fraction

import numpy as np
import pytest
from adelic_slopes.config import SolverConfig
from adelic_slopes.convexgeom import (
    HPoly,
    LpBall,
    cross_polytope,
    cube,
    euclidean_ball,
    facets,
    symmetric_vpoly,
    vertices,
)
from adelic_slopes.ellipsoids import (
    EllipsoidResult,
    _feasible,
    bm_distance_bound,
    coordinate_ascent_design,
    delta_upper,
    john_ellipsoid,
    john_factor,
    lowner_ellipsoid,
    polarity_check,
    rogalski_check,
    sandwich_check,
    sandwich_factors,
    solve_john,
    solve_lowner,
    volume_ratio,
    volume_ratio_check,
    vr_lp_closed_form,
    vr_tilde,
)
from adelic_slopes.errors import SolverError

HEXAGON = symmetric_vpoly([[2, 0], [0, 1], [1, 1]])
SKEW_HEXAGON = symmetric_vpoly([[2, 0], [2, -2], [1, 1]])
SEGMENT = HPoly(normals=((1,), (-1,), (Fraction(1, 5),), (Fraction(-1, 5),)), offsets=(1, 1, 1, 1))


def test_square() -> None:
    """Test the inscribed unit disc and the circumscribed disc of radius √2."""
    # Act
    john = john_ellipsoid(cube(2))
    lowner = lowner_ellipsoid(cube(2))

    # Assert
    assert np.allclose(john.matrix, np.eye(2))
    assert john.log_volume == pytest.approx(math.log(math.pi))
    assert np.allclose(lowner.matrix, np.eye(2) / 2)
    assert lowner.log_volume == pytest.approx(math.log(2 * math.pi))
    assert john.certificate_gap == pytest.approx(0.0, abs=1e-12)


def test_diamond() -> None:
    """Test the ellipsoids of the cross-polytope."""
    # Act
    john = john_ellipsoid(cross_polytope(2))
    lowner = lowner_ellipsoid(cross_polytope(2))

    # Assert
    assert np.allclose(john.matrix, 2 * np.eye(2))
    assert np.allclose(lowner.matrix, np.eye(2))


def test_lp_balls() -> None:
    """Test closed-form radii of l^p balls."""
    # Act
    john = john_ellipsoid(LpBall(p=1, n=4))
    lowner = lowner_ellipsoid(LpBall(p=math.inf, n=4, radius=2))

    # Assert
    assert np.allclose(john.matrix, 4 * np.eye(4))
    assert np.allclose(lowner.matrix, np.eye(4) / 16)


def test_ellipsoid_is_its_own_john_and_lowner() -> None:
    """Test an ellipsoid is fixed by both problems."""
    # Arrange
    ball = euclidean_ball(3)

    # Act & Assert
    assert np.allclose(john_ellipsoid(ball).matrix, np.eye(3))
    assert np.allclose(lowner_ellipsoid(ball).matrix, np.eye(3))
    assert delta_upper(ball) == pytest.approx(1.0)


def test_hexagon_is_solved() -> None:
    """Test a polytope without symmetry shortcuts within the certificate gap."""
    # Act
    john = john_ellipsoid(HEXAGON)
    lowner = lowner_ellipsoid(HEXAGON)

    # Assert
    assert john.certificate_gap <= 1e-7
    assert lowner.certificate_gap <= 1e-7
    assert john.log_volume < lowner.log_volume
    assert polarity_check(HEXAGON).passed
    assert sandwich_check(HEXAGON).passed
    assert volume_ratio_check(HEXAGON).passed


def test_solver_error_keeps_best_iterate() -> None:
    """Test a starved solver raises with its best iterate."""
    # Act
    with pytest.raises(SolverError) as excinfo:
        lowner_ellipsoid(HEXAGON, 1e-15, 1, 1)

    # Assert
    assert isinstance(excinfo.value.best, EllipsoidResult)
    assert excinfo.value.best.kind == "lowner"


def test_as_body() -> None:
    """Test the rationalized ellipsoid of the square."""
    # Act
    body = john_ellipsoid(cube(2)).as_body()

    # Assert
    assert body.gram == ((1, 0), (0, 1))


def test_volume_ratios_of_square() -> None:
    """Test the volume ratios of the square against their closed forms."""
    # Act & Assert
    assert volume_ratio(cube(2)) == pytest.approx(math.sqrt(4 / math.pi))
    assert vr_tilde(cube(2)) == pytest.approx(math.sqrt(math.pi / 2))
    assert vr_lp_closed_form(2, math.inf) == pytest.approx(math.sqrt(4 / math.pi))
    assert vr_lp_closed_form(5, 2) == pytest.approx(1.0)


def test_banach_mazur_bracket_of_square() -> None:
    """Test the certified Banach-Mazur bracket of the square."""
    # Act
    a, b = sandwich_factors(cube(2))
    lower, upper = bm_distance_bound(cube(2))

    # Assert
    assert a == pytest.approx(math.sqrt(2))
    assert b == pytest.approx(math.sqrt(2))
    assert upper == pytest.approx(math.sqrt(2))
    assert lower == pytest.approx(4 / math.pi)
    assert delta_upper(cube(2)) == pytest.approx(math.sqrt(2))


@pytest.mark.parametrize(("n", "p"), [(2, math.inf), (2, 2.0), (3, 1.0), (8, 4.0), (16, 1.5)])
def test_rogalski_check(n: int, p: float) -> None:
    """Test l^p volume ratios inside their asymptotic bracket."""
    # Act & Assert
    assert rogalski_check(n, p).passed


@pytest.mark.parametrize("body", [cube(3), cross_polytope(3), LpBall(p=3, n=3)])
def test_ellipsoid_checks(body: object) -> None:
    """Test polarity, sandwich and volume ratio ranges."""
    # Act & Assert
    assert polarity_check(body).passed  # type: ignore[arg-type]
    assert sandwich_check(body).passed  # type: ignore[arg-type]
    assert volume_ratio_check(body).passed  # type: ignore[arg-type]


def _as_array(points: list[tuple[Fraction, ...]]) -> np.ndarray:
    return np.array([[float(x) for x in p] for p in points])


def test_segment_is_solved_in_closed_form() -> None:
    """Test one-dimensional bodies get the segment itself as both ellipsoids."""
    # Act
    john = john_ellipsoid(SEGMENT)
    lowner = lowner_ellipsoid(SEGMENT)
    u, iterations, gap = coordinate_ascent_design(np.array([[1.0], [0.2]]), 1e-7, 100)

    # Assert
    assert np.allclose(john.matrix, [[1.0]])
    assert np.allclose(lowner.matrix, [[1.0]])
    assert delta_upper(SEGMENT) == pytest.approx(1.0)
    assert list(u) == [1.0, 0.0]
    assert (iterations, gap) == (0, 0.0)


def test_skew_hexagon_is_solved() -> None:
    """Test a hexagon with a long diagonal: both solvers converge and Δ stays below √2."""
    # Act
    john = solve_john(SKEW_HEXAGON)
    lowner = solve_lowner(SKEW_HEXAGON)
    a, b = sandwich_factors(SKEW_HEXAGON)
    delta = delta_upper(SKEW_HEXAGON)

    # Assert
    assert john.certificate_gap <= 1e-7
    assert lowner.certificate_gap <= 1e-7
    assert 1.0 <= a <= math.sqrt(2) * (1 + 1e-6)
    assert 1.0 <= b <= math.sqrt(2) * (1 + 1e-6)
    assert delta == pytest.approx(min(math.sqrt(2), a, b))
    assert sandwich_check(SKEW_HEXAGON).passed


@pytest.mark.parametrize("body", [HEXAGON, SKEW_HEXAGON, cube(3)])
def test_ellipsoids_sit_on_the_right_side(body: object) -> None:
    """Test the John ellipsoid lies in every slab and the Löwner ellipsoid holds every vertex."""
    # Arrange
    W = _as_array(facets(body))  # type: ignore[arg-type]
    V = _as_array(vertices(body))  # type: ignore[arg-type]

    # Act
    john = solve_john(body)  # type: ignore[arg-type]
    lowner = solve_lowner(body)  # type: ignore[arg-type]

    # Assert
    assert np.einsum("ij,ij->i", W @ np.linalg.inv(john.matrix), W).max() <= 1 + 1e-12
    assert np.einsum("ij,jk,ik->i", V, lowner.matrix, V).max() <= 1 + 1e-12


def test_infeasible_ellipsoid_is_rejected() -> None:
    """Test an ellipsoid missing a vertex by more than the tolerance raises, a rounding excess is rescaled."""
    # Arrange
    V = np.array([[1.0, 0.0], [0.0, 1.0]])

    # Act
    with pytest.raises(SolverError, match="off the body") as excinfo:
        _feasible("lowner", V, np.eye(2) * 4, 0.0, 3, 1e-7)
    rescaled = _feasible("lowner", V, np.eye(2) * (1 + 1e-9), 0.0, 3, 1e-7)

    # Assert
    assert excinfo.value.best is not None
    assert np.einsum("ij,jk,ik->i", V, rescaled.matrix, V).max() <= 1 + 1e-15


def test_john_factor_of_square() -> None:
    """Test the square lies in √2 times its inscribed disc."""
    # Act & Assert
    assert john_factor(cube(2)) == pytest.approx(math.sqrt(2))
    assert john_factor(LpBall(p=1, n=4)) == pytest.approx(2.0)


def test_solver_config_reaches_the_solver() -> None:
    """Test the iteration caps of a solver configuration are used."""
    # Arrange
    starved = SolverConfig(tol=1e-15, max_iter=1, lowner_max_iter=1)

    # Act & Assert
    with pytest.raises(SolverError):
        solve_lowner(HEXAGON, starved)
    assert solve_lowner(HEXAGON, SolverConfig()).certificate_gap <= 1e-7


def test_crossed_banach_mazur_bracket_warns(monkeypatch: pytest.MonkeyPatch, caplog: pytest.LogCaptureFixture) -> None:
    """Test a lower bound above the upper bound is reported before it is clipped."""
    # Arrange
    caplog.set_level(logging.WARNING, logger="adelic_slopes")
    monkeypatch.setattr("adelic_slopes.ellipsoids.delta_upper", lambda *_: 1.0)

    # Act
    lower, upper = bm_distance_bound(cube(2))

    # Assert
    assert (lower, upper) == (1.0, 1.0)
    assert any("crosses the upper bound" in record.getMessage() for record in caplog.records)
