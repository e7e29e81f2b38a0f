"""Test convex bodies, gauges and volumes."""

import math
from fractions import Fraction

import pytest
from adelic_slopes.convexgeom import (
    Ellipsoid,
    HPoly,
    LpBall,
    PSum,
    Section,
    VPoly,
    ball_log_volume,
    complex_volume,
    cross_polytope,
    cube,
    dilate,
    direct_sum_volume_check,
    ellipsoid,
    euclidean_ball,
    exact_volume,
    facets,
    gauge,
    log_volume,
    lp_log_volume,
    mahler_conjecture_holds,
    mahler_product,
    materialize,
    polar,
    psum_log_factor,
    restrict,
    santalo_mahler_check,
    symmetric_hpoly,
    symmetric_vpoly,
    to_hpoly,
    to_vpoly,
    transform,
    vertices,
    volume_mc,
)
from adelic_slopes.errors import DimensionMismatchError, InvalidBodyError, SingularMatrixError, UnsupportedMetricError
from pydantic import ValidationError
from sympy import ImmutableMatrix


def _points(*rows: tuple[int, ...]) -> set[tuple[Fraction, ...]]:
    return {tuple(Fraction(x) for x in row) for row in rows}


@pytest.mark.parametrize(
    ("body", "expected"),
    [
        (cube(2), Fraction(4)),
        (cube(3), Fraction(8)),
        (cube(2, Fraction(1, 2)), Fraction(1)),
        (cross_polytope(2), Fraction(2)),
        (cross_polytope(3), Fraction(4, 3)),
        (cross_polytope(1), Fraction(2)),
    ],
)
def test_exact_volume(body: HPoly | VPoly, expected: Fraction) -> None:
    """Test exact polytope volumes."""
    # Act & Assert
    assert exact_volume(body) == expected


def test_vertices_and_facets() -> None:
    """Test the exact vertex and facet enumeration of the square and the diamond."""
    # Arrange
    corners = _points((1, 1), (1, -1), (-1, 1), (-1, -1))

    # Act & Assert
    assert set(vertices(cube(2))) == corners
    assert set(facets(cross_polytope(2))) == corners
    assert set(facets(cube(2))) == _points((1, 0), (-1, 0), (0, 1), (0, -1))
    assert len(to_hpoly(cross_polytope(2)).normals) == 4
    assert set(to_vpoly(cube(2)).vertices) == corners


def test_symmetric_constructors() -> None:
    """Test the ± completion of vertices and facets."""
    # Act
    diamond = symmetric_vpoly([[1, 0], [0, 1]])
    slab = symmetric_hpoly([[1, 0], [0, 1]], [2, 2])

    # Assert
    assert set(diamond.vertices) == set(cross_polytope(2).vertices)
    assert exact_volume(slab) == 16


@pytest.mark.parametrize(
    "build",
    [
        lambda: HPoly(normals=((1, 0), (-1, 0)), offsets=(1, 1)),
        lambda: HPoly(normals=((1, 0), (-1, 0), (0, 1)), offsets=(1, 1, 1)),
        lambda: HPoly(normals=((1, 0), (-1, 0), (0, 1), (0, -1)), offsets=(1, 1, 0, 1)),
        lambda: VPoly(vertices=((1, 0), (-1, 0))),
        lambda: VPoly(vertices=((1, 0), (0, 1), (-1, 0))),
        lambda: LpBall(p=0.5, n=2),
        lambda: Ellipsoid(gram=((1, 2), (2, 1))),
        lambda: Ellipsoid(gram=((1, 0), (1, 1))),
        lambda: Section(body=cube(2), basis=((1,),)),
        lambda: Section(body=cube(2), basis=((1, 2), (2, 4))),
    ],
)
def test_invalid_bodies(build: object) -> None:
    """Test unbounded, non-symmetric and degenerate bodies are rejected."""
    # Act & Assert
    with pytest.raises(ValidationError):
        build()  # type: ignore[operator]


def test_gauge() -> None:
    """Test the gauge of each representation."""
    # Act & Assert
    assert gauge(cube(2), [Fraction(1, 2), -3]) == 3.0
    assert gauge(cross_polytope(2), [1, -2]) == pytest.approx(3.0)
    assert gauge(cross_polytope(2), [0, 0]) == 0.0
    assert gauge(LpBall(p=2, n=2, radius=2), [3, 4]) == pytest.approx(2.5)
    assert gauge(LpBall(p=math.inf, n=2), [3, -4]) == pytest.approx(4.0)
    assert gauge(ellipsoid([[4, 0], [0, 1]]), [1, 0]) == pytest.approx(2.0)
    assert gauge(PSum(first=cube(1), second=cube(1), p=1), [1, -1]) == pytest.approx(2.0)


def test_gauge_dimension_mismatch() -> None:
    """Test the gauge checks the dimension."""
    # Act & Assert
    with pytest.raises(DimensionMismatchError):
        gauge(cube(2), [1, 2, 3])


def test_polar() -> None:
    """Test polar bodies."""
    # Act
    polar_cube = polar(cube(2))
    polar_ball = polar(LpBall(p=1, n=3, radius=2))
    polar_ellipsoid = polar(ellipsoid([[4, 0], [0, 1]]))

    # Assert
    assert isinstance(polar_cube, VPoly)
    assert set(polar_cube.vertices) == set(cross_polytope(2).vertices)
    assert isinstance(polar_ball, LpBall)
    assert math.isinf(polar_ball.p)
    assert polar_ball.radius == Fraction(1, 2)
    assert isinstance(polar_ellipsoid, Ellipsoid)
    assert polar_ellipsoid.gram == ((Fraction(1, 4), 0), (0, 1))


def test_closed_form_volumes() -> None:
    """Test l^p and ellipsoid log-volumes."""
    # Act & Assert
    assert ball_log_volume(2) == pytest.approx(math.log(math.pi))
    assert ball_log_volume(3) == pytest.approx(math.log(4 * math.pi / 3))
    assert lp_log_volume(2, 1) == pytest.approx(math.log(2))
    assert log_volume(LpBall(p=math.inf, n=3)) == pytest.approx(3 * math.log(2))
    assert log_volume(LpBall(p=1, n=3)) == pytest.approx(math.log(4 / 3))
    assert log_volume(LpBall(p=2, n=2, radius=3)) == pytest.approx(math.log(9 * math.pi))
    assert log_volume(ellipsoid([[4, 0], [0, 1]])) == pytest.approx(math.log(math.pi / 2))


def test_psum_volume_of_intervals() -> None:
    """Test the 2-sum of two intervals is the unit disc."""
    # Arrange
    interval = LpBall(p=2, n=1)

    # Act
    value = log_volume(PSum(first=interval, second=interval, p=2))

    # Assert
    assert value == pytest.approx(math.log(math.pi))
    assert psum_log_factor(1, 1, math.inf) == 0.0
    assert psum_log_factor(1, 1, 1) == pytest.approx(-math.log(2))


def test_materialize() -> None:
    """Test exact forms of l^p balls and p-sums."""
    # Act
    diamond = materialize(LpBall(p=1, n=2))
    disc = materialize(LpBall(p=2, n=2, radius=2))
    square = materialize(PSum(first=cube(1), second=cube(1), p=math.inf))
    rhombus = materialize(PSum(first=cross_polytope(1), second=cross_polytope(1), p=1))

    # Assert
    assert isinstance(diamond, VPoly)
    assert exact_volume(diamond) == 2
    assert isinstance(disc, Ellipsoid)
    assert disc.gram == ((Fraction(1, 4), 0), (0, Fraction(1, 4)))
    assert isinstance(square, HPoly)
    assert exact_volume(square) == 4
    assert isinstance(rhombus, VPoly)
    assert exact_volume(rhombus) == 2
    with pytest.raises(UnsupportedMetricError):
        materialize(LpBall(p=3, n=2))
    with pytest.raises(UnsupportedMetricError):
        vertices(euclidean_ball(2))


def test_transform_and_dilate() -> None:
    """Test linear images and homotheties scale the volume."""
    # Arrange
    T = ImmutableMatrix([[2, 1], [0, 1]])

    # Act
    image = transform(cube(2), T)
    scaled = dilate(cross_polytope(2), 3)

    # Assert
    assert isinstance(image, HPoly)
    assert exact_volume(image) == 8
    assert isinstance(scaled, VPoly)
    assert exact_volume(scaled) == 18
    assert log_volume(dilate(euclidean_ball(2), 2)) == pytest.approx(math.log(4 * math.pi))
    with pytest.raises(SingularMatrixError):
        transform(cube(2), ImmutableMatrix([[1, 1], [1, 1]]))
    with pytest.raises(InvalidBodyError):
        dilate(cube(2), 0)


def test_restrict() -> None:
    """Test sections by the diagonal line."""
    # Arrange
    diagonal = ImmutableMatrix([[1], [1]])

    # Act
    segment = restrict(cube(2), diagonal)
    ball_section = restrict(euclidean_ball(2), diagonal)
    diamond_section = restrict(cross_polytope(2), diagonal)

    # Assert
    assert gauge(segment, [1]) == 1.0
    assert isinstance(ball_section, Ellipsoid)
    assert ball_section.gram == ((2,),)
    assert gauge(diamond_section, [Fraction(1, 2)]) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatchError):
        restrict(cube(2), ImmutableMatrix([[1], [1], [1]]))


def test_mahler_product() -> None:
    """Test Mahler products of the square and the disc."""
    # Act & Assert
    assert mahler_product(cube(2)) == pytest.approx(8.0)
    assert mahler_product(euclidean_ball(2)) == pytest.approx(math.pi**2)
    assert mahler_conjecture_holds(cube(2))
    assert santalo_mahler_check(cross_polytope(3)).passed


def test_volume_mc() -> None:
    """Test Monte Carlo volumes against exact ones."""
    # Act
    square, square_error = volume_mc(cube(2), 20_000, 7)
    disc, disc_error = volume_mc(euclidean_ball(2), 20_000, 7)

    # Assert
    assert square == pytest.approx(4.0)
    assert square_error == 0.0
    assert abs(disc - math.pi) <= 5 * disc_error
    with pytest.raises(InvalidBodyError):
        volume_mc(cube(2), 10, 7)


def test_complex_volume_closed_form() -> None:
    """Test the complexified unit interval is the unit disc."""
    # Act
    value, error = complex_volume(euclidean_ball(1), 20_000, 7)

    # Assert
    assert value == pytest.approx(math.pi)
    assert error == 0.0


@pytest.mark.parametrize(
    ("first", "second", "p"),
    [
        (cube(1), cube(1), math.inf),
        (cross_polytope(1), cross_polytope(1), 1.0),
        (euclidean_ball(1), euclidean_ball(2), 2.0),
    ],
)
def test_direct_sum_volume_check(first: HPoly | VPoly | Ellipsoid, second: HPoly | VPoly | Ellipsoid, p: float) -> None:
    """Test p-sum volumes against the Γ ratio."""
    # Act
    report = direct_sum_volume_check(first, second, p)

    # Assert
    assert report.passed


def test_section_of_lp_ball() -> None:
    """Test sections of an l^3 ball keep their gauge and get their volume by quadrature."""
    # Arrange
    ball = LpBall(p=3, n=2)

    # Act
    line = restrict(ball, ImmutableMatrix([[1], [1]]))
    plane = restrict(ball, ImmutableMatrix([[1, 1], [0, 1]]))
    axis = restrict(plane, ImmutableMatrix([[1], [0]]))

    # Assert
    assert isinstance(line, Section)
    assert gauge(line, [1]) == pytest.approx(2 ** (1 / 3))
    assert log_volume(line) == pytest.approx(math.log(2) - math.log(2) / 3)
    assert isinstance(plane, Section)
    assert log_volume(plane) == pytest.approx(lp_log_volume(2, 3), abs=1e-7)
    assert isinstance(axis, Section)
    assert axis.basis == ((1,), (0,))
    assert log_volume(axis) == pytest.approx(math.log(2))
    with pytest.raises(UnsupportedMetricError):
        polar(line)


def test_section_volume_by_rank() -> None:
    """Test the volume of a section in rank 3 by quadrature and in rank 4 by Monte Carlo."""
    # Arrange
    solid = restrict(LpBall(p=3, n=3), ImmutableMatrix.diag(2, 1, 1))
    four = restrict(LpBall(p=3, n=4), ImmutableMatrix.eye(4))

    # Act
    solid_volume = log_volume(solid)
    four_volume = log_volume(four)

    # Assert
    assert solid_volume == pytest.approx(lp_log_volume(3, 3) - math.log(2), abs=1e-6)
    assert four_volume == pytest.approx(lp_log_volume(4, 3), abs=0.06)


def test_section_images() -> None:
    """Test linear images and homotheties of a section, and sections of exact bodies."""
    # Arrange
    line = restrict(LpBall(p=3, n=2), ImmutableMatrix([[1], [1]]))
    exact = Section(body=cube(2), basis=((1,), (1,)))

    # Act
    stretched = transform(line, ImmutableMatrix([[2]]))
    scaled = dilate(line, 3)

    # Assert
    assert log_volume(stretched) == pytest.approx(log_volume(line) + math.log(2))
    assert log_volume(scaled) == pytest.approx(log_volume(line) + math.log(3))
    assert isinstance(materialize(exact), HPoly)
    assert exact_volume(materialize(exact)) == 2
