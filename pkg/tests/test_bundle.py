"""Test bundles, their operations and heights."""

import math
from fractions import Fraction

import pytest
from adelic_slopes.bundle import (
    AdelicBundle,
    AdelicMatrix,
    body_bundle,
    degree,
    degree_lp_asymptotics,
    degree_lp_formula,
    degree_normalized,
    determinant,
    direct_sum_p,
    dominates,
    dual,
    euler_characteristic,
    exterior,
    finite_norm,
    height_map,
    height_vector,
    hermitian_bundle,
    john_bundle,
    line_bundle,
    lowner_bundle,
    quotient,
    scalar_extension_check,
    scale,
    sections_bundle,
    sub,
    symmetric,
    tensor_g2,
    trivial_bundle,
)
from adelic_slopes.convexgeom import LpBall, PSum, cube
from adelic_slopes.errors import DimensionMismatchError, DomainError, UnsupportedMetricError
from adelic_slopes.places import Idele
from pydantic import ValidationError
from sympy import ImmutableMatrix

E1 = ImmutableMatrix([[1], [0]])


def test_invalid_bundles() -> None:
    """Test singular lattices and mismatched metrics are rejected."""
    # Act & Assert
    with pytest.raises(ValidationError):
        hermitian_bundle([[1, 2], [2, 4]], [[1, 0], [0, 1]])
    with pytest.raises(ValidationError):
        hermitian_bundle([[1, 0], [0, 1]], [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(ValidationError):
        hermitian_bundle([[1, 0], [0, 1]], [[1, 2], [2, 1]])


def test_gram_of_body_bundle(square2: AdelicBundle) -> None:
    """Test body bundles have no Gram form."""
    # Act & Assert
    assert not square2.hermitian_flag
    with pytest.raises(UnsupportedMetricError):
        _ = square2.gram


def test_degree(
    trivial2: AdelicBundle,
    unstable2: AdelicBundle,
    hexagonal2: AdelicBundle,
    square2: AdelicBundle,
    diamond2: AdelicBundle,
) -> None:
    """Test degrees of hermitian and body bundles."""
    # Act & Assert
    assert degree(trivial2) == pytest.approx(0.0)
    assert degree(unstable2) == pytest.approx(math.log(2))
    assert degree(line_bundle(2)) == pytest.approx(-math.log(2))
    assert degree(line_bundle(1, 4)) == pytest.approx(-math.log(2))
    assert degree(line_bundle("1/3", "1/9")) == pytest.approx(2 * math.log(3))
    assert degree(square2) == pytest.approx(math.log(4 / math.pi))
    assert degree(diamond2) == pytest.approx(math.log(2 / math.pi))
    assert degree_normalized(hexagonal2) == degree(hexagonal2)
    assert euler_characteristic(square2) == pytest.approx(math.log(4))


def test_finite_norm(trivial2: AdelicBundle) -> None:
    """Test finite norms of a vector."""
    # Act & Assert
    assert finite_norm(trivial2, ["1/2", 3], 2) == 2
    assert finite_norm(trivial2, [6, 3], 3) == Fraction(1, 3)
    assert finite_norm(hermitian_bundle([[2, 0], [0, 1]], [[1, 0], [0, 1]]), [2, 0], 2) == 1


def test_dual(unstable2: AdelicBundle, square2: AdelicBundle) -> None:
    """Test the dual of a hermitian bundle has the opposite degree."""
    # Act & Assert
    assert degree(dual(unstable2)) == pytest.approx(-math.log(2))
    assert degree(dual(line_bundle(3))) == pytest.approx(math.log(3))
    assert degree(square2) + degree(dual(square2)) == pytest.approx(math.log(8 / math.pi**2))


def test_direct_sum(trivial2: AdelicBundle, unstable2: AdelicBundle) -> None:
    """Test direct sums with l^2 and l^inf combinations."""
    # Arrange
    interval = body_bundle([[1]], LpBall(p=math.inf, n=1))

    # Act
    hermitian = direct_sum_p(trivial2, unstable2)
    square = direct_sum_p(interval, interval, math.inf)
    mixed = direct_sum_p(interval, line_bundle(1), 1)

    # Assert
    assert hermitian.hermitian_flag
    assert hermitian.rank == 4
    assert degree(hermitian) == pytest.approx(math.log(2))
    assert isinstance(square.body, LpBall)
    assert degree(square) == pytest.approx(math.log(4 / math.pi))
    assert isinstance(mixed.body, PSum)


def test_direct_sum_degree_with_gamma_factor() -> None:
    """Test the 1-sum of two lines carries the Γ correction."""
    # Arrange
    line = line_bundle(1)

    # Act
    value = degree(direct_sum_p(line, line, 1))

    # Assert
    assert value == pytest.approx(math.log(2 / math.pi))


def test_tensor(unstable2: AdelicBundle, square2: AdelicBundle) -> None:
    """Test deg(E ⊗ L) = deg E + rk E · deg L."""
    # Arrange
    metric_line = line_bundle(1, 4)
    lattice_line = line_bundle(2)

    # Act & Assert
    assert degree(tensor_g2(unstable2, metric_line)) == pytest.approx(-math.log(2))
    assert degree(tensor_g2(metric_line, unstable2)) == pytest.approx(-math.log(2))
    assert degree(tensor_g2(square2, lattice_line)) == pytest.approx(degree(square2) - 2 * math.log(2))
    assert degree(tensor_g2(square2, metric_line)) == pytest.approx(degree(square2) - 2 * math.log(2))
    assert degree(tensor_g2(unstable2, unstable2)) == pytest.approx(4 * math.log(2))
    with pytest.raises(UnsupportedMetricError):
        tensor_g2(square2, square2)


def test_exterior_and_determinant(unstable2: AdelicBundle, square2: AdelicBundle) -> None:
    """Test exterior powers through compound matrices."""
    # Act
    top = determinant(unstable2)

    # Assert
    assert top.rank == 1
    assert degree(top) == pytest.approx(degree(unstable2))
    assert degree(exterior(unstable2, 1)) == pytest.approx(degree(unstable2))
    assert degree(exterior(unstable2, 0)) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        exterior(unstable2, 3)
    with pytest.raises(UnsupportedMetricError):
        exterior(square2, 1)


def test_symmetric_power(trivial2: AdelicBundle, unstable2: AdelicBundle) -> None:
    """Test symmetric powers and sections bundles of rank 2."""
    # Act
    square = symmetric(trivial2, 2)
    sections = sections_bundle(trivial2, 2)

    # Assert
    assert square.rank == 3
    assert degree(square) == pytest.approx(0.5 * math.log(2))
    assert degree(sections) == pytest.approx(0.5 * math.log(2) + 1.5 * math.log(3))
    assert degree(symmetric(unstable2, 1)) == pytest.approx(degree(unstable2))
    with pytest.raises(DomainError):
        symmetric(trivial2, -1)


def test_sub_and_quotient(unstable2: AdelicBundle) -> None:
    """Test additivity of degrees along 0 → F → E → E/F → 0."""
    # Act
    first = sub(unstable2, E1)
    rest = quotient(unstable2, E1)
    other = quotient(unstable2, ImmutableMatrix([[0], [1]]))

    # Assert
    assert degree(first) == pytest.approx(math.log(2))
    assert degree(rest) == pytest.approx(0.0)
    assert degree(other) == pytest.approx(math.log(2))
    assert degree(sub(unstable2, ImmutableMatrix([[1], [1]]))) == pytest.approx(-0.5 * math.log(5 / 4))


def test_sub_saturates(trivial2: AdelicBundle) -> None:
    """Test sub-bundles take the saturated lattice."""
    # Act & Assert
    assert degree(sub(trivial2, ImmutableMatrix([[2], [0]]))) == pytest.approx(0.0)
    with pytest.raises(DomainError):
        sub(trivial2, ImmutableMatrix([[0], [0]]))
    with pytest.raises(DomainError):
        quotient(trivial2, ImmutableMatrix.eye(2))
    with pytest.raises(DimensionMismatchError):
        sub(trivial2, ImmutableMatrix([[1], [0], [0]]))


def test_body_sub_and_quotient(square2: AdelicBundle) -> None:
    """Test sections and projections of the square."""
    # Act
    first = sub(square2, E1)
    rest = quotient(square2, E1)

    # Assert
    assert not first.hermitian_flag
    assert degree(first) == pytest.approx(0.0)
    assert degree(rest) == pytest.approx(0.0)


def test_scale(unstable2: AdelicBundle) -> None:
    """Test deg(a·E) = deg E - log|det a|_A."""
    # Arrange
    arch = AdelicMatrix.from_matrices([[1, 0], [0, 1]], [[2, 0], [0, 2]])
    finite = AdelicMatrix.from_matrices([[2, 0], [0, 2]], [[1, 0], [0, 1]])
    principal = AdelicMatrix.from_idele(Idele.from_rational(6), 2)

    # Act & Assert
    assert arch.abs_det() == 4
    assert degree(scale(unstable2, arch)) == pytest.approx(degree(unstable2) - math.log(4))
    assert finite.abs_det() == Fraction(1, 4)
    assert degree(scale(unstable2, finite)) == pytest.approx(degree(unstable2) + math.log(4))
    assert principal.abs_det() == 1
    assert degree(scale(unstable2, principal)) == pytest.approx(degree(unstable2))


def test_john_and_lowner_bundles(square2: AdelicBundle, unstable2: AdelicBundle) -> None:
    """Test the ellipsoidal companions bracket the degree."""
    # Act
    john = john_bundle(square2)
    lowner = lowner_bundle(square2)

    # Assert
    assert john.hermitian_flag
    assert degree(john) == pytest.approx(0.0)
    assert degree(lowner) == pytest.approx(math.log(2))
    assert degree(john) <= degree(square2) <= degree(lowner)
    assert john_bundle(unstable2) is unstable2


def test_dominates(
    trivial2: AdelicBundle, unstable2: AdelicBundle, square2: AdelicBundle, diamond2: AdelicBundle
) -> None:
    """Test domination at the primes and at the real place."""
    # Arrange
    doubled = hermitian_bundle([[2, 0], [0, 2]], [[1, 0], [0, 1]])

    # Act & Assert
    assert dominates(unstable2, trivial2)
    assert not dominates(trivial2, unstable2)
    assert dominates(square2, diamond2)
    assert not dominates(diamond2, square2)
    assert dominates(trivial2, doubled)
    assert not dominates(doubled, trivial2)
    assert dominates(square2, john_bundle(square2))
    with pytest.raises(DimensionMismatchError):
        dominates(trivial2, trivial_bundle(3))


def test_height_vector(trivial2: AdelicBundle, unstable2: AdelicBundle) -> None:
    """Test heights of vectors and their invariance under scaling."""
    # Act & Assert
    assert height_vector(trivial2, [1, 0]).value == pytest.approx(0.0)
    assert height_vector(trivial2, [2, 0]).value == pytest.approx(0.0)
    assert height_vector(unstable2, [1, 0]).value == pytest.approx(-math.log(2))
    value = height_vector(trivial2, ["1/2", "1/3"])
    assert value.finite_part == 6
    assert value.value == pytest.approx(0.5 * math.log(13))
    assert value.value == pytest.approx(height_vector(trivial2, [3, 2]).value)
    with pytest.raises(DomainError):
        height_vector(trivial2, [0, 0])
    with pytest.raises(DimensionMismatchError):
        height_vector(trivial2, [1])


def test_height_map(
    trivial2: AdelicBundle, unstable2: AdelicBundle, square2: AdelicBundle, diamond2: AdelicBundle
) -> None:
    """Test heights of linear maps."""
    # Arrange
    identity = [[1, 0], [0, 1]]

    # Act & Assert
    assert height_map(trivial2, trivial2, identity).value == pytest.approx(0.0)
    assert height_map(trivial2, trivial2, [[2, 0], [0, 2]]).value == pytest.approx(0.0)
    assert height_map(unstable2, trivial2, identity).value == pytest.approx(math.log(2))
    assert height_map(trivial2, unstable2, identity).value == pytest.approx(0.0)
    polytope = height_map(square2, diamond2, identity)
    assert polytope.exact
    assert polytope.value == pytest.approx(math.log(2))
    with pytest.raises(DimensionMismatchError):
        height_map(trivial2, trivial2, [[1, 0]])
    with pytest.raises(DomainError):
        height_map(trivial2, trivial2, [[0, 0], [0, 0]])


def test_degree_lp_formula() -> None:
    """Test the closed form against the definition for l^2 and l^inf."""
    # Act
    euclidean = degree_lp_formula(3, 2, 1, 0)
    cubic = degree_lp_formula(2, math.inf, 1, 0)

    # Assert
    assert euclidean.printed == pytest.approx(-3 * math.log(2))
    assert euclidean.definitional == pytest.approx(0.0)
    assert euclidean.discrepancy == pytest.approx(3 * math.log(2))
    assert cubic.definitional == pytest.approx(math.log(4 / math.pi))
    assert cubic.discrepancy == pytest.approx(2 * math.log(2))
    with pytest.raises(DomainError):
        degree_lp_formula(0, 2, 1, 0)


@pytest.mark.parametrize("p", [2.0, 3.0, math.inf])
def test_degree_lp_asymptotics(p: float) -> None:
    """Test the Stirling expansion against the closed form at a large rank."""
    # Arrange
    n = 400
    coefficients = degree_lp_asymptotics(p, 1, 0)

    # Act
    expansion = coefficients.a * n * math.log(n) + coefficients.b * n + coefficients.log_n * math.log(n)

    # Assert
    assert degree_lp_formula(n, p, 1, 0).printed == pytest.approx(expansion + coefficients.c, abs=1e-2)


def test_scalar_extension(trivial2: AdelicBundle) -> None:
    """Test the degree over Q(i) of hermitian and l^inf bundles."""
    # Arrange
    square = body_bundle([[1, 0], [0, 1]], LpBall(p=math.inf, n=2))

    # Act
    hermitian = scalar_extension_check(trivial2, samples=20_000)
    cubic = scalar_extension_check(square, samples=20_000)

    # Assert
    assert hermitian.passed
    assert cubic.passed
    assert cubic.instance["degree_extended"] == pytest.approx(0.5 * math.log(2))


def test_scalar_extension_by_sampling() -> None:
    """Test the sampled degree over Q(i) of a polytope bundle."""
    # Arrange
    square = body_bundle([[1, 0], [0, 1]], cube(2))

    # Act
    report = scalar_extension_check(square, samples=20_000, seed=3)

    # Assert
    assert report.passed
    assert report.seed == 3


def test_sub_of_lp_bundle() -> None:
    """Test sub-bundles of an l^3 bundle carry the section of the ball."""
    # Arrange
    bundle = body_bundle([[1, 0], [0, 1]], LpBall(p=3, n=2))

    # Act
    axis = sub(bundle, E1)
    diagonal = sub(bundle, ImmutableMatrix([[1], [1]]))

    # Assert
    assert axis.rank == 1
    assert degree(axis) == pytest.approx(0.0)
    assert degree(diagonal) == pytest.approx(-math.log(2) / 3)
    with pytest.raises(UnsupportedMetricError):
        quotient(bundle, E1)
