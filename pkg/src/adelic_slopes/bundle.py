"""Adelic vector bundles over Q.

A bundle of rank n is one invertible rational matrix A, whose columns span the lattice L = A·Z^n fixing the norms at
every prime (‖x‖_p = max_i |(A^-1 x)_i|_p), and one archimedean metric: a hermitian Gram form G or a symmetric
convex body C, the unit ball of the real norm. Every coordinate below is an ambient coordinate of Q^n.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator
from scipy.linalg import eigh
from scipy.special import gammaln
from sympy import ImmutableMatrix, Matrix
from typing_extensions import Self

from adelic_slopes import logger
from adelic_slopes.constants import MC_SAMPLES, MC_SIGMAS, RATIONALIZE_DENOMINATOR, SLOPE_TOLERANCE
from adelic_slopes.convexgeom import (
    ConvexBody,
    Ellipsoid,
    HPoly,
    LpBall,
    PSum,
    VPoly,
    ball_log_volume,
    complex_volume,
    dilate,
    ellipsoid,
    facets,
    gauge,
    gauges,
    log_volume,
    materialize,
    polar,
    restrict,
    symmetric_vpoly,
    transform,
    vertices,
)
from adelic_slopes.dtos import CheckReport, HeightValue, LpAsymptotics, LpDegreeValue
from adelic_slopes.ellipsoids import solve_john, solve_lowner
from adelic_slopes.errors import DimensionMismatchError, DomainError, UnsupportedMetricError
from adelic_slopes.lattice import (
    block_diagonal,
    compound_matrix,
    invertible,
    kronecker,
    rational_matrix,
    saturate,
    sympow_gram,
    sympow_matrix,
    to_fraction,
    to_numpy,
)
from adelic_slopes.places import Idele, Place, abs_value, support_primes
from adelic_slopes.utils import ExactRational, log_rational

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

    from adelic_slopes.config import SolverConfig

ExactRows = tuple[tuple[ExactRational, ...], ...]


def _rows(matrix: Matrix | ImmutableMatrix) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(to_fraction(matrix[i, j]) for j in range(matrix.cols)) for i in range(matrix.rows))


class MetricKind(str, Enum):
    """Archimedean metric kind."""

    HERMITIAN = "hermitian"
    BODY = "body"


class FiniteStructure(BaseModel):
    """Integral structure: the columns of A form a basis of the lattice."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: ExactRows

    @model_validator(mode="after")
    def _check_invertible(self) -> Self:
        n = len(self.matrix)
        if n == 0 or any(len(row) != n for row in self.matrix):
            msg = "lattice matrix must be square and nonempty"
            raise ValueError(msg)
        if rational_matrix(self.matrix).det() == 0:
            msg = "lattice matrix is singular"
            raise ValueError(msg)
        return self


class HermitianMetric(BaseModel):
    """Hermitian metric xᵀ G x."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal[MetricKind.HERMITIAN] = MetricKind.HERMITIAN
    gram: ExactRows

    @model_validator(mode="after")
    def _check_positive_definite(self) -> Self:
        ellipsoid(self.gram)
        return self


class BodyMetric(BaseModel):
    """Norm whose unit ball is a symmetric convex body."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal[MetricKind.BODY] = MetricKind.BODY
    body: ConvexBody


ArchMetric = Annotated[HermitianMetric | BodyMetric, Field(discriminator="kind")]


class AdelicBundle(BaseModel):
    """Adelic vector bundle over Q."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    finite: FiniteStructure
    arch: ArchMetric

    @model_validator(mode="after")
    def _check_dimensions(self) -> Self:
        n = len(self.finite.matrix)
        dim = len(self.arch.gram) if isinstance(self.arch, HermitianMetric) else self.arch.body.dim
        if dim != n:
            raise DimensionMismatchError("AdelicBundle", n, dim)
        return self

    @computed_field()  # type: ignore[misc]
    @cached_property
    def rank(self) -> int:
        """Rank n."""
        return len(self.finite.matrix)

    @computed_field()  # type: ignore[misc]
    @cached_property
    def hermitian_flag(self) -> bool:
        """Whether the archimedean metric is hermitian."""
        return isinstance(self.arch, HermitianMetric)

    @cached_property
    def lattice(self) -> ImmutableMatrix:
        """Lattice matrix A."""
        return rational_matrix(self.finite.matrix)

    @cached_property
    def lattice_inverse(self) -> ImmutableMatrix:
        """Inverse of the lattice matrix."""
        return ImmutableMatrix(self.lattice.inv())

    @cached_property
    def gram(self) -> ImmutableMatrix:
        """Hermitian Gram form G in ambient coordinates.

        Raises:
            UnsupportedMetricError: If the metric is a convex body.
        """
        if not isinstance(self.arch, HermitianMetric):
            raise UnsupportedMetricError("gram")
        return rational_matrix(self.arch.gram)

    @cached_property
    def lattice_gram(self) -> ImmutableMatrix:
        """Gram form Aᵀ G A of the lattice basis."""
        return ImmutableMatrix(self.lattice.T * self.gram * self.lattice)

    @cached_property
    def body(self) -> ConvexBody:
        """Unit ball of the archimedean norm (an ellipsoid for hermitian metrics)."""
        if isinstance(self.arch, HermitianMetric):
            return ellipsoid(self.arch.gram)
        return self.arch.body


# ----------------------------------------------------------------------------------------------------------------------
# Constructors


def hermitian_bundle(
    lattice: Sequence[Sequence[object]] | ImmutableMatrix | Matrix,
    gram: Sequence[Sequence[object]] | ImmutableMatrix | Matrix,
) -> AdelicBundle:
    """Bundle with lattice matrix A and hermitian Gram form G."""
    return AdelicBundle(
        finite=FiniteStructure(matrix=_rows(rational_matrix(lattice))),
        arch=HermitianMetric(gram=_rows(rational_matrix(gram))),
    )


def body_bundle(lattice: Sequence[Sequence[object]] | ImmutableMatrix | Matrix, body: ConvexBody) -> AdelicBundle:
    """Bundle with lattice matrix A and a convex body as archimedean unit ball."""
    return AdelicBundle(finite=FiniteStructure(matrix=_rows(rational_matrix(lattice))), arch=BodyMetric(body=body))


def trivial_bundle(n: int) -> AdelicBundle:
    """The standard bundle (Z^n, |.|_2) of degree 0."""
    return hermitian_bundle(ImmutableMatrix.eye(n), ImmutableMatrix.eye(n))


def line_bundle(generator: object, gram: object = 1) -> AdelicBundle:
    """Rank-1 hermitian bundle with lattice generator·Z and metric gram·x²."""
    return hermitian_bundle([[generator]], [[gram]])


def with_gram(bundle: AdelicBundle, gram: Matrix | ImmutableMatrix | Sequence[Sequence[object]]) -> AdelicBundle:
    """Same integral structure with another hermitian metric."""
    return hermitian_bundle(bundle.lattice, gram)


def with_body(bundle: AdelicBundle, body: ConvexBody) -> AdelicBundle:
    """Same integral structure with another convex body."""
    return body_bundle(bundle.lattice, body)


class AdelicMatrix(BaseModel):
    """Element of GL_n of the adeles given by a rational matrix acting at every prime and a real matrix.

    The finite matrix F is a p-adic unit matrix at almost every prime, so one rational matrix describes all finite
    components.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    finite: ExactRows
    arch: ExactRows

    @model_validator(mode="after")
    def _check_invertible(self) -> Self:
        for name, rows in (("finite", self.finite), ("arch", self.arch)):
            invertible(rational_matrix(rows), f"AdelicMatrix.{name}")
        if len(self.finite) != len(self.arch):
            raise DimensionMismatchError("AdelicMatrix", len(self.finite), len(self.arch))
        return self

    @classmethod
    def from_idele(cls, a: Idele, n: int) -> Self:
        """Scalar matrix of an idele, with the archimedean component rationalized."""
        f = a.finite_scalar()
        r = Fraction(a.arch_part).limit_denominator(RATIONALIZE_DENOMINATOR)
        identity = ImmutableMatrix.eye(n)
        return cls(finite=_rows(identity * f), arch=_rows(identity * r))  # type: ignore[operator]

    @classmethod
    def from_matrices(
        cls, finite: Sequence[Sequence[object]] | ImmutableMatrix, arch: Sequence[Sequence[object]] | ImmutableMatrix
    ) -> Self:
        """Adelic matrix from its finite and archimedean rational matrices."""
        return cls(finite=_rows(rational_matrix(finite)), arch=_rows(rational_matrix(arch)))

    def abs_det(self) -> Fraction:
        """Adelic absolute value of the determinant, |det R| / |det F| by the product formula."""
        return abs(to_fraction(rational_matrix(self.arch).det())) / abs(to_fraction(rational_matrix(self.finite).det()))


# ----------------------------------------------------------------------------------------------------------------------
# Norms and degrees


def _nonzero_vector(x: Sequence[object], n: int, operation: str) -> ImmutableMatrix:
    if len(x) != n:
        raise DimensionMismatchError(operation, n, len(x))
    vector = rational_matrix([[v] for v in x])
    if not any(vector):
        raise DomainError(operation, "zero vector")
    return vector


def finite_norm(bundle: AdelicBundle, x: Sequence[object], p: int) -> Fraction:
    """Norm ‖x‖_p = max_i |(A^-1 x)_i|_p at a prime, exact."""
    coordinates = bundle.lattice_inverse * _nonzero_vector(x, bundle.rank, "finite_norm")
    place = Place.finite(p)
    return max(abs_value(to_fraction(c), place) for c in coordinates if c != 0)


def arch_norm(bundle: AdelicBundle, x: Sequence[object] | NDArray[np.float64]) -> float:
    """Archimedean norm of a vector."""
    if isinstance(bundle.arch, HermitianMetric):
        v = np.array([float(c) for c in x])  # type: ignore[arg-type]
        return float(np.sqrt(max(v @ to_numpy(bundle.gram) @ v, 0.0)))
    return gauge(bundle.arch.body, x)


def arch_norms(bundle: AdelicBundle, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Archimedean norms of the rows of X."""
    return gauges(bundle.body, X)


@lru_cache(maxsize=1024)
def degree(bundle: AdelicBundle) -> float:
    """Adelic degree.

    Hermitian: -log|det A| - ½ log det G. Convex body: -log|det A| + log(vol C / vol b_n^2).
    """
    log_covolume = log_rational(abs(to_fraction(bundle.lattice.det())))
    if isinstance(bundle.arch, HermitianMetric):
        return -log_covolume - 0.5 * log_rational(to_fraction(bundle.gram.det()))
    return -log_covolume + log_volume(bundle.arch.body) - ball_log_volume(bundle.rank)


def degree_normalized(bundle: AdelicBundle) -> float:
    """Normalized degree (the base field is Q)."""
    return degree(bundle)


def euler_characteristic(bundle: AdelicBundle) -> float:
    """log(vol B(E) / covol(E)) = deg E + log vol(b_n^2) with the Tamagawa measure."""
    return degree(bundle) + ball_log_volume(bundle.rank)


def _printed_real_factor(n: int, p: float) -> float:
    inverse = 0.0 if math.isinf(p) else 1 / p
    return float(
        n * gammaln(1 + inverse) + gammaln(1 + n / 2) - gammaln(1 + n * inverse) - (n / 2) * math.log(math.pi)
    )


def _printed_complex_factor(n: int, p: float) -> float:
    inverse = 0.0 if math.isinf(p) else 1 / p
    return float(n * gammaln(1 + 2 * inverse) + gammaln(1 + n) - gammaln(1 + 2 * n * inverse))


def degree_lp_formula(n: int, p: float, r1: int, r2: int) -> LpDegreeValue:
    """Degree of (k^n, l^p) over a field with r1 real and r2 complex places.

    `printed` evaluates the closed form r1·log[Γ(1+1/p)^n Γ(1+n/2) / (Γ(1+n/p) π^(n/2))]
    + r2·log[Γ(1+2/p)^n n! / Γ(1+2n/p)]; `definitional` is the log of the volume ratios of the unit balls,
    which exceeds it by n·log 2 per real place.
    """
    if n < 1 or not p >= 1:
        raise DomainError("degree_lp_formula", f"needs n >= 1 and p in [1, inf], got n={n}, p={p}")
    printed = r1 * _printed_real_factor(n, p) + r2 * _printed_complex_factor(n, p)
    real_ratio = LpBall(p=p, n=n)
    definitional = r1 * (log_volume(real_ratio) - ball_log_volume(n)) + r2 * (
        _complex_log_ratio(real_ratio) if r2 else 0.0
    )
    return LpDegreeValue(n=n, p=p, r1=r1, r2=r2, printed=printed, definitional=definitional)


def degree_lp_asymptotics(p: float, r1: int, r2: int, *, definitional: bool = False) -> LpAsymptotics:
    """Coefficients of deg(k^n, l^p) = a·n·log n + b·n + d·log n + c + o(1) from Stirling's formula.

    d vanishes for finite p; for p = inf the unit cube contributes d = (r1 + r2)/2.
    """
    if math.isinf(p):
        a = r1 / 2 + r2
        b = -r1 / 2 * math.log(2 * math.e * math.pi) - r2
        c = r1 / 2 * math.log(math.pi) + r2 / 2 * math.log(2 * math.pi)
        log_n = (r1 + r2) / 2
    else:
        a = r1 * (0.5 - 1 / p) + r2 * (1 - 2 / p)
        b_real = float(gammaln(1 + 1 / p)) + (math.log(p) + 1) / p - 0.5 * math.log(2 * math.e * math.pi)
        b_complex = float(gammaln(1 + 2 / p)) - 1 - (2 / p) * math.log(2 / p) + 2 / p
        b = r1 * b_real + r2 * b_complex
        c = (r1 + r2) / 2 * math.log(p / 2)
        log_n = 0.0
    if definitional:
        b += r1 * math.log(2)
    return LpAsymptotics(p=p, a=a, b=b, c=c, log_n=log_n, definitional=definitional)


# ----------------------------------------------------------------------------------------------------------------------
# Algebraic operations


def dual(bundle: AdelicBundle) -> AdelicBundle:
    """Dual bundle: lattice A^-T, dual norms (G^-1 or the polar body)."""
    lattice = ImmutableMatrix(bundle.lattice_inverse.T)
    if isinstance(bundle.arch, HermitianMetric):
        return hermitian_bundle(lattice, bundle.gram.inv())
    return body_bundle(lattice, polar(bundle.arch.body))


def _psum_body(first: ConvexBody, second: ConvexBody, p: float) -> ConvexBody:
    if isinstance(first, LpBall) and isinstance(second, LpBall) and first.p == second.p == p:
        if first.radius == second.radius:
            return LpBall(p=p, n=first.n + second.n, radius=first.radius)
    return PSum(first=first, second=second, p=p)


def direct_sum_p(first: AdelicBundle, second: AdelicBundle, p: float = 2) -> AdelicBundle:
    """Direct sum with the l^p combination of the archimedean norms."""
    lattice = block_diagonal(first.lattice, second.lattice)
    if p == 2 and first.hermitian_flag and second.hermitian_flag:
        return hermitian_bundle(lattice, block_diagonal(first.gram, second.gram))
    return body_bundle(lattice, _psum_body(first.body, second.body, p))


def _line_scale(line: AdelicBundle) -> Fraction:
    """Norm of the basis vector of the archimedean line, when rational."""
    if isinstance(line.arch, HermitianMetric):
        g = to_fraction(line.gram[0, 0])
        num, den = math.isqrt(g.numerator), math.isqrt(g.denominator)
        if num * num != g.numerator or den * den != g.denominator:
            raise UnsupportedMetricError("tensor_g2", "needs a rational norm on the line factor of a body bundle")
        return Fraction(num, den)
    return 1 / abs(vertices(materialize(line.arch.body))[-1][0])


def tensor_g2(first: AdelicBundle, second: AdelicBundle) -> AdelicBundle:
    """Hermitian tensor product (Kronecker products of the lattices and of the Gram forms).

    A convex body metric is accepted when the other factor is a line: E ⊗ L is E with lattice scaled by the generator
    of L and unit ball divided by the norm of that generator.

    Raises:
        UnsupportedMetricError: If a factor of rank above 1 has a convex body metric.
    """
    lattice = kronecker(first.lattice, second.lattice)
    if first.hermitian_flag and second.hermitian_flag:
        return hermitian_bundle(lattice, kronecker(first.gram, second.gram))
    if second.rank == 1 and not first.hermitian_flag:
        return body_bundle(lattice, dilate(first.arch.body, 1 / _line_scale(second)))  # type: ignore[union-attr]
    if first.rank == 1 and not second.hermitian_flag:
        return body_bundle(lattice, dilate(second.arch.body, 1 / _line_scale(first)))  # type: ignore[union-attr]
    if second.rank == 1:
        scale = _line_scale(second)
        return hermitian_bundle(lattice, first.gram * scale * scale)
    if first.rank == 1:
        scale = _line_scale(first)
        return hermitian_bundle(lattice, second.gram * scale * scale)
    raise UnsupportedMetricError("tensor_g2")


def exterior(bundle: AdelicBundle, r: int) -> AdelicBundle:
    """r-th exterior power through compound matrices.

    Raises:
        UnsupportedMetricError: For convex body metrics.
    """
    if not 0 <= r <= bundle.rank:
        raise DomainError("exterior", f"r={r} outside [0, {bundle.rank}]")
    if not bundle.hermitian_flag:
        raise UnsupportedMetricError("exterior")
    return hermitian_bundle(compound_matrix(bundle.lattice, r), compound_matrix(bundle.gram, r))


def determinant(bundle: AdelicBundle) -> AdelicBundle:
    """Determinant line, the top exterior power."""
    return exterior(bundle, bundle.rank)


def symmetric(bundle: AdelicBundle, ell: int) -> AdelicBundle:
    """ell-th symmetric power in the monomial basis, with the quotient metric of the hermitian tensor power.

    Raises:
        UnsupportedMetricError: For convex body metrics.
    """
    if ell < 0:
        raise DomainError("symmetric", f"ell={ell} is negative")
    if not bundle.hermitian_flag:
        raise UnsupportedMetricError("symmetric")
    return hermitian_bundle(sympow_matrix(bundle.lattice, ell), sympow_gram(bundle.gram, ell))


def sections_bundle(bundle: AdelicBundle, ell: int) -> AdelicBundle:
    """Global sections of O(ell) on the projective space of a hermitian bundle.

    This is S^ell(E) with the archimedean norm divided by binom(n-1+ell, ell)^(1/2).
    """
    power = symmetric(bundle, ell)
    return with_gram(power, power.gram / math.comb(bundle.rank - 1 + ell, ell))


def _saturated_basis(
    bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix
) -> tuple[ImmutableMatrix, ImmutableMatrix]:
    """Saturated basis of L ∩ span(S) in lattice coordinates and its unimodular completion."""
    S = rational_matrix(subspace)
    if S.rows != bundle.rank:
        raise DimensionMismatchError("subspace", bundle.rank, S.rows)
    W, U = saturate(bundle.lattice_inverse * S)
    if W.cols == 0:
        raise DomainError("subspace", "the subspace is zero")
    return W, U


def sub_with_inclusion(
    bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix
) -> tuple[AdelicBundle, ImmutableMatrix]:
    """Sub-bundle on the span of the columns of S, with the n×r inclusion matrix of its coordinates.

    The sub-bundle lattice is L ∩ span(S) in the coordinates of a saturated basis, so its lattice matrix is I_r.
    """
    W, _ = _saturated_basis(bundle, subspace)
    inclusion = ImmutableMatrix(bundle.lattice * W)
    identity = ImmutableMatrix.eye(W.cols)
    if isinstance(bundle.arch, HermitianMetric):
        return hermitian_bundle(identity, inclusion.T * bundle.gram * inclusion), inclusion
    return body_bundle(identity, restrict(bundle.arch.body, inclusion)), inclusion


def sub(bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix) -> AdelicBundle:
    """Sub-bundle with the restricted norms."""
    return sub_with_inclusion(bundle, subspace)[0]


def quotient_with_projection(
    bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix
) -> tuple[AdelicBundle, ImmutableMatrix]:
    """Quotient bundle E/F with the (n-r)×n projection matrix onto its coordinates.

    Hermitian metrics give the Schur complement; polytopes are projected vertex by vertex.

    Raises:
        UnsupportedMetricError: For bodies without an exact polytope or ellipsoid form.
    """
    W, U = _saturated_basis(bundle, subspace)
    r, n = W.cols, bundle.rank
    basis = ImmutableMatrix(bundle.lattice * U)
    projection = ImmutableMatrix(basis.inv()[r:, :])
    identity = ImmutableMatrix.eye(n - r)
    if r == n:
        raise DomainError("quotient", "the quotient is zero")
    if isinstance(bundle.arch, HermitianMetric):
        G = basis.T * bundle.gram * basis
        G11, G12, G22 = G[:r, :r], G[:r, r:], G[r:, r:]
        return hermitian_bundle(identity, G22 - G12.T * G11.inv() * G12), projection
    body = materialize(bundle.arch.body)
    if isinstance(body, Ellipsoid):
        Q_inv = body.matrix.inv()
        return hermitian_bundle(identity, (projection * Q_inv * projection.T).inv()), projection
    images = [tuple(to_fraction(c) for c in projection * Matrix(v)) for v in vertices(body)]
    return body_bundle(identity, symmetric_vpoly([v for v in images if any(v)])), projection


def quotient(bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix) -> AdelicBundle:
    """Quotient bundle with the quotient norms."""
    return quotient_with_projection(bundle, subspace)[0]


def scale(bundle: AdelicBundle, a: AdelicMatrix) -> AdelicBundle:
    """Rescaled bundle with norms ‖x‖'_v = ‖a_v x‖_v, of degree deg E - log|det a|_A."""
    F = rational_matrix(a.finite)
    R = rational_matrix(a.arch)
    if F.rows != bundle.rank:
        raise DimensionMismatchError("scale", bundle.rank, F.rows)
    lattice = ImmutableMatrix(F.inv() * bundle.lattice)
    if isinstance(bundle.arch, HermitianMetric):
        return hermitian_bundle(lattice, R.T * bundle.gram * R)
    return body_bundle(lattice, transform(bundle.arch.body, R.inv()))


def john_bundle(bundle: AdelicBundle, solver: SolverConfig | None = None) -> AdelicBundle:
    """Hermitian bundle of the John ellipsoid of the archimedean unit ball."""
    if bundle.hermitian_flag:
        return bundle
    return with_gram(bundle, solve_john(bundle.body, solver).rational_gram())


def lowner_bundle(bundle: AdelicBundle, solver: SolverConfig | None = None) -> AdelicBundle:
    """Hermitian bundle of the Löwner ellipsoid of the archimedean unit ball."""
    if bundle.hermitian_flag:
        return bundle
    return with_gram(bundle, solve_lowner(bundle.body, solver).rational_gram())


def dominates(first: AdelicBundle, second: AdelicBundle, *, samples: int = 1000, seed: int = 0) -> bool:
    """Whether first ⪯ second, that is ‖x‖_first <= ‖x‖_second at every place.

    At the primes this is the inclusion of the second lattice in the first. At the real place it is the inclusion
    of the unit balls, decided exactly for polytopes and ellipsoids and on sampled directions otherwise.
    """
    if first.rank != second.rank:
        raise DimensionMismatchError("dominates", first.rank, second.rank)
    relative = first.lattice_inverse * second.lattice
    if any(to_fraction(c).denominator != 1 for c in relative):
        return False
    outer, inner = first.body, second.body
    try:
        outer, inner = materialize(outer), materialize(inner)
    except UnsupportedMetricError:
        X = np.random.default_rng(seed).standard_normal((samples, first.rank))
        return bool(np.all(gauges(outer, X) <= gauges(inner, X) * (1 + SLOPE_TOLERANCE)))
    if isinstance(inner, HPoly | VPoly):
        return all(gauge(outer, v) <= 1 + SLOPE_TOLERANCE for v in vertices(inner))
    Q_inner = to_numpy(inner.matrix)
    if isinstance(outer, Ellipsoid):
        return bool(np.linalg.eigvalsh(Q_inner - to_numpy(outer.matrix)).min() >= -SLOPE_TOLERANCE)
    W = np.array([[float(x) for x in w] for w in facets(outer)])
    return bool(np.einsum("ij,jk,ik->i", W, np.linalg.inv(Q_inner), W).max() <= 1 + SLOPE_TOLERANCE)


# ----------------------------------------------------------------------------------------------------------------------
# Heights


def _primes_of(entries: Sequence[Fraction]) -> list[int]:
    primes: set[int] = set()
    for entry in entries:
        if entry != 0:
            primes.update(support_primes(entry))
    return sorted(primes)


def height_vector(bundle: AdelicBundle, x: Sequence[object]) -> HeightValue:
    """Height h(x) = Σ_v log‖x‖_v, invariant under x ↦ λx."""
    vector = _nonzero_vector(x, bundle.rank, "height_vector")
    coordinates = [to_fraction(c) for c in bundle.lattice_inverse * vector]
    finite = Fraction(1)
    for p in _primes_of(coordinates):
        place = Place.finite(p)
        finite *= max(abs_value(c, place) for c in coordinates if c != 0)
    arch = math.log(arch_norm(bundle, [to_fraction(c) for c in vector]))
    return HeightValue(value=log_rational(finite) + arch, finite_part=finite, arch_part=arch)


def _operator_norm(first: AdelicBundle, second: AdelicBundle, M: ImmutableMatrix) -> tuple[float, bool]:
    """Archimedean operator norm of M, exact or a certified upper bound."""
    N = to_numpy(M)
    if first.hermitian_flag and second.hermitian_flag:
        return _hermitian_operator_norm(to_numpy(first.gram), to_numpy(second.gram), N), True
    try:
        source, target = materialize(first.body), materialize(second.body)
    except UnsupportedMetricError:
        source, target = None, None
    if source is not None and target is not None:
        if isinstance(source, HPoly | VPoly):
            V = np.array([[float(x) for x in v] for v in vertices(source)])
            return float(gauges(target, V @ N.T).max()), True
        Q1 = to_numpy(source.matrix)
        if isinstance(target, Ellipsoid):
            return _hermitian_operator_norm(Q1, to_numpy(target.matrix), N), True
        W = np.array([[float(x) for x in w] for w in facets(target)]) @ N
        return float(np.sqrt(np.einsum("ij,jk,ik->i", W, np.linalg.inv(Q1), W).max())), True
    # The Löwner metric is below the source norm and the John metric above the target norm
    Q1 = solve_lowner(first.body).matrix
    Q2 = solve_john(second.body).matrix
    return _hermitian_operator_norm(Q1, Q2, N), False


def _hermitian_operator_norm(G1: NDArray[np.float64], G2: NDArray[np.float64], N: NDArray[np.float64]) -> float:
    eigenvalues = eigh(N.T @ G2 @ N, G1, eigvals_only=True)
    return float(math.sqrt(max(float(eigenvalues.max()), 0.0)))


def height_map(
    first: AdelicBundle, second: AdelicBundle, M: Sequence[Sequence[object]] | ImmutableMatrix
) -> HeightValue:
    """Height of a linear map E1 → E2 given by its matrix in ambient coordinates.

    At a prime the operator norm is the largest |·|_p of the entries of A2^-1 M A1. At the real place it is the
    operator norm between the archimedean norms, exact for hermitian metrics, polytopes and ellipsoids and a
    certified John/Löwner upper bound otherwise (`exact` is then false).
    """
    matrix = rational_matrix(M)
    if matrix.shape != (second.rank, first.rank):
        raise DimensionMismatchError("height_map", (second.rank, first.rank), matrix.shape)
    if not any(matrix):
        raise DomainError("height_map", "zero map")
    entries = [to_fraction(c) for c in second.lattice_inverse * matrix * first.lattice]
    finite = Fraction(1)
    for p in _primes_of(entries):
        place = Place.finite(p)
        finite *= max(abs_value(c, place) for c in entries if c != 0)
    norm, exact = _operator_norm(first, second, matrix)
    arch = math.log(norm)
    return HeightValue(value=log_rational(finite) + arch, finite_part=finite, arch_part=arch, exact=exact)


# ----------------------------------------------------------------------------------------------------------------------
# Scalar extension to Q(i)


def _complex_log_ratio(body: ConvexBody, samples: int = MC_SAMPLES, seed: int = 0) -> float:
    volume, _ = complex_volume(body, samples, seed)
    return math.log(volume) - ball_log_volume(2 * body.dim)


def degree_scalar_extension(
    bundle: AdelicBundle, *, samples: int = MC_SAMPLES, seed: int = 0
) -> tuple[float, float]:
    """Normalized degree over Q(i) and its standard error.

    deg_n(E ⊗ Q(i)) = -log|det A| + ½ log(vol(C_C) / vol(b_(n,C))), the complex volume of the unit ball being
    computed in closed form or by Monte Carlo.
    """
    log_covolume = log_rational(abs(to_fraction(bundle.lattice.det())))
    if bundle.hermitian_flag:
        return degree(bundle), 0.0
    volume, stderr = complex_volume(bundle.body, samples, seed)
    value = -log_covolume + 0.5 * (math.log(volume) - ball_log_volume(2 * bundle.rank))
    return value, 0.5 * stderr / volume


def kappa_bracket(n: int) -> tuple[float, float]:
    """Bracket [4^-n, 1]·n!/Γ(1+n/2)^2 of the complexification constant of the l^inf norm."""
    upper = math.exp(float(gammaln(n + 1) - 2 * gammaln(1 + n / 2)))
    return upper / 4**n, upper


def scalar_extension_check(bundle: AdelicBundle, *, samples: int = MC_SAMPLES, seed: int = 0) -> CheckReport:
    """Degree under scalar extension to Q(i).

    Asserts |deg_n(E_Q(i)) - deg_n(E)| <= n log 4, equality for hermitian bundles and, for l^inf balls, the refined
    bracket of κ = exp(2(deg_n(E_Q(i)) - deg_n(E))).
    """
    n = bundle.rank
    base = degree(bundle)
    extended, stderr = degree_scalar_extension(bundle, samples=samples, seed=seed)
    difference = extended - base
    tolerance = MC_SIGMAS * stderr + SLOPE_TOLERANCE
    instance = {"bundle": bundle.model_dump(mode="json"), "degree": base, "degree_extended": extended}
    reports = [
        CheckReport.inequality(
            "scalar_extension_bound", abs(difference), n * math.log(4), tolerance=tolerance, seed=seed
        )
    ]
    if bundle.hermitian_flag:
        reports.append(CheckReport.equality("scalar_extension_equality", extended, base, tolerance=SLOPE_TOLERANCE))
    elif isinstance(bundle.body, LpBall) and math.isinf(bundle.body.p):
        lower, upper = kappa_bracket(n)
        kappa = math.exp(2 * difference)
        reports.append(
            CheckReport.bracket("kappa_bracket", kappa, lower, upper, tolerance=2 * kappa * tolerance, seed=seed)
        )
    logger.debug(f"Scalar extension: n={n} deg={base:.12g} deg_Q(i)={extended:.12g}")
    return CheckReport.combine("scalar_extension", reports, seed=seed, instance=instance)
