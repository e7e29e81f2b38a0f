"""Minkowski geometry of symmetric convex bodies.

Bodies are origin-symmetric and carry exact rational data: H-polytopes, V-polytopes, l^p balls (with a rational
radius), ellipsoids given by their Gram form, p-sums of two bodies and gauge-defined sections. Volumes of polytopes
are exact: Qhull only supplies the combinatorics of the boundary and every simplex determinant is evaluated over
the rationals.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import TYPE_CHECKING, Annotated, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import dblquad, quad
from scipy.optimize import linprog
from scipy.spatial import ConvexHull
from scipy.special import gammaln
from sympy import ImmutableMatrix, Matrix
from typing_extensions import Self

from adelic_slopes import logger
from adelic_slopes.constants import MC_CHUNK, MC_SAMPLES, MC_SIGMAS, SLOPE_TOLERANCE
from adelic_slopes.dtos import CheckReport
from adelic_slopes.errors import DimensionMismatchError, InvalidBodyError, SingularMatrixError, UnsupportedMetricError
from adelic_slopes.lattice import rational_matrix, to_fraction
from adelic_slopes.utils import ExactRational, ExtendedReal, conjugate_exponent

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import NDArray

Vector = tuple[Fraction, ...]


class BodyKind(str, Enum):
    """Convex body representation."""

    HPOLY = "hpoly"
    VPOLY = "vpoly"
    LP = "lp"
    ELLIPSOID = "ellipsoid"
    PSUM = "psum"
    SECTION = "section"


class _BaseBody(BaseModel):
    """Base class for convex bodies."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        raise NotImplementedError


def _normalized(vector: Sequence[Fraction], offset: Fraction) -> Vector:
    return tuple(x / offset for x in vector)


def _spans(vectors: Sequence[Sequence[Fraction]], n: int) -> bool:
    if not vectors:
        return False
    return Matrix(vectors).rank() == n


class HPoly(_BaseBody):
    """H-polytope {x : <a_i, x> <= b_i}, facets stored in ± pairs."""

    kind: Literal[BodyKind.HPOLY] = BodyKind.HPOLY
    normals: tuple[tuple[ExactRational, ...], ...]
    offsets: tuple[ExactRational, ...]

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.normals[0])

    @model_validator(mode="after")
    def _check_symmetric_bounded(self) -> Self:
        if not self.normals or len(self.normals) != len(self.offsets):
            raise InvalidBodyError("normals and offsets must be nonempty and of the same length")
        n = len(self.normals[0])
        if any(len(a) != n for a in self.normals):
            raise InvalidBodyError("normals of different dimensions")
        if any(b <= 0 for b in self.offsets):
            raise InvalidBodyError("offsets must be positive (origin in the interior)")
        points = {_normalized(a, b) for a, b in zip(self.normals, self.offsets, strict=True)}
        if any(tuple(-x for x in w) not in points for w in points):
            raise InvalidBodyError("facets are not stored in ± pairs")
        if not _spans(list(self.normals), n):
            raise InvalidBodyError("normals do not span the space (unbounded polytope)")
        return self

    def polar_points(self) -> list[Vector]:
        """The points a_i / b_i, one per facet; their convex hull is the polar body."""
        return sorted({_normalized(a, b) for a, b in zip(self.normals, self.offsets, strict=True)})


class VPoly(_BaseBody):
    """V-polytope conv(±v_i), vertices stored in ± pairs."""

    kind: Literal[BodyKind.VPOLY] = BodyKind.VPOLY
    vertices: tuple[tuple[ExactRational, ...], ...]

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.vertices[0])

    @model_validator(mode="after")
    def _check_symmetric_full(self) -> Self:
        if not self.vertices:
            raise InvalidBodyError("no vertices")
        n = len(self.vertices[0])
        if any(len(v) != n for v in self.vertices):
            raise InvalidBodyError("vertices of different dimensions")
        points = set(self.vertices)
        if any(tuple(-x for x in v) not in points for v in points):
            raise InvalidBodyError("vertices are not stored in ± pairs")
        if not _spans(list(self.vertices), n):
            raise InvalidBodyError("vertices do not span the space (empty interior)")
        return self


class LpBall(_BaseBody):
    """Ball {x : |x|_p <= radius} of the l^p norm."""

    kind: Literal[BodyKind.LP] = BodyKind.LP
    p: ExtendedReal
    n: Annotated[int, Field(ge=1)]
    radius: ExactRational = Fraction(1)

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return self.n

    @model_validator(mode="after")
    def _check_exponent(self) -> Self:
        if not self.p >= 1:
            raise InvalidBodyError(f"exponent p={self.p} is not in [1, inf]")
        if self.radius <= 0:
            raise InvalidBodyError("radius must be positive")
        return self


class Ellipsoid(_BaseBody):
    """Ellipsoid {x : xᵀ Q x <= 1}."""

    kind: Literal[BodyKind.ELLIPSOID] = BodyKind.ELLIPSOID
    gram: tuple[tuple[ExactRational, ...], ...]

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.gram)

    @property
    def matrix(self) -> ImmutableMatrix:
        """Exact Gram form Q."""
        return rational_matrix(self.gram)

    @model_validator(mode="after")
    def _check_positive_definite(self) -> Self:
        n = len(self.gram)
        if n == 0 or any(len(row) != n for row in self.gram):
            raise InvalidBodyError("Gram form must be a nonempty square matrix")
        if any(self.gram[i][j] != self.gram[j][i] for i in range(n) for j in range(n)):
            raise InvalidBodyError("Gram form is not symmetric")
        Q = self.matrix
        if any(Q[:k, :k].det() <= 0 for k in range(1, n + 1)):
            raise InvalidBodyError("Gram form is not positive definite")
        return self


class PSum(_BaseBody):
    """p-sum of two bodies {(x, y) : |(j_1(x), j_2(y))|_p <= 1}."""

    kind: Literal[BodyKind.PSUM] = BodyKind.PSUM
    first: ConvexBody
    second: ConvexBody
    p: ExtendedReal

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return self.first.dim + self.second.dim

    @model_validator(mode="after")
    def _check_exponent(self) -> Self:
        if not self.p >= 1:
            raise InvalidBodyError(f"exponent p={self.p} is not in [1, inf]")
        return self


class Section(_BaseBody):
    """Section {t : B t ∈ C} of a body by the subspace spanned by the columns of B, defined by its gauge.

    Used for bodies without an exact polytope or ellipsoid form, whose sections have none either.
    """

    kind: Literal[BodyKind.SECTION] = BodyKind.SECTION
    body: ConvexBody
    basis: tuple[tuple[ExactRational, ...], ...]

    @property
    def dim(self) -> int:
        """Dimension of the ambient space."""
        return len(self.basis[0])

    @property
    def matrix(self) -> ImmutableMatrix:
        """Exact basis B, one column per coordinate of the section."""
        return rational_matrix(self.basis)

    @property
    def float_matrix(self) -> NDArray[np.float64]:
        """Basis B in floating point."""
        return np.array([[float(x) for x in row] for row in self.basis], dtype=float)

    @model_validator(mode="after")
    def _check_basis(self) -> Self:
        if len(self.basis) != self.body.dim:
            raise InvalidBodyError(f"section basis has {len(self.basis)} rows, expected {self.body.dim}")
        r = len(self.basis[0]) if self.basis else 0
        if r == 0 or any(len(row) != r for row in self.basis):
            raise InvalidBodyError("section basis must be a nonempty matrix")
        if self.matrix.rank() != r:
            raise InvalidBodyError("section basis columns are not independent")
        return self


ConvexBody = Annotated[HPoly | VPoly | LpBall | Ellipsoid | PSum | Section, Field(discriminator="kind")]

PSum.model_rebuild()
Section.model_rebuild()


# ----------------------------------------------------------------------------------------------------------------------
# Constructors


def cube(n: int, radius: Fraction | int = 1) -> HPoly:
    """The cube [-radius, radius]^n as an H-polytope."""
    normals = []
    for i in range(n):
        for sign in (1, -1):
            normals.append(tuple(Fraction(sign if j == i else 0) for j in range(n)))
    return HPoly(normals=tuple(normals), offsets=tuple(Fraction(radius) for _ in normals))


def cross_polytope(n: int, radius: Fraction | int = 1) -> VPoly:
    """The cross-polytope conv(±radius·e_i) as a V-polytope."""
    vertices = []
    for i in range(n):
        for sign in (1, -1):
            vertices.append(tuple(Fraction(sign * radius if j == i else 0) for j in range(n)))
    return VPoly(vertices=tuple(vertices))


def ellipsoid(gram: Sequence[Sequence[object]] | ImmutableMatrix) -> Ellipsoid:
    """Ellipsoid from an exact Gram form."""
    Q = rational_matrix(gram)
    return Ellipsoid(gram=tuple(tuple(to_fraction(Q[i, j]) for j in range(Q.cols)) for i in range(Q.rows)))


def euclidean_ball(n: int) -> Ellipsoid:
    """The Euclidean unit ball b_n^2."""
    return ellipsoid(ImmutableMatrix.eye(n))


def symmetric_vpoly(vectors: Sequence[Sequence[object]]) -> VPoly:
    """V-polytope conv(±v_i) from one vector of each pair."""
    points: set[Vector] = set()
    for v in vectors:
        exact = tuple(to_fraction(x) for x in v)
        points.add(exact)
        points.add(tuple(-x for x in exact))
    return VPoly(vertices=tuple(sorted(points)))


def symmetric_hpoly(normals: Sequence[Sequence[object]], offsets: Sequence[object] | None = None) -> HPoly:
    """H-polytope {|<a_i, x>| <= b_i} from one facet of each pair."""
    facets: dict[Vector, Fraction] = {}
    for k, a in enumerate(normals):
        exact = tuple(to_fraction(x) for x in a)
        b = to_fraction(offsets[k]) if offsets is not None else Fraction(1)
        facets[exact] = b
        facets[tuple(-x for x in exact)] = b
    keys = sorted(facets)
    return HPoly(normals=tuple(keys), offsets=tuple(facets[k] for k in keys))


# ----------------------------------------------------------------------------------------------------------------------
# Closed-form volumes


def lp_log_volume(n: int, p: float) -> float:
    """Logarithm of vol(b_n^p) = (2 Γ(1 + 1/p))^n / Γ(1 + n/p), valid for every p > 0."""
    if math.isinf(p):
        return n * math.log(2)
    return float(n * (math.log(2) + gammaln(1 + 1 / p)) - gammaln(1 + n / p))


def ball_log_volume(n: int) -> float:
    """Logarithm of the volume of the Euclidean unit ball b_n^2."""
    return lp_log_volume(n, 2)


def complex_lp_log_volume(n: int, p: float) -> float:
    """Logarithm of the volume of the complex l^p unit ball of C^n in R^2n, (π/2)^n vol(b_n^(p/2))."""
    if math.isinf(p):
        return n * math.log(math.pi)
    return n * math.log(math.pi / 2) + lp_log_volume(n, p / 2)


def psum_log_factor(n: int, m: int, p: float) -> float:
    """Logarithm of Γ(1+n/p)Γ(1+m/p)/Γ(1+(n+m)/p), the volume ratio of a p-sum to the product of its factors."""
    if math.isinf(p):
        return 0.0
    return float(gammaln(1 + n / p) + gammaln(1 + m / p) - gammaln(1 + (n + m) / p))


# ----------------------------------------------------------------------------------------------------------------------
# Exact polytope combinatorics


def _facet_solutions(points: Sequence[Vector]) -> list[Vector]:
    """Solutions x of <p_j, x> = 1 on the vertices p_j of each facet of conv(points) (a symmetric point set).

    For a set of polar points these are the vertices of the dual body; for a set of vertices these are the facet
    normals (with offset 1).
    """
    n = len(points[0])
    if n == 1:
        top = max(abs(p[0]) for p in points)
        return [(1 / top,), (-1 / top,)]
    hull = ConvexHull(np.array([[float(x) for x in p] for p in points]))
    solutions: set[Vector] = set()
    for simplex in hull.simplices:
        A = Matrix([list(points[i]) for i in simplex])
        if A.det() == 0:
            continue
        x = A.LUsolve(Matrix([1] * n))
        solutions.add(tuple(to_fraction(v) for v in x))
    return sorted(solutions)


def vertices(C: ConvexBody) -> list[Vector]:
    """Exact vertices of a polytope (or of a materializable body)."""
    if isinstance(C, VPoly):
        return list(C.vertices)
    if isinstance(C, HPoly):
        return _facet_solutions(C.polar_points())
    body = materialize(C)
    if isinstance(body, Ellipsoid):
        raise UnsupportedMetricError("vertices", "is undefined for ellipsoids")
    return vertices(body)


def facets(C: ConvexBody) -> list[Vector]:
    """Exact facet normals w_i with C = {x : <w_i, x> <= 1}, for polytopes and materializable bodies."""
    if isinstance(C, HPoly):
        return C.polar_points()
    if isinstance(C, VPoly):
        return _facet_solutions(list(C.vertices))
    body = materialize(C)
    if isinstance(body, Ellipsoid):
        raise UnsupportedMetricError("facets", "is undefined for ellipsoids")
    return facets(body)


def to_hpoly(C: ConvexBody) -> HPoly:
    """H-representation of a polytope."""
    if isinstance(C, HPoly):
        return C
    normals = facets(C)
    return HPoly(normals=tuple(normals), offsets=tuple(Fraction(1) for _ in normals))


def to_vpoly(C: ConvexBody) -> VPoly:
    """V-representation of a polytope."""
    if isinstance(C, VPoly):
        return C
    return VPoly(vertices=tuple(vertices(C)))


def exact_volume(C: HPoly | VPoly) -> Fraction:
    """Exact volume of a polytope: the sum over boundary simplices of |det| / n!, in rational arithmetic."""
    points = vertices(C)
    n = len(points[0])
    if n == 1:
        return 2 * max(abs(p[0]) for p in points)
    hull = ConvexHull(np.array([[float(x) for x in p] for p in points]))
    total = Fraction(0)
    for simplex in hull.simplices:
        det = Matrix([list(points[i]) for i in simplex]).det()
        total += abs(to_fraction(det))
    return total / math.factorial(n)


def materialize(C: ConvexBody) -> HPoly | VPoly | Ellipsoid:
    """Exact polytope or ellipsoid form of a body.

    l^1, l^2 and l^inf balls become a cross-polytope, a ball and a cube; p-sums of polytopes become polytopes for
    p in {1, inf} and p-sums of ellipsoids an ellipsoid for p = 2. Sections restrict the exact form of their body.

    Raises:
        UnsupportedMetricError: If the body has no exact polytope or ellipsoid form.
    """
    if isinstance(C, HPoly | VPoly | Ellipsoid):
        return C
    if isinstance(C, LpBall):
        if C.p == 1:
            return cross_polytope(C.n, C.radius)
        if C.p == 2:
            return ellipsoid(ImmutableMatrix.eye(C.n) / (C.radius.numerator**2) * C.radius.denominator**2)
        if math.isinf(C.p):
            return cube(C.n, C.radius)
        raise UnsupportedMetricError("materialize", f"is not available for l^{C.p} balls")
    if isinstance(C, Section):
        return materialize(restrict(materialize(C.body), C.matrix))
    first = materialize(C.first)
    second = materialize(C.second)
    n, m = first.dim, second.dim
    if math.isinf(C.p) and not isinstance(first, Ellipsoid) and not isinstance(second, Ellipsoid):
        zeros_n = (Fraction(0),) * n
        zeros_m = (Fraction(0),) * m
        normals = [(*w, *zeros_m) for w in facets(first)] + [(*zeros_n, *w) for w in facets(second)]
        return HPoly(normals=tuple(normals), offsets=tuple(Fraction(1) for _ in normals))
    if C.p == 1 and not isinstance(first, Ellipsoid) and not isinstance(second, Ellipsoid):
        zeros_n = (Fraction(0),) * n
        zeros_m = (Fraction(0),) * m
        points = [(*v, *zeros_m) for v in vertices(first)] + [(*zeros_n, *v) for v in vertices(second)]
        return VPoly(vertices=tuple(points))
    if C.p == 2 and isinstance(first, Ellipsoid) and isinstance(second, Ellipsoid):
        return ellipsoid(Matrix.diag(first.matrix, second.matrix))
    raise UnsupportedMetricError("materialize", f"is not available for this {C.p}-sum")


# ----------------------------------------------------------------------------------------------------------------------
# Gauges


def _as_float_vector(x: Sequence[object] | NDArray[np.float64]) -> NDArray[np.float64]:
    return np.array([float(v) for v in x], dtype=float)  # type: ignore[arg-type]


def gauge(C: ConvexBody, x: Sequence[object] | NDArray[np.float64]) -> float:
    """Gauge j_C(x) = inf{λ > 0 : x/λ ∈ C}.

    H-polytopes evaluate the facet maximum (exactly on rational input), V-polytopes solve a linear program,
    l^p balls and ellipsoids use their closed forms.
    """
    if len(x) != C.dim:
        raise DimensionMismatchError("gauge", C.dim, len(x))
    if isinstance(C, HPoly) and all(isinstance(v, Fraction | int) for v in x):
        exact = [Fraction(v) for v in x]  # type: ignore[arg-type]
        return float(
            max(
                sum((a * v for a, v in zip(normal, exact, strict=True)), Fraction(0)) / b
                for normal, b in zip(C.normals, C.offsets, strict=True)
            )
        )
    if isinstance(C, VPoly):
        return _vpoly_gauge(C, _as_float_vector(x))
    return float(gauges(C, _as_float_vector(x)[None, :])[0])


def _vpoly_gauge(C: VPoly, x: NDArray[np.float64]) -> float:
    if not np.any(x):
        return 0.0
    V = np.array([[float(v) for v in vertex] for vertex in C.vertices]).T
    k = V.shape[1]
    result = linprog(
        c=np.ones(2 * k),
        A_eq=np.hstack([V, -V]),
        b_eq=x,
        bounds=[(0, None)] * (2 * k),
        method="highs",
    )
    if not result.success:
        raise InvalidBodyError(f"gauge linear program failed: {result.message}")
    return float(result.fun)


def gauges(C: ConvexBody, X: NDArray[np.float64]) -> NDArray[np.float64]:
    """Vectorized gauge of the rows of X."""
    if isinstance(C, HPoly | VPoly):
        W = np.array([[float(v) for v in w] for w in facets(C)])
        return np.maximum((X @ W.T).max(axis=1), 0.0)
    if isinstance(C, LpBall):
        norms = np.linalg.norm(X, ord=C.p, axis=1) if C.n > 0 else np.zeros(len(X))
        return norms / float(C.radius)
    if isinstance(C, Ellipsoid):
        Q = np.array([[float(v) for v in row] for row in C.gram])
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", X, Q, X), 0.0))
    if isinstance(C, Section):
        return gauges(C.body, X @ C.float_matrix.T)
    n = C.first.dim
    stacked = np.stack([gauges(C.first, X[:, :n]), gauges(C.second, X[:, n:])], axis=1)
    return np.linalg.norm(stacked, ord=C.p, axis=1)


def complex_gauges(C: ConvexBody, X: NDArray[np.float64], Y: NDArray[np.float64]) -> NDArray[np.float64]:
    """Gauge of the complexified body at the rows of X + iY.

    Polytopes extend each facet functional C-linearly and take moduli; ellipsoids use the hermitian extension and
    l^p balls the complex l^p norm.
    """
    if isinstance(C, HPoly | VPoly):
        W = np.array([[float(v) for v in w] for w in facets(C)])
        return np.hypot(X @ W.T, Y @ W.T).max(axis=1)
    if isinstance(C, LpBall):
        return np.linalg.norm(np.hypot(X, Y), ord=C.p, axis=1) / float(C.radius)
    if isinstance(C, Ellipsoid):
        Q = np.array([[float(v) for v in row] for row in C.gram])
        quad = np.einsum("ij,jk,ik->i", X, Q, X) + np.einsum("ij,jk,ik->i", Y, Q, Y)
        return np.sqrt(np.maximum(quad, 0.0))
    if isinstance(C, Section):
        B = C.float_matrix
        return complex_gauges(C.body, X @ B.T, Y @ B.T)
    n = C.first.dim
    stacked = np.stack(
        [complex_gauges(C.first, X[:, :n], Y[:, :n]), complex_gauges(C.second, X[:, n:], Y[:, n:])], axis=1
    )
    return np.linalg.norm(stacked, ord=C.p, axis=1)


# ----------------------------------------------------------------------------------------------------------------------
# Polarity and linear images


def polar(C: ConvexBody) -> ConvexBody:
    """Polar body C° = {y : <x, y> <= 1 for x in C}."""
    if isinstance(C, HPoly):
        return VPoly(vertices=tuple(C.polar_points()))
    if isinstance(C, VPoly):
        return HPoly(normals=C.vertices, offsets=tuple(Fraction(1) for _ in C.vertices))
    if isinstance(C, LpBall):
        return LpBall(p=conjugate_exponent(C.p), n=C.n, radius=1 / C.radius)
    if isinstance(C, Ellipsoid):
        return ellipsoid(C.matrix.inv())
    if isinstance(C, Section):
        return polar(materialize(C))
    return PSum(first=polar(C.first), second=polar(C.second), p=conjugate_exponent(C.p))


def transform(C: ConvexBody, T: ImmutableMatrix | Matrix) -> ConvexBody:
    """Image T·C of a body under an invertible rational map."""
    T = rational_matrix(T)
    if T.shape != (C.dim, C.dim):
        raise DimensionMismatchError("transform", (C.dim, C.dim), T.shape)
    if T.det() == 0:
        raise SingularMatrixError("transform")
    if isinstance(C, HPoly):
        T_inv_t = T.inv().T
        normals = [tuple(to_fraction(v) for v in T_inv_t * Matrix(a)) for a in C.normals]
        return HPoly(normals=tuple(normals), offsets=C.offsets)
    if isinstance(C, VPoly):
        return VPoly(vertices=tuple(tuple(to_fraction(v) for v in T * Matrix(p)) for p in C.vertices))
    if isinstance(C, Ellipsoid):
        T_inv = T.inv()
        return ellipsoid(T_inv.T * C.matrix * T_inv)
    if isinstance(C, Section):
        return Section(body=C.body, basis=_rows(C.matrix * T.inv()))
    return transform(materialize(C), T)


def dilate(C: ConvexBody, t: Fraction | int) -> ConvexBody:
    """Homothetic body t·C for a positive rational t."""
    t = Fraction(t)
    if t <= 0:
        raise InvalidBodyError("dilation factor must be positive")
    if isinstance(C, HPoly):
        return HPoly(normals=C.normals, offsets=tuple(b * t for b in C.offsets))
    if isinstance(C, VPoly):
        return VPoly(vertices=tuple(tuple(x * t for x in v) for v in C.vertices))
    if isinstance(C, LpBall):
        return LpBall(p=C.p, n=C.n, radius=C.radius * t)
    if isinstance(C, Ellipsoid):
        return ellipsoid(C.matrix / (t * t))
    if isinstance(C, Section):
        return Section(body=dilate(C.body, t), basis=C.basis)
    return PSum(first=dilate(C.first, t), second=dilate(C.second, t), p=C.p)


def restrict(C: ConvexBody, basis: ImmutableMatrix | Matrix) -> ConvexBody:
    """Section {t : B t ∈ C} of a body by the subspace with basis B (n×r, exact), in the coordinates t."""
    B = rational_matrix(basis)
    if B.rows != C.dim:
        raise DimensionMismatchError("restrict", C.dim, B.rows)
    if isinstance(C, HPoly):
        normals: list[Vector] = []
        offsets: list[Fraction] = []
        for a, b in zip(C.normals, C.offsets, strict=True):
            image = tuple(to_fraction(v) for v in B.T * Matrix(a))
            if any(image):
                normals.append(image)
                offsets.append(b)
        return HPoly(normals=tuple(normals), offsets=tuple(offsets))
    if isinstance(C, Ellipsoid):
        return ellipsoid(B.T * C.matrix * B)
    if isinstance(C, VPoly):
        return restrict(to_hpoly(C), B)
    if isinstance(C, Section):
        return Section(body=C.body, basis=_rows(C.matrix * B))
    try:
        exact = materialize(C)
    except UnsupportedMetricError:
        # gauge-defined: j(t) = j_C(B t)
        return Section(body=C, basis=_rows(B))
    return restrict(exact, B)


def _rows(M: ImmutableMatrix | Matrix) -> tuple[Vector, ...]:
    return tuple(tuple(to_fraction(v) for v in M.row(i)) for i in range(M.rows))


# ----------------------------------------------------------------------------------------------------------------------
# Volumes


def volume(C: ConvexBody) -> float:
    """Lebesgue volume of a body.

    Raises:
        InvalidBodyError: If the polytope is degenerate.
    """
    return math.exp(log_volume(C))


def log_volume(C: ConvexBody) -> float:
    """Logarithm of the Lebesgue volume of a body."""
    if isinstance(C, LpBall):
        return lp_log_volume(C.n, C.p) + C.n * (math.log(C.radius.numerator) - math.log(C.radius.denominator))
    if isinstance(C, Ellipsoid):
        det = to_fraction(C.matrix.det())
        return ball_log_volume(C.dim) - 0.5 * (math.log(det.numerator) - math.log(det.denominator))
    if isinstance(C, HPoly | VPoly):
        exact = exact_volume(C)
        if exact <= 0:
            raise InvalidBodyError("polytope has zero volume")
        return math.log(exact.numerator) - math.log(exact.denominator)
    if isinstance(C, Section):
        return section_log_volume(C)
    return log_volume(C.first) + log_volume(C.second) + psum_log_factor(C.first.dim, C.second.dim, C.p)


def section_log_volume(C: Section) -> float:
    """Logarithm of the volume of a gauge-defined section, from vol = (1/r)∫ j(θ)^-r dσ over the unit sphere.

    Rank 1 is exact, ranks 2 and 3 use adaptive quadrature and higher ranks fall back to a seeded Monte Carlo.
    """
    r = C.dim
    B = C.float_matrix

    def radial(point: NDArray[np.float64]) -> float:
        return float(gauges(C.body, (B @ point)[None, :])[0])

    if r == 1:
        return math.log(2.0) - math.log(radial(np.ones(1)))
    if r == 2:
        area, _ = quad(lambda theta: radial(np.array([math.cos(theta), math.sin(theta)])) ** -2, 0.0, math.pi)
        return math.log(area)
    if r == 3:

        def integrand(phi: float, theta: float) -> float:
            point = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
            return float(radial(point) ** -3 * math.sin(theta))

        half, _ = dblquad(integrand, 0.0, math.pi / 2, 0.0, 2 * math.pi)
        return math.log(2.0 * half / 3.0)
    estimate, error = volume_mc(C, MC_SAMPLES, 0)
    logger.debug(f"Section volume: rank {r} by Monte Carlo, {estimate:.6g} ± {error:.2g}")
    return math.log(estimate)


def complex_log_volume_exact(C: ConvexBody) -> float | None:
    """Closed-form log-volume of the complexified body in C^n ≅ R^2n, when one is known."""
    if isinstance(C, LpBall):
        log_radius = math.log(C.radius.numerator) - math.log(C.radius.denominator)
        return complex_lp_log_volume(C.n, C.p) + 2 * C.n * log_radius
    if isinstance(C, Ellipsoid):
        det = to_fraction(C.matrix.det())
        return ball_log_volume(2 * C.dim) - (math.log(det.numerator) - math.log(det.denominator))
    return None


def bounding_box(C: ConvexBody) -> NDArray[np.float64]:
    """Half-widths of the coordinate bounding box of a body."""
    if isinstance(C, HPoly | VPoly):
        return np.abs(np.array([[float(x) for x in v] for v in vertices(C)])).max(axis=0)
    if isinstance(C, LpBall):
        return np.full(C.n, float(C.radius))
    if isinstance(C, Ellipsoid):
        Q_inv = np.linalg.inv(np.array([[float(v) for v in row] for row in C.gram]))
        return np.sqrt(np.diag(Q_inv))
    if isinstance(C, Section):
        B = C.float_matrix
        radius = float(np.linalg.norm(bounding_box(C.body)))
        return radius * np.sqrt(np.diag(np.linalg.inv(B.T @ B)))
    return np.concatenate([bounding_box(C.first), bounding_box(C.second)])


def _hit_or_miss(
    inside: Any,  # noqa: ANN401
    box: NDArray[np.float64],
    samples: int,
    seed: int,
) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    hits = 0
    drawn = 0
    while drawn < samples:
        size = min(MC_CHUNK, samples - drawn)
        points = rng.uniform(-1.0, 1.0, size=(size, len(box))) * box
        hits += int(np.count_nonzero(inside(points)))
        drawn += size
    box_volume = float(np.prod(2 * box))
    fraction = hits / samples
    return box_volume * fraction, box_volume * math.sqrt(fraction * (1 - fraction) / samples)


def volume_mc(C: ConvexBody, samples: int, seed: int) -> tuple[float, float]:
    """Hit-or-miss Monte Carlo volume with its standard error, deterministic for a fixed seed.

    Points are drawn uniformly in the coordinate bounding box of the body.
    """
    if samples < 1000:
        raise InvalidBodyError(f"{samples} samples are too few for a volume estimate")
    box = bounding_box(C)
    return _hit_or_miss(lambda points: gauges(C, points) <= 1.0, box, samples, seed)


def complex_volume(C: ConvexBody, samples: int, seed: int) -> tuple[float, float]:
    """Volume of the complexified body in C^n ≅ R^2n with its standard error (zero for closed forms)."""
    exact = complex_log_volume_exact(C)
    if exact is not None:
        return math.exp(exact), 0.0
    n = C.dim
    box = bounding_box(C)

    def inside(points: NDArray[np.float64]) -> NDArray[np.bool_]:
        return complex_gauges(C, points[:, :n], points[:, n:]) <= 1.0

    return _hit_or_miss(inside, np.concatenate([box, box]), samples, seed)


# ----------------------------------------------------------------------------------------------------------------------
# Mahler products and volume checks


def mahler_product(C: ConvexBody) -> float:
    """Mahler product vol(C)·vol(C°), invariant under linear changes of basis."""
    return math.exp(log_volume(C) + log_volume(polar(C)))


def mahler_lower_bound(n: int) -> float:
    """Mahler's lower bound 4^n/(n!)^2 on the Mahler product."""
    return 4.0**n / math.factorial(n) ** 2


def mahler_conjecture_holds(C: ConvexBody) -> bool:
    """Whether the Mahler product reaches the conjectured minimum 4^n/n! (informational)."""
    return mahler_product(C) >= 4.0**C.dim / math.factorial(C.dim) * (1 - SLOPE_TOLERANCE)


def santalo_mahler_check(C: ConvexBody) -> CheckReport:
    """Blaschke-Santaló and Mahler: 4^n/(n!)^2 <= P(C) <= P(b_n^2)."""
    n = C.dim
    product = mahler_product(C)
    upper = math.exp(2 * ball_log_volume(n))
    lower = mahler_lower_bound(n)
    logger.debug(f"Mahler: n={n} product={product:.6g} bracket=[{lower:.6g}, {upper:.6g}]")
    return CheckReport.bracket(
        "santalo_mahler",
        product,
        lower,
        upper,
        tolerance=SLOPE_TOLERANCE * upper,
        instance={"body": C.model_dump(mode="json"), "mahler_conjecture_holds": mahler_conjecture_holds(C)},
    )


def direct_sum_volume_check(
    first: ConvexBody, second: ConvexBody, p: float, *, samples: int = 200_000, seed: int = 0
) -> CheckReport:
    """Volume of a p-sum against binom(n+m, n)^-1 <= ratio <= 1 and the exact Γ ratio.

    The p-sum volume is measured independently of the Γ formula: exactly when the p-sum materializes as a polytope
    or an ellipsoid, by Monte Carlo otherwise.
    """
    n, m = first.dim, second.dim
    body = PSum(first=first, second=second, p=p)
    log_product = log_volume(first) + log_volume(second)
    try:
        measured = math.exp(log_volume(materialize(body)) - log_product)
        error = SLOPE_TOLERANCE
    except UnsupportedMetricError:
        estimate, stderr = volume_mc(body, samples, seed)
        measured = estimate / math.exp(log_product)
        error = max(MC_SIGMAS * stderr / math.exp(log_product), SLOPE_TOLERANCE)
    expected = math.exp(psum_log_factor(n, m, p))
    lower = 1 / math.comb(n + m, n)
    slack = min(measured - lower, 1 - measured, -abs(measured - expected))
    return CheckReport(
        name="direct_sum_volume",
        instance={
            "first": first.model_dump(mode="json"),
            "second": second.model_dump(mode="json"),
            "p": "inf" if math.isinf(p) else p,
            "gamma_ratio": expected,
            "bracket": [lower, 1.0],
        },
        lhs=measured,
        rhs=expected,
        slack=slack,
        tolerance=error,
        seed=seed,
    )
