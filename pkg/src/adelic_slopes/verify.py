"""Slope inequalities and degree theorems as named checks, and the suites that run them on generated instances.

Every check returns a `CheckReport`. Bracketed quantities of convex body bundles enter each inequality on the side
where they weaken it, so a failure of an asserted report is a genuine counterexample up to the tolerance.
"""

from __future__ import annotations

import functools
import math
import statistics
from collections.abc import Callable
from fractions import Fraction
from typing import TYPE_CHECKING

import anyio
import anyio.to_thread
import numpy as np
from pydantic import BaseModel, ConfigDict
from sympy import ImmutableMatrix, Matrix

from adelic_slopes import logger
from adelic_slopes.bundle import (
    AdelicBundle,
    AdelicMatrix,
    ExactRows,
    body_bundle,
    degree,
    determinant,
    direct_sum_p,
    dominates,
    dual,
    euler_characteristic,
    height_map,
    height_vector,
    hermitian_bundle,
    john_bundle,
    line_bundle,
    lowner_bundle,
    quotient,
    scale,
    sub,
    sub_with_inclusion,
    tensor_g2,
    with_body,
    with_gram,
)
from adelic_slopes.config import EnumerationConfig, Settings, SolverConfig, SuiteName
from adelic_slopes.constants import IDENTITY_TOLERANCE, SLOPE_TOLERANCE, SOLVER_TOLERANCE
from adelic_slopes.convexgeom import (
    ConvexBody,
    LpBall,
    ball_log_volume,
    dilate,
    direct_sum_volume_check,
    log_volume,
    psum_log_factor,
    santalo_mahler_check,
    symmetric_vpoly,
)
from adelic_slopes.dtos import CheckReport, Summary
from adelic_slopes.ellipsoids import delta_upper, polarity_check, rogalski_check, sandwich_check, volume_ratio_check
from adelic_slopes.errors import (
    DimensionMismatchError,
    DomainError,
    GuardError,
    SolverError,
    UncertifiedPolygonError,
    UnsupportedMetricError,
)
from adelic_slopes.lattice import rational_matrix, to_fraction
from adelic_slopes.minima import borek_check, minima_bracket_check, minkowski_second_check
from adelic_slopes.places import product_formula_check
from adelic_slopes.slopes import minimax_check, mu_bracket, mu_i_duality_check, slope
from adelic_slopes.sympow import sympow_slope_check
from adelic_slopes.utils import log_rational

if TYPE_CHECKING:
    from collections.abc import Sequence

# ----------------------------------------------------------------------------------------------------------------------
# Helpers


def _mu_max(
    bundle: AdelicBundle, config: EnumerationConfig | None, solver: SolverConfig | None = None
) -> tuple[float, float]:
    return mu_bracket(bundle, config=config, solver=solver)[0]


def _mu_min(
    bundle: AdelicBundle, config: EnumerationConfig | None, solver: SolverConfig | None = None
) -> tuple[float, float]:
    lo, hi = mu_bracket(dual(bundle), config=config, solver=solver)[0]
    return -hi, -lo


def _log_delta(bundle: AdelicBundle, solver: SolverConfig | None = None) -> float:
    return 0.0 if bundle.hermitian_flag else math.log(delta_upper(bundle.body, solver))


def _log_vr(bundle: AdelicBundle, solver: SolverConfig | None = None) -> float:
    """Upper bound of log vr, from the inscribed John ellipsoid."""
    if bundle.hermitian_flag:
        return 0.0
    return max(degree(bundle) - degree(john_bundle(bundle, solver)), 0.0) / bundle.rank


def _map(
    M: Sequence[Sequence[object]] | ImmutableMatrix, source: AdelicBundle, target: AdelicBundle
) -> ImmutableMatrix:
    matrix = rational_matrix(M)
    if matrix.shape != (target.rank, source.rank):
        raise DimensionMismatchError("map", (target.rank, source.rank), matrix.shape)
    return matrix


def _span(columns: Matrix | ImmutableMatrix) -> ImmutableMatrix | None:
    basis = Matrix(columns).columnspace()
    return ImmutableMatrix(Matrix.hstack(*basis)) if basis else None


def _tolerance(*bundles: AdelicBundle, solver: SolverConfig | None = None) -> float:
    if all(b.hermitian_flag for b in bundles):
        return SLOPE_TOLERANCE
    return 10 * (SOLVER_TOLERANCE if solver is None else solver.tol)


# ----------------------------------------------------------------------------------------------------------------------
# Slope inequalities


def check_line_isomorphism(
    first: AdelicBundle, second: AdelicBundle, M: Sequence[Sequence[object]] | ImmutableMatrix
) -> CheckReport:
    """deg E1 = deg E2 + h(φ) for an isomorphism of lines."""
    if first.rank != 1 or second.rank != 1:
        raise DomainError("check_line_isomorphism", f"needs lines, got ranks {first.rank} and {second.rank}")
    height = height_map(first, second, _map(M, first, second))
    return CheckReport.equality(
        "line_isomorphism",
        degree(first),
        degree(second) + height.value,
        tolerance=_tolerance(first, second),
        instance={"height": height.value},
    )


def check_iso_determinant(
    first: AdelicBundle, second: AdelicBundle, M: Sequence[Sequence[object]] | ImmutableMatrix
) -> CheckReport:
    """deg E1 = deg E2 + h(det φ) for an isomorphism of hermitian bundles.

    Raises:
        UnsupportedMetricError: For convex body metrics.
        SingularMatrixError: If φ is not invertible.
    """
    if not (first.hermitian_flag and second.hermitian_flag):
        raise UnsupportedMetricError("check_iso_determinant")
    matrix = _map(M, first, second)
    det = to_fraction(matrix.det())
    if det == 0:
        raise DomainError("check_iso_determinant", "the map is not an isomorphism")
    report = check_line_isomorphism(determinant(first), determinant(second), [[det]])
    return report.model_copy(update={"name": "iso_determinant", "instance": {**report.instance, "det": str(det)}})


def check_slope_injective(
    first: AdelicBundle,
    second: AdelicBundle,
    M: Sequence[Sequence[object]] | ImmutableMatrix,
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> CheckReport:
    """μ_max(E1) <= μ_max(E2) + h(φ) for an injective φ."""
    matrix = _map(M, first, second)
    if matrix.rank() != first.rank:
        raise DomainError("check_slope_injective", "the map is not injective")
    height = height_map(first, second, matrix)
    lhs = _mu_max(first, config, solver)[0]
    rhs = _mu_max(second, config, solver)[1] + height.value
    return CheckReport.inequality(
        "slope_injective",
        lhs,
        rhs,
        tolerance=_tolerance(first, second, solver=solver),
        instance={"height": height.value, "height_exact": height.exact},
    )


class SlopeMethodStep(BaseModel):
    """One evaluation φ_i: E → G_i; E_(i+1) is the kernel of φ_i on E_i."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    target: AdelicBundle
    matrix: ExactRows

    @classmethod
    def of(cls, target: AdelicBundle, M: Sequence[Sequence[object]] | ImmutableMatrix) -> SlopeMethodStep:
        """Step from a target bundle and the matrix of φ_i on the ambient space of E."""
        matrix = rational_matrix(M)
        rows = tuple(tuple(to_fraction(c) for c in matrix.row(i)) for i in range(matrix.rows))
        return cls(target=target, matrix=rows)


def check_slope_method(
    bundle: AdelicBundle,
    steps: Sequence[SlopeMethodStep],
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> CheckReport:
    """μ(E) <= Σ (dim(E_i/E_(i+1))/n)(μ_max(G_i) + h(E_i, G_i; φ_i)) + log vr(E).

    Raises:
        DomainError: If φ = (φ_1, ..., φ_N) is not injective.
    """
    n = bundle.rank
    current: ImmutableMatrix | None = ImmutableMatrix.eye(n)
    total = 0.0
    dims: list[int] = []
    for step in steps:
        if current is None:
            dims.append(0)
            continue
        matrix = rational_matrix(step.matrix)
        if matrix.shape != (step.target.rank, n):
            raise DimensionMismatchError("slope method step", (step.target.rank, n), matrix.shape)
        piece, inclusion = sub_with_inclusion(bundle, current)
        restricted = ImmutableMatrix(matrix * inclusion)
        kernel = restricted.nullspace()
        following = _span(inclusion * Matrix.hstack(*kernel)) if kernel else None
        dim = piece.rank - (following.cols if following is not None else 0)
        dims.append(dim)
        if dim:
            height = height_map(piece, step.target, restricted).value
            total += dim / n * (_mu_max(step.target, config, solver)[1] + height)
        current = following
    if current is not None:
        raise DomainError("check_slope_method", "the evaluation map is not injective")
    log_vr = _log_vr(bundle, solver)
    rhs = total + log_vr
    return CheckReport.inequality(
        "slope_method",
        slope(bundle),
        rhs,
        tolerance=_tolerance(bundle, *(s.target for s in steps), solver=solver),
        instance={"dims": dims, "log_vr": log_vr},
    )


def check_prop66(
    first: AdelicBundle,
    second: AdelicBundle,
    M: Sequence[Sequence[object]] | ImmutableMatrix,
    i: int,
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> CheckReport:
    """μ_(i+k)(E1) <= μ_i(E2) + i log Δ(E2) + (i+k) log Δ(E1) + h(φ) with k = dim ker φ, for 1 <= i <= rk φ."""
    matrix = _map(M, first, second)
    rank = matrix.rank()
    kernel = first.rank - rank
    if not 1 <= i <= rank:
        raise DomainError("check_prop66", f"i={i} outside [1, {rank}]")
    height = height_map(first, second, matrix)
    lhs = mu_bracket(first, config=config, solver=solver)[i + kernel - 1][0]
    error = i * _log_delta(second, solver) + (i + kernel) * _log_delta(first, solver)
    rhs = mu_bracket(second, config=config, solver=solver)[i - 1][1] + error + height.value
    return CheckReport.inequality(
        "prop66",
        lhs,
        rhs,
        tolerance=_tolerance(first, second, solver=solver),
        instance={"i": i, "kernel": kernel, "height": height.value, "error": error},
    )


def check_corollary_surjective(
    first: AdelicBundle,
    second: AdelicBundle,
    M: Sequence[Sequence[object]] | ImmutableMatrix,
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> CheckReport:
    """μ_max(F) <= deg F - (m-1)μ_min(E) + (m-1)h(φ) + m log(Δ(E)Δ(F)) for a surjective φ: E → F, m = dim F."""
    matrix = _map(M, first, second)
    m = second.rank
    if matrix.rank() != m:
        raise DomainError("check_corollary_surjective", "the map is not surjective")
    height = height_map(first, second, matrix)
    lhs = _mu_max(second, config, solver)[0]
    rhs = (
        degree(second)
        - (m - 1) * _mu_min(first, config, solver)[0]
        + (m - 1) * height.value
        + m * (_log_delta(first, solver) + _log_delta(second, solver))
    )
    return CheckReport.inequality(
        "corollary_surjective",
        lhs,
        rhs,
        tolerance=_tolerance(first, second, solver=solver),
        instance={"height": height.value},
    )


def check_tensor_slope(bundles: Sequence[AdelicBundle]) -> CheckReport:
    """μ(E_1 ⊗ ... ⊗ E_l) = Σ μ(E_i) when all factors are hermitian or all but one are lines.

    Raises:
        UnsupportedMetricError: For two body factors of rank above 1.
    """
    if not bundles:
        raise DomainError("check_tensor_slope", "no factor")
    product = functools.reduce(tensor_g2, bundles)
    return CheckReport.equality(
        "tensor_slope",
        slope(product),
        math.fsum(slope(b) for b in bundles),
        tolerance=_tolerance(*bundles),
        instance={"ranks": [b.rank for b in bundles]},
    )


# ----------------------------------------------------------------------------------------------------------------------
# Degree theorems


def duality_check(bundle: AdelicBundle, *, solver: SolverConfig | None = None) -> CheckReport:
    """-n log Δ <= deg E + deg E^v <= 0, an equality for hermitian bundles."""
    total = degree(bundle) + degree(dual(bundle))
    lower = -bundle.rank * _log_delta(bundle, solver)
    return CheckReport.bracket("duality", total, lower, 0.0, tolerance=_tolerance(bundle, solver=solver))


def quotient_additivity_check(bundle: AdelicBundle, subspace: Matrix | ImmutableMatrix) -> CheckReport:
    """deg E - deg F - deg E/F is 0 for hermitian bundles.

    For convex bodies the section and the projection give vol(C∩F)vol(πC)/binom(n, r) <= vol C <= vol(C∩F)vol(πC).
    """
    sub_bundle = sub(bundle, subspace)
    n, r = bundle.rank, sub_bundle.rank
    difference = degree(bundle) - degree(sub_bundle) - degree(quotient(bundle, subspace))
    instance = {"n": n, "r": r}
    if bundle.hermitian_flag:
        return CheckReport.equality(
            "quotient_additivity", difference, 0.0, tolerance=SLOPE_TOLERANCE, instance=instance
        )
    ball_term = ball_log_volume(n) - ball_log_volume(r) - ball_log_volume(n - r)
    return CheckReport.bracket(
        "quotient_additivity",
        difference,
        -math.log(math.comb(n, r)) - ball_term,
        -ball_term,
        tolerance=SLOPE_TOLERANCE,
        instance=instance,
    )


def direct_sum_degree_check(first: AdelicBundle, second: AdelicBundle, p: float = 2) -> CheckReport:
    """deg(E1 ⊕_p E2) - deg E1 - deg E2 equals the Γ term of the p-sum volume and lies in ±log binom(n+m, n)."""
    n, m = first.rank, second.rank
    difference = degree(direct_sum_p(first, second, p)) - degree(first) - degree(second)
    expected = psum_log_factor(n, m, p) - ball_log_volume(n + m) + ball_log_volume(n) + ball_log_volume(m)
    bound = math.log(math.comb(n + m, n))
    return CheckReport.combine(
        "direct_sum_degree",
        [
            CheckReport.equality("direct_sum_gamma", difference, expected, tolerance=IDENTITY_TOLERANCE),
            CheckReport.bracket("direct_sum_binom", difference, -bound, bound, tolerance=SLOPE_TOLERANCE),
        ],
        instance={"n": n, "m": m, "p": "inf" if math.isinf(p) else p},
    )


def submodularity_check(
    bundle: AdelicBundle, first: Matrix | ImmutableMatrix, second: Matrix | ImmutableMatrix
) -> CheckReport:
    """deg(F1 ∩ F2) + deg(F1 + F2) >= deg F1 + deg F2 for sub-bundles of a hermitian bundle.

    Raises:
        UnsupportedMetricError: For convex body metrics.
    """
    if not bundle.hermitian_flag:
        raise UnsupportedMetricError("submodularity_check")
    S1, S2 = rational_matrix(first), rational_matrix(second)
    total = _span(Matrix.hstack(S1, S2))
    kernel = Matrix.hstack(S1, -S2).nullspace()
    meet = _span(S1 * Matrix.hstack(*kernel)[: S1.cols, :]) if kernel else None

    def degree_of(subspace: ImmutableMatrix | None) -> float:
        return 0.0 if subspace is None else degree(sub(bundle, subspace))

    lhs = degree_of(meet) + degree_of(total)
    rhs = degree(sub(bundle, S1)) + degree(sub(bundle, S2))
    return CheckReport.inequality(
        "submodularity",
        rhs,
        lhs,
        tolerance=SLOPE_TOLERANCE,
        instance={"meet": 0 if meet is None else meet.cols, "sum": 0 if total is None else total.cols},
    )


def scale_rule_check(bundle: AdelicBundle, a: AdelicMatrix) -> CheckReport:
    """deg(a·E) = deg E - log|det a|_A."""
    return CheckReport.equality(
        "scale_rule",
        degree(scale(bundle, a)),
        degree(bundle) - log_rational(a.abs_det()),
        tolerance=SLOPE_TOLERANCE,
        instance={"abs_det": str(a.abs_det())},
    )


def john_lowner_check(bundle: AdelicBundle, *, solver: SolverConfig | None = None) -> CheckReport:
    """deg J(E) <= deg E <= deg L(E) and deg L(E) - deg J(E) <= n log Δ."""
    n = bundle.rank
    john, lowner = degree(john_bundle(bundle, solver)), degree(lowner_bundle(bundle, solver))
    value = degree(bundle)
    tolerance = _tolerance(bundle, solver=solver) * n
    return CheckReport.combine(
        "john_lowner",
        [
            CheckReport.bracket("john_lowner_order", value, john, lowner, tolerance=tolerance),
            CheckReport.inequality(
                "john_lowner_gap", lowner - john, n * _log_delta(bundle, solver), tolerance=tolerance
            ),
        ],
        instance={"john": john, "lowner": lowner, "degree": value},
    )


def hadamard_check(bundle: AdelicBundle) -> CheckReport:
    """Σ h(e_i) + deg E over a lattice basis is >= 0 for hermitian bundles and >= log(2^n/n!) - log vol b_n always."""
    n = bundle.rank
    total = math.fsum(height_vector(bundle, list(bundle.lattice[:, j])).value for j in range(n)) + degree(bundle)
    bound = 0.0 if bundle.hermitian_flag else n * math.log(2) - math.lgamma(n + 1) - ball_log_volume(n)
    return CheckReport.inequality("hadamard", bound, total, tolerance=SLOPE_TOLERANCE, instance={"n": n})


def euler_poincare_check(bundle: AdelicBundle) -> CheckReport:
    """χ(E) = log vol(C) - log covol(E) against deg E + log vol b_n."""
    covolume = log_rational(abs(to_fraction(bundle.lattice.det())))
    return CheckReport.equality(
        "euler_poincare",
        euler_characteristic(bundle),
        log_volume(bundle.body) - covolume,
        tolerance=IDENTITY_TOLERANCE,
    )


def domination_check(
    first: AdelicBundle,
    second: AdelicBundle,
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> CheckReport:
    """E1 ⪯ E2 implies deg E1 >= deg E2 and μ_max(E1) >= μ_max(E2).

    Raises:
        DomainError: If E1 does not dominate E2.
    """
    if not dominates(first, second):
        raise DomainError("domination_check", "the first bundle does not have smaller norms")
    return CheckReport.combine(
        "domination",
        [
            CheckReport.inequality("domination_degree", degree(second), degree(first), tolerance=SLOPE_TOLERANCE),
            CheckReport.inequality(
                "domination_mu_max",
                _mu_max(second, config, solver)[0],
                _mu_max(first, config, solver)[1],
                tolerance=_tolerance(first, second, solver=solver),
            ),
        ],
    )


# ----------------------------------------------------------------------------------------------------------------------
# Instances


def _ints(array: np.ndarray) -> list[list[int]]:
    return [[int(x) for x in row] for row in array]


def random_lattice(rng: np.random.Generator, n: int) -> list[list[Fraction]]:
    """Lattice matrix L·U with L unipotent, U upper triangular, both with small entries, over a denominator 1 or 2."""
    lower = np.tril(rng.integers(-1, 2, size=(n, n)), -1) + np.eye(n, dtype=np.int64)
    upper = np.triu(rng.integers(-2, 3, size=(n, n)), 1) + np.diag(rng.integers(1, 4, size=n))
    denominator = int(rng.integers(1, 3))
    return [[Fraction(x, denominator) for x in row] for row in _ints(lower @ upper)]


def random_gram(rng: np.random.Generator, n: int) -> list[list[int]]:
    """Integral positive definite Gram form L·Lᵀ with entries at most 8 for n <= 4."""
    L = np.tril(rng.integers(-1, 2, size=(n, n)), -1) + np.diag(rng.integers(1, 3, size=n))
    return _ints(L @ L.T)


def random_hermitian(rng: np.random.Generator, n: int) -> AdelicBundle:
    """Hermitian bundle with a random lattice and Gram form."""
    return hermitian_bundle(random_lattice(rng, n), random_gram(rng, n))


def random_polytope(rng: np.random.Generator, n: int) -> ConvexBody:
    """Symmetric V-polytope on n+1 to n+3 random integral vectors and their opposites."""
    while True:
        vectors = [v for v in _ints(rng.integers(-3, 4, size=(n + int(rng.integers(1, 4)), n))) if any(v)]
        if vectors and Matrix(vectors).rank() == n:
            return symmetric_vpoly(vectors)


def random_body_bundle(rng: np.random.Generator, n: int) -> AdelicBundle:
    """Bundle with a random lattice and a random polytope unit ball."""
    return body_bundle(random_lattice(rng, n), random_polytope(rng, n))


def random_matrix(rng: np.random.Generator, rows: int, cols: int, rank: int | None = None) -> ImmutableMatrix:
    """Integral matrix with small entries and the given rank (full rank by default)."""
    target = min(rows, cols) if rank is None else rank
    while True:
        left = rng.integers(-2, 3, size=(rows, target))
        right = rng.integers(-2, 3, size=(target, cols))
        matrix = ImmutableMatrix(_ints(left @ right))
        if matrix.rank() == target:
            return matrix


def _rational(rng: np.random.Generator) -> Fraction:
    return Fraction(int(rng.integers(1, 13)) * int(rng.choice([-1, 1])), int(rng.integers(1, 13)))


# ----------------------------------------------------------------------------------------------------------------------
# Suites

Instance = tuple[str, Callable[[], CheckReport]]


def _guarded(name: str, check: Callable[[], CheckReport]) -> CheckReport:
    """Run a check; guard, solver and certification failures become informational reports."""
    try:
        return check()
    except (GuardError, SolverError, UncertifiedPolygonError) as error:
        logger.warning(f"Suite: {name} skipped ({error})")
        return CheckReport(
            name=name,
            lhs=math.nan,
            rhs=math.nan,
            slack=math.nan,
            tolerance=0.0,
            sound_direction_only=False,
            detail=f"skipped: {error}",
        )


def _hermitian_checks(rng: np.random.Generator, index: int, settings: Settings) -> list[Instance]:
    config = settings.enumeration
    solver = settings.solver
    n = 2 + index % 3
    E = random_hermitian(rng, n)
    F = random_hermitian(rng, n)
    G = random_hermitian(rng, n - 1)
    r = int(rng.integers(1, n))
    S1, S2 = random_matrix(rng, n, r), random_matrix(rng, n, n - r)
    sub_bundle, inclusion = sub_with_inclusion(E, S1)
    P = random_matrix(rng, n, n)
    split = [
        SlopeMethodStep.of(random_hermitian(rng, r), P[:r, :]),
        SlopeMethodStep.of(random_hermitian(rng, n - r), P[r:, :]),
    ]
    lines = [line_bundle(_rational(rng), int(rng.integers(1, 9))) for _ in range(2)]
    kernel_map = random_matrix(rng, n, n, rank=n - 1)
    a = AdelicMatrix.from_matrices(random_matrix(rng, n, n), random_matrix(rng, n, n))
    k = int(rng.integers(2, 4))
    checks: list[Instance] = [
        ("line_isomorphism", lambda: check_line_isomorphism(lines[0], lines[1], [[_rational(rng)]])),
        ("iso_determinant", lambda: check_iso_determinant(E, F, P)),
        ("slope_injective", lambda: check_slope_injective(sub_bundle, E, inclusion, config=config, solver=solver)),
        ("slope_method", lambda: check_slope_method(E, split, config=config, solver=solver)),
        ("prop66", lambda: check_prop66(E, F, kernel_map, int(rng.integers(1, n)), config=config, solver=solver)),
        (
            "corollary_surjective",
            lambda: check_corollary_surjective(E, G, random_matrix(rng, n - 1, n), config=config, solver=solver),
        ),
        ("tensor_slope", lambda: check_tensor_slope([E, lines[0]] if n > 2 else [E, F])),
        ("duality", lambda: duality_check(E, solver=solver)),
        ("quotient_additivity", lambda: quotient_additivity_check(E, S1)),
        ("direct_sum_degree", lambda: direct_sum_degree_check(E, G)),
        ("submodularity", lambda: submodularity_check(E, S1, S2)),
        ("scale_rule", lambda: scale_rule_check(E, a)),
        ("hadamard", lambda: hadamard_check(E)),
        ("euler_poincare", lambda: euler_poincare_check(E)),
        ("domination", lambda: domination_check(E, with_gram(E, E.gram * k * k), config=config, solver=solver)),
        ("mu_i_duality", lambda: mu_i_duality_check(E, config=config)),
        ("minimax", lambda: minimax_check(E, int(rng.integers(1, n + 1)), config=config)),
    ]
    if n <= 3:
        checks.append(("sympow_slope", lambda: sympow_slope_check(E, 2)))
    return checks


def _body_checks(rng: np.random.Generator, index: int, settings: Settings) -> list[Instance]:
    config = settings.enumeration
    solver = settings.solver
    n = 2 + index % 2
    E = random_body_bundle(rng, n)
    F = random_body_bundle(rng, n)
    G = random_hermitian(rng, n - 1)
    S = random_matrix(rng, n, 1)
    line, inclusion = sub_with_inclusion(E, S)
    P = random_matrix(rng, n, n)
    split = [
        SlopeMethodStep.of(random_hermitian(rng, 1), P[:1, :]),
        SlopeMethodStep.of(random_body_bundle(rng, n - 1), P[1:, :]),
    ]
    p = float(rng.choice([1.0, math.inf]))
    return [
        ("slope_injective", lambda: check_slope_injective(line, E, inclusion, config=config, solver=solver)),
        ("slope_method", lambda: check_slope_method(E, split, config=config, solver=solver)),
        (
            "prop66",
            lambda: check_prop66(
                E, F, random_matrix(rng, n, n), int(rng.integers(1, n + 1)), config=config, solver=solver
            ),
        ),
        (
            "corollary_surjective",
            lambda: check_corollary_surjective(E, G, random_matrix(rng, n - 1, n), config=config, solver=solver),
        ),
        ("duality", lambda: duality_check(E, solver=solver)),
        ("quotient_additivity", lambda: quotient_additivity_check(E, S)),
        ("direct_sum_degree", lambda: direct_sum_degree_check(E, F, p)),
        ("john_lowner", lambda: john_lowner_check(E, solver=solver)),
        ("hadamard", lambda: hadamard_check(E)),
        ("euler_poincare", lambda: euler_poincare_check(E)),
        (
            "domination",
            lambda: domination_check(E, with_body(E, dilate(E.body, Fraction(1, 2))), config=config, solver=solver),
        ),
        ("minkowski_second", lambda: minkowski_second_check(E, config=config, solver=solver)),
        ("borek", lambda: borek_check(E, config=config, solver=solver)),
        ("minima_bracket", lambda: minima_bracket_check(E, config=config, solver=solver)),
    ]


_LP_EXPONENTS = (1.0, 1.5, 2.0, 3.0, math.inf)


def _geometry_checks(rng: np.random.Generator, index: int, settings: Settings) -> list[Instance]:
    n = 2 + index % 2
    C = random_polytope(rng, n)
    solver = settings.solver
    p = _LP_EXPONENTS[index % len(_LP_EXPONENTS)]
    first, second = random_polytope(rng, 1), random_polytope(rng, n - 1)
    samples, seed = settings.check.mc_samples, settings.check.seed + index
    return [
        ("santalo_mahler", lambda: santalo_mahler_check(C)),
        ("polarity", lambda: polarity_check(C, solver)),
        ("sandwich", lambda: sandwich_check(C, solver)),
        ("volume_ratio", lambda: volume_ratio_check(C, solver)),
        ("rogalski", lambda: rogalski_check(n + 1, p)),
        ("lp_sandwich", lambda: sandwich_check(LpBall(p=p, n=n), solver)),
        ("direct_sum_volume", lambda: direct_sum_volume_check(first, second, p, samples=samples, seed=seed)),
        ("product_formula", lambda: product_formula_check(_rational(rng))),
    ]


SUITES: dict[SuiteName, Callable[[np.random.Generator, int, Settings], list[Instance]]] = {
    SuiteName.HERMITIAN_EXACT: _hermitian_checks,
    SuiteName.BODY_BRACKETS: _body_checks,
    SuiteName.GEOMETRY: _geometry_checks,
}

SUITE_DESCRIPTIONS: dict[SuiteName, str] = {
    SuiteName.HERMITIAN_EXACT: "hermitian bundles of rank 2 to 4, every identity and slope inequality asserted",
    SuiteName.BODY_BRACKETS: "polytope bundles of rank 2 and 3, slopes bracketed by the John and Löwner polygons",
    SuiteName.GEOMETRY: "convex geometry: Mahler, polarity, John/Löwner sandwiches, volume ratios, p-sums",
    SuiteName.ALL: "the suites listed in ADELIC_CHECK_SUITES, all three by default",
}


def _suite_names(name: SuiteName, settings: Settings) -> list[SuiteName]:
    if name is SuiteName.ALL:
        return settings.computed_suites
    return [name]


def _run_instance(
    name: SuiteName, seed_sequence: np.random.SeedSequence, index: int, settings: Settings, seed: int
) -> list[CheckReport]:
    rng = np.random.default_rng(seed_sequence)
    reports = []
    for check_name, check in SUITES[name](rng, index, settings):
        report = _guarded(check_name, check)
        instance = {"suite": name.value, "index": index, **report.instance}
        reports.append(report.model_copy(update={"instance": instance, "seed": seed}))
    logger.debug(f"Suite: {name.value} instance {index} done ({len(reports)} reports)")
    return reports


def _instances(
    name: SuiteName, count: int, seed: int, settings: Settings
) -> list[tuple[SuiteName, np.random.SeedSequence, int]]:
    if count < 0:
        raise DomainError("run_suite", f"count={count} is negative")
    jobs = []
    for suite in _suite_names(name, settings):
        children = np.random.SeedSequence([seed, list(SUITES).index(suite)]).spawn(count)
        jobs.extend((suite, child, index) for index, child in enumerate(children))
    return jobs


def run_suite(
    name: SuiteName | str, count: int, seed: int | None = None, *, settings: Settings | None = None
) -> list[CheckReport]:
    """Run `count` generated instances of a suite; deterministic in (name, count, seed)."""
    settings = settings or Settings()
    seed = settings.check.seed if seed is None else seed
    jobs = _instances(SuiteName(name), count, seed, settings)
    reports = [r for suite, child, index in jobs for r in _run_instance(suite, child, index, settings, seed)]
    logger.info(f"Suite: {SuiteName(name).value} {summarize(reports).model_dump()}")
    return reports


async def run_suite_async(
    name: SuiteName | str,
    count: int,
    seed: int | None = None,
    *,
    settings: Settings | None = None,
    workers: int | None = None,
) -> list[CheckReport]:
    """Same reports as `run_suite`, instances computed in worker threads bounded by a capacity limiter."""
    settings = settings or Settings()
    seed = settings.check.seed if seed is None else seed
    jobs = _instances(SuiteName(name), count, seed, settings)
    limiter = anyio.CapacityLimiter(workers or settings.check.workers)
    results: list[list[CheckReport]] = [[] for _ in jobs]

    async def run(position: int, suite: SuiteName, child: np.random.SeedSequence, index: int) -> None:
        job = functools.partial(_run_instance, suite, child, index, settings, seed)
        results[position] = await anyio.to_thread.run_sync(job, limiter=limiter)

    async with anyio.create_task_group() as tg:
        for position, (suite, child, index) in enumerate(jobs):
            tg.start_soon(run, position, suite, child, index)
    reports = [r for batch in results for r in batch]
    logger.info(f"Suite: {SuiteName(name).value} {summarize(reports).model_dump()}")
    return reports


def summarize(reports: Sequence[CheckReport]) -> Summary:
    """Pass/fail counts and slack statistics of the asserted reports."""
    asserted = [r for r in reports if r.sound_direction_only]
    slacks = [r.slack for r in asserted if math.isfinite(r.slack)]
    return Summary(
        total=len(reports),
        passed=sum(r.passed for r in reports),
        failed=sum(r.failed for r in reports),
        informational=len(reports) - len(asserted),
        min_slack=min(slacks, default=None),
        mean_slack=statistics.fmean(slacks) if slacks else None,
    )
