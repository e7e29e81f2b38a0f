"""Successive minima and the second Minkowski theorem."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from sympy import ImmutableMatrix, Matrix

from adelic_slopes import logger
from adelic_slopes.bundle import (
    AdelicBundle,
    AdelicMatrix,
    arch_norms,
    height_vector,
    john_bundle,
    lowner_bundle,
    scale,
)
from adelic_slopes.config import EnumerationConfig, SolverConfig
from adelic_slopes.constants import (
    BOX_SIZE_GUARD,
    LOWNER_MARGIN,
    RADIUS_INFLATION,
    REFINEMENT_PRIMES,
    SLOPE_TOLERANCE,
)
from adelic_slopes.convexgeom import ball_log_volume, log_volume
from adelic_slopes.dtos import CheckReport, MinimaResult
from adelic_slopes.ellipsoids import delta_upper, sandwich_factors, solve_lowner, volume_ratio
from adelic_slopes.errors import DomainError, RankGuardError, SizeGuardError
from adelic_slopes.lattice import (
    column_rank,
    enumerate_short_vectors,
    exact_norm,
    integer_gram,
    lll_reduce,
    to_fraction,
    to_numpy,
    to_rational,
)
from adelic_slopes.slopes import canonical_polygon, mu_bracket
from adelic_slopes.utils import log_rational


def _metric_gram(bundle: AdelicBundle, solver: SolverConfig | None = None) -> np.ndarray:
    """Gram form, in lattice coordinates, of a hermitian norm below the archimedean norm."""
    A = to_numpy(bundle.lattice)
    if bundle.hermitian_flag:
        return to_numpy(bundle.lattice_gram)
    return A.T @ solve_lowner(bundle.body, solver).matrix @ A


def _norms(bundle: AdelicBundle, vectors: list[tuple[int, ...]]) -> list[float]:
    if bundle.hermitian_flag:
        rows, scale_ = integer_gram(bundle.lattice_gram)
        return [math.sqrt(exact_norm(rows, w) / scale_) for w in vectors]
    A = to_numpy(bundle.lattice)
    return [float(x) for x in arch_norms(bundle, np.asarray(vectors, dtype=float) @ A.T)]


def _oriented(vector: np.ndarray) -> tuple[int, ...]:
    """Integer vector with its last nonzero coordinate positive."""
    w = tuple(int(c) for c in vector)
    if next(c for c in reversed(w) if c) < 0:
        return tuple(-c for c in w)
    return w


def lattice_vectors_within(
    bundle: AdelicBundle,
    bound: float,
    *,
    config: EnumerationConfig | None = None,
    solver: SolverConfig | None = None,
) -> tuple[list[tuple[int, ...]], list[float], bool]:
    """Lattice vectors (lattice coordinates, one per ± pair) of archimedean norm at most `bound`.

    Convex bodies are enumerated inside the Löwner ellipsoid, whose norm is below the gauge, then filtered by gauge.
    Returns the vectors, their norms and the truncation flag.
    """
    config = config or EnumerationConfig()
    gram = _metric_gram(bundle, solver)
    transform = lll_reduce(gram)
    reduced = transform.T @ gram @ transform
    margin = RADIUS_INFLATION if bundle.hermitian_flag else LOWNER_MARGIN
    found, truncated = enumerate_short_vectors(reduced, bound**2 * (1 + margin), config.max_nodes)
    vectors = [_oriented(transform @ np.asarray(v, dtype=np.int64)) for v in found]
    norms = _norms(bundle, vectors)
    kept = [(w, norm) for w, norm in zip(vectors, norms, strict=True) if norm <= bound * (1 + RADIUS_INFLATION)]
    return [w for w, _ in kept], [norm for _, norm in kept], truncated


def successive_minima(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> MinimaResult:
    """Successive minima of the lattice under the archimedean norm.

    These are the minima for scalings at the real place only, an upper bound for the minima over all adelic
    scalings. Witnesses are in lattice coordinates.

    Raises:
        RankGuardError: Above the rank guard.
    """
    return _successive_minima(bundle, config or EnumerationConfig(), solver or SolverConfig())


@lru_cache(maxsize=256)
def _successive_minima(bundle: AdelicBundle, config: EnumerationConfig, solver: SolverConfig) -> MinimaResult:
    n = bundle.rank
    if n > config.rank_guard:
        raise RankGuardError(n, config.rank_guard)
    basis = lll_reduce(_metric_gram(bundle, solver))
    columns = [tuple(int(c) for c in basis[:, j]) for j in range(n)]
    bound = max(_norms(bundle, columns))
    vectors, norms, truncated = lattice_vectors_within(bundle, bound, config=config, solver=solver)
    if truncated:
        logger.warning(f"Minima: enumeration truncated, the minima are upper bounds (rank {n})")
        vectors, norms = vectors + columns, norms + _norms(bundle, columns)
    if bundle.hermitian_flag:
        rows, scale_ = integer_gram(bundle.lattice_gram)
        keys = [Fraction(exact_norm(rows, w), scale_) for w in vectors]
    else:
        keys = [Fraction(norm) for norm in norms]
    chosen: list[tuple[int, ...]] = []
    lambdas: list[float] = []
    for _, norm, w in sorted(zip(keys, norms, vectors, strict=True)):
        if column_rank(Matrix([*chosen, w]).T) > len(chosen):
            chosen.append(w)
            lambdas.append(norm)
            if len(chosen) == n:
                break
    return MinimaResult(lambdas=tuple(lambdas), witnesses=tuple(chosen))


def _log_covolume(bundle: AdelicBundle) -> float:
    return log_rational(abs(to_fraction(bundle.lattice.det())))


def _log_unit_ball_volume(bundle: AdelicBundle) -> float:
    if bundle.hermitian_flag:
        return ball_log_volume(bundle.rank) - 0.5 * log_rational(to_fraction(bundle.gram.det()))
    return log_volume(bundle.body)


def minkowski_second_check(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> CheckReport:
    """Second Minkowski theorem.

    Πλ_i <= 2^n·covol/vol(B)·vr^n and Πλ_i·vol(B)/covol >= 2^n/n!, on logarithms.
    """
    n = bundle.rank
    minima = successive_minima(bundle, config=config, solver=solver)
    log_product = sum(math.log(x) for x in minima.lambdas)
    log_ratio = _log_unit_ball_volume(bundle) - _log_covolume(bundle)
    log_vr = 0.0 if bundle.hermitian_flag else math.log(volume_ratio(bundle.body, solver))
    instance = {"bundle": bundle.model_dump(mode="json"), "lambdas": list(minima.lambdas)}
    return CheckReport.combine(
        "minkowski_second",
        [
            CheckReport.inequality(
                "minkowski_upper", log_product, n * math.log(2) - log_ratio + n * log_vr, tolerance=SLOPE_TOLERANCE
            ),
            CheckReport.inequality(
                "minkowski_lower",
                n * math.log(2) - math.lgamma(n + 1),
                log_product + log_ratio,
                tolerance=SLOPE_TOLERANCE,
            ),
        ],
        instance=instance,
    )


def borek_constant(n: int) -> float:
    """C(n, Q) = log(2^n / vol b_n^2)."""
    return n * math.log(2) - ball_log_volume(n)


def borek_check(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> CheckReport:
    """-i log Δ <= μ_i + log λ_i <= (i/n)·C(n, Q) + i log Δ for every i.

    Hermitian bundles have Δ = 1 and both sides asserted. For convex bodies the slopes are only bracketed and the
    lower side is reported without being asserted.
    """
    n = bundle.rank
    lambdas = successive_minima(bundle, config=config, solver=solver).lambdas
    constant = borek_constant(n)
    log_delta = 0.0 if bundle.hermitian_flag else math.log(delta_upper(bundle.body, solver))
    if bundle.hermitian_flag:
        brackets = [(s, s) for s in canonical_polygon(bundle, config=config).slopes]
    else:
        brackets = mu_bracket(bundle, config=config, solver=solver)
    reports = []
    for i, ((lo, hi), lam) in enumerate(zip(brackets, lambdas, strict=True), start=1):
        reports.append(
            CheckReport.inequality(
                f"borek_upper_{i}", lo + math.log(lam), i / n * constant + i * log_delta, tolerance=SLOPE_TOLERANCE
            )
        )
        reports.append(
            CheckReport.inequality(
                f"borek_lower_{i}",
                -i * log_delta,
                hi + math.log(lam),
                tolerance=SLOPE_TOLERANCE,
                sound_direction_only=bundle.hermitian_flag,
            )
        )
    return CheckReport.combine("borek", reports, instance={"bundle": bundle.model_dump(mode="json")})


def borek_trend_check(ns: tuple[int, ...] = (8, 16, 32)) -> CheckReport:
    """C(n)/((n/2) log n) increases towards 1; the bracket [0.5, 1.5] is reported only."""
    ratios = [borek_constant(n) / (n / 2 * math.log(n)) for n in ns]
    increments = [b - a for a, b in itertools.pairwise(ratios)]
    reports = [
        CheckReport.inequality("borek_trend_increasing", 0.0, min(increments, default=0.0), tolerance=SLOPE_TOLERANCE),
        CheckReport.inequality("borek_trend_below", max(ratios), 1.5, tolerance=SLOPE_TOLERANCE),
        CheckReport.inequality(
            "borek_trend_above", 0.5, min(ratios), tolerance=SLOPE_TOLERANCE, sound_direction_only=False
        ),
    ]
    return CheckReport.combine("borek_trend", reports, instance={"n": list(ns), "ratios": ratios})


def refine_minima(
    bundle: AdelicBundle, primes: tuple[int, ...] = REFINEMENT_PRIMES, *, config: EnumerationConfig | None = None
) -> CheckReport:
    """Search finite rescalings a_p ∈ {1/p, 1, p} for smaller adelic minima.

    Each rescaling replaces the lattice by f·L with f = Π p^k_p and divides the archimedean minima by f. The
    outcome is informational: `instance["improved"]` records whether some rescaling beat the lattice minima.
    """
    base = successive_minima(bundle, config=config).lambdas
    best = list(base)
    n = bundle.rank
    for exponents in itertools.product((-1, 0, 1), repeat=len(primes)):
        f = math.prod((Fraction(p) ** k for p, k in zip(primes, exponents, strict=True)), start=Fraction(1))
        if f == 1:
            continue
        identity = ImmutableMatrix.eye(n)
        rescaled = scale(bundle, AdelicMatrix.from_matrices(identity * to_rational(1 / f), identity))
        lambdas = successive_minima(rescaled, config=config).lambdas
        best = [min(b, lam / float(f)) for b, lam in zip(best, lambdas, strict=True)]
    improved = any(b < lam * (1 - SLOPE_TOLERANCE) for b, lam in zip(best, base, strict=True))
    return CheckReport.inequality(
        "refine_minima",
        sum(math.log(x) for x in base),
        sum(math.log(x) for x in best),
        tolerance=SLOPE_TOLERANCE,
        sound_direction_only=False,
        instance={"primes": list(primes), "improved": improved, "lattice": list(base), "refined": best},
    )


def lines_of_bounded_height(
    bundle: AdelicBundle, bound: float, *, config: EnumerationConfig | None = None
) -> list[tuple[tuple[int, ...], float]]:
    """Lines of height at most `bound`, each given by its primitive lattice vector and its height.

    The finite part of the height of a primitive lattice vector is 1, so h is the log of its archimedean norm.
    """
    vectors, norms, truncated = lattice_vectors_within(bundle, math.exp(bound), config=config)
    if truncated:
        logger.warning(f"Northcott: enumeration truncated at height {bound}")
    lines = [(w, math.log(norm)) for w, norm in zip(vectors, norms, strict=True) if math.gcd(*w) == 1]
    return sorted(lines, key=lambda line: (line[1], line[0]))


def northcott_check(bundle: AdelicBundle, bound: float, *, config: EnumerationConfig | None = None) -> CheckReport:
    """Lines of bounded height from enumeration against a brute-force box scan with `height_vector`."""
    if bound <= -50:  # noqa: PLR2004
        raise DomainError("northcott_check", f"height bound {bound} is too small")
    lines = lines_of_bounded_height(bundle, bound, config=config)
    # |w_i| <= ‖w‖_L·sqrt((Γ_L^-1)_ii) with the hermitian norm ‖.‖_L below the archimedean norm
    radii = np.sqrt(np.diag(np.linalg.inv(_metric_gram(bundle)))) * math.exp(bound) * (1 + LOWNER_MARGIN)
    box = [range(-math.floor(r), math.floor(r) + 1) for r in radii]
    size = math.prod(len(b) for b in box)
    if size > BOX_SIZE_GUARD:
        raise SizeGuardError("Northcott box", size, BOX_SIZE_GUARD)
    scanned = set()
    for w in itertools.product(*box):
        if not any(w) or math.gcd(*w) != 1 or next(c for c in reversed(w) if c) < 0:
            continue
        x = bundle.lattice * ImmutableMatrix(w)
        if height_vector(bundle, list(x)).value <= bound + SLOPE_TOLERANCE:
            scanned.add(w)
    enumerated = {w for w, _ in lines}
    return CheckReport(
        name="northcott",
        lhs=float(len(enumerated)),
        rhs=float(len(scanned)),
        slack=-float(len(scanned ^ enumerated)),
        tolerance=0.0,
        instance={"bound": bound, "lines": sorted(enumerated)},
    )


def minima_bracket_check(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> CheckReport:
    """Minima against the hermitian companions.

    With J ⊆ C ⊆ a·J and C ⊆ L ⊆ b·C: λ_i(L) <= λ_i(E) <= b·λ_i(L) and λ_i(J)/a <= λ_i(E) <= λ_i(J).
    """
    lambdas = successive_minima(bundle, config=config, solver=solver).lambdas
    if bundle.hermitian_flag:
        return CheckReport.inequality("minima_bracket", 0.0, 0.0, tolerance=SLOPE_TOLERANCE)
    a, b = sandwich_factors(bundle.body, solver)
    lowner = successive_minima(lowner_bundle(bundle, solver), config=config, solver=solver).lambdas
    john = successive_minima(john_bundle(bundle, solver), config=config, solver=solver).lambdas
    tolerance = 10 * LOWNER_MARGIN
    reports = []
    for i, (lam, lam_l, lam_j) in enumerate(zip(lambdas, lowner, john, strict=True), start=1):
        reports.append(CheckReport.bracket(f"lowner_{i}", lam, lam_l, b * lam_l, tolerance=tolerance * lam))
        reports.append(CheckReport.bracket(f"john_{i}", lam, lam_j / a, lam_j, tolerance=tolerance * lam))
    return CheckReport.combine(
        "minima_bracket", reports, instance={"bundle": bundle.model_dump(mode="json"), "factors": [a, b]}
    )
