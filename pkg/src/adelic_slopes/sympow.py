"""Symmetric powers: γ_(n,ℓ), slopes of S^ℓ and the related lemmas."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import TYPE_CHECKING

from scipy.special import gammaln
from sympy import ImmutableMatrix

from adelic_slopes import logger
from adelic_slopes.bundle import AdelicBundle, degree, height_vector, sections_bundle, sub, symmetric
from adelic_slopes.config import EnumerationConfig
from adelic_slopes.constants import (
    GAMMA_EXACT_MAX_ELL,
    GAMMA_SIZE_GUARD,
    IDENTITY_TOLERANCE,
    SLOPE_TOLERANCE,
    SYMPOW_SIZE_GUARD,
)
from adelic_slopes.dtos import CheckReport, GammaValue
from adelic_slopes.errors import DomainError, SizeGuardError, UnsupportedMetricError
from adelic_slopes.lattice import hkz_reduce, invertible, rational_matrix, sympow_matrix, to_fraction, to_numpy
from adelic_slopes.minima import borek_constant, successive_minima
from adelic_slopes.places import Place, abs_value, support_primes
from adelic_slopes.slopes import canonical_polygon, hn_filtration, slope
from adelic_slopes.utils import log_rational

if TYPE_CHECKING:
    from collections.abc import Sequence


def _log_factorial(k: int) -> float:
    if k <= GAMMA_EXACT_MAX_ELL:
        return math.log(math.factorial(k))
    return float(gammaln(k + 1))


def gamma_nl(n: int, ell: int) -> GammaValue:
    """log γ_(n,ℓ), the mean of log(ℓ!/i!) over the multi-indices |i| = ℓ in n variables.

    Each coordinate takes the value k in binom(ℓ-k+n-2, n-2) multi-indices, which turns the sum over the
    binom(ℓ+n-1, n-1) monomials into a sum over k.

    Raises:
        SizeGuardError: Above the monomial count guard.
    """
    if n < 1 or ell < 0:
        raise DomainError("gamma_nl", f"needs n >= 1 and ell >= 0, got n={n}, ell={ell}")
    monomials = math.comb(ell + n - 1, n - 1)
    if monomials > GAMMA_SIZE_GUARD:
        raise SizeGuardError("gamma_nl monomials", monomials, GAMMA_SIZE_GUARD)
    if n == 1:
        return GammaValue(n=n, ell=ell, log_value=0.0, exact_log_numerator=0.0, monomials=1)
    inner = math.fsum(math.comb(ell - k + n - 2, n - 2) * _log_factorial(k) for k in range(ell + 1))
    numerator = math.fsum([monomials * _log_factorial(ell), -n * inner])
    return GammaValue(
        n=n, ell=ell, log_value=max(numerator / monomials, 0.0), exact_log_numerator=numerator, monomials=monomials
    )


def harmonic(n: int) -> float:
    """Harmonic number H_n."""
    return math.fsum(1 / k for k in range(1, n + 1))


def gamma_asymptotic_check(n: int, ells: Sequence[int] = (8, 16, 32, 64)) -> CheckReport:
    """log γ_(n,ℓ)/ℓ approaches H_n - 1.

    Asserts that the ratios lie in [0, H_n - 1 + 0.2], that their distance to H_n - 1 decreases along `ells` and
    that the last one is within 15% of the limit.
    """
    limit = harmonic(n) - 1
    ratios = [gamma_nl(n, ell).log_value / ell for ell in ells]
    distances = [abs(r - limit) for r in ratios]
    reports = [
        CheckReport.bracket(f"ratio_{ell}", r, 0.0, limit + 0.2, tolerance=SLOPE_TOLERANCE)
        for ell, r in zip(ells, ratios, strict=True)
    ]
    reports.extend(
        CheckReport.inequality(f"approach_{ell}", d_next, d, tolerance=SLOPE_TOLERANCE)
        for ell, d, d_next in zip(ells[1:], distances, distances[1:], strict=False)
    )
    reports.append(CheckReport.inequality("limit", distances[-1], 0.15 * limit, tolerance=SLOPE_TOLERANCE))
    return CheckReport.combine("gamma_asymptotic", reports, instance={"n": n, "ells": list(ells), "ratios": ratios})


def _guard_sympow(n: int, ell: int) -> int:
    size = math.comb(ell + n - 1, n - 1)
    if size > SYMPOW_SIZE_GUARD:
        raise SizeGuardError("symmetric power", size, SYMPOW_SIZE_GUARD)
    return size


def det_sympow_identity_check(M: Sequence[Sequence[object]] | ImmutableMatrix, ell: int) -> CheckReport:
    """det S^ℓ(M) = (det M)^binom(ℓ+n-1, n), in exact arithmetic.

    Raises:
        SingularMatrixError: If M is singular.
    """
    matrix = rational_matrix(M)
    invertible(matrix, "det_sympow_identity_check")
    n = matrix.rows
    _guard_sympow(n, ell)
    lhs = to_fraction(sympow_matrix(matrix, ell).det())
    rhs = to_fraction(matrix.det()) ** math.comb(ell + n - 1, n)
    return CheckReport(
        name="det_sympow_identity",
        instance={"n": n, "ell": ell},
        lhs=log_rational(abs(lhs)),
        rhs=log_rational(abs(rhs)),
        slack=0.0 if lhs == rhs else -1.0,
        tolerance=0.0,
    )


def _max_entry(matrix: ImmutableMatrix, p: int) -> Fraction:
    place = Place.finite(p)
    return max(abs_value(to_fraction(c), place) for c in matrix if c != 0)


def inverse_norm_bound_check(M: Sequence[Sequence[object]] | ImmutableMatrix) -> CheckReport:
    """‖M^-1‖ <= ‖M‖^(n-1) / |det M| at every prime (max-entry norms, exact) and with Hilbert-Schmidt norms.

    Raises:
        SingularMatrixError: If M is singular.
    """
    matrix = rational_matrix(M)
    inverse = invertible(matrix, "inverse_norm_bound_check")
    n = matrix.rows
    det = to_fraction(matrix.det())
    primes: set[int] = set(support_primes(det))
    for c in (*matrix, *inverse):
        if c != 0:
            primes.update(support_primes(to_fraction(c)))
    reports = []
    for p in sorted(primes):
        lhs = _max_entry(inverse, p)
        rhs = _max_entry(matrix, p) ** (n - 1) / abs_value(det, Place.finite(p))
        reports.append(
            CheckReport(
                name=f"inverse_norm_p{p}",
                lhs=float(lhs),
                rhs=float(rhs),
                slack=0.0 if lhs <= rhs else -float(lhs - rhs),
                tolerance=0.0,
            )
        )
    hs = float((to_numpy(matrix) ** 2).sum()) ** 0.5
    hs_inverse = float((to_numpy(inverse) ** 2).sum()) ** 0.5
    bound = hs ** (n - 1) / abs(float(det))
    reports.append(
        CheckReport.inequality("inverse_norm_hs", hs_inverse, bound, tolerance=SLOPE_TOLERANCE * max(bound, 1.0))
    )
    return CheckReport.combine("inverse_norm_bound", reports, instance={"n": n, "primes": sorted(primes)})


def sympow_slope_check(bundle: AdelicBundle, ell: int) -> CheckReport:
    """μ(S^ℓ E) = ℓ·μ(E) + ½ log γ_(n,ℓ) for hermitian bundles."""
    n = bundle.rank
    _guard_sympow(n, ell)
    lhs = slope(symmetric(bundle, ell))
    rhs = ell * slope(bundle) + 0.5 * gamma_nl(n, ell).log_value
    return CheckReport.equality(
        "sympow_slope", lhs, rhs, tolerance=IDENTITY_TOLERANCE, instance={"n": n, "ell": ell}
    )


def sections_slope_check(bundle: AdelicBundle, ell: int) -> CheckReport:
    """μ(E_ℓ) = ℓ·μ(E) + ½ log(binom(n-1+ℓ, ℓ)·γ_(n,ℓ)) for the sections bundle of hermitian E."""
    n = bundle.rank
    _guard_sympow(n, ell)
    lhs = slope(sections_bundle(bundle, ell))
    rhs = ell * slope(bundle) + 0.5 * (math.log(math.comb(n - 1 + ell, ell)) + gamma_nl(n, ell).log_value)
    return CheckReport.equality(
        "sections_slope", lhs, rhs, tolerance=IDENTITY_TOLERANCE, instance={"n": n, "ell": ell}
    )


def _mu_max_of_power(power: AdelicBundle, config: EnumerationConfig) -> tuple[float, float, bool]:
    """Bracket of μ_max(S^ℓ E) and whether it is exact.

    Within the rank guard the polygon gives the value. Above it, the Borek bound μ_max <= C(N)/N - log λ_1 gives the
    upper end.
    """
    if power.rank <= config.rank_guard:
        value = canonical_polygon(power, config=config).slopes[0]
        return value, value, True
    lam = successive_minima(power, config=config.model_copy(update={"rank_guard": power.rank})).lambdas[0]
    return -math.inf, borek_constant(power.rank) / power.rank - math.log(lam), False


def sympow_mumax_check(bundle: AdelicBundle, ell: int, *, config: EnumerationConfig | None = None) -> CheckReport:
    """0 <= μ_max(S^ℓ E) - ℓ·μ_max(E) <= 2ℓ n log n for hermitian bundles.

    The lower side is witnessed by S^ℓ of the first Harder-Narasimhan piece, whose slope is ℓ·μ_max(E) plus a
    nonnegative γ term.
    """
    config = config or EnumerationConfig()
    n = bundle.rank
    _guard_sympow(n, ell)
    mu_max_base = canonical_polygon(bundle, config=config).slopes[0]
    power = symmetric(bundle, ell)
    lower, upper, exact = _mu_max_of_power(power, config)
    first_piece = hn_filtration(bundle, config=config).ambient(bundle)[0]
    witness = slope(symmetric(sub(bundle, first_piece), ell))
    lower = max(lower, witness)
    if not exact:
        logger.debug(f"Sympow: rank {power.rank} above the guard, μ_max bracketed in [{lower:.6g}, {upper:.6g}]")
    instance = {"n": n, "ell": ell, "mu_max": [lower, upper], "exact": exact}
    return CheckReport.combine(
        "sympow_mumax",
        [
            CheckReport.inequality("sympow_mumax_lower", 0.0, lower - ell * mu_max_base, tolerance=IDENTITY_TOLERANCE),
            CheckReport.inequality(
                "sympow_mumax_upper", upper - ell * mu_max_base, 2 * ell * n * math.log(n), tolerance=IDENTITY_TOLERANCE
            ),
        ],
        instance=instance,
    )


def siegel_check(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> CheckReport:
    """Absolute Siegel lemma over Q: a basis with Σ h(e_i) + deg E <= (n/2) log n.

    Candidates are the HKZ basis and the successive minima witnesses. Missing the bound is reported as
    inconclusive, never as a refutation.
    """
    if not bundle.hermitian_flag:
        raise UnsupportedMetricError("siegel_check")
    config = config or EnumerationConfig()
    n = bundle.rank
    hkz = hkz_reduce(bundle.lattice_gram, config.max_nodes)
    candidates = {
        "hkz": [list(bundle.lattice * hkz[:, j]) for j in range(n)],
        "minima": [
            list(bundle.lattice * ImmutableMatrix(w)) for w in successive_minima(bundle, config=config).witnesses
        ],
    }
    totals = {name: math.fsum(height_vector(bundle, e).value for e in basis) for name, basis in candidates.items()}
    best = min(totals, key=totals.__getitem__)
    lhs = totals[best] + degree(bundle)
    rhs = n / 2 * math.log(n)
    report = CheckReport.inequality(
        "siegel", lhs, rhs, tolerance=SLOPE_TOLERANCE, instance={"n": n, "witness": best, "sums": totals}
    )
    if not report.passed:
        return report.model_copy(update={"sound_direction_only": False, "detail": "inconclusive"})
    return report
