"""Slopes, canonical polygon and Harder-Narasimhan filtration.

The best rank-r sub-bundle of a hermitian bundle is spanned by a saturated sublattice S with Plücker vector w
and deg S = -½ log wᵀ C_r(Γ) w where Γ = Aᵀ G A and C_r is the r-th compound. The polygon therefore reduces to
shortest decomposable vectors of the exterior powers, found by Fincke-Pohst enumeration around an HKZ incumbent.
"""

from __future__ import annotations

import io
import math
from fractions import Fraction
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np
from pydantic import BaseModel, ConfigDict, computed_field
from sympy import ImmutableMatrix, Matrix

from adelic_slopes import logger
from adelic_slopes.bundle import (
    AdelicBundle,
    degree,
    dual,
    john_bundle,
    lowner_bundle,
    quotient,
    sub_with_inclusion,
    tensor_g2,
)
from adelic_slopes.config import EnumerationConfig
from adelic_slopes.constants import RADIUS_INFLATION, SLOPE_TOLERANCE
from adelic_slopes.dtos import CheckReport
from adelic_slopes.ellipsoids import delta_upper, sandwich_factors
from adelic_slopes.errors import (
    InconsistentFiltrationError,
    RankGuardError,
    UncertifiedPolygonError,
    UnsupportedMetricError,
)
from adelic_slopes.lattice import (
    compound_matrix,
    contains,
    decomposable_subspace,
    enumerate_short_vectors,
    exact_norm,
    hkz_reduce,
    integer_gram,
    is_decomposable,
    lll_reduce,
    plucker_coordinates,
    primitive,
    to_fraction,
    to_numpy,
)
from adelic_slopes.utils import log_rational

if TYPE_CHECKING:
    from pathlib import Path

    from adelic_slopes.config import SolverConfig

Basis = tuple[tuple[int, ...], ...]


def _basis(matrix: Matrix | ImmutableMatrix) -> Basis:
    """Columns of an integer matrix."""
    return tuple(tuple(int(matrix[i, j]) for i in range(matrix.rows)) for j in range(matrix.cols))


def _matrix(basis: Basis, n: int) -> ImmutableMatrix:
    if not basis:
        return ImmutableMatrix.zeros(n, 0)
    return ImmutableMatrix(basis).T


class CanonicalPolygon(BaseModel):
    """Canonical polygon P of a hermitian bundle.

    `norms[r]` is the exact minimum of wᵀ C_r(Γ) w over decomposable lattice vectors, so the best rank-r sub-bundle
    has degree -½ log norms[r]. `achievers[r]` lists the saturated sublattices (bases in lattice coordinates)
    reaching it.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int
    norms: tuple[Fraction, ...]
    achievers: tuple[tuple[Basis, ...], ...]
    vertex_ranks: tuple[int, ...]
    certified: bool

    @computed_field()  # type: ignore[misc]
    @property
    def points(self) -> tuple[float, ...]:
        """Largest sub-bundle degree in each rank."""
        return tuple(0.5 * log_rational(1 / m) for m in self.norms)

    @computed_field()  # type: ignore[misc]
    @property
    def vertices(self) -> tuple[float, ...]:
        """Values P(0), ..., P(n) of the concave envelope."""
        points = self.points
        values = []
        for r in range(self.n + 1):
            right = next(v for v in self.vertex_ranks if v >= r)
            left = max(v for v in self.vertex_ranks if v <= r)
            if left == right:
                values.append(points[r])
            else:
                t = (r - left) / (right - left)
                values.append((1 - t) * points[left] + t * points[right])
        return tuple(values)

    @computed_field()  # type: ignore[misc]
    @property
    def slopes(self) -> tuple[float, ...]:
        """Slopes μ_1 >= ... >= μ_n."""
        values = self.vertices
        return tuple(values[i] - values[i - 1] for i in range(1, self.n + 1))


class HNFiltration(BaseModel):
    """Harder-Narasimhan filtration {0} ⊂ E_1 ⊂ ... ⊂ E_g = E with bases in lattice coordinates."""

    model_config = ConfigDict(frozen=True)

    ranks: tuple[int, ...]
    degrees: tuple[float, ...]
    subspaces: tuple[Basis, ...]

    def ambient(self, bundle: AdelicBundle) -> list[ImmutableMatrix]:
        """Bases of the pieces in ambient coordinates."""
        return [ImmutableMatrix(bundle.lattice * _matrix(basis, bundle.rank)) for basis in self.subspaces]


def slope(bundle: AdelicBundle) -> float:
    """Slope deg E / rank E."""
    return degree(bundle) / bundle.rank


def slope_or_empty(bundle: AdelicBundle | None) -> float:
    """Slope with the convention -inf for the zero bundle."""
    return -math.inf if bundle is None else slope(bundle)


# ----------------------------------------------------------------------------------------------------------------------
# Polygon


def _shortest_decomposable(
    lattice_gram: ImmutableMatrix, hkz: ImmutableMatrix, r: int, config: EnumerationConfig, radius_factor: float
) -> tuple[Fraction, list[tuple[int, ...]], bool]:
    """Exact minimum of the compound form on decomposable vectors, every achiever, and the certificate."""
    n = lattice_gram.rows
    compound = compound_matrix(lattice_gram, r)
    rows, scale = integer_gram(compound)
    incumbent_vector = primitive(plucker_coordinates(hkz[:, :r]))
    incumbent = exact_norm(rows, incumbent_vector)
    transform = lll_reduce(to_numpy(compound))
    reduced = transform.T @ to_numpy(compound) @ transform
    schedule = config.radius_schedule(radius_factor)
    for round_, factor in enumerate(schedule):
        radius_sq = factor**2 * incumbent / scale * (1 + RADIUS_INFLATION)
        found, truncated = enumerate_short_vectors(reduced, radius_sq, config.max_nodes)
        candidates = {primitive([int(c) for c in transform @ np.asarray(v, dtype=np.int64)]) for v in found}
        candidates.add(incumbent_vector)
        best: int | None = None
        achievers: list[tuple[int, ...]] = []
        for norm, w in sorted((exact_norm(rows, w), w) for w in candidates):
            if best is not None and norm > best:
                break
            if is_decomposable(w, n, r):
                best = norm
                achievers.append(w)
        assert best is not None  # noqa: S101
        if truncated:
            logger.warning(f"Polygon: rank {r} enumeration truncated after {config.max_nodes} nodes")
            return Fraction(best, scale), achievers, False
        if best <= factor**2 * incumbent * (1 + RADIUS_INFLATION):
            return Fraction(best, scale), achievers, True
        if round_ + 1 < len(schedule):
            next_factor = schedule[round_ + 1]
            logger.warning(f"Polygon: rank {r} escalating the radius factor to {next_factor:.3g} (round {round_ + 1})")
    return Fraction(best, scale), achievers, False


def _upper_hull(norms: list[Fraction]) -> list[int]:
    """Ranks of the corners of the concave envelope of (r, -½ log norms[r]), compared exactly."""
    hull: list[int] = []
    for c in range(len(norms)):
        while len(hull) >= 2:  # noqa: PLR2004
            a, b = hull[-2], hull[-1]
            # b lies on or below the chord from a to c
            if norms[b] ** (c - a) >= norms[a] ** (c - b) * norms[c] ** (b - a):
                hull.pop()
            else:
                break
        hull.append(c)
    return hull


def _require_hermitian(bundle: AdelicBundle, operation: str) -> None:
    if not bundle.hermitian_flag:
        raise UnsupportedMetricError(operation)


def canonical_polygon(
    bundle: AdelicBundle, radius_factor: float | None = None, *, config: EnumerationConfig | None = None
) -> CanonicalPolygon:
    """Canonical polygon of a hermitian bundle.

    Raises:
        UnsupportedMetricError: For convex body metrics.
        RankGuardError: Above the rank guard.
    """
    _require_hermitian(bundle, "canonical_polygon")
    config = config or EnumerationConfig()
    factor = config.radius_factor if radius_factor is None else radius_factor
    return _canonical_polygon(bundle, factor, config)


@lru_cache(maxsize=256)
def _canonical_polygon(bundle: AdelicBundle, factor: float, config: EnumerationConfig) -> CanonicalPolygon:
    n = bundle.rank
    if n > config.rank_guard:
        raise RankGuardError(n, config.rank_guard)
    gram = bundle.lattice_gram
    hkz = hkz_reduce(gram, config.max_nodes)
    norms = [Fraction(1)]
    achievers: list[tuple[Basis, ...]] = [()]
    certified = True
    for r in range(1, n):
        norm, vectors, ok = _shortest_decomposable(gram, hkz, r, config, factor)
        norms.append(norm)
        achievers.append(tuple(_basis(decomposable_subspace(w, n, r)) for w in sorted(vectors)))
        certified = certified and ok
    norms.append(to_fraction(gram.det()))
    achievers.append((_basis(ImmutableMatrix.eye(n)),))
    polygon = CanonicalPolygon(
        n=n, norms=tuple(norms), achievers=tuple(achievers), vertex_ranks=tuple(_upper_hull(norms)), certified=certified
    )
    logger.debug(f"Polygon: rank {n} vertices at {polygon.vertex_ranks} (certified={certified})")
    return polygon


def polygon_bracket(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> tuple[CanonicalPolygon, CanonicalPolygon]:
    """Polygons of the John and Löwner bundles, a lower and an upper envelope of the polygon of the bundle."""
    lower = canonical_polygon(john_bundle(bundle, solver), config=config)
    return lower, canonical_polygon(lowner_bundle(bundle, solver), config=config)


def polygon_envelope(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> list[tuple[float, float]]:
    """Certified bracket of P(r) for r = 0..n.

    With J ⊆ C ⊆ a·J and C ⊆ L ⊆ b·C:
    max(P_J(r), P_L(r) - r log b) <= P(r) <= min(P_L(r), P_J(r) + r log a), and P(n) is the degree itself.
    """
    if bundle.hermitian_flag:
        values = canonical_polygon(bundle, config=config).vertices
        return [(v, v) for v in values]
    john, lowner = polygon_bracket(bundle, config=config, solver=solver)
    log_a, log_b = (math.log(factor) for factor in sandwich_factors(bundle.body, solver))
    envelope = [
        (max(lo, hi - r * log_b), min(hi, lo + r * log_a))
        for r, (lo, hi) in enumerate(zip(john.vertices, lowner.vertices, strict=True))
    ]
    total = degree(bundle)
    envelope[0] = (0.0, 0.0)
    envelope[-1] = (total, total)
    return envelope


def mu_bracket(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> list[tuple[float, float]]:
    """Bracket of every slope μ_i from the polygon envelope."""
    envelope = polygon_envelope(bundle, config=config, solver=solver)
    return [
        (envelope[i][0] - envelope[i - 1][1], envelope[i][1] - envelope[i - 1][0]) for i in range(1, len(envelope))
    ]


def mu_i(bundle: AdelicBundle, i: int, *, config: EnumerationConfig | None = None) -> float:
    """i-th slope of a hermitian bundle."""
    polygon = canonical_polygon(bundle, config=config)
    if not 1 <= i <= polygon.n:
        msg = f"i={i} outside [1, {polygon.n}]"
        raise IndexError(msg)
    return polygon.slopes[i - 1]


def mu_max(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> float:
    """Maximal slope μ_max = μ_1."""
    return mu_i(bundle, 1, config=config)


def mu_min(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> float:
    """Minimal slope, -μ_max of the dual bundle."""
    return -mu_max(dual(bundle), config=config)


# ----------------------------------------------------------------------------------------------------------------------
# Filtration


def hn_filtration(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> HNFiltration:
    """Harder-Narasimhan filtration of a hermitian bundle.

    Raises:
        UncertifiedPolygonError: If the polygon enumeration is not certified.
        InconsistentFiltrationError: If a vertex has several achievers or the achievers are not nested.
    """
    polygon = canonical_polygon(bundle, config=config)
    if not polygon.certified:
        raise UncertifiedPolygonError("hn_filtration")
    n = polygon.n
    ranks = [r for r in polygon.vertex_ranks if r > 0]
    subspaces: list[Basis] = []
    for r in ranks:
        if len(polygon.achievers[r]) != 1:
            raise InconsistentFiltrationError(r, f"{len(polygon.achievers[r])} sub-bundles reach P({r})")
        basis = polygon.achievers[r][0]
        if subspaces and not contains(_matrix(basis, n), _matrix(subspaces[-1], n)):
            raise InconsistentFiltrationError(r, "the sub-bundle does not contain the previous piece")
        subspaces.append(basis)
    points = polygon.points
    return HNFiltration(ranks=tuple(ranks), degrees=tuple(points[r] for r in ranks), subspaces=tuple(subspaces))


def is_semistable(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> bool:
    """Whether all slopes are equal.

    Raises:
        UncertifiedPolygonError: If the polygon enumeration is not certified.
    """
    polygon = canonical_polygon(bundle, config=config)
    if not polygon.certified:
        raise UncertifiedPolygonError("is_semistable")
    return max(polygon.slopes) - min(polygon.slopes) <= SLOPE_TOLERANCE


# ----------------------------------------------------------------------------------------------------------------------
# Checks


def mu_i_duality_check(bundle: AdelicBundle, *, config: EnumerationConfig | None = None) -> CheckReport:
    """μ_i(E^v) = -μ_(n-i+1)(E) for hermitian bundles."""
    slopes = canonical_polygon(bundle, config=config).slopes
    dual_slopes = canonical_polygon(dual(bundle), config=config).slopes
    n = len(slopes)
    reports = [
        CheckReport.equality(f"mu_{i}_dual", dual_slopes[i - 1], -slopes[n - i], tolerance=SLOPE_TOLERANCE)
        for i in range(1, n + 1)
    ]
    return CheckReport.combine("mu_i_duality", reports)


def _quotient_slope(bundle: AdelicBundle, big: ImmutableMatrix, small: ImmutableMatrix) -> float:
    """Slope of span(big)/span(small), bases in lattice coordinates, computed by restriction then quotient."""
    piece, inclusion = sub_with_inclusion(bundle, bundle.lattice * big)
    if small.cols == 0:
        return slope(piece)
    coordinates = (inclusion.T * inclusion).inv() * inclusion.T * (bundle.lattice * small)
    return slope(quotient(piece, coordinates))


def minimax_check(bundle: AdelicBundle, i: int, *, config: EnumerationConfig | None = None) -> CheckReport:
    """μ_i = min over E2 of max over E1 ⊇ E2 of μ(E1/E2), dim E2 < i <= dim E1.

    E2 runs over the Harder-Narasimhan pieces and E1 over every polygon achiever containing it; each subquotient
    slope is evaluated on the actual restricted and quotient bundles.
    """
    polygon = canonical_polygon(bundle, config=config)
    filtration = hn_filtration(bundle, config=config)
    n = polygon.n
    lower_pieces = [ImmutableMatrix.zeros(n, 0)] + [
        _matrix(b, n) for r, b in zip(filtration.ranks, filtration.subspaces, strict=True) if r < i
    ]
    upper_pieces = [_matrix(b, n) for r in range(i, n + 1) for b in polygon.achievers[r]]
    minimax = math.inf
    for small in lower_pieces:
        best = max(
            _quotient_slope(bundle, big, small)
            for big in upper_pieces
            if small.cols == 0 or contains(big, small)
        )
        minimax = min(minimax, best)
    return CheckReport.equality(
        "minimax", minimax, polygon.slopes[i - 1], tolerance=SLOPE_TOLERANCE, instance={"i": i, "n": n}
    )


def tensor_line_shift_check(
    bundle: AdelicBundle, line: AdelicBundle, *, config: EnumerationConfig | None = None
) -> CheckReport:
    """P_(E⊗L)(r) = P_E(r) + r deg L."""
    base = canonical_polygon(bundle, config=config).vertices
    shifted = canonical_polygon(tensor_g2(bundle, line), config=config).vertices
    shift = degree(line)
    reports = [
        CheckReport.equality(f"P({r})", shifted[r], base[r] + r * shift, tolerance=SLOPE_TOLERANCE)
        for r in range(len(base))
    ]
    return CheckReport.combine("tensor_line_shift", reports, instance={"degree_line": shift})


def mu_min_gap_report(
    bundle: AdelicBundle, *, config: EnumerationConfig | None = None, solver: SolverConfig | None = None
) -> CheckReport:
    """Gap between the last slope μ_n and the minimal slope μ_min.

    Hermitian bundles assert equality. Otherwise the smallest gap compatible with the brackets is asserted below
    n log Δ, and the bracket of the gap is recorded.
    """
    n = bundle.rank
    if bundle.hermitian_flag:
        return CheckReport.equality(
            "mu_min_gap", mu_i(bundle, n, config=config), mu_min(bundle, config=config), tolerance=SLOPE_TOLERANCE
        )
    last_lo, last_hi = mu_bracket(bundle, config=config, solver=solver)[-1]
    dual_lo, dual_hi = mu_bracket(dual(bundle), config=config, solver=solver)[0]
    min_lo, min_hi = -dual_hi, -dual_lo
    gap_hi = max(abs(last_hi - min_lo), abs(min_hi - last_lo))
    gap_lo = max(0.0, last_lo - min_hi, min_lo - last_hi)
    log_delta = math.log(delta_upper(bundle.body, solver))
    return CheckReport.inequality(
        "mu_min_gap",
        gap_lo,
        n * log_delta,
        tolerance=SLOPE_TOLERANCE,
        instance={"gap_bracket": [gap_lo, gap_hi], "mu_n": [last_lo, last_hi], "mu_min": [min_lo, min_hi]},
    )


# ----------------------------------------------------------------------------------------------------------------------
# Export


def polygon_to_csv(polygon: CanonicalPolygon) -> str:
    """Vertex list as `rank,value` rows."""
    buffer = io.StringIO()
    buffer.write("rank,value\n")
    for r, value in enumerate(polygon.vertices):
        buffer.write(f"{r},{value:.12g}\n")
    return buffer.getvalue()


def polygon_to_svg(polygon: CanonicalPolygon, path: Path) -> Path:
    """Render the concave envelope and the sub-bundle points to an SVG file."""
    # Lazy imports to avoid matplotlib dependency
    from matplotlib.figure import Figure

    figure = Figure(figsize=(4, 3))
    ax = figure.add_subplot()
    ranks = list(range(polygon.n + 1))
    ax.plot(ranks, polygon.vertices, marker="o", label="P")
    ax.scatter(ranks, polygon.points, marker="x", color="gray", label="best sub-bundle")
    ax.set_xlabel("rank")
    ax.set_ylabel("P(rank)")
    ax.legend()
    figure.tight_layout()
    figure.savefig(path, format="svg")
    return path
