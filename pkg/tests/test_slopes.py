"""Test the canonical polygon, slopes and the Harder-Narasimhan filtration."""

from __future__ import annotations

import math
from fractions import Fraction
from typing import TYPE_CHECKING

import numpy as np
import pytest
from adelic_slopes.bundle import AdelicBundle, body_bundle, hermitian_bundle, line_bundle, trivial_bundle
from adelic_slopes.config import EnumerationConfig
from adelic_slopes.convexgeom import HPoly, symmetric_vpoly
from adelic_slopes.errors import RankGuardError, UnsupportedMetricError
from adelic_slopes.lattice import primitive, same_subspace
from adelic_slopes.slopes import (
    canonical_polygon,
    hn_filtration,
    is_semistable,
    minimax_check,
    mu_bracket,
    mu_i,
    mu_i_duality_check,
    mu_max,
    mu_min,
    mu_min_gap_report,
    polygon_envelope,
    polygon_to_csv,
    polygon_to_svg,
    slope,
    slope_or_empty,
    tensor_line_shift_check,
)
from adelic_slopes.verify import random_gram
from sympy import ImmutableMatrix

if TYPE_CHECKING:
    from pathlib import Path

    from numpy.typing import NDArray

LOG2 = math.log(2)


def _shortest_norms(
    gram: NDArray[np.int64], inverse: NDArray[np.float64], radius: int
) -> tuple[NDArray[np.int64], NDArray[np.int64]]:
    """Nonzero integral vectors v with 0 < vᵀ Γ v <= radius, and their norms."""
    bounds = [math.isqrt(int(radius * inverse[i, i])) + 1 for i in range(len(gram))]
    axes = np.meshgrid(*(np.arange(-b, b + 1) for b in bounds), indexing="ij")
    grid = np.stack([axis.ravel() for axis in axes], axis=1)
    values = np.einsum("ij,jk,ik->i", grid, gram, grid)
    keep = (values > 0) & (values <= radius)
    return grid[keep], values[keep]


def _sublattice_norms(rows: list[list[int]]) -> tuple[Fraction, ...]:
    """Least Gram determinant of the rank-r sublattices of (Z^n, Γ), r = 0..n, by exhaustive search in n <= 3."""
    gram = np.array(rows, dtype=np.int64)
    n = len(rows)
    inverse = np.linalg.inv(gram.astype(float))
    _, values = _shortest_norms(gram, inverse, int(gram.diagonal().min()))
    first = int(values.min())
    norms = [Fraction(1), Fraction(first)]
    if n == 3:
        # a reduced basis b1, b2 of the best plane has |b1|^4 <= 4D/3 and |b2|^2 <= 4D / (3 |b1|^2)
        plane = min(rows[i][i] * rows[j][j] - rows[i][j] ** 2 for i in range(3) for j in range(i + 1, 3))
        short, short_values = _shortest_norms(gram, inverse, math.isqrt(4 * plane // 3 + 1) + 1)
        long, long_values = _shortest_norms(gram, inverse, 4 * plane // (3 * first) + 1)
        cross = short @ gram @ long.T
        dets = np.outer(short_values, long_values) - cross**2
        norms.append(Fraction(int(dets[dets > 0].min())))
    norms.append(Fraction(round(np.linalg.det(gram.astype(float)))))
    return tuple(norms)


def test_slope(unstable2: AdelicBundle) -> None:
    """Test the slope and the empty convention."""
    # Act & Assert
    assert slope(unstable2) == pytest.approx(LOG2 / 2)
    assert slope_or_empty(None) == -math.inf


def test_polygon_of_unstable_bundle(unstable2: AdelicBundle) -> None:
    """Test the polygon of Z e1 ⊕ Z e2 with ‖e1‖ = 1/2."""
    # Act
    polygon = canonical_polygon(unstable2)

    # Assert
    assert polygon.certified
    assert polygon.norms == (1, Fraction(1, 4), Fraction(1, 4))
    assert polygon.vertex_ranks == (0, 1, 2)
    assert polygon.vertices == pytest.approx((0.0, LOG2, LOG2))
    assert polygon.slopes == pytest.approx((LOG2, 0.0))
    assert len(polygon.achievers[1]) == 1
    assert primitive(polygon.achievers[1][0][0]) == (1, 0)


def test_polygon_of_hexagonal_lattice(hexagonal2: AdelicBundle) -> None:
    """Test the hexagonal lattice is semistable with three shortest lines."""
    # Act
    polygon = canonical_polygon(hexagonal2)

    # Assert
    assert polygon.vertex_ranks == (0, 2)
    assert len(polygon.achievers[1]) == 3
    assert polygon.slopes == pytest.approx((-0.25 * math.log(0.75),) * 2)
    assert is_semistable(hexagonal2)
    assert hn_filtration(hexagonal2).ranks == (2,)


def test_polygon_refuses_bodies_and_large_ranks(square2: AdelicBundle) -> None:
    """Test the polygon needs a hermitian bundle within the rank guard."""
    # Act & Assert
    with pytest.raises(UnsupportedMetricError):
        canonical_polygon(square2)
    with pytest.raises(RankGuardError):
        canonical_polygon(trivial_bundle(3), config=EnumerationConfig(rank_guard=2))


def test_mu(unstable2: AdelicBundle) -> None:
    """Test individual slopes and their extremes."""
    # Act & Assert
    assert mu_i(unstable2, 1) == pytest.approx(LOG2)
    assert mu_i(unstable2, 2) == pytest.approx(0.0)
    assert mu_max(unstable2) == pytest.approx(LOG2)
    assert mu_min(unstable2) == pytest.approx(0.0)
    with pytest.raises(IndexError):
        mu_i(unstable2, 3)


def test_hn_filtration(unstable2: AdelicBundle) -> None:
    """Test the filtration Z e1 ⊂ Z²."""
    # Act
    filtration = hn_filtration(unstable2)

    # Assert
    assert filtration.ranks == (1, 2)
    assert filtration.degrees == pytest.approx((LOG2, LOG2))
    assert same_subspace(filtration.ambient(unstable2)[0], ImmutableMatrix([[1], [0]]))
    assert not is_semistable(unstable2)


def test_semistable_trivial_bundle() -> None:
    """Test the standard bundle of rank 3 is semistable of slope 0."""
    # Act
    polygon = canonical_polygon(trivial_bundle(3))

    # Assert
    assert polygon.vertex_ranks == (0, 3)
    assert polygon.vertices == pytest.approx((0.0, 0.0, 0.0, 0.0))
    assert is_semistable(trivial_bundle(3))


def test_polygon_envelope_of_square(square2: AdelicBundle) -> None:
    """Test the certified envelope of the l^inf bundle."""
    # Act
    envelope = polygon_envelope(square2)
    brackets = mu_bracket(square2)

    # Assert
    assert envelope[0] == (0.0, 0.0)
    assert envelope[2] == pytest.approx((math.log(4 / math.pi),) * 2)
    assert envelope[1] == pytest.approx((0.0, 0.5 * LOG2))
    assert len(brackets) == 2
    assert all(lo <= hi for lo, hi in brackets)
    assert brackets[0][0] <= 0.0 <= brackets[0][1]


def test_polygon_envelope_of_hermitian_bundle(unstable2: AdelicBundle) -> None:
    """Test hermitian envelopes are exact."""
    # Act
    brackets = mu_bracket(unstable2)

    # Assert
    assert brackets == pytest.approx([(LOG2, LOG2), (0.0, 0.0)])


def test_envelope_of_skewed_lattice() -> None:
    """Test the envelope keeps the degree of a lattice vector on the boundary of the body."""
    # Arrange
    body = symmetric_vpoly([[3, 3], [3, 2], [2, 1], [1, 0]])
    bundle = body_bundle([[-3, 0], [-3, 5]], body)

    # Act
    envelope = polygon_envelope(bundle)
    brackets = mu_bracket(bundle)

    # Assert
    # (-3, -3) is a lattice vector and a vertex of the body
    assert envelope[1][1] >= -1e-9
    assert brackets[0][1] >= -1e-9
    assert all(lo <= hi + 1e-9 for lo, hi in envelope)


def test_envelope_of_segment() -> None:
    """Test the rank-1 envelope of a segment with redundant facets."""
    # Arrange
    segment = HPoly(normals=((1,), (-1,), (Fraction(1, 5),), (Fraction(-1, 5),)), offsets=(1, 1, 1, 1))

    # Act
    brackets = mu_bracket(body_bundle([[1]], segment))

    # Assert
    assert len(brackets) == 1
    assert brackets[0] == pytest.approx((0.0, 0.0), abs=1e-6)


@pytest.mark.parametrize(("seed", "n"), [(seed, 2 + seed % 2) for seed in range(12)])
def test_polygon_matches_sublattice_search(seed: int, n: int) -> None:
    """Test the polygon norms against an exhaustive search over sublattices of a random Gram form."""
    # Arrange
    gram = random_gram(np.random.default_rng(seed), n)

    # Act
    polygon = canonical_polygon(hermitian_bundle(ImmutableMatrix.eye(n), gram))

    # Assert
    assert polygon.certified
    assert polygon.norms == _sublattice_norms(gram)


def test_checks(unstable2: AdelicBundle, hexagonal2: AdelicBundle) -> None:
    """Test duality, minimax and line shifts of the polygon."""
    # Act & Assert
    assert mu_i_duality_check(unstable2).passed
    assert mu_i_duality_check(hexagonal2).passed
    assert minimax_check(unstable2, 1).passed
    assert minimax_check(unstable2, 2).passed
    assert tensor_line_shift_check(unstable2, line_bundle(2)).passed
    assert tensor_line_shift_check(hexagonal2, line_bundle(1, "1/9")).passed


def test_mu_min_gap(unstable2: AdelicBundle, square2: AdelicBundle) -> None:
    """Test μ_n against μ_min for hermitian and body bundles."""
    # Act
    hermitian = mu_min_gap_report(unstable2)
    body = mu_min_gap_report(square2)

    # Assert
    assert hermitian.passed
    assert body.passed
    assert body.instance["gap_bracket"][0] == pytest.approx(0.0)


def test_polygon_to_csv(unstable2: AdelicBundle) -> None:
    """Test the CSV export of the vertices."""
    # Act
    text = polygon_to_csv(canonical_polygon(unstable2))

    # Assert
    assert text == "rank,value\n0,0\n1,0.69314718056\n2,0.69314718056\n"


def test_polygon_to_svg(unstable2: AdelicBundle, tmp_path: Path) -> None:
    """Test the SVG rendering."""
    # Arrange
    pytest.importorskip("matplotlib")
    path = tmp_path / "polygon.svg"

    # Act
    result = polygon_to_svg(canonical_polygon(unstable2), path)

    # Assert
    assert result == path
    assert "<svg" in path.read_text(encoding="utf-8")
