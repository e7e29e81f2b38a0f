"""Test bundle documents."""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import TYPE_CHECKING

import pytest
from adelic_slopes.bundle import AdelicBundle, body_bundle, degree, direct_sum_p, line_bundle
from adelic_slopes.convexgeom import HPoly, LpBall, VPoly, cross_polytope, cube
from adelic_slopes.errors import ParseError, UnsupportedMetricError
from adelic_slopes.schemas import BundleDocument, dump_bundle, load_bundle, parse_bundle

if TYPE_CHECKING:
    from pathlib import Path


def test_load_bundle(bundle_file: Path, square_file: Path) -> None:
    """Test loading hermitian and l^p documents."""
    # Act
    unstable = load_bundle(bundle_file)
    square = load_bundle(square_file)

    # Assert
    assert unstable.hermitian_flag
    assert degree(unstable) == pytest.approx(math.log(2))
    assert isinstance(square.body, LpBall)
    assert math.isinf(square.body.p)
    assert degree(square) == pytest.approx(math.log(4 / math.pi))


def test_parse_polytopes() -> None:
    """Test H- and V-polytope documents."""
    # Arrange
    hpoly = {
        "rank": 1,
        "finite": {"matrix": [["2"]]},
        "arch": {"kind": "hpoly", "normals": [["1"], ["-1"]], "offsets": ["1/2", "1/2"]},
    }
    vpoly = {
        "rank": 2,
        "finite": {"matrix": [[1, 0], [0, 1]]},
        "arch": {"kind": "vpoly", "vertices": [[1, 0], [-1, 0], [0, 1], [0, -1]]},
    }

    # Act
    line = parse_bundle(json.dumps(hpoly))
    diamond = parse_bundle(json.dumps(vpoly))

    # Assert
    assert isinstance(line.body, HPoly)
    assert degree(line) == pytest.approx(-math.log(2) + math.log(1) - math.log(2))
    assert isinstance(diamond.body, VPoly)
    assert degree(diamond) == pytest.approx(math.log(2 / math.pi))


@pytest.mark.parametrize(
    ("document", "message"),
    [
        ("{", "Cannot parse"),
        ('{"rank": 2, "finite": {"matrix": [["1"]]}, "arch": {"kind": "gram", "gram": [["1"]]}}', "finite.matrix"),
        ('{"rank": 1, "finite": {"matrix": [["0.5"]]}, "arch": {"kind": "gram", "gram": [["1"]]}}', "num/den"),
        ('{"rank": 1, "finite": {"matrix": [["0"]]}, "arch": {"kind": "gram", "gram": [["1"]]}}', "singular"),
        ('{"rank": 1, "finite": {"matrix": [["1"]]}, "arch": {"kind": "disc"}}', "arch"),
        ('{"rank": 1, "finite": {"matrix": [["1"]]}, "arch": {"kind": "gram", "gram": [["-1"]]}}', "positive"),
        ('{"rank": 2, "finite": {"matrix": [["1", "0"], ["0", "1"]]}, "arch": {"kind": "lp", "p": "1/2"}}', "p="),
        ('{"rank": 1, "finite": {"matrix": [["1"]]}, "arch": {"kind": "gram", "gram": [["1"]]}, "x": 1}', "x"),
    ],
)
def test_parse_errors(document: str, message: str) -> None:
    """Test malformed documents raise a parse error."""
    # Act & Assert
    with pytest.raises(ParseError, match="Cannot parse") as excinfo:
        parse_bundle(document)
    assert message in str(excinfo.value)


def test_load_missing_file(tmp_path: Path) -> None:
    """Test unreadable files raise a parse error."""
    # Act & Assert
    with pytest.raises(ParseError, match="missing.json"):
        load_bundle(tmp_path / "missing.json")


@pytest.mark.parametrize(
    "bundle",
    [
        line_bundle("2/3", "1/5"),
        body_bundle([[1, 1], [0, 2]], cross_polytope(2)),
        body_bundle([[1, 0], [0, 1]], LpBall(p=3, n=2, radius=Fraction(1, 2))),
        direct_sum_p(body_bundle([[1]], cube(1)), body_bundle([[2]], cube(1)), math.inf),
    ],
)
def test_dump_and_parse(bundle: AdelicBundle) -> None:
    """Test documents describe the bundle they were written from."""
    # Act
    text = dump_bundle(bundle)
    parsed = parse_bundle(text)

    # Assert
    assert degree(parsed) == pytest.approx(degree(bundle))
    assert parsed.finite == bundle.finite


def test_dump_writes_rationals_as_strings() -> None:
    """Test rationals are written as num/den strings."""
    # Act
    document = json.loads(dump_bundle(line_bundle("2/3", "1/5")))

    # Assert
    assert document == {
        "rank": 1,
        "finite": {"matrix": [["2/3"]]},
        "arch": {"kind": "gram", "gram": [["1/5"]]},
    }


def test_dump_refuses_bodies_without_exact_form() -> None:
    """Test p-sums without a polytope or ellipsoid form cannot be written."""
    # Arrange
    bundle = direct_sum_p(line_bundle(1), line_bundle(1), 3)

    # Act & Assert
    with pytest.raises(UnsupportedMetricError):
        BundleDocument.from_bundle(bundle)
