"""Tests Config."""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

import pytest
from adelic_slopes.bundle import AdelicBundle, body_bundle, hermitian_bundle, trivial_bundle
from adelic_slopes.config import CheckConfig, EnumerationConfig, OutputConfig, Settings, SolverConfig
from adelic_slopes.convexgeom import cross_polytope, cube

if TYPE_CHECKING:
    from pathlib import Path


@pytest.fixture()
def anyio_backend() -> str:
    """AnyIO backend set to asyncio."""
    return "asyncio"


@pytest.fixture()
def settings() -> Settings:
    """Settings fixture, independent of the environment."""
    return Settings(
        solver=SolverConfig(),
        enumeration=EnumerationConfig(),
        check=CheckConfig(mc_samples=20_000, seed=7),
        output=OutputConfig(),
    )


@pytest.fixture()
def trivial2() -> AdelicBundle:
    """Standard bundle (Z², |.|_2)."""
    return trivial_bundle(2)


@pytest.fixture()
def unstable2() -> AdelicBundle:
    """Z e1 ⊕ Z e2 with ‖e1‖ = 1/2 and ‖e2‖ = 1: slopes log 2 and 0."""
    return hermitian_bundle([[1, 0], [0, 1]], [["1/4", 0], [0, 1]])


@pytest.fixture()
def hexagonal2() -> AdelicBundle:
    """Hexagonal lattice of covolume √3/2 in the standard metric."""
    return hermitian_bundle([[1, 0], [0, 1]], [[1, "1/2"], ["1/2", 1]])


@pytest.fixture()
def square2() -> AdelicBundle:
    """Z² with the l^inf norm (unit ball the square [-1, 1]²)."""
    return body_bundle([[1, 0], [0, 1]], cube(2))


@pytest.fixture()
def diamond2() -> AdelicBundle:
    """Z² with the l^1 norm (unit ball the cross-polytope)."""
    return body_bundle([[1, 0], [0, 1]], cross_polytope(2))


@pytest.fixture()
def bundle_file(tmp_path: Path) -> Path:
    """Bundle document of (Z², G = diag(1/4, 1))."""
    path = tmp_path / "unstable.json"
    document = {
        "rank": 2,
        "finite": {"matrix": [["1", "0"], ["0", "1"]]},
        "arch": {"kind": "gram", "gram": [["1/4", "0"], ["0", "1"]]},
    }
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@pytest.fixture()
def square_file(tmp_path: Path) -> Path:
    """Bundle document of (Z², l^inf)."""
    path = tmp_path / "square.json"
    document = {"rank": 2, "finite": {"matrix": [["1", "0"], ["0", "1"]]}, "arch": {"kind": "lp", "p": "inf"}}
    path.write_text(json.dumps(document), encoding="utf-8")
    return path
