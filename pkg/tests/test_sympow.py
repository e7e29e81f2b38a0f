"""Test multinomial means and symmetric powers."""

import math

import pytest
from adelic_slopes.bundle import AdelicBundle, trivial_bundle
from adelic_slopes.errors import DomainError, SingularMatrixError, SizeGuardError, UnsupportedMetricError
from adelic_slopes.sympow import (
    det_sympow_identity_check,
    gamma_asymptotic_check,
    gamma_nl,
    harmonic,
    inverse_norm_bound_check,
    sections_slope_check,
    siegel_check,
    sympow_mumax_check,
    sympow_slope_check,
)


@pytest.mark.parametrize(
    ("n", "ell", "expected"),
    [(2, 2, math.log(2) / 3), (1, 5, 0.0), (3, 0, 0.0), (2, 1, 0.0), (3, 2, math.log(2) / 2)],
)
def test_gamma_nl(n: int, ell: int, expected: float) -> None:
    """Test log γ_(n,ℓ) on small cases."""
    # Act
    value = gamma_nl(n, ell)

    # Assert
    assert value.log_value == pytest.approx(expected, abs=1e-15)
    assert value.monomials == math.comb(ell + n - 1, n - 1)


def test_gamma_nl_large_ell_uses_gammaln() -> None:
    """Test the factorials past the exact range stay accurate."""
    # Act
    value = gamma_nl(2, 40)

    # Assert
    exact = sum(math.log(math.comb(40, k)) for k in range(41)) / 41
    assert value.log_value == pytest.approx(exact, rel=1e-12)


def test_gamma_nl_errors() -> None:
    """Test the domain and size guards."""
    # Act & Assert
    with pytest.raises(DomainError):
        gamma_nl(0, 1)
    with pytest.raises(SizeGuardError):
        gamma_nl(50, 50)


def test_gamma_asymptotic() -> None:
    """Test log γ_(2,ℓ)/ℓ approaches H_2 - 1."""
    # Act
    report = gamma_asymptotic_check(2)

    # Assert
    assert harmonic(3) == pytest.approx(11 / 6)
    assert report.passed


def test_det_sympow_identity() -> None:
    """Test det S^ℓ(M) = (det M)^binom(ℓ+n-1, n)."""
    # Act & Assert
    assert det_sympow_identity_check([[2, 1], [0, 3]], 3).passed
    assert det_sympow_identity_check([["1/2", 1, 0], [0, 1, 1], [1, 0, 2]], 2).passed
    with pytest.raises(SingularMatrixError):
        det_sympow_identity_check([[1, 2], [2, 4]], 2)


def test_inverse_norm_bound() -> None:
    """Test the inverse norm bound at every prime and with Hilbert-Schmidt norms."""
    # Act
    report = inverse_norm_bound_check([[2, 1], [0, 3]])

    # Assert
    assert report.passed
    assert report.instance["primes"] == [2, 3]


def test_slopes_of_symmetric_powers(trivial2: AdelicBundle, unstable2: AdelicBundle) -> None:
    """Test the slope formulas of S^ℓ E and of the sections bundle."""
    # Act & Assert
    assert sympow_slope_check(unstable2, 2).passed
    assert sympow_slope_check(trivial_bundle(3), 3).passed
    assert sections_slope_check(trivial2, 3).passed
    assert sections_slope_check(unstable2, 2).passed


def test_sympow_mumax(unstable2: AdelicBundle, hexagonal2: AdelicBundle) -> None:
    """Test 0 <= μ_max(S^ℓ E) - ℓ μ_max(E) <= 2ℓ n log n."""
    # Act
    report = sympow_mumax_check(unstable2, 2)

    # Assert
    assert report.passed
    assert report.instance["exact"]
    assert report.instance["mu_max"] == pytest.approx([2 * math.log(2)] * 2)
    assert sympow_mumax_check(hexagonal2, 2).passed


def test_siegel(unstable2: AdelicBundle, hexagonal2: AdelicBundle, square2: AdelicBundle) -> None:
    """Test the absolute Siegel lemma."""
    # Act & Assert
    assert siegel_check(unstable2).passed
    assert siegel_check(hexagonal2).passed
    with pytest.raises(UnsupportedMetricError):
        siegel_check(square2)
