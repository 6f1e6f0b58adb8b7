import numpy as np
import pytest

from ssmlab.closedform import (
    ClosedFormQuery,
    profitability_root,
    series_coefficients,
    sm_relative_revenue,
    ssm_rates,
    ssm_relative_revenue,
)
from ssmlab.errors import DomainError
from ssmlab.revenue import relative_revenue


def test_sm_examples():
    assert sm_relative_revenue(1 / 3, 0.0) == pytest.approx(1 / 3, abs=1e-12)
    assert sm_relative_revenue(0.25, 0.5) == pytest.approx(0.25, abs=1e-12)


def test_ssm_examples():
    assert ssm_relative_revenue(0.5, 0.0) == pytest.approx(4 / 7, abs=1e-12)
    assert ssm_relative_revenue(0.26795, 0.5) == pytest.approx(0.26795, abs=1e-5)
    assert ssm_relative_revenue(0.3, 0.5) == pytest.approx(relative_revenue([0.3]).shares[0], abs=1e-10)


def test_small_alpha_leading_term():
    for g in (0.0, 0.3, 1.0):
        a = 1e-6
        assert sm_relative_revenue(a, g) / a == pytest.approx(g, abs=1e-5)
        assert ssm_relative_revenue(a, g) / a == pytest.approx(g, abs=1e-5)


def test_query_object():
    assert ClosedFormQuery("ssm", 0.3, 0.5).revenue() == ssm_relative_revenue(0.3, 0.5)
    with pytest.raises(DomainError):
        ClosedFormQuery("xx", 0.3, 0.5)
    with pytest.raises(DomainError):
        ClosedFormQuery("sm", 0.6, 0.5)
    with pytest.raises(DomainError):
        ClosedFormQuery("sm", 0.3, 1.5)


def test_sm_dominates_ssm_on_grid():
    for a in np.linspace(0.0025, 0.5, 200):
        for g in np.linspace(0, 1, 100):
            assert sm_relative_revenue(a, g) >= ssm_relative_revenue(a, g) - 1e-15


def test_quartic_gap():
    for g in (0.0, 0.5, 1.0):
        ratios = [(sm_relative_revenue(a, g) - ssm_relative_revenue(a, g)) / a**4 for a in (1e-2, 1e-3, 1e-4)]
        assert max(abs(r) for r in ratios) < 10
        # the normalised gap settles to the alpha^4 coefficient difference, 1
        assert ratios[1] == pytest.approx(1.0, abs=0.01)


@pytest.mark.parametrize("g", [0.0, 0.25, 0.5, 1.0])
def test_ssm_series_exact_expansion(g):
    got = series_coefficients("ssm", g)
    want = [g, 4 - 3 * g, 4 * g - 5, 6 - 5 * g, 7 * g - 9]
    np.testing.assert_allclose(got, want, atol=1e-3)


@pytest.mark.xfail(strict=True, reason="stated alpha^4 term -(6-5g) has the opposite sign of the closed form's expansion")
@pytest.mark.parametrize("g", [0.0, 0.5, 1.0])
def test_ssm_series_stated_coefficients(g):
    got = series_coefficients("ssm", g)
    want = [g, 4 - 3 * g, 4 * g - 5, -(6 - 5 * g), 7 * g - 9]
    np.testing.assert_allclose(got, want, atol=1e-3)


@pytest.mark.parametrize("g", [0.0, 0.5, 1.0])
def test_sm_series(g):
    got = series_coefficients("sm", g)
    want = [g, 4 - 3 * g, 4 * g - 5, 7 - 5 * g, 6 * g - 7]
    np.testing.assert_allclose(got, want, atol=1e-3)


def test_series_matches_least_squares_fit():
    # independent check of the contour estimate on the well-conditioned low orders
    a = np.linspace(1e-4, 5e-3, 200)
    y = np.array([ssm_relative_revenue(x, 0.3) for x in a])
    coef = np.polynomial.polynomial.polyfit(a, y, 6)[1:4]
    np.testing.assert_allclose(coef, series_coefficients("ssm", 0.3)[:3], atol=1e-3)


def test_ratio_identity():
    for a in np.linspace(0.01, 0.5, 50):
        for g in np.linspace(0, 1, 11):
            r, o = ssm_rates(a, g)
            assert ssm_relative_revenue(a, g) == pytest.approx(r / (r + o), abs=1e-12)


@pytest.mark.parametrize(
    "strategy, gamma, expected",
    [("sm", 0.0, 1 / 3), ("sm", 0.25, 0.30), ("sm", 0.5, 0.25), ("ssm", 0.25, 1 / 3), ("ssm", 0.5, 0.26795)],
)
def test_roots(strategy, gamma, expected):
    assert profitability_root(strategy, gamma) == pytest.approx(expected, abs=1e-3)


def test_ssm_root_at_zero_gamma_is_exact_quadratic_root():
    # R(a, 0) = a reduces to a^2 - 3a + 1 = 0 on (0, 0.5]
    assert profitability_root("ssm", 0.0) == pytest.approx((3 - 5**0.5) / 2, abs=1e-6)


def test_root_sentinels():
    assert profitability_root("sm", 1.0) == 0.0
    with pytest.raises(DomainError):
        profitability_root("sm", -0.1)
