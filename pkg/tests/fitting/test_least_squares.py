import numpy as np
import pytest

from src.errors import InsufficientDataError
from src.fitting.least_squares import least_squares
from src.fitting.polynomial import fit_quadratic


def line(x, p):
    return p[0] + p[1] * x


def quadratic(x, p):
    return p[0] + p[1] * x + p[2] * x**2


def test_exact_linear_data():
    x = np.linspace(-3, 3, 12)
    result = least_squares(line, [0.0, 0.0], x, 1.5 - 0.25 * x, names=("a", "b"))
    assert result.converged
    assert result.value("a") == pytest.approx(1.5, abs=1e-12)
    assert result.value("b") == pytest.approx(-0.25, abs=1e-12)
    assert result.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_quadratic_recovered():
    x = np.arange(10, dtype=float)
    result = least_squares(quadratic, [0.0, 0.0, 0.0], x, 2 * x**2 + 3 * x + 1)
    np.testing.assert_allclose(result.params, [1.0, 3.0, 2.0], atol=1e-9)


def test_covariance_is_symmetric_with_consistent_sigma():
    rng = np.random.default_rng(3)
    x = np.linspace(0, 1, 40)
    y = 1.0 + 2.0 * x + rng.normal(0, 0.1, x.size)
    result = least_squares(line, [0.0, 0.0], x, y)
    np.testing.assert_allclose(result.covariance, result.covariance.T)
    assert np.all(np.linalg.eigvalsh(result.covariance) >= -1e-15)
    np.testing.assert_allclose(result.sigma, np.sqrt(np.diag(result.covariance)))


def test_singular_jacobian_is_flagged():
    x = np.linspace(0, 1, 10)

    def degenerate(x, p):
        return (p[0] + p[1]) * x

    result = least_squares(degenerate, [0.5, 0.5], x, 2 * x)
    assert not result.converged
    assert "rank" in result.message


def test_non_finite_model_is_flagged():
    x = np.linspace(0, 1, 10)
    result = least_squares(lambda x, p: p[0] / 0.0 * x, [1.0], x, x)
    assert not result.converged


def test_too_few_points():
    with pytest.raises(InsufficientDataError):
        least_squares(quadratic, [0.0, 0.0, 0.0], np.arange(2.0), np.arange(2.0))


def test_circular_residuals_ignore_whole_turns():
    x = np.linspace(0, 1, 20)
    y = 0.3 + 0.7 * x
    y[::3] += 2 * np.pi
    result = least_squares(line, [0.25, 0.75], x, y, circular=True)
    np.testing.assert_allclose(result.params, [0.3, 0.7], atol=1e-9)


def test_quadratic_closed_form():
    x = np.linspace(500, 8000, 25)
    fit = fit_quadratic(x, 1024 + 15.3 * x + 1e-4 * x**2)
    assert fit.c0 == pytest.approx(1024, rel=1e-6)
    assert fit.c1 == pytest.approx(15.3, rel=1e-6)
    assert fit.c2 == pytest.approx(1e-4, rel=1e-6)


def test_quadratic_collinear_data():
    x = np.linspace(500, 8000, 10)
    fit = fit_quadratic(x, 7.0 + 2.0 * x)
    assert abs(fit.c2) < 1e-12
    assert fit.c1 == pytest.approx(2.0, rel=1e-10)


def test_quadratic_weights_follow_precise_points():
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    y = x**2
    y[-1] += 5.0
    unweighted = fit_quadratic(x, y)
    weighted = fit_quadratic(x, y, weights=np.array([1e6, 1e6, 1e6, 1e6, 1e-6]))
    assert abs(weighted.c2 - 1.0) < abs(unweighted.c2 - 1.0)


def test_quadratic_needs_distinct_points():
    with pytest.raises(InsufficientDataError):
        fit_quadratic(np.array([1.0, 1.0, 2.0, 2.0]), np.array([1.0, 1.0, 2.0, 2.0]))
