import math

import numpy as np
import pytest

from hyponorm.errors import QuadratureNonConvergence
from hyponorm.quadrature import adaptive_gk15, gk15, simpson_richardson


@pytest.mark.parametrize("deg", range(0, 23))
def test_gk15_exact_for_polynomials(deg):
    val, _ = gk15(lambda x: x**deg, 0.0, 1.0)
    assert val == pytest.approx(1.0 / (deg + 1), rel=1e-14, abs=1e-15)


def test_gk15_error_estimate_small_for_smooth():
    val, err = gk15(np.exp, 0.0, 1.0)
    assert abs(val - (math.e - 1)) < 1e-15 and err < 1e-10


@pytest.mark.parametrize("beta", [-0.9, -0.5, 0.3])
def test_adaptive_endpoint_singularity(beta):
    # singularity at the left end, where floating abscissae never land on it
    val, err = adaptive_gk15(lambda x: x**beta, 0.0, 1.0, abs_tol=1e-12, rel_tol=1e-12)
    assert val == pytest.approx(1.0 / (beta + 1.0), rel=1e-9)


def test_adaptive_budget_exceeded():
    with pytest.raises(QuadratureNonConvergence):
        adaptive_gk15(lambda x: np.sin(1.0 / x), 1e-9, 1.0, abs_tol=1e-15, rel_tol=0, max_panels=20)


def test_simpson_richardson_polynomial():
    x = np.linspace(0.0, 1.0, 101)
    val, err = simpson_richardson(x, x**3)
    assert float(val) == pytest.approx(0.25, abs=1e-14)


def test_simpson_richardson_converges():
    x = np.linspace(0.0, 1.0, 401)
    val, err = simpson_richardson(x, np.exp(x))
    assert abs(float(val) - (math.e - 1)) < 1e-10
