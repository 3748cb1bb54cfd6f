import math

import numpy as np
import pytest
import scipy.special as sc
from scipy.integrate import quad

from cfiot.special import ei, exp1, rayleigh_rate, scaled_exp1


@pytest.mark.parametrize("x", np.concatenate([np.logspace(-8, 2.5, 60), [1.0, 1.0 + 1e-12]]))
def test_exp1_against_scipy(x):
    assert exp1(x) == pytest.approx(sc.exp1(x), rel=1e-12)
    assert scaled_exp1(x) == pytest.approx(sc.exp1(x) * math.exp(x), rel=1e-12)


def test_scaled_exp1_large_arguments():
    # e^x E1(x) ~ 1/x (1 - 1/x + 2/x^2 ...)
    for x in (1e3, 1e6):
        assert scaled_exp1(x) == pytest.approx(1 / x * (1 - 1 / x + 2 / x**2), rel=1e-8)


def test_ei_negative_only():
    np.testing.assert_allclose(ei([-0.5, -2.0]), sc.expi([-0.5, -2.0]), rtol=1e-12)
    with pytest.raises(ValueError):
        ei(0.5)


def test_rate_at_unit_snr():
    assert rayleigh_rate(1.0) == pytest.approx(-math.log2(math.e) * math.e * sc.expi(-1.0))
    assert rayleigh_rate(1.0) == pytest.approx(0.8604, abs=1e-3)


def _quad_rate(w):
    f = lambda x: math.log2(1 + w * x) * math.exp(-x)
    return quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)[0]


@pytest.mark.parametrize("w", np.logspace(-3, 3, 25))
def test_rate_against_quadrature(w):
    assert rayleigh_rate(w) == pytest.approx(_quad_rate(w), abs=1e-4)


def test_rate_vanishes_without_signal():
    assert rayleigh_rate(0.0) == 0.0
    assert rayleigh_rate(1e-9) < 1e-8
    with pytest.raises(ValueError):
        rayleigh_rate(-1.0)
