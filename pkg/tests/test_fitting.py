import numpy as np
import pytest
from hypothesis import given, strategies as st

from flushlab.fitting import FitError, fit_power_law


def test_pure_power_exact():
    x = np.geomspace(1e-3, 1.0, 12)
    fit = fit_power_law(x, x**-0.75)
    assert fit.exponent == pytest.approx(-0.75, abs=1e-10)


def test_log_corrected_exact():
    t = np.geomspace(5.0, 1e6, 40)
    fit = fit_power_law(t, (np.log(2 + t) / (2 + t)) ** 2.25, "log-corrected")
    assert fit.exponent == pytest.approx(2.25, abs=1e-10)


def test_filters_non_positive_and_counts():
    x = np.arange(1.0, 10.0)
    y = x**2
    y[[1, 4]] = [0.0, -3.0]
    fit = fit_power_law(x, y)
    assert fit.n_dropped == 2 and fit.n_used == 7
    assert fit.exponent == pytest.approx(2.0)


def test_too_few_points():
    with pytest.raises(FitError):
        fit_power_law([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])


def test_noisy_calibration():
    # Monte-Carlo: 5% multiplicative noise keeps the exponent within 0.1
    rng = np.random.default_rng(7)
    x = np.geomspace(1.0, 1e3, 30)
    errs = []
    for _ in range(200):
        y = x**-1.3 * (1.0 + 0.05 * rng.standard_normal(x.size))
        errs.append(abs(fit_power_law(x, y).exponent + 1.3))
    assert max(errs) < 0.1


@given(p=st.floats(-3.0, 3.0), c=st.floats(0.1, 10.0))
def test_recovers_exponent_and_prefactor(p, c):
    x = np.geomspace(0.5, 50.0, 8)
    fit = fit_power_law(x, c * x**p)
    assert fit.exponent == pytest.approx(p, abs=1e-9)
    assert fit.prefactor == pytest.approx(c, rel=1e-9)
