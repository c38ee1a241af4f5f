import numpy as np
import pytest
from hypothesis import given, strategies as st

from latthom.fitting import DegenerateData, fit_scaling, loglog_slope


@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_exact_power_law(p, c):
    x = np.array([2.0, 4.0, 8.0, 16.0])
    fit = fit_scaling(x, c * x ** p)
    assert fit.slope == pytest.approx(p, abs=1e-10)
    assert fit.intercept == pytest.approx(np.log(c), abs=1e-10)
    assert fit.residual <= 1e-10 and not fit.flagged


def test_log_correction_recovers_power():
    x = np.array([16.0, 64.0, 256.0, 1024.0, 4096.0])
    fit = fit_scaling(x, x ** -1.0 * np.log(x) ** 2, log_correction=True)
    assert fit.slope == pytest.approx(-1.0, abs=1e-9)
    assert fit.log_power == pytest.approx(2.0, abs=1e-9)


def test_flagging():
    x = [1.0, 2.0, 4.0]
    assert fit_scaling(x, [1.0, 0.5, 0.25], [0.1, 0.05, 0.06]).flagged
    assert not fit_scaling(x, [1.0, 0.5, 0.25], [0.1, 0.05, 0.05]).flagged


@pytest.mark.parametrize("x,y", [([1.0], [1.0]), ([1, 2], [1, 0]), ([1, 2], [1, -1]),
                                 ([2, 2], [1, 3]), ([1, 2], [1, np.nan])])
def test_degenerate(x, y):
    with pytest.raises(DegenerateData):
        fit_scaling(x, y)


def test_to_dict_and_window():
    fit = fit_scaling([1, 2, 4], [1, 0.5, 0.25])
    d = fit.to_dict()
    assert d["x"] == [1.0, 2.0, 4.0] and d["slope"] == pytest.approx(-1.0)
    assert fit.in_window(-1.1, -0.9) and not fit.in_window(-0.5, 0.5)
    assert loglog_slope([1, 10], [1, 100]) == pytest.approx(2.0)
