import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from latthom.environment import (SELF_DUAL_LAW, ConductivityLaw, StreamKey, law_moments,
                                 sample_environment, sample_values)
from latthom.lattice import TorusLattice

positive = st.floats(0.05, 20, allow_nan=False)


def test_law_validation():
    with pytest.raises(ValueError):
        ConductivityLaw.two_point(2, 1)
    with pytest.raises(ValueError):
        ConductivityLaw.uniform(0, 1)
    with pytest.raises(ValueError):
        ConductivityLaw.two_point(1, 2, 1.5)
    with pytest.raises(ValueError):
        ConductivityLaw("gamma", 1, 2)


@pytest.mark.parametrize("text", ["twopoint:0.25,4,0.5", "uniform:1,2", "loguniform:0.1,10"])
def test_parse_roundtrip(text):
    law = ConductivityLaw.parse(text)
    assert ConductivityLaw.parse(law.spec_string()) == law


@pytest.mark.parametrize("text", ["twopoint:1,2", "uniform:a,b", "normal:0,1", ""])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        ConductivityLaw.parse(text)


def test_moments_examples():
    assert law_moments(ConductivityLaw.two_point(1, 2, 0.5)) == (1.5, 0.25)
    assert law_moments(ConductivityLaw.uniform(1, 3)) == pytest.approx((2.0, 4 / 12))
    assert law_moments(ConductivityLaw.two_point(3, 5, 1.0)) == (3.0, 0.0)
    assert ConductivityLaw.two_point(3, 5, 1.0).deterministic


@given(positive, positive)
def test_log_uniform_moments_match_quadrature(x, y):
    a, b = min(x, y), max(x, y)
    if b / a < 1.001:
        return
    law = ConductivityLaw.log_uniform(a, b)
    dens = lambda t: 1 / (t * np.log(b / a))
    m1 = integrate.quad(lambda t: t * dens(t), a, b)[0]
    m2 = integrate.quad(lambda t: t * t * dens(t), a, b)[0]
    mean, var = law_moments(law)
    assert mean == pytest.approx(m1, rel=1e-9)
    assert var == pytest.approx(m2 - m1 * m1, rel=1e-6, abs=1e-12)


@pytest.mark.parametrize("law", [SELF_DUAL_LAW, ConductivityLaw.uniform(0.5, 2),
                                 ConductivityLaw.log_uniform(0.1, 10)])
def test_values_in_range(law):
    v = sample_values(law, 10_000, np.random.default_rng(0))
    assert v.min() >= law.alpha and v.max() <= law.beta


def test_degenerate_two_point():
    a = sample_environment(ConductivityLaw.two_point(0.7, 3, 1.0), TorusLattice(2, 8), StreamKey(1))
    assert np.all(a == 0.7)


def test_self_dual_law_is_invariant_under_inversion():
    law = SELF_DUAL_LAW
    assert law.alpha * law.beta == 1.0 and law.p == 0.5


def test_determinism_and_stream_separation():
    lat = TorusLattice(2, 16)
    key = StreamKey(7, 3, "environment")
    a1 = sample_environment(SELF_DUAL_LAW, lat, key)
    a2 = sample_environment(SELF_DUAL_LAW, lat, key)
    assert np.array_equal(a1, a2)
    other = [StreamKey(7, 4, "environment"), StreamKey(8, 3, "environment"), StreamKey(7, 3, "chi")]
    for k in other:
        assert not np.array_equal(sample_environment(SELF_DUAL_LAW, lat, k), a1)


def test_stream_does_not_depend_on_draw_order():
    lat = TorusLattice(2, 8)
    first = [sample_environment(SELF_DUAL_LAW, lat, StreamKey(1, r)) for r in range(4)]
    second = [sample_environment(SELF_DUAL_LAW, lat, StreamKey(1, r)) for r in reversed(range(4))]
    assert all(np.array_equal(x, y) for x, y in zip(first, reversed(second)))


def test_empirical_mean_clt():
    law = ConductivityLaw.two_point(1, 2, 0.5)
    a = sample_environment(law, TorusLattice(2, 64), StreamKey(2024))
    mean, var = law_moments(law)
    se = np.sqrt(var / a.size)
    assert abs(a.mean() - mean) <= 4 * se
