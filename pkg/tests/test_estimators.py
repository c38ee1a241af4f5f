import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latthom.corrector import solve_modified_corrector
from latthom.environment import ConductivityLaw
from latthom.estimators import (EstimateRecord, IdentityReport, dyadic_difference, energy_density,
                                energy_identity_check, estimate_AL_periodic, estimate_AT,
                                estimate_ATL, polarization_matrix, spectral_cross_check,
                                variational_identity_check)

from conftest import random_env


def test_constant_environment_values():
    a = np.full((8, 8, 2), 2.0)
    assert estimate_AT(a, 16, [1.0, 0.0]).value == 2.0
    assert estimate_ATL(a, 16, 2, [1.0, 0.0]).value == pytest.approx(2.0, rel=1e-14)
    assert estimate_AL_periodic(a, [0.0, 1.0]).value == 2.0


def test_flat_mask_over_torus_equals_torus_average():
    a = random_env(2, 16, seed=1)
    sol = solve_modified_corrector(a, 8, [1.0, 0.0])
    at = estimate_AT(a, 8, [1.0, 0.0], sol=sol).value
    atl = estimate_ATL(a, 8, 8, [1.0, 0.0], profile="flat", sol=sol).value
    assert atl == pytest.approx(at, rel=1e-13)


@given(st.integers(0, 1000))
@settings(max_examples=8, deadline=None)
def test_estimates_lie_between_bounds(seed):
    law = ConductivityLaw.two_point(0.5, 3.0, 0.4)
    a = random_env(2, 12, seed=seed, law=law)
    for T in (2.0, 32.0, np.inf):
        v = estimate_AT(a, T, [1.0, 0.0]).value if np.isfinite(T) else \
            estimate_AL_periodic(a, [1.0, 0.0]).value
        # between the harmonic-type lower bound alpha and the arithmetic mean
        assert law.alpha - 1e-12 <= v <= a[..., 0].mean() + 1e-12


def test_record_json_roundtrip():
    a = random_env(2, 8, seed=2)
    rec = estimate_AL_periodic(a, [1.0, 0.0], seed=5)
    data = json.loads(rec.to_json())
    assert data["kind"] == "A_Lhash" and data["T"] is None and data["L"] == 4 and data["seed"] == 5
    rec_T = estimate_AT(a, 4, [1.0, 0.0])
    assert json.loads(rec_T.to_json())["zero_order"] == pytest.approx(rec_T.zero_order)
    with pytest.raises(ValueError):
        EstimateRecord("bogus", 1.0, None, None, (1.0,), None, 1, 4)


def test_periodic_needs_even_side():
    with pytest.raises(ValueError):
        estimate_AL_periodic(np.ones((5, 5, 2)), [1.0, 0.0])


def test_energy_density_is_nonnegative():
    a = random_env(3, 6, seed=3)
    phi = np.random.default_rng(0).standard_normal((6, 6, 6))
    assert energy_density(a, [0.0, 0.0, 1.0], phi).min() >= 0


def test_polarization_matrix_symmetric_and_isotropic_for_self_dual_law():
    a = random_env(2, 16, seed=4)
    M, asym = polarization_matrix(a, 16)
    assert asym <= 1e-8
    assert np.all(np.linalg.eigvalsh(M) > 0)


@pytest.mark.parametrize("d,n", [(2, 16), (3, 8)])
def test_exact_identities(d, n):
    a = random_env(d, n, seed=5)
    xi = np.eye(d)[0]
    chi = np.random.default_rng(1).standard_normal((n,) * d)
    for rep in (dyadic_difference(a, 8, xi, tol=1e-11), energy_identity_check(a, 8, xi, tol=1e-11),
                variational_identity_check(a, 8, xi, chi, tol=1e-11)):
        assert rep.passed, rep


def test_identities_in_constant_environment():
    a = np.ones((8, 8, 2))
    assert dyadic_difference(a, 4, [1.0, 0.0]).passed
    assert energy_identity_check(a, 4, [1.0, 0.0]).passed


def test_identity_report_compare():
    assert IdentityReport.compare("x", 0.0, 0.0, 1e-10).passed
    r = IdentityReport.compare("x", 1.0, 1.1, 0.05)
    assert not r.passed and r.rel_error == pytest.approx(0.1 / 1.1)
    assert IdentityReport.compare("x", 1.0, 1.1, 0.05, scale=10.0).passed


def test_spectral_cross_check():
    a = random_env(2, 6, seed=6)
    check = spectral_cross_check(a, (1, 4, 16), [1.0, 0.0])
    assert check.passed
    assert len(check.reports()) == 1 + len(check.at) + len(check.systematic)
