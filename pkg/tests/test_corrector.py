import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latthom.corrector import (build_psi, corrector_energy, corrector_rhs, phi_sensitivity_field,
                               psi_residuals, solve_modified_corrector, solve_periodic_corrector,
                               unit_direction, verify_sensitivity_formulas)
from latthom.estimators import estimate_AL_periodic
from latthom.lattice import TorusLattice
from latthom.solver import OperatorSpec, dense_solve

from conftest import random_env


def test_unit_direction():
    assert np.array_equal(unit_direction(1, 3), [0, 1, 0])
    assert np.allclose(unit_direction([3, 4]), [0.6, 0.8])
    with pytest.raises(ValueError):
        unit_direction([0, 0])
    with pytest.raises(ValueError):
        unit_direction(0)


def test_constant_environment_has_zero_corrector():
    a = np.full((8, 8, 2), 2.5)
    for T in (4.0, np.inf):
        sol = solve_modified_corrector(a, T, [1.0, 0.0])
        assert np.all(sol.phi == 0)


def test_rejects_bad_arguments():
    a = np.ones((4, 4, 2))
    with pytest.raises(ValueError):
        solve_modified_corrector(a, 0, [1.0, 0.0])
    with pytest.raises(ValueError):
        solve_modified_corrector(a, 4, [1.0, 1.0])


@given(st.integers(0, 10_000), st.sampled_from([1.0, 4.0, 64.0]))
@settings(max_examples=10, deadline=None)
def test_corrector_has_zero_mean(seed, T):
    a = random_env(2, 12, seed=seed)
    phi = solve_modified_corrector(a, T, [1.0, 0.0], tol=1e-12).phi
    assert abs(phi.mean()) <= 1e-10 * np.abs(phi).max()


def test_matches_dense_oracle():
    a = random_env(2, 4, seed=7)
    xi = unit_direction([1.0, 2.0])
    for T in (3.0, np.inf):
        sol = solve_modified_corrector(a, T, xi, tol=1e-13)
        oracle = dense_solve(OperatorSpec.from_T(a, T), corrector_rhs(a, xi))
        assert np.abs(sol.phi - oracle).max() <= 1e-9


def test_one_dimensional_periodic_is_harmonic_mean():
    a = np.array([1.0, 2.0, 1.0, 2.0])[:, None]
    rec = estimate_AL_periodic(a, [1.0], tol=1e-13)
    assert rec.value == pytest.approx(4 / 3, rel=1e-12)
    # energy of the periodic corrector matches the closed form too
    sol = solve_periodic_corrector(a, [1.0], tol=1e-13)
    assert sol.report.converged


def test_psi_is_scaled_dyadic_difference():
    a = random_env(2, 16, seed=8)
    psi, sT, s2T = build_psi(a, 8.0, [0.0, 1.0], tol=1e-12)
    assert np.array_equal(psi.psi, 8.0 * (s2T.phi - sT.phi))
    assert max(psi_residuals(a, psi, sT, s2T)) <= 1e-8


def test_energy_vanishes_only_for_constant_fields():
    a = random_env(2, 8, seed=9)
    assert corrector_energy(solve_modified_corrector(a, 4, [1.0, 0.0])) > 0
    assert corrector_energy(solve_modified_corrector(np.ones((8, 8, 2)), 4, [1.0, 0.0])) == 0


def test_sensitivity_in_constant_environment():
    a = np.full((8, 8, 2), 1.5)
    rep = verify_sensitivity_formulas(a, 4.0, [1.0, 0.0], ((0, 0), 0), (1, 0))
    assert rep.rel_err_phi <= 1e-3 and rep.rel_err_psi <= 1e-3


@pytest.mark.parametrize("seed", [0, 1])
def test_sensitivity_in_random_environment(seed):
    a = random_env(2, 16, seed=seed)
    rep = verify_sensitivity_formulas(a, 8.0, [1.0, 0.0], ((3, 5), seed), (4, 5))
    assert rep.rel_err_phi <= 1e-3 and rep.rel_err_psi <= 1e-3
    assert abs(rep.fd_phi) > 1e-6


def test_sensitivity_decays_away_from_probe():
    n = 32
    a = random_env(2, n, seed=11)
    field = np.abs(phi_sensitivity_field(a, 4.0, [1.0, 0.0], (0, 0)))
    dist = TorusLattice(2, n).distance((0, 0))
    assert field[dist >= n / 2].max() < 1e-3 * field.max()
