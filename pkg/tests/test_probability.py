import numpy as np
import pytest

from latthom.environment import ConductivityLaw, StreamKey
from latthom.lattice import TorusLattice
from latthom.probability import (EnumerableEnvironment, EnumerationTooLarge, batched_corrector,
                                 covariance_bound, edge_value, exact_expectation, grid_stable,
                                 monte_carlo_expectation, phi_at, psi_at, verify_covariance_bound)
from latthom.corrector import solve_modified_corrector

LAW = ConductivityLaw.two_point(1.0, 2.0, 0.5)


@pytest.fixture(scope="module")
def env():
    return EnumerableEnvironment.build(TorusLattice(2, 2), LAW)


def test_enumeration(env):
    assert env.num_edges == 8 and len(env.configs) == 256
    assert abs(env.total_probability() - 1.0) <= 1e-14
    skewed = EnumerableEnvironment.build(TorusLattice(2, 2), ConductivityLaw.two_point(1, 3, 0.3))
    assert abs(skewed.total_probability() - 1.0) <= 1e-14


def test_enumeration_limits():
    with pytest.raises(EnumerationTooLarge):
        EnumerableEnvironment.build(TorusLattice(2, 4), LAW)
    with pytest.raises(ValueError):
        EnumerableEnvironment.build(TorusLattice(2, 2), ConductivityLaw.uniform(1, 2))


def test_trivial_expectations(env):
    assert exact_expectation(env, lambda a: np.ones(len(a))) == pytest.approx(1.0, abs=1e-14)
    assert exact_expectation(env, edge_value(3)) == pytest.approx(1.5, abs=1e-14)


def test_batched_corrector_matches_iterative_solver(env):
    k = 77
    phi = batched_corrector(env.configs[k:k + 1], 2.0, [1.0, 0.0])[0]
    sol = solve_modified_corrector(env.configs[k], 2.0, [1.0, 0.0], tol=1e-13)
    assert np.allclose(phi, sol.phi.ravel(), atol=1e-12)


def test_exact_matches_monte_carlo(env):
    stat = lambda a: phi_at(2.0, [1.0, 0.0])(a) ** 2
    exact = exact_expectation(env, stat)
    mean, se = monte_carlo_expectation(env.lattice, LAW, stat, 1_000_000, StreamKey(3, 0, "mc"))
    assert abs(mean - exact) <= 3 * se


def test_independent_functionals_have_zero_covariance(env):
    rep = covariance_bound(env, edge_value(1), edge_value(2))
    assert rep.covariance == pytest.approx(0.0, abs=1e-15) and rep.report.passed


def test_variance_of_single_edge_is_sharp(env):
    rep = covariance_bound(env, edge_value(0), edge_value(0))
    assert rep.covariance == pytest.approx(0.25)
    assert rep.bound == pytest.approx(0.25, rel=1e-8)


@pytest.mark.parametrize("pair", ["phi_phi", "phi_psi"])
def test_covariance_bound_holds_and_is_grid_stable(env, pair):
    X = phi_at(2.0, [1.0, 0.0])
    Y = X if pair == "phi_phi" else psi_at(2.0, [1.0, 0.0])
    assert verify_covariance_bound(env, X, Y, 7).passed
    stable, coarse, fine = grid_stable(env, X, Y)
    assert stable and coarse.report.passed and fine.report.passed


def test_grid_must_be_large_enough(env):
    with pytest.raises(ValueError):
        covariance_bound(env, edge_value(0), edge_value(0), grid_size=3)
