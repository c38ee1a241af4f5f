"""Exact expectations by enumerating every configuration of a two-point
environment on a tiny torus, and a brute-force check of the covariance
estimate for functionals of the conductivities."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .environment import ConductivityLaw, StreamKey, law_moments, sample_values
from .estimators import IdentityReport
from .lattice import TorusLattice

MAX_EDGES = 20

# A batch functional maps conductivities of shape (B,) + edge_shape to (B,).
BatchFunctional = Callable[[np.ndarray], np.ndarray]


class EnumerationTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class EnumerableEnvironment:
    """All ``2**num_edges`` configurations of a two-point law with their probabilities."""

    lattice: TorusLattice
    law: ConductivityLaw
    configs: np.ndarray
    probs: np.ndarray

    @classmethod
    def build(cls, lattice: TorusLattice, law: ConductivityLaw) -> "EnumerableEnvironment":
        if law.kind != "two_point":
            raise ValueError("enumeration needs a two-point law")
        E = lattice.num_edges
        if E > MAX_EDGES:
            raise EnumerationTooLarge(f"{E} edges exceed the enumeration limit {MAX_EDGES}")
        bits = np.array(list(itertools.product((0, 1), repeat=E)), dtype=bool)
        configs = np.where(bits, law.beta, law.alpha).reshape((-1,) + lattice.edge_shape)
        k = bits.sum(axis=1)
        probs = law.p ** (E - k) * (1 - law.p) ** k
        return cls(lattice, law, configs, probs)

    @property
    def num_edges(self) -> int:
        return self.lattice.num_edges

    def total_probability(self) -> float:
        return math.fsum(self.probs)


def exact_expectation(env: EnumerableEnvironment, statistic: BatchFunctional) -> float:
    """``sum_config p(config) statistic(config)`` with compensated summation."""
    values = np.asarray(statistic(env.configs), dtype=float)
    return math.fsum(env.probs * values)


def monte_carlo_expectation(lattice: TorusLattice, law: ConductivityLaw, statistic: BatchFunctional,
                            samples: int, key: StreamKey, chunk: int = 100_000) -> tuple[float, float]:
    """Sample mean and standard error of ``statistic`` under the i.i.d. law."""
    rng = key.generator()
    total = total2 = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        v = np.asarray(statistic(sample_values(law, (m,) + lattice.edge_shape, rng)), dtype=float)
        total += math.fsum(v)
        total2 += math.fsum(v * v)
        done += m
    mean = total / samples
    var = max(total2 / samples - mean * mean, 0.0) * samples / (samples - 1)
    return mean, math.sqrt(var / samples)


# --- batched tiny-torus solves -------------------------------------------------

def batched_operator(a: np.ndarray, mass: float) -> np.ndarray:
    """Dense matrices of ``mass - div(A grad)`` for a batch ``(B,) + edge_shape``."""
    lat = TorusLattice.of(a[0], "edge")
    N, d = lat.num_sites, lat.d
    B = a.shape[0]
    flat = a.reshape(B, N, d)
    idx = np.arange(N).reshape(lat.shape)
    M = np.zeros((B, N, N))
    M[:, np.arange(N), np.arange(N)] = mass
    for i in range(d):
        plus = np.roll(idx, -1, axis=i).ravel()
        for k in range(N):
            w = flat[:, k, i]
            p = plus[k]
            M[:, k, k] += w
            M[:, p, p] += w
            M[:, k, p] -= w
            M[:, p, k] -= w
    return M


def batched_rhs(a: np.ndarray, xi) -> np.ndarray:
    """``div(A xi)`` flattened per sample."""
    xi = np.asarray(xi, dtype=float)
    d = xi.size
    flux = a * xi
    out = np.zeros(a.shape[:-1])
    for i in range(d):
        out += flux[..., i] - np.roll(flux[..., i], 1, axis=1 + i)
    return out.reshape(a.shape[0], -1)


def batched_corrector(a: np.ndarray, T: float, xi) -> np.ndarray:
    """Modified correctors ``phi_T`` for a batch, flattened to ``(B, N)``."""
    M = batched_operator(a, 1.0 / T)
    return np.linalg.solve(M, batched_rhs(a, xi)[..., None])[..., 0]


def phi_at(T: float, xi, site=0) -> BatchFunctional:
    """Batch functional ``a -> phi_T(site)``; ``site`` is a flat index."""
    def f(a):
        return batched_corrector(np.asarray(a, dtype=float), T, xi)[:, site]
    return f


def psi_at(T: float, xi, site=0) -> BatchFunctional:
    """Batch functional ``a -> psi_T(site) = T (phi_2T - phi_T)(site)``."""
    def f(a):
        a = np.asarray(a, dtype=float)
        return T * (batched_corrector(a, 2 * T, xi)[:, site] - batched_corrector(a, T, xi)[:, site])
    return f


def edge_value(edge: int) -> BatchFunctional:
    """Batch functional returning the conductivity of one edge (flat edge index)."""
    def f(a):
        return np.asarray(a).reshape(len(a), -1)[:, edge]
    return f


# --- covariance bound ----------------------------------------------------------

def _sup_sq_derivative(env: EnumerableEnvironment, X: BatchFunctional, edge: int,
                       grid: np.ndarray, h: float) -> float:
    """``< sup_{a_e in grid} |dX/da_e|^2 >`` over the other edges (enumeration)."""
    configs = env.configs.reshape(len(env.configs), -1)
    best = np.zeros(len(configs))
    for g in grid:
        plus = configs.copy()
        minus = configs.copy()
        plus[:, edge] = g + h
        minus[:, edge] = g - h
        shape = (-1,) + env.lattice.edge_shape
        dX = (X(plus.reshape(shape)) - X(minus.reshape(shape))) / (2 * h)
        best = np.maximum(best, dX ** 2)
    # the sup no longer depends on a_e, so the expectation over the remaining
    # edges equals the full enumeration average
    return math.fsum(env.probs * best)


@dataclass(frozen=True)
class CovarianceReport:
    covariance: float
    bound: float
    grid_size: int
    report: IdentityReport


def covariance_bound(env: EnumerableEnvironment, X: BatchFunctional, Y: BatchFunctional,
                     grid_size: int = 7, rel_slack: float = 1e-6) -> CovarianceReport:
    """Exact ``cov(X, Y)`` against ``sum_e <sup|dX/da_e|^2>^(1/2) <sup|dY/da_e|^2>^(1/2) var[a]``.

    The suprema run over ``grid_size`` equispaced values in ``[alpha, beta]``
    with central differences.
    """
    if grid_size < 5:
        raise ValueError("grid_size must be at least 5")
    law = env.law
    x = np.asarray(X(env.configs), dtype=float)
    y = np.asarray(Y(env.configs), dtype=float)
    mx, my = math.fsum(env.probs * x), math.fsum(env.probs * y)
    cov = math.fsum(env.probs * (x - mx) * (y - my))
    grid = np.linspace(law.alpha, law.beta, grid_size)
    h = 1e-5 * max(law.beta - law.alpha, law.alpha)
    var_a = law_moments(law)[1]
    bound = 0.0
    for e in range(env.num_edges):
        sx = _sup_sq_derivative(env, X, e, grid, h)
        sy = sx if Y is X else _sup_sq_derivative(env, Y, e, grid, h)
        bound += math.sqrt(sx) * math.sqrt(sy) * var_a
    limit = bound * (1 + rel_slack)
    rep = IdentityReport("covariance_bound", cov, limit, max(cov - limit, 0.0),
                         cov / limit if limit > 0 else (0.0 if cov <= 0 else np.inf),
                         1.0, bool(cov <= limit))
    return CovarianceReport(cov, bound, grid_size, rep)


def verify_covariance_bound(env: EnumerableEnvironment, X: BatchFunctional, Y: BatchFunctional,
                            grid_size: int = 7) -> IdentityReport:
    """Covariance bound as an :class:`IdentityReport`; ``rel_error`` holds ``cov / bound``."""
    return covariance_bound(env, X, Y, grid_size).report


def grid_stable(env: EnumerableEnvironment, X: BatchFunctional, Y: BatchFunctional,
                coarse: int = 5, fine: int = 9) -> tuple[bool, CovarianceReport, CovarianceReport]:
    """Whether refining the sup grid from ``coarse`` to ``fine`` keeps the verdict."""
    a = covariance_bound(env, X, Y, coarse)
    b = covariance_bound(env, X, Y, fine)
    return a.report.passed == b.report.passed, a, b
