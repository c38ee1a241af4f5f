"""Ready-made verification suites shared by the command line and the tests."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .corrector import build_psi, psi_residuals, verify_sensitivity_formulas
from .environment import SELF_DUAL_LAW, ConductivityLaw, StreamKey, sample_environment
from .estimators import (IdentityReport, dyadic_difference, energy_identity_check,
                         spectral_cross_check, variational_identity_check)
from .fitting import loglog_slope
from .green import (convolution_scaling, decay_profile, green_function, harnack_profile,
                    harnack_radii)
from .lattice import TorusLattice, divergence, gradient
from .probability import EnumerableEnvironment, grid_stable, phi_at, psi_at


def _env(law, d, n, seed, replica, purpose="verify"):
    return sample_environment(law, TorusLattice(d, n), StreamKey(seed, replica, purpose))


# --- exact identities -------------------------------------------------------------

# every (d, n, T) combination once, plus two repeats on fresh environments
IDENTITY_CASES = tuple((d, n, T) for d in (2, 3) for n in (8, 16) for T in (4, 16)) + (
    (2, 16, 16), (3, 8, 4))


def identity_suite(seed: int = 0, law: ConductivityLaw = SELF_DUAL_LAW, cases=IDENTITY_CASES,
                   tol: float = 1e-10, check_tol: float = 1e-7) -> list[IdentityReport]:
    """Exact torus identities on one random environment per ``(d, n, T)`` case."""
    reports = []
    for k, (d, n, T) in enumerate(cases):
        a = _env(law, d, n, seed, k)
        lat = TorusLattice(d, n)
        rng = StreamKey(seed, k, "verify/fields").generator()
        xi = np.eye(d)[k % d]
        tag = f"[d={d} n={n} T={T}]"

        u = rng.standard_normal(lat.shape)
        F = rng.standard_normal(lat.edge_shape)
        lhs, rhs = (gradient(u) * F).sum(), -(u * divergence(F)).sum()
        reports.append(IdentityReport.compare(f"adjointness{tag}", lhs, rhs, check_tol,
                                              np.abs(gradient(u) * F).sum()))

        x = tuple(rng.integers(0, n, d))
        y = tuple(rng.integers(0, n, d))
        Gy = green_function(a, T, y, tol=tol)
        Gx = green_function(a, T, x, tol=tol)
        reports.append(IdentityReport.compare(f"green_mass{tag}", Gy.values.sum() / T, 1.0, check_tol))
        reports.append(IdentityReport.compare(f"green_symmetry{tag}", Gy.values[x], Gx.values[y],
                                              check_tol))

        chi = rng.standard_normal(lat.shape)
        for r in (variational_identity_check(a, T, xi, chi, tol=tol, check_tol=check_tol),
                  dyadic_difference(a, T, xi, tol=tol, check_tol=check_tol),
                  energy_identity_check(a, T, xi, tol=tol, check_tol=check_tol)):
            reports.append(replace(r, name=r.name + tag))
        psi, sT, s2T = build_psi(a, T, xi, tol=tol)
        r1, r2 = psi_residuals(a, psi, sT, s2T)
        reports.append(IdentityReport.compare(f"psi_residual{tag}", max(r1, r2), 0.0, check_tol, 1.0))
    return reports


def spectral_suite(seed: int = 0, samples: int = 3, law: ConductivityLaw = SELF_DUAL_LAW,
                   T_ladder=(1, 4, 16, 64)) -> list[IdentityReport]:
    out = []
    for k in range(samples):
        a = _env(law, 2, 6, seed, k, "verify/spectral")
        out.extend(spectral_cross_check(a, T_ladder, np.eye(2)[k % 2]).reports())
    return out


def sensitivity_suite(seed: int = 0, samples: int = 3, T: float = 8.0,
                      law: ConductivityLaw = SELF_DUAL_LAW):
    out = []
    for k in range(samples):
        a = _env(law, 2, 16, seed, k, "verify/sensitivity")
        rng = StreamKey(seed, k, "verify/sensitivity-sites").generator()
        z = tuple(int(c) for c in rng.integers(0, 16, 2))
        probe = tuple(int(c) for c in rng.integers(0, 16, 2))
        out.append(verify_sensitivity_formulas(a, T, np.eye(2)[k % 2], (z, k % 2), probe))
    return out


# --- covariance -------------------------------------------------------------------

@dataclass(frozen=True)
class CovarianceCase:
    name: str
    covariance: float
    bound_coarse: float
    bound_fine: float
    passed: bool
    stable: bool


def covariance_suite(T: float = 2.0, law: ConductivityLaw | None = None) -> list[CovarianceCase]:
    law = law or ConductivityLaw.two_point(1.0, 2.0, 0.5)
    env = EnumerableEnvironment.build(TorusLattice(2, 2), law)
    xi = [1.0, 0.0]
    phi = phi_at(T, xi)
    out = []
    for name, X, Y in (("phi_T(0),phi_T(0)", phi, phi), ("phi_T(0),psi_T(0)", phi, psi_at(T, xi))):
        stable, coarse, fine = grid_stable(env, X, Y)
        out.append(CovarianceCase(name, coarse.covariance, coarse.bound, fine.bound,
                                  coarse.report.passed and fine.report.passed, stable))
    return out


# --- Green function estimates -------------------------------------------------------

def pooled_slope(radii, ratios) -> float:
    """OLS slope of ``ln ratio`` on ``ln R`` over every (sample, radius) pair."""
    ratios = np.asarray(ratios, dtype=float)
    x = np.tile(np.asarray(radii, dtype=float), ratios.shape[0])
    return loglog_slope(x, ratios.ravel())


@dataclass(frozen=True)
class GreenStudy:
    """Decay and Harnack ratios of ``G_T`` over independent samples.

    ``decay_ratios`` and ``harnack_ratios`` have one row per sample. The
    headline slopes pool every sample into one least-squares fit; the
    ``*_max_slope`` variants fit the per-radius maximum over samples instead.
    """

    d: int
    T: float
    n: int
    decay_radii: np.ndarray
    decay_ratios: np.ndarray
    harnack_radii: np.ndarray
    harnack_ratios: np.ndarray
    far_field_ok: bool

    @property
    def decay_slope(self) -> float:
        return pooled_slope(self.decay_radii, self.decay_ratios)

    @property
    def harnack_slope(self) -> float:
        return pooled_slope(self.harnack_radii, self.harnack_ratios)

    @property
    def decay_max_slope(self) -> float:
        return loglog_slope(self.decay_radii, self.decay_ratios.max(axis=0))

    @property
    def harnack_max_slope(self) -> float:
        return loglog_slope(self.harnack_radii, self.harnack_ratios.max(axis=0))

    def per_sample_slopes(self) -> tuple[np.ndarray, np.ndarray]:
        dec = np.array([loglog_slope(self.decay_radii, r) for r in self.decay_ratios])
        har = np.array([loglog_slope(self.harnack_radii, r) for r in self.harnack_ratios])
        return dec, har


def green_study(d: int, T: float, n: int, samples: int = 20, seed: int = 0,
                law: ConductivityLaw = SELF_DUAL_LAW) -> GreenStudy:
    decay, harn = [], []
    radii = harnack_radii(n)
    far_ok = True
    for k in range(samples):
        a = _env(law, d, n, seed, k, "verify/green")
        G = green_function(a, T, (0,) * d)
        prof = decay_profile(G)
        near = prof.near_field()
        decay.append(prof.column("ratio")[near])
        R_near = prof.radii[near]
        far = prof.far_field()
        if far.any():
            far_ok &= bool(np.all(prof.column("sup_G")[far] <= prof.column("envelope")[far]))
        harn.append(harnack_profile(G, a, radii))
    return GreenStudy(d, T, n, R_near, np.array(decay), np.array(radii, dtype=float),
                      np.array(harn), far_ok)


CONVOLUTION_LADDERS = {2: (64, 256, 1024, 4096), 3: (64, 128, 256)}


def convolution_suite(dims=(2, 3)):
    return {d: convolution_scaling(d, CONVOLUTION_LADDERS[d]) for d in dims}
