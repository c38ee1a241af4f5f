"""Modified and periodic correctors, the dyadic T-derivative psi_T, and the
edge-sensitivity representation formulas."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import apply_operator, divergence, gradient
from .green import green_solution
from .solver import DEFAULT_TOL, OperatorSpec, SolveReport, cg_solve


@dataclass(frozen=True)
class CorrectorSolution:
    phi: np.ndarray
    T: float
    xi: np.ndarray
    report: SolveReport


@dataclass(frozen=True)
class PsiField:
    psi: np.ndarray
    T: float


def unit_direction(xi, d: int | None = None) -> np.ndarray:
    """Normalise ``xi``; an integer ``i`` means the basis vector e_i."""
    if np.isscalar(xi):
        if d is None:
            raise ValueError("dimension required for a basis-vector direction")
        v = np.zeros(d)
        v[int(xi)] = 1.0
        return v
    v = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    return v / norm


def corrector_rhs(a: np.ndarray, xi) -> np.ndarray:
    """``div(A xi)``, the source term of every corrector equation."""
    return divergence(a * np.asarray(xi, dtype=float))


def solve_modified_corrector(a: np.ndarray, T: float, xi, tol: float = DEFAULT_TOL,
                             x0: np.ndarray | None = None) -> CorrectorSolution:
    """Solve ``phi/T - div(A(xi + grad phi)) = 0`` on the torus.

    ``T = inf`` drops the zero-order term (periodic corrector, zero-mean gauge).
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    xi = np.asarray(xi, dtype=float)
    if not np.isclose(np.linalg.norm(xi), 1.0):
        raise ValueError("xi must be a unit vector")
    spec = OperatorSpec.from_T(a, T)
    phi, report = cg_solve(spec, corrector_rhs(a, xi), tol=tol, x0=x0)
    return CorrectorSolution(phi, float(T), xi, report)


def solve_periodic_corrector(a: np.ndarray, xi, tol: float = DEFAULT_TOL) -> CorrectorSolution:
    return solve_modified_corrector(a, np.inf, xi, tol=tol)


def build_psi(a: np.ndarray, T: float, xi, tol: float = DEFAULT_TOL):
    """Return ``(PsiField, phi_T, phi_2T)`` with ``psi_T = T (phi_2T - phi_T)``."""
    sol_T = solve_modified_corrector(a, T, xi, tol=tol)
    sol_2T = solve_modified_corrector(a, 2 * T, xi, tol=tol, x0=sol_T.phi)
    psi = T * (sol_2T.phi - sol_T.phi)
    return PsiField(psi, float(T)), sol_T, sol_2T


def psi_residuals(a: np.ndarray, psi: PsiField, sol_T: CorrectorSolution,
                  sol_2T: CorrectorSolution) -> tuple[float, float]:
    """Relative residuals of the two equations satisfied by psi_T.

    ``psi/T - div(A grad psi) = phi_2T / 2`` and
    ``psi/(2T) - div(A grad psi) = phi_T / 2``, each measured in the l2 norm
    relative to the norm of its right-hand side.
    """
    T = psi.T
    out = []
    for mass, rhs in ((1 / T, 0.5 * sol_2T.phi), (0.5 / T, 0.5 * sol_T.phi)):
        res = apply_operator(OperatorSpec(a, mass), psi.psi) - rhs
        scale = np.linalg.norm(rhs)
        out.append(float(np.linalg.norm(res) / scale) if scale > 0 else float(np.linalg.norm(res)))
    return out[0], out[1]


def _forward(field: np.ndarray, z, i: int) -> float:
    """Forward difference of ``field`` across the edge [z, z + e_i]."""
    n = field.shape[0]
    zp = np.array(z)
    zp[i] = (zp[i] + 1) % n
    return float(field[tuple(zp)] - field[tuple(np.mod(z, n))])


@dataclass(frozen=True)
class SensitivityReport:
    edge: tuple
    probe: tuple
    fd_phi: float
    formula_phi: float
    rel_err_phi: float
    fd_psi: float
    formula_psi: float
    rel_err_psi: float


def _rel(a, b):
    scale = max(abs(a), abs(b))
    return abs(a - b) / scale if scale > 0 else 0.0


def phi_sensitivity_field(a: np.ndarray, T: float, xi, probe, tol: float = 1e-12,
                          sol: CorrectorSolution | None = None) -> np.ndarray:
    """``d phi_T(probe) / d a(e)`` for every edge at once (edge-field layout).

    Uses ``-(xi_i + grad_i phi_T(z)) grad_{z_i} G_T(z, probe)`` for ``e = [z, z+e_i]``.
    """
    sol = sol or solve_modified_corrector(a, T, xi, tol=tol)
    G = green_solution(a, T, probe, tol=tol)
    return -(np.asarray(xi) + gradient(sol.phi)) * gradient(G)


def verify_sensitivity_formulas(a: np.ndarray, T: float, xi, edge, probe,
                                h: float = 1e-4, tol: float = 1e-12) -> SensitivityReport:
    """Compare edge derivatives of phi_T(probe) and psi_T(probe) with their
    Green-function representations.

    ``edge = (z, i)`` denotes [z, z + e_i]. Derivatives are central finite
    differences with step ``h``; the formulas are evaluated at the unperturbed
    conductivity (the midpoint of the stencil).
    """
    z, i = edge
    z = tuple(int(c) for c in z)
    probe = tuple(int(c) for c in probe)
    xi = np.asarray(xi, dtype=float)
    if a[z + (i,)] - h <= 0:
        raise ValueError("finite-difference step leaves the positive conductivities")

    values = {}
    for sign in (+1, -1):
        ap = a.copy()
        ap[z + (i,)] += sign * h
        psi, sol_T, _ = build_psi(ap, T, xi, tol=tol)
        values[sign] = (sol_T.phi[probe], psi.psi[probe])
    fd_phi = (values[1][0] - values[-1][0]) / (2 * h)
    fd_psi = (values[1][1] - values[-1][1]) / (2 * h)

    psi, sol_T, sol_2T = build_psi(a, T, xi, tol=tol)
    G_T = green_solution(a, T, probe, tol=tol)
    formula_phi = -(xi[i] + _forward(sol_T.phi, z, i)) * _forward(G_T, z, i)

    # sum_w G_T(probe, w) G_2T(z, w) = u(z) with u/(2T) - div(A grad u) = G_T(., probe)
    u, _ = cg_solve(OperatorSpec(a, 0.5 / T), G_T, tol=tol)
    formula_psi = (-_forward(psi.psi, z, i) * _forward(G_T, z, i)
                   - 0.5 * (xi[i] + _forward(sol_2T.phi, z, i)) * _forward(u, z, i))

    return SensitivityReport(
        edge=(z, i), probe=probe,
        fd_phi=float(fd_phi), formula_phi=float(formula_phi), rel_err_phi=_rel(fd_phi, formula_phi),
        fd_psi=float(fd_psi), formula_psi=float(formula_psi), rel_err_psi=_rel(fd_psi, formula_psi),
    )


def corrector_energy(sol: CorrectorSolution) -> float:
    """``mean(phi^2)/T + mean(|grad phi|^2)``."""
    g = gradient(sol.phi)
    zero = 0.0 if np.isinf(sol.T) else float((sol.phi ** 2).mean()) / sol.T
    return zero + float((g ** 2).sum(axis=-1).mean())
