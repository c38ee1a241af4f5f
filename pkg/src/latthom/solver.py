"""Linear solves for ``u -> mass * u - div(A grad u)`` on the torus."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .lattice import TorusLattice, apply_operator

DEFAULT_TOL = 1e-10
DENSE_LIMIT = 4096


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    def __init__(self, report, solution=None):
        super().__init__(
            f"CG did not converge in {report.iterations} iterations "
            f"(relative residual {report.final_relative_residual:.3e})"
        )
        self.report = report
        self.solution = solution


class IncompatibleRhs(SolverError, ValueError):
    """Right-hand side has nonzero mean while the operator has no mass term."""


class SizeExceeded(SolverError, ValueError):
    pass


@dataclass(frozen=True)
class OperatorSpec:
    """Conductivity field plus zero-order coefficient ``mass = 1/T`` (periodic)."""

    conductivity: np.ndarray
    mass: float = 0.0

    def __post_init__(self):
        if self.mass < 0:
            raise ValueError(f"mass must be >= 0, got {self.mass}")
        if not np.all(self.conductivity > 0):
            raise ValueError("conductivities must be positive")

    @classmethod
    def from_T(cls, a: np.ndarray, T: float) -> "OperatorSpec":
        return cls(a, 0.0 if np.isinf(T) else 1.0 / T)

    @property
    def lattice(self) -> TorusLattice:
        return TorusLattice.of(self.conductivity, "edge")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return apply_operator(self, u)


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    final_relative_residual: float
    converged: bool


def _strides(lat: TorusLattice) -> np.ndarray:
    return np.array([lat.n ** (lat.d - 1 - i) for i in range(lat.d)], dtype=np.int64)


def cg_solve(spec: OperatorSpec, rhs: np.ndarray, tol: float = DEFAULT_TOL,
             max_iterations: int = 100_000, x0: np.ndarray | None = None):
    """Solve ``spec(u) = rhs`` by Jacobi-preconditioned conjugate gradients.

    Returns ``(u, SolveReport)`` with ``||spec(u) - rhs|| <= tol * ||rhs||``.
    For ``mass == 0`` the rhs must have zero mean and the zero-mean solution
    is returned.

    Raises
    ------
    NonConvergence
        If the tolerance is not met within ``max_iterations``.
    IncompatibleRhs
        If ``mass == 0`` and the rhs has a nonzero mean.
    """
    if not 0 < tol < 1:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    lat = spec.lattice
    b = np.ascontiguousarray(rhs, dtype=float).ravel()
    if b.size != lat.num_sites:
        raise ValueError("rhs does not live on the operator's lattice")
    if spec.mass == 0:
        scale = np.abs(b).max() if b.size else 0.0
        if abs(b.mean()) > 1e-12 * scale:
            raise IncompatibleRhs(f"rhs mean {b.mean():.3e} is not zero")
        b = b - b.mean()
    x = np.zeros(lat.num_sites) if x0 is None else np.array(x0, dtype=float).ravel()
    a = np.ascontiguousarray(np.asarray(spec.conductivity, dtype=float).reshape(lat.num_sites, lat.d).T)
    it, relres, ok = _kernels.pcg(a, float(spec.mass), b, x, lat.n, _strides(lat),
                                  float(tol), int(max_iterations))
    if spec.mass == 0:
        x -= x.mean()
    report = SolveReport(int(it), float(relres), bool(ok))
    u = x.reshape(lat.shape)
    if not ok:
        raise NonConvergence(report, u)
    return u, report


def operator_matrix(spec: OperatorSpec) -> np.ndarray:
    """Dense matrix of the operator (row-major site order)."""
    lat = spec.lattice
    N = lat.num_sites
    if N > DENSE_LIMIT:
        raise SizeExceeded(f"{N} sites exceed the dense limit {DENSE_LIMIT}")
    a = spec.conductivity.reshape(N, lat.d)
    M = np.zeros((N, N))
    idx = np.arange(N).reshape(lat.shape)
    M[np.arange(N), np.arange(N)] += spec.mass
    for i in range(lat.d):
        plus = np.roll(idx, -1, axis=i).ravel()
        w = a[:, i]
        k = np.arange(N)
        np.add.at(M, (k, k), w)
        np.add.at(M, (plus, plus), w)
        np.add.at(M, (k, plus), -w)
        np.add.at(M, (plus, k), -w)
    return M


def dense_solve(spec: OperatorSpec, rhs: np.ndarray) -> np.ndarray:
    """Direct solve through the dense matrix (zero-mean gauge when mass = 0)."""
    M = operator_matrix(spec)
    b = np.asarray(rhs, dtype=float).ravel()
    if spec.mass == 0:
        u = np.linalg.lstsq(M, b - b.mean(), rcond=None)[0]
        u -= u.mean()
    else:
        u = np.linalg.solve(M, b)
    return u.reshape(spec.lattice.shape)


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition of ``-div(A grad)`` under the spatial average.

    ``eigenvectors[:, k]`` is normalised so that ``mean(v_k**2) == 1`` and
    ``weights[k] = mean(b * v_k)**2``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    weights: np.ndarray

    def reconstruction_error(self, spec: OperatorSpec) -> float:
        M = operator_matrix(spec)
        V = self.eigenvectors
        return float(np.abs(M @ V - V * self.eigenvalues).max())


def dense_spectrum(spec: OperatorSpec, b: np.ndarray) -> SpectralData:
    if spec.mass != 0:
        raise ValueError("dense_spectrum expects the massless operator")
    M = operator_matrix(spec)
    N = M.shape[0]
    lam, U = np.linalg.eigh(M)
    lam = np.clip(lam, 0.0, None)
    V = U * np.sqrt(N)
    w = (np.asarray(b, dtype=float).ravel() @ U) ** 2 / N
    return SpectralData(lam, V, w)
