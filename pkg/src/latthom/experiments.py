"""Monte Carlo campaigns over T and L ladders, with deterministic replica
reduction, pre-flight identity checks and CSV/JSON reports."""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from importlib import metadata
from pathlib import Path

import numpy as np

from .corrector import solve_modified_corrector
from .environment import ConductivityLaw, StreamKey, sample_environment
from .estimators import (dyadic_difference, energy_density, energy_identity_check,
                         estimate_ATL, variational_identity_check)
from .fitting import DegenerateData, ScalingFit, fit_scaling
from .lattice import TorusLattice, gradient
from .solver import DEFAULT_TOL

STUDY_KINDS = ("systematic", "random", "corrector", "full")
MIN_REPLICAS = {"systematic": 30, "random": 100, "corrector": 30, "full": 30}
CSV_COLUMNS = ("x", "value", "stderr", "replicas", "ln_x", "ln_y")
# relative tolerance of the identity checks run before every study, and the
# solver tolerance they are evaluated at (never looser than the study's own)
PREFLIGHT_TOL = 1e-7
PREFLIGHT_SOLVER_TOL = 1e-12


class MissingReference(ValueError):
    """The full-error study needs a reference homogenized coefficient."""


class IdentityFailure(RuntimeError):
    """The pre-flight identity suite failed on the first replica."""

    def __init__(self, reports):
        names = ", ".join(f"{r.name} (rel {r.rel_error:.2e})" for r in reports if not r.passed)
        super().__init__(f"pre-flight identity check failed: {names}")
        self.reports = reports


def code_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def side_for(T: float, L: int = 0, factor: int = 8) -> int:
    """``max(factor * ceil(sqrt T), 4L)`` rounded up to a multiple of 8."""
    n = max(factor * math.ceil(math.sqrt(T)), 4 * L, 8)
    return 8 * math.ceil(n / 8)


@dataclass
class StudyManifest:
    """Everything that determines a study's output.

    ``side`` overrides the sizing policy when set. ``T_ref_factor`` sets the
    reference time of the corrector study relative to the largest ladder T.
    ``expected_slope`` is an optional ``[lo, hi]`` window checked by the CLI.
    """

    study: str
    d: int
    law: str
    replicas: int
    base_seed: int = 0
    T_ladder: list = field(default_factory=list)
    L_ladder: list = field(default_factory=list)
    sizing_factor: int = 8
    side: int | None = None
    tol: float = DEFAULT_TOL
    xi: list | None = None
    T_ref_factor: float = 4.0
    reference: float | None = None
    mask_profile: str = "cos2"
    log_correction: bool = False
    preflight: bool = True
    expected_slope: list | None = None
    output_dir: str = "."
    stem: str | None = None
    code_version: str = field(default_factory=code_version)

    def __post_init__(self):
        if self.study not in STUDY_KINDS:
            raise ValueError(f"unknown study {self.study!r}; expected one of {STUDY_KINDS}")
        ConductivityLaw.parse(self.law)
        if self.replicas < 1:
            raise ValueError("replicas must be positive")

    @property
    def conductivity_law(self) -> ConductivityLaw:
        return ConductivityLaw.parse(self.law)

    @property
    def direction(self) -> np.ndarray:
        if self.xi is None:
            return np.eye(self.d)[0]
        v = np.asarray(self.xi, dtype=float)
        return v / np.linalg.norm(v)

    @property
    def name(self) -> str:
        return self.stem or f"{self.study}_d{self.d}"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "StudyManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown manifest fields: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "StudyManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")


# --- per-replica work ------------------------------------------------------------

def _environment(m: StudyManifest, n: int, replica: int) -> np.ndarray:
    key = StreamKey(m.base_seed, replica, f"{m.study}/d={m.d}/n={n}")
    return sample_environment(m.conductivity_law, TorusLattice(m.d, n), key)


def systematic_side(m: StudyManifest) -> int:
    # the largest solve is at 2 max(T)
    return m.side or side_for(2 * max(m.T_ladder), factor=m.sizing_factor)


def corrector_side(m: StudyManifest) -> int:
    return m.side or side_for(m.T_ref_factor * max(m.T_ladder), factor=m.sizing_factor)


def random_side(m: StudyManifest, L: int) -> int:
    return m.side or side_for(L * L, L, factor=m.sizing_factor)


def _systematic_replica(m: StudyManifest, replica: int) -> list[float]:
    a = _environment(m, systematic_side(m), replica)
    energies = {}
    phi = None
    for T in sorted(set(m.T_ladder) | {2 * T for T in m.T_ladder}):
        sol = solve_modified_corrector(a, T, m.direction, tol=m.tol, x0=phi)
        phi = sol.phi
        energies[T] = float(energy_density(a, sol.xi, sol.phi).mean())
    return [abs(energies[2 * T] - energies[T]) for T in m.T_ladder]


def _corrector_replica(m: StudyManifest, replica: int) -> list[float]:
    """``<(phi_T - phi_ref)^2>/T + <|grad(phi_T - phi_ref)|^2>`` per ladder T
    (gradient term only in two dimensions)."""
    a = _environment(m, corrector_side(m), replica)
    T_ref = m.T_ref_factor * max(m.T_ladder)
    ref = solve_modified_corrector(a, T_ref, m.direction, tol=m.tol)
    out = []
    phi = ref.phi
    for T in sorted(m.T_ladder, reverse=True):
        sol = solve_modified_corrector(a, T, m.direction, tol=m.tol, x0=phi)
        phi = sol.phi
        diff = sol.phi - ref.phi
        val = float((gradient(diff) ** 2).sum(axis=-1).mean())
        if m.d > 2:
            val += float((diff ** 2).mean()) / T
        out.append((T, val))
    lookup = dict(out)
    return [lookup[T] for T in m.T_ladder]


def _masked_replica(m: StudyManifest, replica: int) -> list[float]:
    vals = []
    for L in m.L_ladder:
        a = _environment(m, random_side(m, L), replica)
        vals.append(estimate_ATL(a, L * L, L, m.direction, tol=m.tol, profile=m.mask_profile).value)
    return vals


_WORKERS = {
    "systematic": _systematic_replica,
    "corrector": _corrector_replica,
    "random": _masked_replica,
    "full": _masked_replica,
}


def _replica_task(args):
    manifest_dict, replica = args
    m = StudyManifest.from_dict(manifest_dict)
    return _WORKERS[m.study](m, replica)


def worker_count() -> int:
    raw = os.environ.get("LATTHOM_THREADS")
    if raw is None:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"LATTHOM_THREADS must be an integer, got {raw!r}") from None
    return max(value, 1)


def run_replicas(m: StudyManifest, workers: int | None = None) -> np.ndarray:
    """Array ``(replicas, ladder points)``, rows in replica-index order."""
    workers = worker_count() if workers is None else workers
    payload = [(asdict(m), r) for r in range(m.replicas)]
    if workers <= 1:
        rows = [_replica_task(p) for p in payload]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replica_task, payload))
    return np.array(rows, dtype=float)


# --- pre-flight -------------------------------------------------------------------

def preflight(m: StudyManifest):
    """Identity suite on replica 0 at the smallest T of the study.

    The identities hold up to the solver residual, so they are evaluated with
    solves at ``min(m.tol, PREFLIGHT_SOLVER_TOL)``; a failure therefore points
    at the operator or the estimators rather than at the study tolerance.
    """
    if m.study == "systematic":
        n, T = systematic_side(m), min(m.T_ladder)
    elif m.study == "corrector":
        n, T = corrector_side(m), min(m.T_ladder)
    else:
        L = min(m.L_ladder)
        n, T = random_side(m, L), L * L
    a = _environment(m, n, 0)
    chi = StreamKey(m.base_seed, 0, "preflight/chi").generator().standard_normal(a.shape[:-1])
    tol = min(m.tol, PREFLIGHT_SOLVER_TOL)
    reports = [
        dyadic_difference(a, T, m.direction, tol=tol, check_tol=PREFLIGHT_TOL),
        energy_identity_check(a, T, m.direction, tol=tol, check_tol=PREFLIGHT_TOL),
        variational_identity_check(a, T, m.direction, chi, tol=tol, check_tol=PREFLIGHT_TOL),
    ]
    if not all(r.passed for r in reports):
        raise IdentityFailure(reports)
    return reports


# --- studies ----------------------------------------------------------------------

@dataclass
class StudyResult:
    manifest: StudyManifest
    x: np.ndarray
    value: np.ndarray
    stderr: np.ndarray
    replicas: np.ndarray
    samples: np.ndarray = field(repr=False)
    fit: ScalingFit | None = None


def _check(m: StudyManifest, kind: str):
    if m.study != kind:
        raise ValueError(f"manifest describes a {m.study!r} study, not {kind!r}")
    if m.replicas < MIN_REPLICAS[kind]:
        raise ValueError(f"{kind} study needs at least {MIN_REPLICAS[kind]} replicas")
    ladder = m.T_ladder if kind in ("systematic", "corrector") else m.L_ladder
    if not ladder:
        raise ValueError("empty ladder")
    if len(ladder) < 2:
        raise DegenerateData("ladder of length 1 admits no slope")


def _finish(m, x, value, stderr, samples) -> StudyResult:
    fit = fit_scaling(x, value, stderr, log_correction=m.log_correction)
    return StudyResult(m, np.asarray(x, dtype=float), value, stderr,
                       np.full(len(x), samples.shape[0]), samples, fit)


def _mean_and_se(samples: np.ndarray):
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(samples.shape[0])
    return mean, se


def run_systematic_error_study(m: StudyManifest, workers: int | None = None) -> StudyResult:
    """Mean same-sample ``|A_2T - A_T|`` along the T ladder."""
    _check(m, "systematic")
    if m.preflight:
        preflight(m)
    samples = run_replicas(m, workers)
    mean, se = _mean_and_se(samples)
    return _finish(m, m.T_ladder, mean, se, samples)


def run_corrector_convergence_study(m: StudyManifest, workers: int | None = None) -> StudyResult:
    _check(m, "corrector")
    if m.preflight:
        preflight(m)
    samples = run_replicas(m, workers)
    mean, se = _mean_and_se(samples)
    return _finish(m, m.T_ladder, mean, se, samples)


def run_random_error_study(m: StudyManifest, workers: int | None = None) -> StudyResult:
    """Sample standard deviation of the masked estimator per L, with T = L^2."""
    _check(m, "random")
    if m.preflight:
        preflight(m)
    samples = run_replicas(m, workers)
    std = samples.std(axis=0, ddof=1)
    se = std / np.sqrt(2 * (samples.shape[0] - 1))
    return _finish(m, m.L_ladder, std, se, samples)


def run_full_error_study(m: StudyManifest, workers: int | None = None) -> StudyResult:
    """Root-mean-square deviation of the masked estimator from ``m.reference``."""
    _check(m, "full")
    if m.reference is None:
        raise MissingReference("full-error study needs a reference value in the manifest")
    if m.preflight:
        preflight(m)
    samples = run_replicas(m, workers)
    sq = (samples - m.reference) ** 2
    ms, ms_se = _mean_and_se(sq)
    rms = np.sqrt(ms)
    se = np.where(rms > 0, ms_se / (2 * np.where(rms > 0, rms, 1)), 0.0)
    return _finish(m, m.L_ladder, rms, se, samples)


RUNNERS = {
    "systematic": run_systematic_error_study,
    "random": run_random_error_study,
    "corrector": run_corrector_convergence_study,
    "full": run_full_error_study,
}


def run_study(m: StudyManifest, workers: int | None = None) -> StudyResult:
    return RUNNERS[m.study](m, workers)


# --- reports ----------------------------------------------------------------------

def write_csv(path, x, value, stderr, replicas) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for xi, v, s, r in zip(x, value, stderr, replicas):
            ln_y = repr(math.log(v)) if v > 0 else "nan"
            w.writerow([repr(float(xi)), repr(float(v)), repr(float(s)), int(r),
                        repr(math.log(xi)), ln_y])


def read_csv(path) -> dict:
    """Columns of a report CSV as float arrays (``replicas`` as int)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {c: np.array([float(r[c]) for r in rows]) for c in CSV_COLUMNS}
    out["replicas"] = out["replicas"].astype(int)
    return out


def emit_report(result: StudyResult, out_dir=None) -> dict:
    """Write ``<name>.csv``, ``<name>.manifest.json`` and ``<name>.fit.json``."""
    m = result.manifest
    out = Path(out_dir if out_dir is not None else m.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / f"{m.name}.csv",
        "manifest": out / f"{m.name}.manifest.json",
        "fit": out / f"{m.name}.fit.json",
    }
    write_csv(paths["csv"], result.x, result.value, result.stderr, result.replicas)
    m.save(paths["manifest"])
    fit = result.fit.to_dict() if result.fit is not None else None
    paths["fit"].write_text(json.dumps(fit, indent=2, sort_keys=True) + "\n")
    return paths
