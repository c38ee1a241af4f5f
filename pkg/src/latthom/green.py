"""Green functions of ``1/T - div(A grad)`` and numerical checks of their
decay, Harnack and convolution estimates."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .lattice import SizingError, TorusLattice, divergence, gradient
from .solver import DEFAULT_TOL, OperatorSpec, cg_solve

SIZING_FACTOR = 8
DECAY_EXPONENT = 3
PROFILE_COLUMNS = ("R_lo", "R_hi", "sup_G", "l2_G", "l2_gradG", "envelope", "ratio")


class SubsolutionViolation(ValueError):
    """A field handed to the Harnack check is negative or not a subsolution."""

    def __init__(self, message, site=None):
        super().__init__(message)
        self.site = site


def log_factor(d: int, T: float) -> float:
    """``ln T`` in two dimensions, 1 otherwise."""
    return float(np.log(T)) if d == 2 else 1.0


@dataclass(frozen=True)
class GreenFunction:
    pole: tuple
    T: float
    values: np.ndarray

    @property
    def lattice(self) -> TorusLattice:
        return TorusLattice.of(self.values)

    def mass_defect(self) -> float:
        """``|sum(G)/T - 1|``; zero up to solver tolerance."""
        return abs(float(self.values.sum()) / self.T - 1.0)


def green_solution(a: np.ndarray, T: float, pole, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Values of ``G_T(., pole)``: solution of ``G/T - div(A grad G) = delta_pole``."""
    if not 0 < T < np.inf:
        raise ValueError(f"T must be positive and finite, got {T}")
    lat = TorusLattice.of(a, "edge")
    rhs = np.zeros(lat.shape)
    rhs[tuple(np.mod(pole, lat.n))] = 1.0
    G, _ = cg_solve(OperatorSpec.from_T(a, T), rhs, tol=tol)
    return G


def green_function(a: np.ndarray, T: float, pole, tol: float = DEFAULT_TOL) -> GreenFunction:
    lat = TorusLattice.of(a, "edge")
    pole = tuple(int(c) % lat.n for c in pole)
    return GreenFunction(pole, float(T), green_solution(a, T, pole, tol=tol))


# --- reference envelopes -------------------------------------------------------

def decay_envelope(d: int, T: float, r, k: float = DECAY_EXPONENT) -> np.ndarray:
    """Pointwise decay envelope for ``G_T`` at distance ``r``.

    ``d > 2``: ``(1+r)^(2-d) min(1, (r/sqrt T)^-k)``.
    ``d = 2``: ``ln(sqrt T / (1+r))`` for ``r <= sqrt(T)/2``, ``(r/sqrt T)^-k``
    for ``r >= sqrt T``, and NaN in between where the logarithmic bound
    degenerates.
    """
    r = np.asarray(r, dtype=float)
    s = np.sqrt(T)
    with np.errstate(divide="ignore"):
        far = np.minimum(1.0, (r / s) ** (-k))
    if d > 2:
        return (1 + r) ** (2 - d) * far
    if d != 2:
        raise ValueError("decay envelope needs d >= 2")
    near = np.log(s / (1 + r))
    return np.where(r <= s / 2, near, np.where(r >= s, far, np.nan))


def convolution_envelope(d: int, T: float, r, k: float = DECAY_EXPONENT) -> np.ndarray:
    """Outer factor of the convolution estimate: the decay envelope, with the
    two-dimensional logarithm taken in its decreasing form ``ln(sqrt T/(1+r))``
    up to ``r = sqrt T`` and the algebraic tail beyond."""
    r = np.asarray(r, dtype=float)
    s = np.sqrt(T)
    if d > 2:
        return decay_envelope(d, T, r, k)
    with np.errstate(divide="ignore"):
        far = np.minimum(1.0, (r / s) ** (-k))
    return np.where(r <= s, np.log(s / (1 + r)), far)


def gradient_envelope(d: int, T: float, r) -> np.ndarray:
    """``(1+r)^(1-d) min(1, sqrt(T)/r)``, saturating the annulus assumptions."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        cut = np.minimum(1.0, np.sqrt(T) / r)
    return (1 + r) ** (1 - d) * cut


# --- decay profile -------------------------------------------------------------

@dataclass
class DecayProfile:
    """Per-annulus statistics of a node field around a pole.

    Rows follow :data:`PROFILE_COLUMNS`. ``envelope`` is the reference envelope
    at the inner radius (its supremum over the annulus) and ``ratio`` is
    ``sup_G / envelope``; both are NaN where no envelope is defined.
    """

    d: int
    T: float
    rows: np.ndarray = field(repr=False)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, PROFILE_COLUMNS.index(name)]

    @property
    def radii(self) -> np.ndarray:
        return self.column("R_lo")

    def near_field(self) -> np.ndarray:
        """Boolean row mask for annuli with ``R_hi <= sqrt(T)/2``."""
        return self.column("R_hi") <= np.sqrt(self.T) / 2

    def far_field(self, factor: float = 4.0) -> np.ndarray:
        return self.column("R_lo") >= factor * np.sqrt(self.T)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(PROFILE_COLUMNS)
            for row in self.rows:
                w.writerow([repr(float(v)) for v in row])


def _check_sizing(lat: TorusLattice, T: float) -> None:
    if lat.n < SIZING_FACTOR * np.sqrt(T):
        raise SizingError(
            f"torus side {lat.n} is below {SIZING_FACTOR} sqrt(T) = {SIZING_FACTOR * np.sqrt(T):.1f}")


def annulus_envelope(d: int, T: float, R_lo: float, R_hi: float,
                     k: float = DECAY_EXPONENT) -> float:
    """Supremum of the decay envelope over ``(R_lo, R_hi]``, i.e. its value at
    ``R_lo``; NaN when a two-dimensional annulus meets the band
    ``(sqrt(T)/2, sqrt T)`` where no envelope is defined."""
    s = np.sqrt(T)
    if d == 2 and not (R_hi <= s / 2 or R_lo >= s):
        return np.nan
    return float(decay_envelope(d, T, R_lo, k))


def decay_profile(G: GreenFunction, k: float = DECAY_EXPONENT, R0: float = 1.0) -> DecayProfile:
    """Dyadic-annulus profile ``(R, 2R]`` of ``G`` out to half the torus side.

    Raises
    ------
    SizingError
        If the torus side is below ``8 sqrt(T)``.
    """
    lat = G.lattice
    _check_sizing(lat, G.T)
    r = lat.distance(G.pole)
    grad2 = (gradient(G.values) ** 2).sum(axis=-1)
    rows = []
    R = float(R0)
    while 2 * R <= lat.n / 2:
        ring = (r > R) & (r <= 2 * R)
        vals = G.values[ring]
        env = annulus_envelope(lat.d, G.T, R, 2 * R, k)
        sup = float(vals.max())
        l2 = float(np.sqrt((vals ** 2).sum() / R ** lat.d))
        l2g = float(np.sqrt(grad2[ring].sum() / R ** lat.d))
        ratio = sup / env if np.isfinite(env) and env > 0 else np.nan
        rows.append((R, 2 * R, sup, l2, l2g, env if np.isfinite(env) else np.nan, ratio))
        R *= 2
    return DecayProfile(lat.d, G.T, np.array(rows, dtype=float).reshape(-1, len(PROFILE_COLUMNS)))


@dataclass(frozen=True)
class GradientAnnuli:
    """Per-annulus ``sum |grad G|^2`` against the reference scale.

    The reference is ``R^(2-d)`` for ``d > 2`` and ``min(1, sqrt(T)/R)^2`` for
    ``d = 2``.
    """

    R_lo: np.ndarray
    energy: np.ndarray
    reference: np.ndarray

    @property
    def ratio(self) -> np.ndarray:
        return self.energy / self.reference


def gradient_annuli_norms(G: GreenFunction, R0: float = 1.0) -> GradientAnnuli:
    lat = G.lattice
    _check_sizing(lat, G.T)
    r = lat.distance(G.pole)
    grad2 = (gradient(G.values) ** 2).sum(axis=-1)
    Rs, energy = [], []
    R = float(R0)
    while 2 * R <= lat.n / 2:
        Rs.append(R)
        energy.append(float(grad2[(r > R) & (r <= 2 * R)].sum()))
        R *= 2
    Rs = np.array(Rs)
    if lat.d > 2:
        ref = Rs ** (2.0 - lat.d)
    else:
        ref = np.minimum(1.0, np.sqrt(G.T) / Rs) ** 2
    return GradientAnnuli(Rs, np.array(energy), ref)


def near_origin_energy(G: GreenFunction, radius: float = 2.0) -> float:
    """``sum_{|z| <= radius} |grad G(z)|^2``."""
    r = G.lattice.distance(G.pole)
    grad2 = (gradient(G.values) ** 2).sum(axis=-1)
    return float(grad2[r <= radius].sum())


# --- Harnack -------------------------------------------------------------------

def harnack_ratio(g: np.ndarray, a: np.ndarray, center, R: float,
                  tol: float = 1e-8) -> float:
    """``sup_{R<|x|<=2R} g / (R^-d sum_{R/2<|x|<=4R} g^2)^(1/2)``.

    ``g`` must be nonnegative with ``-div(A grad g) <= 0`` on the enlarged
    annulus; ``tol`` is the allowed violation relative to ``max|g| max a``.

    Raises
    ------
    SubsolutionViolation
        Naming the first offending site.
    SizingError
        If ``4R > n/2``.
    """
    lat = TorusLattice.of(g)
    if not 4 * R <= lat.n / 2:
        raise SizingError(f"4R = {4 * R} does not fit inside half the torus side {lat.n}")
    r = lat.distance(center)
    big = (r > R / 2) & (r <= 4 * R)
    scale = tol * max(float(np.abs(g).max()), 1e-300) * float(a.max())
    neg = big & (g < -scale)
    if neg.any():
        site = tuple(int(c) for c in np.argwhere(neg)[0])
        raise SubsolutionViolation(f"field is negative at {site}", site)
    Lg = -divergence(a * gradient(g))
    bad = big & (Lg > scale)
    if bad.any():
        site = tuple(int(c) for c in np.argwhere(bad)[0])
        raise SubsolutionViolation(f"-div(A grad g) = {Lg[site]:.3e} > 0 at {site}", site)
    sup = float(g[(r > R) & (r <= 2 * R)].max())
    avg = float(np.sqrt((g[big] ** 2).sum() / R ** lat.d))
    return sup / avg


def harnack_profile(G: GreenFunction, a: np.ndarray, radii) -> np.ndarray:
    return np.array([harnack_ratio(G.values, a, G.pole, R) for R in radii])


def harnack_radii(n: int, R0: int = 2) -> list[int]:
    """Dyadic radii from ``R0`` while ``R <= n/8``."""
    out, R = [], R0
    while R <= n / 8:
        out.append(R)
        R *= 2
    return out


# --- convolution estimate --------------------------------------------------------

@dataclass(frozen=True)
class ConvolutionScaling:
    d: int
    T: np.ndarray
    values: np.ndarray
    radii: np.ndarray
    slope: float


def convolution_value(d: int, T: float, radius: int) -> float:
    """``sum_z g_T(z) sum_w h_T(w) h_T(z-w)`` on the cube ``|z|_inf <= radius``.

    Both sums run over the truncated lattice ball ``|z| <= radius``; the inner
    convolution is a zero-padded FFT convolution.
    """
    radius = int(radius)
    m = 2 * radius + 1
    axis = np.arange(-radius, radius + 1, dtype=float)
    r2 = np.zeros((m,) * d)
    for i in range(d):
        shape = [1] * d
        shape[i] = m
        r2 = r2 + axis.reshape(shape) ** 2
    r = np.sqrt(r2)
    del r2
    ball = r <= radius
    h = np.where(ball, gradient_envelope(d, T, r), 0.0)
    size = scipy.fft.next_fast_len(3 * radius + 1, real=True)
    # circular convolution of length >= 3 radius + 1 is exact on |z| <= radius
    H = scipy.fft.rfftn(h, s=(size,) * d, workers=-1)
    del h
    conv = scipy.fft.irfftn(H * H, s=(size,) * d, workers=-1)
    del H
    # h is centred at index ``radius``, so h*h is centred at ``2 radius``
    window = tuple(slice(radius, radius + m) for _ in range(d))
    hh = conv[window]
    g = np.where(ball, convolution_envelope(d, T, r), 0.0)
    return float((g * hh).sum())


def convolution_scaling(d: int, T_ladder, radius_factor: float = 8.0,
                        radius: int | None = None, strict: bool = True) -> ConvolutionScaling:
    """Evaluate :func:`convolution_value` along a T ladder and fit the log-log slope.

    The truncation radius is ``ceil(radius_factor sqrt T)`` unless a fixed
    ``radius`` is given.

    Raises
    ------
    SizingError
        If ``strict`` and the radius is below ``8 sqrt(T)``.
    """
    Ts = np.asarray(T_ladder, dtype=float)
    if Ts.size < 2:
        raise ValueError("need at least two T values")
    radii = []
    values = []
    for T in Ts:
        rho = int(radius) if radius is not None else int(np.ceil(radius_factor * np.sqrt(T)))
        if strict and rho < SIZING_FACTOR * np.sqrt(T):
            raise SizingError(f"truncation radius {rho} is below 8 sqrt(T) for T = {T}")
        radii.append(rho)
        values.append(convolution_value(d, T, rho))
    values = np.array(values)
    slope = float(np.polyfit(np.log(Ts), np.log(values), 1)[0])
    return ConvolutionScaling(d, Ts, values, np.array(radii), slope)
