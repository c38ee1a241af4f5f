"""Periodic lattice geometry and discrete calculus on the torus Z^d / nZ^d.

Fields are plain numpy arrays:

* node fields have shape ``(n,) * d`` (row-major, last coordinate fastest);
* edge fields and site vector fields have shape ``(n,) * d + (d,)``; entry
  ``[x, i]`` belongs to the canonical edge ``[x, x + e_i]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class SizingError(ValueError):
    """Requested geometry does not fit on the torus."""


@dataclass(frozen=True)
class TorusLattice:
    d: int
    n: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.n < 2:
            raise ValueError(f"side length must be >= 2, got {self.n}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def edge_shape(self) -> tuple[int, ...]:
        return self.shape + (self.d,)

    @property
    def num_sites(self) -> int:
        return self.n ** self.d

    @property
    def num_edges(self) -> int:
        return self.d * self.n ** self.d

    @classmethod
    def of(cls, field: np.ndarray, kind: str = "node") -> "TorusLattice":
        """Recover the lattice from a node or edge field."""
        if kind == "node":
            return cls(field.ndim, field.shape[0])
        if kind == "edge":
            return cls(field.ndim - 1, field.shape[0])
        raise ValueError(f"unknown field kind {kind!r}")

    def site_index(self, x) -> int:
        """Row-major flat index of site ``x`` (coordinates taken mod n)."""
        return int(np.ravel_multi_index(tuple(np.mod(x, self.n)), self.shape))

    def site(self, index: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.unravel_index(index, self.shape))

    def neighbors(self, x) -> list[tuple[int, ...]]:
        x = np.asarray(x)
        out = []
        for i in range(self.d):
            for s in (1, -1):
                y = x.copy()
                y[i] = (y[i] + s) % self.n
                out.append(tuple(int(c) for c in y))
        return out

    def displacement(self, center=None) -> np.ndarray:
        """Minimal-image displacement of every site from ``center``.

        Returns an array of shape ``(n,)*d + (d,)`` with entries in
        ``[-n//2, n - n//2)``.
        """
        center = np.zeros(self.d, dtype=int) if center is None else np.asarray(center)
        grids = np.meshgrid(*[np.arange(self.n)] * self.d, indexing="ij")
        disp = np.stack([g - c for g, c in zip(grids, center)], axis=-1)
        return (disp + self.n // 2) % self.n - self.n // 2

    def distance(self, center=None) -> np.ndarray:
        """Minimal-image Euclidean distance of every site from ``center``."""
        return np.sqrt((self.displacement(center) ** 2).sum(axis=-1))


def gradient(u: np.ndarray) -> np.ndarray:
    """Forward differences ``u(x + e_i) - u(x)`` stacked on the last axis."""
    return np.stack([np.roll(u, -1, axis=i) - u for i in range(u.ndim)], axis=-1)


def divergence(F: np.ndarray) -> np.ndarray:
    """Backward-difference divergence ``sum_i F_i(x) - F_i(x - e_i)``.

    With this sign convention ``-divergence`` is the counting-measure adjoint
    of :func:`gradient`, i.e. ``sum(gradient(u) * F) == -sum(u * divergence(F))``,
    and ``-divergence(a * gradient(u))`` is a nonnegative operator.
    """
    d = F.shape[-1]
    out = np.zeros(F.shape[:-1])
    for i in range(d):
        out += F[..., i] - np.roll(F[..., i], 1, axis=i)
    return out


def apply_operator(spec, u: np.ndarray) -> np.ndarray:
    """Evaluate ``mass * u - div(A grad u)`` for an operator spec.

    ``spec`` needs ``conductivity`` (edge field) and ``mass`` (= 1/T).
    """
    return spec.mass * u - divergence(spec.conductivity * gradient(u))


def dirichlet_form(a: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """``sum_e a(e) (u(y)-u(x)) (v(y)-v(x))`` over canonical edges."""
    return float((gradient(u) * a * gradient(v)).sum())


def mask_eta(lattice: TorusLattice, L: int, profile: str = "cos2") -> np.ndarray:
    """Averaging mask of unit mass supported in Q_L = [-L, L)^d around the origin.

    ``profile='cos2'`` uses the separable profile prod_i cos^2(pi x_i / 2L);
    ``profile='flat'`` is the uniform weight on Q_L (with 2L = n this is the
    plain torus average).
    """
    if L < 1 or 2 * L > lattice.n:
        raise SizingError(f"mask half-width L={L} does not fit on a torus of side {lattice.n}")
    disp = lattice.displacement()
    inside = np.all((disp >= -L) & (disp < L), axis=-1)
    if profile == "cos2":
        weight = np.prod(np.cos(np.pi * disp / (2 * L)) ** 2, axis=-1)
    elif profile == "flat":
        weight = np.ones(lattice.shape)
    else:
        raise ValueError(f"unknown mask profile {profile!r}")
    eta = np.where(inside, weight, 0.0)
    return eta / eta.sum()


def annulus_sites(lattice: TorusLattice, center, R_lo: float, R_hi: float) -> np.ndarray:
    """Flat indices of sites with ``R_lo < |x - center| <= R_hi`` (torus metric)."""
    if not 0 <= R_lo < R_hi:
        raise ValueError(f"need 0 <= R_lo < R_hi, got ({R_lo}, {R_hi})")
    r = lattice.distance(center).ravel()
    return np.flatnonzero((r > R_lo) & (r <= R_hi))


def dyadic_annuli(R0: float, R_max: float) -> list[tuple[float, float]]:
    """Consecutive annuli (R, 2R] starting at R0 while 2R <= R_max."""
    out = []
    R = R0
    while 2 * R <= R_max:
        out.append((R, 2 * R))
        R *= 2
    return out


def write_field(path, field: np.ndarray, kind: str = "node") -> None:
    """Write a field: one JSON header line then little-endian float64 data."""
    lat = TorusLattice.of(field, kind)
    header = json.dumps({"d": lat.d, "n": lat.n, "kind": kind})
    with open(path, "wb") as fh:
        fh.write(header.encode() + b"\n")
        fh.write(np.ascontiguousarray(field, dtype="<f8").tobytes())


def read_field(path) -> tuple[np.ndarray, str]:
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    meta = json.loads(head)
    lat = TorusLattice(meta["d"], meta["n"])
    kind = meta["kind"]
    shape = lat.shape if kind == "node" else lat.edge_shape
    data = np.frombuffer(body, dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: expected {int(np.prod(shape))} values, found {data.size}")
    return data.reshape(shape).astype(float), kind
