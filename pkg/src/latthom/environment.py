"""I.i.d. conductivity laws and reproducible sampling of edge fields."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .lattice import TorusLattice

LAW_KINDS = ("two_point", "uniform", "log_uniform")


@dataclass(frozen=True)
class ConductivityLaw:
    """Law of a single conductivity a(e) in [alpha, beta].

    ``two_point`` puts mass ``p`` on alpha and ``1 - p`` on beta.
    """

    kind: str
    alpha: float
    beta: float
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in LAW_KINDS:
            raise ValueError(f"unknown law {self.kind!r}; expected one of {LAW_KINDS}")
        if not 0 < self.alpha <= self.beta < np.inf:
            raise ValueError(f"need 0 < alpha <= beta < inf, got ({self.alpha}, {self.beta})")
        if self.kind == "two_point" and not 0 <= self.p <= 1:
            raise ValueError(f"two_point probability must lie in [0, 1], got {self.p}")

    @classmethod
    def two_point(cls, alpha, beta, p=0.5):
        return cls("two_point", float(alpha), float(beta), float(p))

    @classmethod
    def uniform(cls, alpha, beta):
        return cls("uniform", float(alpha), float(beta))

    @classmethod
    def log_uniform(cls, alpha, beta):
        return cls("log_uniform", float(alpha), float(beta))

    @classmethod
    def parse(cls, text: str) -> "ConductivityLaw":
        """Parse ``twopoint:0.25,4,0.5``, ``uniform:1,2`` or ``loguniform:0.1,10``."""
        name, _, args = text.partition(":")
        try:
            values = [float(v) for v in args.split(",") if v.strip()]
        except ValueError:
            raise ValueError(f"bad law parameters in {text!r}") from None
        name = name.strip().lower().replace("_", "").replace("-", "")
        if name == "twopoint" and len(values) == 3:
            return cls.two_point(*values)
        if name == "uniform" and len(values) == 2:
            return cls.uniform(*values)
        if name == "loguniform" and len(values) == 2:
            return cls.log_uniform(*values)
        raise ValueError(f"cannot parse law {text!r}")

    def spec_string(self) -> str:
        if self.kind == "two_point":
            return f"twopoint:{self.alpha!r},{self.beta!r},{self.p!r}"
        return f"{self.kind.replace('_', '')}:{self.alpha!r},{self.beta!r}"

    @property
    def deterministic(self) -> bool:
        return law_moments(self)[1] == 0.0


SELF_DUAL_LAW = ConductivityLaw.two_point(0.25, 4.0, 0.5)


def law_moments(law: ConductivityLaw) -> tuple[float, float]:
    """Closed-form (mean, variance) of the law."""
    a, b = law.alpha, law.beta
    if law.kind == "two_point":
        p = law.p
        mean = p * a + (1 - p) * b
        return mean, p * (1 - p) * (b - a) ** 2
    if law.kind == "uniform":
        return (a + b) / 2, (b - a) ** 2 / 12
    if a == b:
        return a, 0.0
    # log-uniform density 1 / (x ln(b/a)) on [a, b]
    ln = np.log(b / a)
    mean = (b - a) / ln
    second = (b * b - a * a) / (2 * ln)
    return float(mean), float(second - mean * mean)


@dataclass(frozen=True)
class StreamKey:
    """Identifies one independent random stream: (base seed, replica, purpose)."""

    base_seed: int
    replica_index: int = 0
    purpose: str = "environment"

    def generator(self) -> np.random.Generator:
        # Philox is counter-based: the stream depends only on the key, not on
        # how many other streams were drawn before or in which process.
        tag = zlib.crc32(self.purpose.encode())
        seq = np.random.SeedSequence(
            entropy=int(self.base_seed) & (2**64 - 1),
            spawn_key=(int(self.replica_index), tag),
        )
        return np.random.Generator(np.random.Philox(seq))


def sample_values(law: ConductivityLaw, size, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(size)
    if law.kind == "two_point":
        vals = np.where(u < law.p, law.alpha, law.beta)
    elif law.kind == "uniform":
        vals = law.alpha + (law.beta - law.alpha) * u
    else:
        la, lb = np.log(law.alpha), np.log(law.beta)
        vals = np.exp(la + (lb - la) * u)
    return np.clip(vals, law.alpha, law.beta)


def sample_environment(law: ConductivityLaw, lattice: TorusLattice, key: StreamKey) -> np.ndarray:
    """One i.i.d. draw per canonical edge, shape ``lattice.edge_shape``."""
    return sample_values(law, lattice.edge_shape, key.generator())
