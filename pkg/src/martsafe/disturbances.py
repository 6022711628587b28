"""Disturbance distribution families with samplers and exact moments.

Every family exposes ``dim``, ``sample(rng)`` / ``sample_batch(rng, n)`` and
``exact_moments()``.  Scalar families return floats (mean, variance); vector
families return (mean vector, covariance matrix).  Exact moments are what the
martingale machinery uses to evaluate conditional expectations, so they are
closed forms, never sample estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "UniformInterval",
    "TruncatedGaussian",
    "Categorical",
    "UniformDisk2",
    "ProductOfDisks",
    "UniformBall",
    "Disturbance",
]


def _norm_pdf(z: float) -> float:
    return math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)


def _norm_cdf(z: float) -> float:
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


@dataclass(frozen=True)
class UniformInterval:
    """Uniform distribution on [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    dim = 1

    def exact_moments(self) -> tuple[float, float]:
        mean = 0.5 * (self.lo + self.hi)
        var = (self.hi - self.lo) ** 2 / 12.0
        return mean, var

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.uniform(self.lo, self.hi))

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=n)

    def support_bound(self) -> float:
        return max(abs(self.lo), abs(self.hi))


@dataclass(frozen=True)
class TruncatedGaussian:
    """Normal(mean, std^2) conditioned on [lo, hi], sampled by rejection."""

    mean: float
    std: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.std <= 0.0:
            raise ValueError(f"std must be > 0, got {self.std}")
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got [{self.lo}, {self.hi}]")

    dim = 1

    def exact_moments(self) -> tuple[float, float]:
        a = (self.lo - self.mean) / self.std
        b = (self.hi - self.mean) / self.std
        z = _norm_cdf(b) - _norm_cdf(a)
        pa, pb = _norm_pdf(a), _norm_pdf(b)
        m = (pa - pb) / z
        mean = self.mean + self.std * m
        var = self.std**2 * (1.0 + (a * pa - b * pb) / z - m * m)
        return mean, var

    def sample(self, rng: np.random.Generator) -> float:
        while True:
            x = rng.normal(self.mean, self.std)
            if self.lo <= x <= self.hi:
                return float(x)

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty(n)
        filled = 0
        while filled < n:
            # Acceptance is ~0.68 for a +-1 sigma window; oversample a bit.
            want = n - filled
            cand = rng.normal(self.mean, self.std, size=int(want * 1.6) + 16)
            cand = cand[(cand >= self.lo) & (cand <= self.hi)]
            take = min(want, cand.size)
            out[filled : filled + take] = cand[:take]
            filled += take
        return out

    def support_bound(self) -> float:
        return max(abs(self.lo), abs(self.hi))


@dataclass(frozen=True)
class Categorical:
    """Finite distribution over scalar atoms [(value, prob), ...]."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(v), float(p)) for v, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        total = sum(p for _, p in atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {total}")
        if any(p < 0.0 for _, p in atoms):
            raise ValueError("probabilities must be nonnegative")

    dim = 1

    def exact_moments(self) -> tuple[float, float]:
        mean = sum(v * p for v, p in self.atoms)
        second = sum(v * v * p for v, p in self.atoms)
        return mean, second - mean * mean

    def sample(self, rng: np.random.Generator) -> float:
        u = rng.random()
        acc = 0.0
        for v, p in self.atoms:
            acc += p
            if u < acc:
                return v
        return self.atoms[-1][0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random(size=n)
        values = np.array([v for v, _ in self.atoms])
        edges = np.cumsum([p for _, p in self.atoms])
        idx = np.searchsorted(edges, u, side="right")
        return values[np.minimum(idx, len(values) - 1)]

    def support_bound(self) -> float:
        return max(abs(v) for v, _ in self.atoms)


@dataclass(frozen=True)
class UniformDisk2:
    """Uniform distribution on the closed planar disk of given radius."""

    radius: float

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")

    dim = 2

    def exact_moments(self) -> tuple[np.ndarray, np.ndarray]:
        # E[r^2] = R^2/2 split isotropically over two coordinates.
        cov = (self.radius**2 / 4.0) * np.eye(2)
        return np.zeros(2), cov

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        r = self.radius * math.sqrt(rng.random())
        th = 2.0 * math.pi * rng.random()
        return np.array([r * math.cos(th), r * math.sin(th)])

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        r = self.radius * np.sqrt(rng.random(size=n))
        th = 2.0 * math.pi * rng.random(size=n)
        return np.column_stack([r * np.cos(th), r * np.sin(th)])

    def support_bound(self) -> float:
        return self.radius


@dataclass(frozen=True)
class ProductOfDisks:
    """Independent uniform planar disks, one per 2-block of coordinates."""

    radii: tuple[float, ...]

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if any(r < 0.0 for r in radii):
            raise ValueError("all radii must be >= 0")

    @property
    def dim(self) -> int:
        return 2 * len(self.radii)

    def exact_moments(self) -> tuple[np.ndarray, np.ndarray]:
        diag = np.repeat([r * r / 4.0 for r in self.radii], 2)
        return np.zeros(self.dim), np.diag(diag)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return np.concatenate([UniformDisk2(r).sample(rng) for r in self.radii])

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return np.hstack([UniformDisk2(r).sample_batch(rng, n) for r in self.radii])

    def support_bound(self) -> float:
        return math.sqrt(sum(r * r for r in self.radii))


@dataclass(frozen=True)
class UniformBall:
    """Uniform distribution on an n-ball; covariance is R^2/(n+2) I."""

    radius: float
    ndim: int

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError(f"radius must be >= 0, got {self.radius}")
        if self.ndim < 1:
            raise ValueError(f"ndim must be >= 1, got {self.ndim}")

    @property
    def dim(self) -> int:
        return self.ndim

    def exact_moments(self) -> tuple[np.ndarray, np.ndarray]:
        cov = (self.radius**2 / (self.ndim + 2.0)) * np.eye(self.ndim)
        return np.zeros(self.ndim), cov

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        g = rng.normal(size=(n, self.ndim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(size=(n, 1)) ** (1.0 / self.ndim)
        return g * r

    def support_bound(self) -> float:
        return self.radius


Disturbance = (
    UniformInterval | TruncatedGaussian | Categorical | UniformDisk2
    | ProductOfDisks | UniformBall
)
