"""Distributions over {0,1}^n used for expectations and bias computations.

Probability vectors and spectra are indexed by int masks: entry r belongs to
the string whose bit j is bit j of r.  Spectrum entry s is E[chi_s(X)].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bits import all_strings, index_bits, walsh_hadamard
from .errors import CapExceeded

ENUM_CAP_BITS = 30


def _cap(bits: int, max_bits: int):
    if bits > max_bits:
        raise CapExceeded(f"enumerating 2^{bits} points exceeds cap 2^{max_bits}")


class Dist:
    def probabilities(self, n: int, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
        raise NotImplementedError

    def spectrum(self, n: int, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
        return walsh_hadamard(self.probabilities(n, max_bits))


@dataclass(frozen=True)
class Uniform(Dist):
    def means(self, n: int) -> np.ndarray:
        return np.full(n, 0.5)

    def probabilities(self, n, max_bits=ENUM_CAP_BITS):
        _cap(n, max_bits)
        return np.full(1 << n, 1.0 / (1 << n))


@dataclass(frozen=True)
class Product(Dist):
    """Independent bits, bit j equal to 1 with probability p[j] (or p for every bit)."""

    p: tuple[float, ...] | float

    def means(self, n: int) -> np.ndarray:
        if np.ndim(self.p) == 0:
            return np.full(n, float(self.p))
        m = np.asarray(self.p, dtype=float)
        if m.size != n:
            raise ValueError(f"product distribution has {m.size} means, need {n}")
        return m

    def probabilities(self, n, max_bits=ENUM_CAP_BITS):
        _cap(n, max_bits)
        m = self.means(n)
        X = all_strings(n)
        return np.prod(np.where(X == 1, m, 1 - m), axis=1)


@dataclass(frozen=True, eq=False)
class Enumerated(Dist):
    """Finite support with weights summing to 1."""

    points: np.ndarray
    weights: np.ndarray

    @classmethod
    def from_samples(cls, points) -> Enumerated:
        pts = np.asarray(points, dtype=np.uint8)
        return cls(pts, np.full(len(pts), 1.0 / len(pts)))

    @property
    def n(self) -> int:
        return int(self.points.shape[1])

    def probabilities(self, n, max_bits=ENUM_CAP_BITS):
        _cap(n, max_bits)
        if n != self.n:
            raise ValueError(f"distribution lives on {self.n} bits, not {n}")
        idx = (self.points.astype(np.int64) << np.arange(n)).sum(axis=1)
        out = np.zeros(1 << n)
        np.add.at(out, idx, self.weights)
        return out


@dataclass(frozen=True, eq=False)
class SeedSampler(Dist):
    """Output of a seeded sampler under a uniform seed.

    ``sample`` maps a seed bit array to an n-bit array; ``batch`` (optional)
    maps an (N, seed_length) seed matrix to (N, n) outputs.
    """

    n: int
    seed_length: int
    sample: Callable[[np.ndarray], np.ndarray]
    batch: Callable[[np.ndarray], np.ndarray] | None = None

    def outputs(self, seeds: np.ndarray) -> np.ndarray:
        if self.batch is not None:
            return np.asarray(self.batch(seeds), dtype=np.uint8)
        if len(seeds) == 0:
            return np.zeros((0, self.n), dtype=np.uint8)
        return np.stack([self.sample(s) for s in seeds]).astype(np.uint8)

    def support(self, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
        """Outputs on every seed, seed r at row r."""
        _cap(self.seed_length, max_bits)
        return self.outputs(all_strings(self.seed_length))

    def probabilities(self, n, max_bits=ENUM_CAP_BITS):
        _cap(n, max_bits)
        if n != self.n:
            raise ValueError(f"sampler outputs {self.n} bits, not {n}")
        out = np.zeros(1 << n)
        L = self.seed_length
        chunk = 1 << 16
        _cap(L, max_bits)
        for start in range(0, 1 << L, chunk):
            seeds = index_bits(np.arange(start, min(1 << L, start + chunk)), L)
            Y = self.outputs(seeds)
            np.add.at(out, (Y.astype(np.int64) << np.arange(n)).sum(axis=1), 1.0)
        return out / (1 << L)


def xor(a: Dist, b: Dist, n: int, max_bits: int = 20) -> Enumerated:
    """Distribution of X xor Y for independent X ~ a and Y ~ b."""
    pa = a.probabilities(n, max_bits)
    pb = b.probabilities(n, max_bits)
    idx = np.arange(1 << n)
    out = np.zeros(1 << n)
    for y in np.flatnonzero(pb):
        out[idx ^ y] += pa * pb[y]
    return Enumerated(all_strings(n), out)
