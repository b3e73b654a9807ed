"""Select, parameters, seed accounting and the two recursive generators.

``perm`` fools permutation programs using an almost 2k-wise independent
restriction mask; ``general`` fools arbitrary read-once oblivious programs
using an exactly 2k-wise independent one.  Parameters are computed once
from the top-level length and frozen for every recursion level.

Seed layout, per level: the T-sampler's bits, then the X-sampler's bits,
then the child level.  The base level consumes n raw bits.  A level that
fails the |T| test skips the rest of its subtree, so every run consumes
exactly seed_length bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np

from .bits import as_bits
from .errors import ParameterError, ProgramError
from .gf2m import MAX_FIELD_DEGREE
from .samplers import (
    MAX_KWISE_SEED_BITS,
    SeedStream,
    almost_kwise_base_bias,
    almost_kwise_mask,
    almost_kwise_seed_length,
    ceil_log2,
    exact,
    kwise_bits,
    kwise_degree,
    kwise_seed_length,
    small_bias,
    small_bias_degree,
    small_bias_seed_length,
)

VARIANTS = ("perm", "general")


def select(t, x, y) -> np.ndarray:
    """x on the positions of t, y streamed into the rest (surplus y ignored)."""
    t = as_bits(t)
    x = as_bits(x, t.size)
    y = as_bits(y)
    free = np.flatnonzero(t == 0)
    if y.size < free.size:
        raise ProgramError(f"y has {y.size} bits, {free.size} needed")
    out = x.copy()
    out[free] = y[:free.size]
    return out


def select_batch(T: np.ndarray, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Row-wise select; rows with too short a y are left as garbage (caller masks them)."""
    rank = np.cumsum(1 - T.astype(np.int64), axis=1) - 1
    idx = np.clip(rank, 0, max(Y.shape[1] - 1, 0))
    if Y.shape[1] == 0:
        filled = np.zeros_like(X)
    else:
        filled = np.take_along_axis(Y, idx, axis=1)
    return np.where(T == 1, X, filled).astype(np.uint8)


# ---------- parameters


def _ratio_sqrt_upper(num: int, den: int = 1, bits: int = 64) -> Fraction:
    """A rational r >= sqrt(num/den), within a 2^-bits relative margin."""
    shift = max(0, bits - (num.bit_length() - den.bit_length()) // 2)
    scaled = (num << (2 * shift)) // den + 1
    return Fraction(isqrt(scaled) + 1, 1 << shift)


@dataclass(frozen=True)
class PrgParams:
    variant: str
    n0: int
    w: int
    eps: Fraction
    d: int
    k: int
    mu: Fraction
    delta: Fraction | None = None
    # recursion stops once n drops to or below this length
    base_cutoff: float = field(default=0.0)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}")
        if self.w < 2:
            raise ParameterError("width 1 is degenerate; need w >= 2")
        object.__setattr__(self, "eps", exact(self.eps))
        object.__setattr__(self, "mu", exact(self.mu))
        if self.delta is not None:
            object.__setattr__(self, "delta", exact(self.delta))
        if self.variant == "perm" and self.delta is None:
            raise ParameterError("perm variant needs delta")
        if not 0 < self.mu < 1:
            raise ParameterError(f"mu={self.mu} outside (0, 1)")
        if self.d < 1 or self.k < 1:
            raise ParameterError(f"need d >= 1 and k >= 1, got d={self.d}, k={self.k}")

    @property
    def p(self) -> Fraction:
        return Fraction(1, 1 << self.d)

    def is_base(self, n: int) -> bool:
        return n <= self.base_cutoff

    def next_length(self, n: int) -> int:
        """floor(n (1 - p/2))."""
        q = 1 << (self.d + 1)
        return n * (q - 1) // q

    def step4_fails(self, n: int, weight: int) -> bool:
        """|T| < p n / 2."""
        return weight * (1 << (self.d + 1)) < n

    def t_bits(self, n: int) -> int:
        if self.variant == "perm":
            return almost_kwise_seed_length(n, self.d, 2 * self.k, self.delta)
        return kwise_seed_length(n, self.d, 2 * self.k)

    def x_bits(self, n: int) -> int:
        return small_bias_seed_length(n, self.mu)

    def t_field_degree(self, n: int) -> int:
        if self.variant == "perm":
            return small_bias_degree(n * self.d, almost_kwise_base_bias(self.d, 2 * self.k, self.delta))
        return kwise_degree(n, self.d)

    def summary(self) -> dict:
        return {
            "variant": self.variant, "n0": self.n0, "w": self.w, "eps": float(self.eps),
            "p": float(self.p), "d": self.d, "k": self.k,
            "delta": None if self.delta is None else float(self.delta),
            "log2_delta": None if self.delta is None else _log2(self.delta),
            "mu": float(self.mu), "log2_mu": _log2(self.mu), "base_cutoff": self.base_cutoff,
        }


def _log2(q: Fraction) -> float:
    return math.log2(q.numerator) - math.log2(q.denominator)


def base_cutoff(variant: str, eps, d: int) -> float:
    """Largest n handled by outputting raw bits."""
    lg = math.log2(2 / float(eps))
    if variant == "perm":
        return (4 * lg * (1 << d)) ** 2
    return 16 * lg * (1 << d)


def _min_k_perm(n: int, w: int, eps: Fraction) -> int:
    # smallest k with 2^k >= 4 sqrt(w) n^4 / eps, i.e. (2^k eps)^2 >= 16 w n^8
    target = 16 * w * n ** 8
    k = max(1, ceil_log2(Fraction(4 * n ** 4) / eps))
    while (Fraction(1 << k) * eps) ** 2 < target:
        k += 1
    while k > 1 and (Fraction(1 << (k - 1)) * eps) ** 2 >= target:
        k -= 1
    return k


def make_params(n: int, w: int, eps, variant: str = "perm") -> PrgParams:
    if n < 1:
        raise ParameterError("n must be at least 1")
    if w < 2:
        raise ParameterError("width 1 is degenerate; need w >= 2")
    eps = exact(eps)
    if not 0 < eps < 1:
        raise ParameterError(f"eps must lie in (0, 1), got {float(eps)}")
    if variant == "perm":
        d = ceil_log2(4 * w * w)
        k = _min_k_perm(n, w, eps)
        delta = eps / Fraction(2 * w) ** (4 * k)
        mu = eps / Fraction(2 * w * w) ** k
        params = PrgParams("perm", n, w, eps, d, k, mu, delta, base_cutoff("perm", eps, d))
    elif variant == "general":
        # smallest d with 2^d >= 2 sqrt(n)
        d = 1
        while 4 ** d < 4 * n:
            d += 1
        k = ceil_log2(Fraction(2 * w * n ** 4) / eps)
        mu = eps / _ratio_sqrt_upper(w * n ** k)
        params = PrgParams("general", n, w, eps, d, k, mu, None, base_cutoff("general", eps, d))
    else:
        raise ParameterError(f"unknown variant {variant!r}")
    check_support(params)
    return params


def check_support(params: PrgParams) -> None:
    """Raise ParameterError if the top level needs a field or seed beyond support.

    Lower levels are shorter, so their fields and seeds are no larger.
    """
    n = params.n0
    if params.is_base(n):
        return
    m = max(params.t_field_degree(n), small_bias_degree(n, params.mu))
    if m > MAX_FIELD_DEGREE:
        raise ParameterError(
            f"n={n}, w={params.w}, eps={float(params.eps)}: d={params.d}, k={params.k} "
            f"need field degree {m} > {MAX_FIELD_DEGREE}")
    if params.variant == "general" and params.t_bits(n) > MAX_KWISE_SEED_BITS:
        raise ParameterError(
            f"n={n}: kwise seed of {params.t_bits(n)} bits (d={params.d}, k={params.k}) "
            f"exceeds {MAX_KWISE_SEED_BITS}")


def schedule(params: PrgParams, n: int) -> list[int]:
    """Lengths n_0 = n, n_1, ... down to and including the base level."""
    out = [n]
    while not params.is_base(out[-1]) and out[-1] > 0:
        out.append(params.next_length(out[-1]))
    return out


def depth(params: PrgParams, n: int) -> int:
    """Number of recursion levels that sample a restriction."""
    return len(schedule(params, n)) - 1


def seed_length_for(params: PrgParams, n: int) -> int:
    lengths = schedule(params, n)
    total = lengths[-1]
    for m in lengths[:-1]:
        total += params.t_bits(m) + params.x_bits(m)
    return total


def seed_length(n: int, w: int, eps, variant: str = "perm") -> int:
    if n == 0:
        return 0
    return seed_length_for(make_params(n, w, eps, variant), n)


def rescaled_epsilon(n: int, w: int, eps: float, variant: str = "perm") -> float:
    """eps' with c sqrt(w) r eps' <= eps, c = 6 (perm) or 4 (general), r the depth at eps'."""
    c = 6.0 if variant == "perm" else 4.0
    first = eps / (c * math.sqrt(w))
    r = depth(make_params(n, w, first, variant), n)
    return eps / (c * math.sqrt(w) * max(1, r))


# ---------- generation


@dataclass
class LevelRecord:
    level: int
    n: int
    weight: int | None
    failed_at_step4: bool
    base_case: bool
    t_bits: int
    x_bits: int
    skipped: int = 0

    def as_dict(self) -> dict:
        return {"level": self.level, "n": self.n, "T_weight": self.weight,
                "failed_at_step4": self.failed_at_step4, "base_case": self.base_case,
                "t_bits": self.t_bits, "x_bits": self.x_bits, "skipped_bits": self.skipped}


@dataclass
class GenTrace:
    params: PrgParams
    levels: list[LevelRecord]
    consumed: int

    @property
    def failed(self) -> bool:
        return any(r.failed_at_step4 for r in self.levels)


def sample_t(params: PrgParams, n: int, stream: SeedStream) -> np.ndarray:
    if params.variant == "perm":
        return almost_kwise_mask(n, params.d, 2 * params.k, params.delta, stream)
    return kwise_bits(n, params.d, 2 * params.k, stream)


def _resolve(n, w, eps, variant, params):
    if params is None:
        params = make_params(n, w, eps, variant)
    return params


def generate_traced(n: int, w: int, eps, variant: str, seed: SeedStream,
                    params: PrgParams | None = None) -> tuple[np.ndarray, GenTrace]:
    if n == 0:
        return np.zeros(0, dtype=np.uint8), GenTrace(params, [], 0)
    params = _resolve(n, w, eps, variant, params)
    start = seed.cursor
    records: list[LevelRecord] = []
    pending: list[tuple[np.ndarray, np.ndarray]] = []
    m = n
    out = None
    level = 0
    while True:
        if params.is_base(m):
            out = seed.read(m).copy()
            records.append(LevelRecord(level, m, None, False, True, 0, 0))
            break
        tb, xb = params.t_bits(m), params.x_bits(m)
        c0 = seed.cursor
        T = sample_t(params, m, seed)
        if seed.cursor - c0 != tb:
            raise AssertionError("T-sampler consumed an unexpected number of bits")
        weight = int(T.sum())
        if params.step4_fails(m, weight):
            rest = xb + seed_length_for(params, params.next_length(m))
            seed.skip(rest)
            records.append(LevelRecord(level, m, weight, True, False, tb, xb, rest))
            out = np.zeros(m, dtype=np.uint8)
            break
        X = small_bias(m, params.mu, seed)
        records.append(LevelRecord(level, m, weight, False, False, tb, xb))
        pending.append((T, X))
        m = params.next_length(m)
        level += 1
    for T, X in reversed(pending):
        out = select(T, X, out)
    return out, GenTrace(params, records, seed.cursor - start)


def generate(n: int, w: int, eps, variant: str, seed: SeedStream,
             params: PrgParams | None = None) -> np.ndarray:
    return generate_traced(n, w, eps, variant, seed, params)[0]


def generate_bits(params: PrgParams, n: int, seed_bits) -> np.ndarray:
    return generate(n, params.w, params.eps, params.variant, SeedStream(seed_bits), params)
