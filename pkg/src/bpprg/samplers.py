"""Seeded samplers: small-bias strings, k-wise and almost k-wise biased masks.

Every sampler is a pure function of the seed bits it consumes, and the
number it consumes is given by the matching ``*_seed_length`` function.
Field elements are read from the seed as m-bit little-endian integers.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bits import as_bits, from_hex, walsh_hadamard
from .errors import CapExceeded, ParameterError, SeedExhausted
from .gf2m import MAX_FIELD_DEGREE, count_roots, field

# kwise_bits refuses seeds longer than this many bits
MAX_KWISE_SEED_BITS = 1 << 24


class SeedStream:
    """Read cursor over a fixed seed bit string.  Single owner, not shareable."""

    def __init__(self, bits):
        self.bits = as_bits(bits)
        self.cursor = 0

    @classmethod
    def from_hex(cls, h: str, n: int | None = None) -> SeedStream:
        return cls(from_hex(h, n))

    @classmethod
    def random(cls, n: int, rng=None) -> SeedStream:
        rng = np.random.default_rng(rng)
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    def __len__(self):
        return int(self.bits.size)

    @property
    def remaining(self) -> int:
        return len(self) - self.cursor

    def _check(self, k: int):
        if k < 0:
            raise ValueError("negative read")
        if k > self.remaining:
            raise SeedExhausted(
                f"read of {k} bits at offset {self.cursor} overruns a {len(self)}-bit seed")

    def read(self, k: int) -> np.ndarray:
        self._check(k)
        out = self.bits[self.cursor:self.cursor + k]
        self.cursor += k
        return out

    def read_int(self, k: int) -> int:
        chunk = self.read(k)
        if k == 0:
            return 0
        return int.from_bytes(np.packbits(chunk, bitorder="little").tobytes(), "little")

    def skip(self, k: int) -> None:
        self._check(k)
        self.cursor += k


def exact(x) -> Fraction:
    """Exact rational value of an int, float or Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float) and not math.isfinite(x):
        raise ValueError(f"not a finite number: {x}")
    return Fraction(x)


def ceil_log2(q) -> int:
    """Smallest integer c with 2^c >= q, for rational q > 0."""
    q = exact(q)
    if q <= 0:
        raise ValueError("ceil_log2 needs a positive argument")
    c = q.numerator.bit_length() - q.denominator.bit_length()
    while Fraction(2) ** c < q:
        c += 1
    while Fraction(2) ** (c - 1) >= q:
        c -= 1
    return c


def _check_field_degree(m: int):
    if m > MAX_FIELD_DEGREE:
        raise ParameterError(f"field degree m={m} exceeds the supported maximum {MAX_FIELD_DEGREE}")


# ---------- small-bias strings


def small_bias_degree(n: int, mu) -> int:
    """Field degree m = ceil(log2(n/mu)) + 1 of the powering construction."""
    mu = exact(mu)
    if not 0 < mu < 1:
        raise ValueError(f"bias must lie in (0, 1), got {mu}")
    if n == 0:
        return 0
    return ceil_log2(Fraction(n) / mu) + 1


def small_bias_seed_length(n: int, mu) -> int:
    return 2 * small_bias_degree(n, mu)


def small_bias(n: int, mu, seed: SeedStream) -> np.ndarray:
    """n bits of bias at most mu: bit i is the low coefficient of a^i * b in GF(2^m).

    The seed supplies a then b.  Any nonzero parity of the output is a
    nonzero polynomial of degree < n in a, so the bias is at most
    (n-1)/2^m < mu.
    """
    m = small_bias_degree(n, mu)
    out = np.zeros(n, dtype=np.uint8)
    if n == 0:
        return out
    _check_field_degree(m)
    a = seed.read_int(m)
    cur = seed.read_int(m)
    F = field(m)
    mul_a = F.multiplier(a) if n > 8 else (lambda y: F.mul(a, y))
    for i in range(n):
        out[i] = cur & 1
        cur = mul_a(cur)
    return out


@lru_cache(maxsize=4096)
def _root_count(s: int, m: int) -> int:
    return count_roots(s, m)


def aghp_spectrum(n: int, mu, max_bits: int = 20) -> np.ndarray:
    """Exact Fourier coefficients of the small_bias(n, mu) output under a uniform seed.

    Entry s (an int mask) is Pr_a[P_s(a) = 0] with P_s(z) = sum_{i in s} z^i,
    i.e. the number of distinct roots of P_s in GF(2^m) over 2^m.
    """
    if n > max_bits:
        raise CapExceeded(f"spectrum over 2^{n} indices exceeds cap 2^{max_bits}")
    m = small_bias_degree(n, mu)
    out = np.empty(1 << n, dtype=float)
    out[0] = 1.0
    for s in range(1, 1 << n):
        out[s] = _root_count(s, m) / 2.0 ** m
    return out


# ---------- k-wise independent masks


def kwise_degree(n: int, d: int) -> int:
    return max(1, ceil_log2(n * d)) if n * d else 0


def kwise_seed_length(n: int, d: int, k: int) -> int:
    if n == 0 or d == 0:
        return 0
    return k * d * kwise_degree(n, d)


def _check_kwise(n, d, k):
    if d < 0 or k < 1 or n < 0:
        raise ValueError(f"kwise parameters out of range: n={n}, d={d}, k={k}")
    total = kwise_seed_length(n, d, k)
    if total > MAX_KWISE_SEED_BITS:
        raise ParameterError(
            f"kwise seed of {total} bits (k={k}, d={d}, m={kwise_degree(n, d)}) "
            f"exceeds the guard {MAX_KWISE_SEED_BITS}")
    _check_field_degree(kwise_degree(n, d))


@lru_cache(maxsize=None)
def log_tables(m: int):
    """exp/log tables of GF(2^m) for a fixed primitive element; m <= 20."""
    if m > 20:
        raise ValueError("log tables only for m <= 20")
    F = field(m)
    q = (1 << m) - 1
    primes = []
    r, f = q, 2
    while f * f <= r:
        if r % f == 0:
            primes.append(f)
            while r % f == 0:
                r //= f
        f += 1
    if r > 1:
        primes.append(r)
    g = 2 if m > 1 else 1
    while any(F.pow(g, q // p) == 1 for p in primes) and q > 1:
        g += 1
    exp = np.zeros(2 * q + 1, dtype=np.int64)
    log = np.zeros(q + 1, dtype=np.int64)
    x = 1
    for i in range(q):
        exp[i] = x
        log[x] = i
        x = F.mul(x, g)
    exp[q:2 * q] = exp[:q]
    return exp, log


def poly_eval_points(m: int, coeffs: list[int], npoints: int) -> np.ndarray:
    """Values at the field elements 0..npoints-1 of sum_l coeffs[l] z^l."""
    pts = np.arange(npoints, dtype=np.int64)
    vals = np.zeros(npoints, dtype=np.int64)
    if m <= 20:
        exp, log = log_tables(m)
        lp = log[pts]
        nz_pt = pts != 0
        for c in reversed(coeffs):
            nz = (vals != 0) & nz_pt
            prod = np.zeros_like(vals)
            prod[nz] = exp[log[vals[nz]] + lp[nz]]
            vals = prod ^ c
        return vals
    F = field(m)
    out = []
    for j in range(npoints):
        v = 0
        for c in reversed(coeffs):
            v = F.mul(v, j) ^ c
        out.append(v)
    return np.array(out, dtype=object)


def kwise_bits(n: int, d: int, k: int, seed: SeedStream) -> np.ndarray:
    """k-wise independent bits, each 1 with probability exactly 2^-d.

    A uniform polynomial of degree kd-1 over GF(2^m), 2^m >= nd, evaluated at
    the nd points 0..nd-1 gives kd-wise independent uniform field values; their
    low bits are kd-wise independent fair coins.  Output bit i is the AND of
    coins i*d .. i*d+d-1.
    """
    _check_kwise(n, d, k)
    if n == 0 or d == 0:
        return np.ones(n, dtype=np.uint8)
    m = kwise_degree(n, d)
    coeffs = [seed.read_int(m) for _ in range(k * d)]
    vals = poly_eval_points(m, coeffs, n * d)
    coins = np.array([int(v) & 1 for v in vals], dtype=np.uint8)
    return coins.reshape(n, d).all(axis=1).astype(np.uint8)


# ---------- almost k-wise independent masks


def almost_kwise_base_bias(d: int, k: int, delta) -> Fraction:
    """Bias of the base string: delta * 2^-ceil(kd/2), capped at 1/2."""
    delta = exact(delta)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return min(delta / 2 ** ((k * d + 1) // 2), Fraction(1, 2))


def almost_kwise_seed_length(n: int, d: int, k: int, delta) -> int:
    if n == 0 or d == 0:
        return 0
    return small_bias_seed_length(n * d, almost_kwise_base_bias(d, k, delta)) + d


def almost_kwise_mask(n: int, d: int, k: int, delta, seed: SeedStream) -> np.ndarray:
    """delta-almost k-wise independent bits, each 1 with probability exactly 2^-d.

    X is a small-bias string of length nd (so delta-close to uniform on any kd
    coordinates), Y is d uniform bits, Z = X xor (Y, Y, ..., Y), and output bit
    i is the AND of block i of Z.
    """
    if d < 0 or k < 1 or n < 0:
        raise ValueError(f"parameters out of range: n={n}, d={d}, k={k}")
    if n == 0 or d == 0:
        return np.ones(n, dtype=np.uint8)
    x = small_bias(n * d, almost_kwise_base_bias(d, k, delta), seed)
    y = seed.read(d)
    z = x ^ np.tile(y, n)
    return z.reshape(n, d).all(axis=1).astype(np.uint8)


def almost_kwise_spectrum(n: int, d: int, k: int, delta, max_bits: int = 20) -> np.ndarray:
    """Exact distribution (indexed by int mask) of almost_kwise_mask's output.

    Uses the exact spectrum of the base string and the fact that xoring with
    the repeated Y kills every character whose per-offset counts are not all
    even.  Returns probabilities, not Fourier coefficients.
    """
    if n * d > max_bits:
        raise CapExceeded(f"distribution over 2^{n * d} strings exceeds cap 2^{max_bits}")
    if d == 0:
        out = np.zeros(1 << n)
        out[(1 << n) - 1] = 1.0
        return out
    N = n * d
    xhat = aghp_spectrum(N, almost_kwise_base_bias(d, k, delta), max_bits=max_bits)
    s = np.arange(1 << N, dtype=np.int64)
    keep = np.ones(1 << N, dtype=bool)
    for j in range(d):
        cnt = np.zeros(1 << N, dtype=np.int64)
        for i in range(n):
            cnt += (s >> (i * d + j)) & 1
        keep &= cnt % 2 == 0
    zhat = np.where(keep, xhat, 0.0)
    pz = walsh_hadamard(zhat) / (1 << N)
    tmask = np.zeros(1 << N, dtype=np.int64)
    block = (1 << d) - 1
    for i in range(n):
        tmask |= (((s >> (i * d)) & block) == block).astype(np.int64) << i
    out = np.zeros(1 << n)
    np.add.at(out, tmask, pz)
    return out


# ---------- tail bound


def chernoff_bound(ell: int, k: int, zeta: float, delta: float = 0.0) -> float:
    """(k^2 / (4 ell zeta^2))^floor(k/2) + delta / zeta^k.

    Bounds Pr[|X - E X| >= ell*zeta] for X a sum of ell delta-almost k-wise
    independent variables in [0, 1].
    """
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    if k < 2:
        raise ValueError("k must be at least 2")
    return (k * k / (4.0 * ell * zeta * zeta)) ** (k // 2) + delta / zeta ** k
