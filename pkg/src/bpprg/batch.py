"""Samplers and generators evaluated over many seeds at once.

Seeds are rows of an (N, L) uint8 matrix.  Fields up to m = 64 (and m <= 20
for k-wise polynomials) go through the numba kernels; larger ones fall back
to the reference samplers row by row.
"""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .prg import PrgParams, schedule, select_batch
from .samplers import (
    SeedStream,
    almost_kwise_base_bias,
    almost_kwise_mask,
    kwise_bits,
    kwise_degree,
    log_tables,
    small_bias,
    small_bias_degree,
)


def _rows(fn, seeds: np.ndarray, offset: int, n: int) -> np.ndarray:
    out = np.zeros((seeds.shape[0], n), dtype=np.uint8)
    for r in range(seeds.shape[0]):
        s = SeedStream(seeds[r])
        s.skip(offset)
        out[r] = fn(s)
    return out


def small_bias_batch(n: int, mu, seeds: np.ndarray, offset: int = 0) -> np.ndarray:
    m = small_bias_degree(n, mu)
    N = seeds.shape[0]
    if n == 0:
        return np.zeros((N, 0), dtype=np.uint8)
    if m > 64:
        return _rows(lambda s: small_bias(n, mu, s), seeds, offset, n)
    A = K.pack_fields(seeds, offset, m)
    B = K.pack_fields(seeds, offset + m, m)
    out = np.zeros((N, n), dtype=np.uint8)
    K.small_bias_rows(A, B, m, K.low_poly(m), n, out)
    return out


def _almost_args(n, d, k, delta, seeds, offset):
    m = small_bias_degree(n * d, almost_kwise_base_bias(d, k, delta))
    A = K.pack_fields(seeds, offset, m)
    B = K.pack_fields(seeds, offset + m, m)
    Y = np.ascontiguousarray(seeds[:, offset + 2 * m: offset + 2 * m + d])
    return m, A, B, Y


def almost_kwise_batch(n: int, d: int, k: int, delta, seeds: np.ndarray, offset: int = 0) -> np.ndarray:
    N = seeds.shape[0]
    if n == 0 or d == 0:
        return np.ones((N, n), dtype=np.uint8)
    m = small_bias_degree(n * d, almost_kwise_base_bias(d, k, delta))
    if m > 64:
        return _rows(lambda s: almost_kwise_mask(n, d, k, delta, s), seeds, offset, n)
    m, A, B, Y = _almost_args(n, d, k, delta, seeds, offset)
    out = np.zeros((N, n), dtype=np.uint8)
    K.almost_kwise_rows(A, B, Y, m, K.low_poly(m), n, d, out)
    return out


def almost_kwise_weight_batch(n: int, d: int, k: int, delta, seeds: np.ndarray,
                              offset: int = 0) -> np.ndarray:
    """|T| per seed without materializing T."""
    N = seeds.shape[0]
    if n == 0 or d == 0:
        return np.full(N, n, dtype=np.int64)
    m = small_bias_degree(n * d, almost_kwise_base_bias(d, k, delta))
    if m > 64:
        return almost_kwise_batch(n, d, k, delta, seeds, offset).sum(axis=1).astype(np.int64)
    m, A, B, Y = _almost_args(n, d, k, delta, seeds, offset)
    out = np.zeros(N, dtype=np.int64)
    K.almost_kwise_weights_lfsr(A, B, Y, m, K.low_poly(m), n, d, out)
    return out


def kwise_batch(n: int, d: int, k: int, seeds: np.ndarray, offset: int = 0) -> np.ndarray:
    N = seeds.shape[0]
    if n == 0 or d == 0:
        return np.ones((N, n), dtype=np.uint8)
    m = kwise_degree(n, d)
    if m > 20:
        return _rows(lambda s: kwise_bits(n, d, k, s), seeds, offset, n)
    exp, log = log_tables(m)
    C = np.stack([K.pack_fields(seeds, offset + l * m, m) for l in range(k * d)], axis=1).astype(np.int64)
    coins = np.zeros((N, n * d), dtype=np.uint8)
    K.poly_low_bits(C, exp, log, (1 << m) - 1, n * d, coins)
    return coins.reshape(N, n, d).all(axis=2).astype(np.uint8)


def t_batch(params: PrgParams, n: int, seeds: np.ndarray, offset: int = 0) -> np.ndarray:
    if params.variant == "perm":
        return almost_kwise_batch(n, params.d, 2 * params.k, params.delta, seeds, offset)
    return kwise_batch(n, params.d, 2 * params.k, seeds, offset)


def t_weight_batch(params: PrgParams, n: int, seeds: np.ndarray, offset: int = 0) -> np.ndarray:
    if params.variant == "perm":
        return almost_kwise_weight_batch(n, params.d, 2 * params.k, params.delta, seeds, offset)
    return t_batch(params, n, seeds, offset).sum(axis=1).astype(np.int64)


def generate_batch(params: PrgParams, n: int, seeds: np.ndarray) -> np.ndarray:
    """Generator output for every seed row; agrees bit for bit with generate."""
    seeds = np.ascontiguousarray(seeds, dtype=np.uint8)
    N = seeds.shape[0]
    lengths = schedule(params, n)
    offset = 0
    levels = []
    failed = np.zeros(N, dtype=bool)
    for m in lengths[:-1]:
        T = t_batch(params, m, seeds, offset)
        offset += params.t_bits(m)
        X = small_bias_batch(m, params.mu, seeds, offset)
        offset += params.x_bits(m)
        fail_here = T.sum(axis=1) * (1 << (params.d + 1)) < m
        levels.append((T, X, fail_here & ~failed))
        failed |= fail_here
    out = seeds[:, offset:offset + lengths[-1]].copy()
    for T, X, fail in reversed(levels):
        out = select_batch(T, X, out)
        out[fail] = 0
    return out
