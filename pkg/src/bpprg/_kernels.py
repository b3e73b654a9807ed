"""numba kernels for batched sampling over many seeds.

Only fields with m <= 64 are handled here (elements fit a uint64).  The
pure-Python samplers are the reference; tests check bit-exact agreement.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .gf2m import field

U1 = np.uint64(1)
U0 = np.uint64(0)


def low_poly(m: int) -> np.uint64:
    """Modulus of GF(2^m) without its leading x^m term."""
    return np.uint64(field(m).modulus ^ (1 << m))


def pack_fields(seeds: np.ndarray, offset: int, m: int) -> np.ndarray:
    """Little-endian m-bit integers read from columns offset..offset+m-1."""
    if m > 64:
        raise ValueError("batched fields need m <= 64")
    chunk = seeds[:, offset:offset + m].astype(np.uint64)
    return (chunk << np.arange(m, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


@njit(cache=True)
def _xtime(e, m, mask, low):
    top = (e >> np.uint64(m - 1)) & np.uint64(1)
    e = (e << np.uint64(1)) & mask
    if top:
        e ^= low
    return e


@njit(cache=True)
def _tables(a, m, low, tab):
    nb = (m + 7) // 8
    if m == 64:
        mask = np.uint64(0xFFFFFFFFFFFFFFFF)
    else:
        mask = (np.uint64(1) << np.uint64(m)) - np.uint64(1)
    base = a
    for k in range(nb):
        e = base
        tab[k, 0] = np.uint64(0)
        for bit in range(8):
            tab[k, 1 << bit] = e
            e = _xtime(e, m, mask, low)
        for v in range(3, 256):
            if v & (v - 1):
                lowbit = v & (-v)
                tab[k, v] = tab[k, lowbit] ^ tab[k, v ^ lowbit]
        base = e


@njit(cache=True)
def _mul(tab, y, nb):
    out = np.uint64(0)
    for k in range(nb):
        out ^= tab[k, (y >> np.uint64(8 * k)) & np.uint64(255)]
    return out


@njit(cache=True)
def small_bias_rows(A, B, m, low, n, out):
    """out[r, i] = low bit of A[r]^i * B[r] in GF(2^m)."""
    nb = (m + 7) // 8
    tab = np.zeros((nb, 256), dtype=np.uint64)
    for r in range(A.shape[0]):
        _tables(A[r], m, low, tab)
        cur = B[r]
        for i in range(n):
            out[r, i] = np.uint8(cur & np.uint64(1))
            cur = _mul(tab, cur, nb)


@njit(cache=True)
def almost_kwise_rows(A, B, Y, m, low, n, d, out):
    """Blockwise AND of (small-bias string xor repeated Y), one row per seed."""
    nb = (m + 7) // 8
    tab = np.zeros((nb, 256), dtype=np.uint64)
    for r in range(A.shape[0]):
        _tables(A[r], m, low, tab)
        cur = B[r]
        for i in range(n):
            t = np.uint8(1)
            for j in range(d):
                bit = np.uint8(cur & np.uint64(1)) ^ Y[r, j]
                t &= bit
                cur = _mul(tab, cur, nb)
            out[r, i] = t


@njit(cache=True)
def almost_kwise_weights(A, B, Y, m, low, n, d, out):
    """Hamming weight of the almost k-wise mask, one per seed."""
    nb = (m + 7) // 8
    tab = np.zeros((nb, 256), dtype=np.uint64)
    for r in range(A.shape[0]):
        _tables(A[r], m, low, tab)
        cur = B[r]
        count = 0
        for i in range(n):
            t = np.uint8(1)
            for j in range(d):
                bit = np.uint8(cur & np.uint64(1)) ^ Y[r, j]
                t &= bit
                cur = _mul(tab, cur, nb)
            count += t
        out[r] = count


@njit(cache=True)
def poly_low_bits(C, exp, log, q, npoints, out):
    """out[r, j] = low bit of sum_l C[r, l] j^l over GF(2^m), via log tables."""
    K = C.shape[1]
    for r in range(C.shape[0]):
        for j in range(npoints):
            v = np.int64(0)
            lj = log[j]
            for l in range(K - 1, -1, -1):
                if v != 0 and j != 0:
                    v = exp[log[v] + lj]
                else:
                    v = 0
                v ^= C[r, l]
            out[r, j] = np.uint8(v & 1)


# The output bits L(a^i b) of the powering construction form a linear
# recurring sequence of complexity <= m (L is a linear functional), so after
# 2m field steps Berlekamp-Massey yields a recurrence that produces the rest
# with one AND and one popcount per bit.


@njit(cache=True)
def _berlekamp_massey(s, N, C, B):
    C[:] = 0
    B[:] = 0
    C[0] = 1
    B[0] = 1
    L = 0
    shift = 1
    for i in range(N):
        dsc = s[i]
        for j in range(1, L + 1):
            dsc ^= C[j] & s[i - j]
        if dsc == 0:
            shift += 1
        elif 2 * L <= i:
            T = C.copy()
            for j in range(shift, N + 1):
                C[j] ^= B[j - shift]
            L = i + 1 - L
            B[:] = T
            shift = 1
        else:
            for j in range(shift, N + 1):
                C[j] ^= B[j - shift]
            shift += 1
    return L


@njit(cache=True)
def _recurrence(tab, nb, b, m, head, C, B):
    """First 2m output bits into head; returns (L, taps, r).

    The sequence is P(x)/C(x) as a power series with C the connection
    polynomial; r holds P and taps holds C without its constant term, both
    shifted down by one, ready for Galois-form stepping.
    """
    cur = b
    for i in range(2 * m):
        head[i] = np.uint8(cur & np.uint64(1))
        cur = _mul(tab, cur, nb)
    L = _berlekamp_massey(head, 2 * m, C, B)
    taps = np.uint64(0)
    r = np.uint64(0)
    for j in range(L):
        if C[j + 1]:
            taps |= np.uint64(1) << np.uint64(j)
        pj = np.uint8(0)
        for t in range(j + 1):
            pj ^= C[t] & head[j - t]
        if pj:
            r |= np.uint64(1) << np.uint64(j)
    return L, taps, r


@njit(cache=True)
def _next_bit(r, taps):
    out = r & np.uint64(1)
    r = (r >> np.uint64(1)) ^ (taps & (np.uint64(0) - out))
    return out, r


@njit(cache=True)
def almost_kwise_weights_lfsr(A, B, Y, m, low, n, d, out):
    """Same values as almost_kwise_weights, via the recurrence."""
    nb = (m + 7) // 8
    tab = np.zeros((nb, 256), dtype=np.uint64)
    head = np.zeros(2 * m, dtype=np.uint8)
    Cp = np.zeros(2 * m + 1, dtype=np.uint8)
    Bp = np.zeros(2 * m + 1, dtype=np.uint8)
    for row in range(A.shape[0]):
        _tables(A[row], m, low, tab)
        L, taps, r = _recurrence(tab, nb, B[row], m, head, Cp, Bp)
        ymask = np.uint64(0)
        for j in range(d):
            if Y[row, j] == 0:
                ymask |= np.uint64(1) << np.uint64(j)
        # T(i) = 1 iff block i of X equals the complement of Y
        count = 0
        for i in range(n):
            blk = np.uint64(0)
            for j in range(d):
                o, r = _next_bit(r, taps)
                blk |= o << np.uint64(j)
            if blk == ymask:
                count += 1
        out[row] = count
