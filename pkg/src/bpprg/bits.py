"""Bit strings as uint8 numpy arrays.

Bit 1 of a string is element 0. Packed forms (hex, bytes, ints) are
little-endian: bit 1 is the least significant bit of the first byte.
"""

from __future__ import annotations

import numpy as np


def as_bits(x, n: int | None = None) -> np.ndarray:
    """Coerce a '0101' string, an int mask (needs n) or a 0/1 sequence."""
    if isinstance(x, str):
        arr = np.frombuffer(x.strip().encode(), dtype=np.uint8) - ord("0")
        if arr.size and arr.max() > 1:
            raise ValueError(f"not a bit string: {x!r}")
    elif isinstance(x, (int, np.integer)):
        if n is None:
            raise ValueError("int masks need an explicit length")
        arr = from_int(int(x), n)
    else:
        arr = np.asarray(x)
        if arr.dtype == bool:
            arr = arr.astype(np.uint8)
        if arr.size and (arr.min() < 0 or arr.max() > 1):
            raise ValueError("bit strings hold only 0 and 1")
        arr = arr.astype(np.uint8, copy=False)
    if arr.ndim != 1:
        raise ValueError("bit strings are one-dimensional")
    if n is not None and arr.size != n:
        raise ValueError(f"expected {n} bits, got {arr.size}")
    return arr


def to_str(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


def weight(bits) -> int:
    return int(np.count_nonzero(bits))


def from_int(v: int, n: int) -> np.ndarray:
    return np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)


def to_int(bits) -> int:
    out = 0
    for i, b in enumerate(np.asarray(bits)):
        if b:
            out |= 1 << i
    return out


def to_hex(bits) -> str:
    bits = np.asarray(bits, dtype=np.uint8)
    return np.packbits(bits, bitorder="little").tobytes().hex()


def from_hex(h: str, n: int | None = None) -> np.ndarray:
    h = h.strip().lower()
    if h.startswith("0x"):
        h = h[2:]
    if len(h) % 2:
        h = "0" + h
    raw = np.frombuffer(bytes.fromhex(h), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")
    if n is not None:
        if n > bits.size:
            raise ValueError(f"hex string carries {bits.size} bits, {n} requested")
        bits = bits[:n]
    return bits


def index_bits(idx: np.ndarray, n: int) -> np.ndarray:
    """Rows of the bit matrix for integer inputs: out[r, j] = bit j of idx[r]."""
    idx = np.asarray(idx, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


def all_strings(n: int) -> np.ndarray:
    """Every string of {0,1}^n, row r holding the bits of the integer r."""
    return index_bits(np.arange(1 << n), n)


def popcounts(n: int) -> np.ndarray:
    """Hamming weight of every integer in [0, 2^n)."""
    w = np.zeros(1 << n, dtype=np.int64)
    for j in range(n):
        w[1 << j: 1 << (j + 1)] = w[: 1 << j] + 1
    return w


def walsh_hadamard(table: np.ndarray) -> np.ndarray:
    """Unnormalized transform along axis 0: out[s] = sum_x (-1)^{s.x} table[x].

    The length of axis 0 must be a power of two.
    """
    out = np.array(table, dtype=float, copy=True)
    size = out.shape[0]
    if size & (size - 1):
        raise ValueError("axis 0 length must be a power of two")
    h = 1
    while h < size:
        view = out.reshape((size // (2 * h), 2, h) + out.shape[1:])
        a = view[:, 0].copy()
        b = view[:, 1]
        view[:, 0] = a + b
        view[:, 1] = a - b
        h *= 2
    return out
