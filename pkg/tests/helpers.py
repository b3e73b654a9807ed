"""Strategies and slow-but-obvious reference computations shared by the tests."""

import itertools

import numpy as np
from hypothesis import strategies as st

from bpprg.program import as_matrix, random_program


@st.composite
def programs(draw, kinds=("permutation", "regular", "general"), widths=(2, 4), lengths=(1, 8),
             scramble=None):
    w = draw(st.integers(*widths))
    n = draw(st.integers(*lengths))
    kind = draw(st.sampled_from(kinds))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    scr = draw(st.booleans()) if scramble is None else scramble
    return random_program(w, n, kind, seed, scramble=scr)


def bitvec(n):
    return st.lists(st.integers(0, 1), min_size=n, max_size=n).map(lambda v: np.array(v, dtype=np.uint8))


def inputs(n):
    return [np.array(x, dtype=np.uint8) for x in itertools.product((0, 1), repeat=n)][::1]


def naive_coefficient(P, s):
    """2^-n sum_x B[x] (-1)^{<s, x>}, straight from the definition."""
    s = np.asarray(s)
    acc = np.zeros((P.width, P.width))
    for x in itertools.product((0, 1), repeat=P.n):
        x = np.array(x)
        acc += (-1) ** int(s @ x) * as_matrix(P, x)
    return acc / 2 ** P.n


def poly_mulmod(a, b, mod):
    """Schoolbook product in GF(2)[x] reduced mod `mod`."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        b >>= 1
        a <<= 1
    dm = mod.bit_length() - 1
    while out.bit_length() - 1 >= dm:
        out ^= mod << (out.bit_length() - 1 - dm)
    return out


def seed_outputs(fn, L):
    """Outputs of a seeded sampler on every L-bit seed, seed r in row r."""
    from bpprg.samplers import SeedStream

    rows = []
    for r in range(1 << L):
        bits = np.array([(r >> j) & 1 for j in range(L)], dtype=np.uint8)
        s = SeedStream(bits)
        rows.append(fn(s))
        assert s.cursor == L
    return np.array(rows, dtype=np.uint8)


def max_bias(X):
    """max over nonzero s of |E (-1)^{<s, X>}| for the rows of X (uniform weights).

    Direct character sums; no transform.
    """
    n = X.shape[1]
    S = np.array([[(s >> j) & 1 for j in range(n)] for s in range(1, 1 << n)], dtype=np.int64)
    par = (X.astype(np.int64) @ S.T) & 1
    return float(np.abs(1 - 2 * par.mean(axis=0)).max())
