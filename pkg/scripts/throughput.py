#!/usr/bin/env python3
"""Rough timings: reference vs batched generation, and step-4 weight sampling."""

import time

import numpy as np

from bpprg.batch import generate_batch, t_weight_batch
from bpprg.prg import generate_bits, make_params, seed_length_for
from bpprg.verify import step4_params


def timed(label, fn):
    t0 = time.perf_counter()
    fn()
    print(f"{label:48s} {time.perf_counter() - t0:8.2f}s")


def main():
    rng = np.random.default_rng(0)
    n = 37000
    P = make_params(n, 2, 0.25, "perm")
    L = seed_length_for(P, n)
    S = rng.integers(0, 2, size=(4, L), dtype=np.uint8)
    timed(f"reference generate, n={n}, 4 seeds", lambda: [generate_bits(P, n, s) for s in S])
    timed(f"batched generate, n={n}, 4 seeds (m > 64 path)", lambda: generate_batch(P, n, S))
    Q = step4_params(n, 2, 0.25)
    T = rng.integers(0, 2, size=(10_000, Q.t_bits(n)), dtype=np.uint8)
    t_weight_batch(Q, n, T[:2])  # compile
    timed(f"|T| for 10^4 seeds, n={n}, m={Q.t_field_degree(n)}", lambda: t_weight_batch(Q, n, T))


if __name__ == "__main__":
    main()
