import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bpprg.batch import generate_batch
from bpprg.bits import walsh_hadamard
from bpprg.errors import ParameterError, ProgramError, SeedExhausted
from bpprg.prg import (
    PrgParams,
    check_support,
    depth,
    generate,
    generate_bits,
    generate_traced,
    make_params,
    rescaled_epsilon,
    schedule,
    seed_length,
    seed_length_for,
    select,
    select_batch,
)
from bpprg.program import random_program
from bpprg.samplers import SeedStream, aghp_spectrum, almost_kwise_spectrum

from helpers import bitvec


def test_select_worked_example():
    out = select([0, 1, 0, 1, 0, 0, 0], [1] * 7, [0, 0, 0, 0, 1])
    assert "".join(map(str, out)) == "0101001"


@given(st.integers(0, 20).flatmap(lambda n: st.tuples(bitvec(n), bitvec(n), st.integers(0, 4))))
def test_select_round_trip(args):
    t, x, extra = args
    free = int((t == 0).sum())
    y = np.random.default_rng(extra).integers(0, 2, free + extra, dtype=np.uint8)
    out = select(t, x, y)
    assert out.size == t.size
    assert np.array_equal(out[t == 1], x[t == 1])
    assert np.array_equal(out[t == 0], y[:free])
    assert np.array_equal(select_batch(t[None], x[None], y[None])[0], out)


def test_select_short_y():
    with pytest.raises(ProgramError):
        select([0, 0, 1], [1, 1, 1], [0])


# ---------- parameters


def test_perm_params():
    P = make_params(100, 2, Fraction(1, 10), "perm")
    assert P.d == 4 and P.p == Fraction(1, 16)
    # k is the least integer with 2^k >= 4 sqrt(w) n^4 / eps
    k_float = math.ceil(math.log2(4 * math.sqrt(2) * 100 ** 4 / 0.1))
    assert P.k == k_float == 33
    assert P.delta == Fraction(1, 10) / 4 ** (4 * 33)
    assert P.mu == Fraction(1, 10) / 8 ** 33
    assert P.base_cutoff == pytest.approx((4 * math.log2(20) * 16) ** 2)


@given(st.integers(1, 10 ** 6), st.integers(2, 8), st.floats(0.001, 0.99))
def test_perm_params_requirements(n, w, eps):
    P = make_params(n, w, eps, "perm")
    assert P.p <= Fraction(1, 4 * w * w) and 2 * P.p > Fraction(1, 4 * w * w)
    e = P.eps
    assert (2 ** P.k * e) ** 2 >= 16 * w * n ** 8
    assert P.k == 1 or (2 ** (P.k - 1) * e) ** 2 < 16 * w * n ** 8
    assert P.delta <= Fraction(1, (2 * w) ** (4 * P.k))
    assert P.mu <= e / Fraction(2 * w * w) ** P.k


@given(st.integers(1, 10 ** 5), st.integers(2, 8), st.floats(0.001, 0.99))
def test_general_params(n, w, eps):
    try:
        P = make_params(n, w, eps, "general")
    except ParameterError:
        return
    assert 4 ** P.d >= 4 * n and (P.d == 1 or 4 ** (P.d - 1) < 4 * n)
    assert 2 ** P.k >= 2 * w * n ** 4 / P.eps
    # mu <= eps / sqrt(w n^k), and not wastefully smaller
    assert P.mu ** 2 * w * n ** P.k <= P.eps ** 2
    assert P.mu ** 2 * w * n ** P.k >= P.eps ** 2 * Fraction(1) / Fraction(1001, 1000)


def test_param_errors():
    for bad in [(0, 2, 0.1), (10, 1, 0.1), (10, 2, 0), (10, 2, 1.5)]:
        with pytest.raises(ParameterError):
            make_params(*bad)
    with pytest.raises(ParameterError):
        make_params(10, 2, 0.1, "nope")
    # beyond the supported field degree / k-wise seed size
    huge_field = PrgParams("perm", 10 ** 6, 2, Fraction(1, 4), 4, 900, Fraction(1, 2 ** 5000),
                           Fraction(1, 2 ** 9000), 0.0)
    with pytest.raises(ParameterError, match="field degree"):
        check_support(huge_field)
    huge_kwise = PrgParams("general", 10 ** 6, 2, Fraction(1, 4), 10, 40000, Fraction(1, 4), None, 0.0)
    with pytest.raises(ParameterError, match="kwise seed"):
        check_support(huge_kwise)


@given(st.integers(1, 10 ** 7), st.integers(1, 8))
def test_schedule_lengths(n, d):
    P = PrgParams("general", n, 2, Fraction(1, 4), d, 1, Fraction(1, 4), None, 50.0)
    L = schedule(P, n)
    assert L[0] == n
    for a, b in zip(L, L[1:]):
        assert b == math.floor(a * (1 - Fraction(1, 2 ** (d + 1))))
        assert a > 50
    assert L[-1] <= 50 or L[-1] == 0


def test_rescaled_epsilon():
    for variant, c in (("perm", 6), ("general", 4)):
        for n, w, eps in [(100, 2, 0.25), (70000, 2, 0.25), (50000, 3, 0.1)]:
            e2 = rescaled_epsilon(n, w, eps, variant)
            r = depth(make_params(n, w, e2, variant), n)
            assert c * math.sqrt(w) * max(1, r) * e2 <= eps * (1 + 1e-12)


# ---------- generation


def small_params(variant, n, seed):
    """Deliberately weak parameters that force several recursion levels at small n."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    k = int(rng.integers(1, 4))
    mu = Fraction(1, 2 ** int(rng.integers(1, 12)))
    delta = Fraction(1, 2 ** int(rng.integers(1, 20))) if variant == "perm" else None
    cutoff = float(rng.integers(0, 12))
    return PrgParams(variant, n, 2, Fraction(1, 4), d, k, mu, delta, cutoff)


@given(st.sampled_from(["perm", "general"]), st.integers(1, 120), st.integers(0, 2 ** 31))
def test_seed_accounting_exact(variant, n, seed):
    P = small_params(variant, n, seed)
    L = seed_length_for(P, n)
    stream = SeedStream.random(L, seed)
    out, trace = generate_traced(n, 2, P.eps, variant, stream, P)
    assert out.size == n
    assert trace.consumed == L and stream.remaining == 0
    assert [r.n for r in trace.levels] == schedule(P, n)[:len(trace.levels)]
    with pytest.raises(SeedExhausted):
        generate_bits(P, n, SeedStream.random(L - 1, seed).bits) if L > 0 else (_ for _ in ()).throw(SeedExhausted())


def test_step4_failure_outputs_zeros_and_consumes_all():
    P = PrgParams("perm", 40, 2, Fraction(1, 4), 3, 1, Fraction(1, 4), Fraction(1, 2), 4.0)
    L = seed_length_for(P, 40)
    hits = 0
    for s in range(400):
        stream = SeedStream.random(L, s)
        out, trace = generate_traced(40, 2, P.eps, "perm", stream, P)
        assert trace.consumed == L
        if trace.failed:
            hits += 1
            bad = [r for r in trace.levels if r.failed_at_step4][0]
            assert bad.weight * 2 ** (P.d + 1) < bad.n
            assert trace.levels[-1] is bad
    assert hits > 0


@given(st.sampled_from(["perm", "general"]), st.integers(1, 90), st.integers(0, 2 ** 31))
def test_batch_generator_matches_reference(variant, n, seed):
    P = small_params(variant, n, seed)
    L = seed_length_for(P, n)
    S = np.random.default_rng(seed).integers(0, 2, size=(12, L), dtype=np.uint8)
    B = generate_batch(P, n, S)
    for r in range(12):
        assert np.array_equal(B[r], generate_bits(P, n, S[r]))


def test_base_case_is_identity_on_seed():
    bits = np.random.default_rng(0).integers(0, 2, 24, dtype=np.uint8)
    for variant in ("perm", "general"):
        P = make_params(24, 3, 0.25, variant)
        assert P.is_base(24) and seed_length(24, 3, 0.25, variant) == 24
        assert np.array_equal(generate(24, 3, 0.25, variant, SeedStream(bits)), bits)


def test_real_params_recursive_level_runs():
    # top level above the perm cutoff: one real level with the full field sizes
    P = make_params(37000, 2, 0.25, "perm")
    assert not P.is_base(37000)
    L = seed_length_for(P, 37000)
    out, trace = generate_traced(37000, 2, P.eps, "perm", SeedStream.random(L, 1), P)
    assert out.size == 37000 and trace.consumed == L
    assert trace.levels[0].weight * 32 >= 37000


# ---------- one restriction step, exactly


def _layer_avg(P):
    return P.stack.mean(axis=1)


def one_step_error(P, PT, PX):
    """||E_{T,X,U} B[Select(T,X,U)] - E_U B[U]||_2 by direct enumeration of t and x."""
    n, w = P.n, P.width
    avg = _layer_avg(P)
    target = np.linalg.multi_dot([np.eye(w)] + [avg[i] for i in range(n)] + [np.eye(w)])
    total = np.zeros((w, w))
    for t in np.flatnonzero(PT):
        inner = np.zeros((w, w))
        for x in np.flatnonzero(PX):
            acc = np.eye(w)
            for i, r in enumerate(P.read):
                acc = acc @ (P.stack[i, (x >> r) & 1] if (t >> r) & 1 else avg[i])
            inner += PX[x] * acc
        total += PT[t] * inner
    return np.linalg.norm(total - target, 2)


@pytest.fixture(scope="module")
def one_step_instance():
    n, w, eps = 4, 2, 0.9
    d = 4  # p = 1/16 <= 1/(4 w^2)
    k = math.ceil(math.log2(4 * math.sqrt(w) * n ** 4 / eps))
    delta = Fraction(1, (2 * w) ** (4 * k))
    mu = Fraction(eps) / Fraction(2 * w * w) ** k
    PT = almost_kwise_spectrum(n, d, 2 * k, delta)
    PX = walsh_hadamard(aghp_spectrum(n, mu)) / 2 ** n
    return n, w, eps, PT, PX


@pytest.mark.parametrize("seed", range(4))
def test_one_step_restriction_error(one_step_instance, seed):
    n, w, eps, PT, PX = one_step_instance
    kind = "permutation" if seed % 2 == 0 else "regular"
    P = random_program(w, n, kind, seed, scramble=True)
    assert one_step_error(P, PT, PX) <= 2 * eps


def test_one_step_detects_biased_x():
    # sanity for the oracle: a fixed X breaks fooling of parity
    from bpprg.program import xor_program

    P = xor_program(3)
    PT = np.zeros(8)
    PT[7] = 1.0
    PX = np.zeros(8)
    PX[0] = 1.0
    assert one_step_error(P, PT, PX) == pytest.approx(1.0)
