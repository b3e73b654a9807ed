import pytest
from hypothesis import given, strategies as st

from bpprg.gf2m import (
    IRREDUCIBLE_TAPS,
    FieldError,
    count_roots,
    field,
    is_irreducible,
    modulus_taps,
    search_taps,
)

from helpers import poly_mulmod


def brute_irreducible(f):
    d = f.bit_length() - 1
    for g in range(2, 1 << (d // 2 + 1)):
        # long division remainder
        r = f
        dg = g.bit_length() - 1
        while r and r.bit_length() - 1 >= dg:
            r ^= g << (r.bit_length() - 1 - dg)
        if r == 0 and g != f:
            return False
    return True


@pytest.mark.parametrize("m", range(1, 15))
def test_table_moduli_irreducible_brute(m):
    f = field(m).modulus
    assert brute_irreducible(f)
    assert is_irreducible(f)


def test_table_matches_search_rule():
    for m in range(2, 65):
        assert IRREDUCIBLE_TAPS[m] == search_taps(m)


@pytest.mark.parametrize("m", [65, 100, 257, 813, 1024])
def test_large_degrees_irreducible(m):
    assert is_irreducible(field(m).modulus)
    assert modulus_taps(m) == search_taps(m)


def test_rabin_rejects_reducible():
    assert not is_irreducible((1 << 4) | 1)  # x^4 + 1 = (x+1)^4
    assert not is_irreducible(0b110)
    assert is_irreducible(0b111)


@given(st.integers(1, 40), st.data())
def test_mul_matches_schoolbook(m, data):
    F = field(m)
    a = data.draw(st.integers(0, F.order - 1))
    b = data.draw(st.integers(0, F.order - 1))
    assert F.mul(a, b) == poly_mulmod(a, b, F.modulus)
    assert F.multiplier(a)(b) == F.mul(a, b)
    assert F.sqr(a) == F.mul(a, a)


@given(st.integers(2, 64), st.data())
def test_inverse(m, data):
    F = field(m)
    a = data.draw(st.integers(1, F.order - 1))
    assert F.mul(a, F.inv(a)) == 1


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        field(8).inv(0)


@pytest.mark.parametrize("m", [1, 2, 3, 4, 5, 6])
def test_count_roots_brute(m):
    F = field(m)
    for f in range(1, 1 << 7):
        roots = 0
        for z in range(F.order):
            v, zp = 0, 1
            for i in range(f.bit_length()):
                if (f >> i) & 1:
                    v ^= zp
                zp = F.mul(zp, z)
            roots += v == 0
        assert count_roots(f, m) == roots, (f, m)


def test_count_roots_zero_poly():
    with pytest.raises(FieldError):
        count_roots(0, 4)
