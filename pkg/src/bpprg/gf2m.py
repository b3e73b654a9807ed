"""Arithmetic in GF(2)[x] and in the binary extension fields GF(2^m).

Polynomials over GF(2) are Python ints: bit i is the coefficient of x^i.
Field elements of GF(2^m) are ints in [0, 2^m) under the same encoding,
reduced modulo a fixed irreducible polynomial of degree m.

Moduli for 1 <= m <= 64 come from the frozen table below. Larger degrees
(up to MAX_FIELD_DEGREE) are derived by the same deterministic rule the
table was built with: the trinomial x^m + x^a + 1 with the smallest a, or
failing that the pentanomial x^m + x^a + x^b + x^c + 1 with the
lexicographically smallest (a, b, c), a > b > c > 0.
"""

from __future__ import annotations

from functools import lru_cache

MAX_FIELD_DEGREE = 4096

# m -> tap exponents below m (the constant term 1 is implied).
IRREDUCIBLE_TAPS: dict[int, tuple[int, ...]] = {
    1: (),
    2: (1,),
    3: (1,),
    4: (1,),
    5: (2,),
    6: (1,),
    7: (1,),
    8: (4, 3, 1),
    9: (1,),
    10: (3,),
    11: (2,),
    12: (3,),
    13: (4, 3, 1),
    14: (5,),
    15: (1,),
    16: (5, 3, 1),
    17: (3,),
    18: (3,),
    19: (5, 2, 1),
    20: (3,),
    21: (2,),
    22: (1,),
    23: (5,),
    24: (4, 3, 1),
    25: (3,),
    26: (4, 3, 1),
    27: (5, 2, 1),
    28: (1,),
    29: (2,),
    30: (1,),
    31: (3,),
    32: (7, 3, 2),
    33: (10,),
    34: (7,),
    35: (2,),
    36: (9,),
    37: (6, 4, 1),
    38: (6, 5, 1),
    39: (4,),
    40: (5, 4, 3),
    41: (3,),
    42: (7,),
    43: (6, 4, 3),
    44: (5,),
    45: (4, 3, 1),
    46: (1,),
    47: (5,),
    48: (5, 3, 2),
    49: (9,),
    50: (4, 3, 2),
    51: (6, 3, 1),
    52: (3,),
    53: (6, 2, 1),
    54: (9,),
    55: (7,),
    56: (7, 4, 2),
    57: (4,),
    58: (19,),
    59: (7, 4, 2),
    60: (1,),
    61: (5, 2, 1),
    62: (29,),
    63: (1,),
    64: (4, 3, 1),
}


class FieldError(ValueError):
    pass


# ---------- GF(2)[x]

def deg(a: int) -> int:
    """Degree of a polynomial; -1 for the zero polynomial."""
    return a.bit_length() - 1


def clmul(a: int, b: int) -> int:
    """Carry-less product of two polynomials."""
    if a.bit_count() < b.bit_count():
        a, b = b, a
    out = 0
    while b:
        low = b & -b
        out ^= a << (low.bit_length() - 1)
        b ^= low
    return out


def square(a: int) -> int:
    # squaring over GF(2) spreads the coefficients apart
    if a == 0:
        return 0
    return int("0".join(bin(a)[2:]), 2)


def pmod(a: int, f: int) -> int:
    df = deg(f)
    da = deg(a)
    while da >= df:
        a ^= f << (da - df)
        da = deg(a)
    return a


def pgcd(a: int, b: int) -> int:
    while b:
        a, b = b, pmod(a, b)
    return a


def _sparse_reducer(m: int, taps: tuple[int, ...]):
    mask = (1 << m) - 1
    low = (0,) + taps

    def reduce(a: int) -> int:
        hi = a >> m
        while hi:
            a &= mask
            for t in low:
                a ^= hi << t
            hi = a >> m
        return a

    return reduce


def _prime_factors(m: int) -> list[int]:
    out, q = [], 2
    while q * q <= m:
        if m % q == 0:
            out.append(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        out.append(m)
    return out


def is_irreducible(f: int) -> bool:
    """Rabin's test for a polynomial over GF(2)."""
    m = deg(f)
    if m <= 0:
        return False
    if m == 1:
        return True
    if not f & 1:
        return False
    # x^(2^i) mod f for every i up to m
    powers = [2]
    x = 2
    for _ in range(m):
        x = pmod(square(x), f)
        powers.append(x)
    if powers[m] != 2:
        return False
    for q in _prime_factors(m):
        if pgcd(f, powers[m // q] ^ 2) != 1:
            return False
    return True


def _is_irreducible_sparse(m: int, taps: tuple[int, ...]) -> bool:
    f = (1 << m) | 1
    for t in taps:
        f |= 1 << t
    reduce = _sparse_reducer(m, taps)
    # cheap early exits: a small-degree factor divides x^(2^i) - x
    x = 2
    powers = [2]
    for i in range(1, m + 1):
        x = reduce(square(x))
        powers.append(x)
        if i <= min(16, m // 2) and pgcd(f, x ^ 2) != 1:
            return False
    if powers[m] != 2:
        return False
    return all(pgcd(f, powers[m // q] ^ 2) == 1 for q in _prime_factors(m))


def search_taps(m: int) -> tuple[int, ...]:
    """Deterministic low-weight irreducible modulus of degree m."""
    if m == 1:
        return ()
    for a in range(1, m):
        if _is_irreducible_sparse(m, (a,)):
            return (a,)
    for a in range(3, m):
        for b in range(2, a):
            for c in range(1, b):
                if _is_irreducible_sparse(m, (a, b, c)):
                    return (a, b, c)
    raise FieldError(f"no trinomial or pentanomial modulus of degree {m}")


@lru_cache(maxsize=None)
def modulus_taps(m: int) -> tuple[int, ...]:
    if not 1 <= m <= MAX_FIELD_DEGREE:
        raise FieldError(f"field degree m={m} outside supported range [1, {MAX_FIELD_DEGREE}]")
    if m in IRREDUCIBLE_TAPS:
        return IRREDUCIBLE_TAPS[m]
    return search_taps(m)


# ---------- GF(2^m)

class GF2m:
    """The field GF(2^m) with a fixed sparse modulus."""

    def __init__(self, m: int):
        self.m = m
        self.taps = modulus_taps(m)
        self.modulus = (1 << m) | 1
        for t in self.taps:
            self.modulus |= 1 << t
        self.order = 1 << m
        self._reduce = _sparse_reducer(m, self.taps)

    def __repr__(self):
        return f"GF2m(m={self.m}, modulus={self.modulus:#x})"

    def reduce(self, a: int) -> int:
        return self._reduce(a)

    def mul(self, a: int, b: int) -> int:
        return self._reduce(clmul(a, b))

    def sqr(self, a: int) -> int:
        return self._reduce(square(a))

    def pow(self, a: int, e: int) -> int:
        out = 1
        while e:
            if e & 1:
                out = self.mul(out, a)
            a = self.sqr(a)
            e >>= 1
        return out

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("0 has no inverse in GF(2^m)")
        return self.pow(a, self.order - 2)

    def xtime(self, a: int) -> int:
        a <<= 1
        if a >> self.m:
            a ^= self.modulus
        return a

    def multiplier(self, a: int):
        """Return a function computing y -> a*y via 4-bit window tables.

        Worth it when the same a multiplies many values.
        """
        m = self.m
        tables = []
        base = a
        for _ in range((m + 3) // 4):
            t = [0] * 16
            e = base
            for bit in (1, 2, 4, 8):
                t[bit] = e
                e = self.xtime(e)
            for v in range(16):
                if v & (v - 1):
                    low = v & -v
                    t[v] = t[low] ^ t[v ^ low]
            tables.append(t)
            base = e

        def mul_a(y: int) -> int:
            out = 0
            k = 0
            while y:
                out ^= tables[k][y & 15]
                y >>= 4
                k += 1
            return out

        return mul_a


@lru_cache(maxsize=None)
def field(m: int) -> GF2m:
    return GF2m(m)


def count_roots(f: int, m: int) -> int:
    """Number of distinct roots in GF(2^m) of a GF(2)-coefficient polynomial f."""
    if f == 0:
        raise FieldError("zero polynomial has every element as a root")
    if deg(f) == 0:
        return 0
    # x^(2^m) mod f, then gcd with x^(2^m) - x
    x = pmod(2, f)
    for _ in range(m):
        x = pmod(square(x), f)
    return deg(pgcd(f, x ^ pmod(2, f)))
