"""Arithmetic in GF(2^M) via log/antilog tables.

Elements are plain ints in ``[0, 2^M - 1]``. Addition is XOR; multiplication
is the carry-less product reduced modulo the field polynomial. The vector
helpers accept numpy integer arrays and are what the coder uses in bulk.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ContractError

# Irreducible polynomials per degree, with the x^M term included.
# Degree 8 is the AES polynomial x^8 + x^4 + x^3 + x + 1, which is
# irreducible but not primitive (x has order 51), hence the generator search.
DEFAULT_POLYNOMIALS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x83,
    8: 0x11B,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


def clmul_reduce(a: int, b: int, m: int, poly: int) -> int:
    """Shift-and-add multiplication with reduction after every shift."""
    top = 1 << m
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


class GaloisField:
    """GF(2^m) with precomputed exponent and logarithm tables."""

    def __init__(self, m: int = 8, poly: int | None = None):
        if not 1 <= m <= 16:
            raise ContractError(f"field degree must be in [1, 16], got {m}")
        if poly is None:
            poly = DEFAULT_POLYNOMIALS[m]
        if poly >> m != 1:
            raise ContractError(f"polynomial {poly:#x} does not have degree {m}")
        self.m = m
        self.poly = poly
        self.order = 1 << m
        self.generator = self._find_generator()
        q1 = self.order - 1
        exp = [0] * (2 * q1)
        log = [0] * self.order
        x = 1
        for k in range(q1):
            exp[k] = x
            log[x] = k
            x = clmul_reduce(x, self.generator, m, poly)
        for k in range(q1, 2 * q1):
            exp[k] = exp[k - q1]
        self._exp = exp
        self._log = log
        self.exp_table = np.array(exp, dtype=np.int64)
        self.log_table = np.array(log, dtype=np.int64)
        self.exp_table.setflags(write=False)
        self.log_table.setflags(write=False)

    def _find_generator(self) -> int:
        q1 = self.order - 1
        if q1 == 1:
            return 1
        for g in range(2, self.order):
            x, k = g, 1
            while x != 1 and k <= q1:
                x = clmul_reduce(x, g, self.m, self.poly)
                k += 1
            if k == q1:
                return g
        raise ContractError(f"polynomial {self.poly:#x} is reducible; no multiplicative generator exists")

    def __repr__(self) -> str:
        return f"GaloisField(m={self.m}, poly={self.poly:#x})"

    def check(self, a: int) -> int:
        if not 0 <= a < self.order:
            raise ContractError(f"{a!r} is not an element of GF(2^{self.m})")
        return a

    # scalar ops

    def add(self, a: int, b: int) -> int:
        return self.check(a) ^ self.check(b)

    def mul(self, a: int, b: int) -> int:
        self.check(a)
        self.check(b)
        if a == 0 or b == 0:
            return 0
        return self._exp[self._log[a] + self._log[b]]

    def inv(self, a: int) -> int:
        self.check(a)
        if a == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self._exp[(self.order - 1 - self._log[a]) % (self.order - 1)]

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    # vector ops, numpy int arrays in, int64 arrays out

    def mul_vec(self, a, b) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = self.exp_table[self.log_table[a] + self.log_table[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def combine(self, coeffs, rows) -> np.ndarray:
        """XOR-sum of ``coeffs[k] * rows[k]`` over k; rows is (K, L)."""
        rows = np.asarray(rows, dtype=np.int64)
        coeffs = np.asarray(coeffs, dtype=np.int64)
        if rows.ndim != 2 or coeffs.shape != (rows.shape[0],):
            raise ContractError(f"coefficient count {coeffs.shape} does not match rows {rows.shape}")
        if rows.shape[0] == 0:
            return np.zeros(rows.shape[1], dtype=np.int64)
        return np.bitwise_xor.reduce(self.mul_vec(coeffs[:, None], rows), axis=0)


@lru_cache(maxsize=None)
def get_field(m: int = 8, poly: int | None = None) -> GaloisField:
    return GaloisField(m, poly)


GF256 = get_field(8)


def gf_add(a: int, b: int, field: GaloisField = GF256) -> int:
    return field.add(a, b)


def gf_mul(a: int, b: int, field: GaloisField = GF256) -> int:
    return field.mul(a, b)


def gf_inv(a: int, field: GaloisField = GF256) -> int:
    return field.inv(a)
